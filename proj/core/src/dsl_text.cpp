#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "analearn/dsl.hpp"

namespace analearn::dsl {

using minijs::SyntaxError;

namespace {

std::optional<Move> move_from_name(std::string_view name) {
  for (int i = 0; i < 14; ++i) {
    Move m = static_cast<Move>(i);
    if (move_name(m) == name) return m;
  }
  return std::nullopt;
}

std::optional<Write> write_from_name(std::string_view name) {
  for (int i = 0; i < 8; ++i) {
    Write w = static_cast<Write>(i);
    if (write_name(w) == name) return w;
  }
  return std::nullopt;
}

struct Tok {
  enum class Type { Word, Str, Num, Punct, End } type;
  std::string text;
  std::uint64_t num = 0;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Tok> run() {
    std::vector<Tok> toks;
    while (true) {
      while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
      int line = line_, col = col_;
      if (eof()) {
        toks.push_back({Tok::Type::End, "", 0, line, col});
        break;
      }
      char c = peek();
      if (c == '[' || c == ']' || c == '=') {
        advance();
        toks.push_back({Tok::Type::Punct, std::string(1, c), 0, line, col});
      } else if (c == '"') {
        advance();
        std::string text;
        while (true) {
          if (eof()) throw SyntaxError("unterminated string", line, col);
          char d = advance();
          if (d == '"') break;
          if (d == '\\') {
            if (eof()) throw SyntaxError("unterminated string", line, col);
            text.push_back(advance());
          } else {
            text.push_back(d);
          }
        }
        toks.push_back({Tok::Type::Str, std::move(text), 0, line, col});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::uint64_t value = 0;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
          value = value * 10 + static_cast<std::uint64_t>(advance() - '0');
        }
        toks.push_back({Tok::Type::Num, "", value, line, col});
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        std::string word;
        while (!eof() && std::isalnum(static_cast<unsigned char>(peek()))) {
          word.push_back(advance());
        }
        toks.push_back({Tok::Type::Word, std::move(word), 0, line, col});
      } else {
        throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
      }
    }
    return toks;
  }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  DslProgram run() {
    DslProgram p = program();
    if (cur().type != Tok::Type::End) fail("trailing input after program");
    resolve_lang(p);
    return p;
  }

 private:
  const Tok& cur() const { return toks_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(message, cur().line, cur().column);
  }

  Tok take() { return toks_[pos_++]; }

  bool is_word(std::string_view text) const {
    return cur().type == Tok::Type::Word && cur().text == text;
  }

  void expect_punct(std::string_view text) {
    if (cur().type != Tok::Type::Punct || cur().text != text) {
      fail("expected '" + std::string(text) + "'");
    }
    take();
  }

  DslProgram program() {
    if (is_word("DO")) {
      take();
      expect_punct("[");
      std::vector<Move> action;
      while (!(cur().type == Tok::Type::Punct && cur().text == "]")) {
        if (cur().type != Tok::Type::Word) fail("expected a move instruction");
        auto m = move_from_name(cur().text);
        if (!m) fail("unknown move '" + cur().text + "'");
        if (*m == Move::PrevNodeValue || *m == Move::PrevNodeType) {
          saw_alloc_ = true;
        } else if (!move_in_lang(*m, Lang::Alloc)) {
          saw_points_to_ = true;
        }
        action.push_back(*m);
        take();
      }
      take();
      saw_do_ = true;
      return DslProgram::leaf(std::move(action));
    }
    if (is_word("NEWALLOC") || is_word("NOALLOC") || is_word("TOP")) {
      saw_verdict_ = true;
      std::string word = take().text;
      if (word == "NEWALLOC") return DslProgram::leaf(AllocVerdict::NewAlloc);
      if (word == "NOALLOC") return DslProgram::leaf(AllocVerdict::NoAlloc);
      return DslProgram::leaf(AllocVerdict::Top);
    }
    if (is_word("IF")) {
      take();
      std::vector<Instruction> guard = instruction_list();
      expect_punct("=");
      Context expected = token_list();
      if (!is_word("THEN")) fail("expected THEN");
      take();
      DslProgram then_p = program();
      if (!is_word("ELSE")) fail("expected ELSE");
      take();
      DslProgram else_p = program();
      try {
        return DslProgram::branch_on(std::move(guard), std::move(expected), std::move(then_p),
                                     std::move(else_p));
      } catch (const std::invalid_argument& err) {
        throw SyntaxError(err.what(), cur().line, cur().column);
      }
    }
    fail("expected DO, IF, NEWALLOC, NOALLOC or TOP");
  }

  std::vector<Instruction> instruction_list() {
    expect_punct("[");
    std::vector<Instruction> out;
    while (!(cur().type == Tok::Type::Punct && cur().text == "]")) {
      if (cur().type != Tok::Type::Word) fail("expected an instruction");
      if (auto m = move_from_name(cur().text)) {
        if (*m == Move::PrevNodeValue || *m == Move::PrevNodeType) {
          saw_alloc_ = true;
        } else if (!move_in_lang(*m, Lang::Alloc)) {
          saw_points_to_ = true;
        }
        out.push_back(Instruction::of(*m));
      } else if (auto w = write_from_name(cur().text)) {
        if (*w == Write::HasPrevNodeValue) {
          saw_alloc_ = true;
        } else if (*w == Write::HasCaller) {
          saw_points_to_ = true;
        }
        out.push_back(Instruction::of(*w));
      } else {
        fail("unknown instruction '" + cur().text + "'");
      }
      take();
    }
    take();
    return out;
  }

  Context token_list() {
    expect_punct("[");
    Context out;
    while (!(cur().type == Tok::Type::Punct && cur().text == "]")) {
      switch (cur().type) {
        case Tok::Type::Num: out.push_back(Token::of_num(take().num)); break;
        case Tok::Type::Str: out.push_back(Token::of_str(take().text)); break;
        case Tok::Type::Word: {
          auto kind = minijs::node_kind_from_name(cur().text);
          if (!kind) fail("unknown node kind '" + cur().text + "'");
          take();
          out.push_back(Token::of(*kind));
          break;
        }
        default: fail("expected a context token");
      }
    }
    take();
    return out;
  }

  void resolve_lang(DslProgram& p) {
    if (saw_do_ && saw_verdict_) fail("program mixes DO leaves with alloc verdicts");
    if (saw_alloc_ && saw_points_to_) fail("program mixes points-to and alloc instructions");
    if (saw_verdict_ && saw_points_to_) fail("alloc program uses points-to instructions");
    if (saw_do_ && saw_alloc_) fail("points-to program uses alloc instructions");
    Lang lang = (saw_verdict_ || saw_alloc_) ? Lang::Alloc : Lang::PointsTo;
    set_lang(p, lang);
  }

  static void set_lang(DslProgram& p, Lang lang) {
    p.lang = lang;
    if (!p.is_leaf) {
      auto branch = std::make_shared<DslProgram::Branch>(*p.branch);
      set_lang(branch->then_p, lang);
      set_lang(branch->else_p, lang);
      p.branch = std::move(branch);
    }
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
  bool saw_do_ = false;
  bool saw_verdict_ = false;
  bool saw_alloc_ = false;
  bool saw_points_to_ = false;
};

void render_into(const DslProgram& p, int depth, std::ostringstream& out) {
  auto indent = [&] {
    for (int i = 0; i < depth; ++i) out << "  ";
  };
  if (p.is_leaf) {
    indent();
    if (p.lang == Lang::Alloc) {
      switch (p.verdict) {
        case AllocVerdict::NewAlloc: out << "NEWALLOC"; break;
        case AllocVerdict::NoAlloc: out << "NOALLOC"; break;
        case AllocVerdict::Top: out << "TOP"; break;
      }
      out << '\n';
      return;
    }
    out << "DO [";
    for (std::size_t i = 0; i < p.action.size(); ++i) {
      if (i > 0) out << ' ';
      out << move_name(p.action[i]);
    }
    out << "]\n";
    return;
  }
  indent();
  out << "IF [";
  for (std::size_t i = 0; i < p.branch->guard.size(); ++i) {
    if (i > 0) out << ' ';
    out << instruction_to_string(p.branch->guard[i]);
  }
  out << "] = [";
  for (std::size_t i = 0; i < p.branch->expected.size(); ++i) {
    if (i > 0) out << ' ';
    out << token_to_string(p.branch->expected[i]);
  }
  out << "] THEN\n";
  render_into(p.branch->then_p, depth + 1, out);
  indent();
  out << "ELSE\n";
  render_into(p.branch->else_p, depth + 1, out);
}

}  // namespace

DslProgram parse_program(std::string_view text) {
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.run();
}

std::string render_program(const DslProgram& p) {
  std::ostringstream out;
  render_into(p, 0, out);
  return out.str();
}

}  // namespace analearn::dsl
