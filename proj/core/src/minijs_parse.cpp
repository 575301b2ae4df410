#include <cctype>
#include <memory>
#include <string>
#include <vector>

#include "analearn/minijs.hpp"

namespace analearn::minijs {

namespace {

using detail::BuilderNode;

enum class TokType {
  Ident,
  Keyword,
  Number,
  String,
  Punct,
  End,
};

struct Tok {
  TokType type;
  std::string text;
  int line;
  int column;
};

bool is_keyword(std::string_view s) {
  static constexpr std::string_view kw[] = {"var",  "function", "return", "if",   "else",
                                            "try",  "catch",    "new",    "this", "true",
                                            "false", "null",    "typeof"};
  for (auto k : kw) {
    if (k == s) return true;
  }
  return false;
}

// Names bound by the runtime itself; user code may not redeclare them.
bool is_reserved_binding(std::string_view s) {
  static constexpr std::string_view names[] = {"global", "undefined", "call",
                                               "apply",  "Object",    "Number"};
  for (auto n : names) {
    if (n == s) return true;
  }
  return false;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Tok> run() {
    std::vector<Tok> toks;
    while (true) {
      skip_trivia();
      int line = line_, col = col_;
      if (eof()) {
        toks.push_back({TokType::End, "", line, col});
        break;
      }
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
        std::string word;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                          peek() == '$')) {
          word.push_back(advance());
        }
        toks.push_back({is_keyword(word) ? TokType::Keyword : TokType::Ident, word, line, col});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string num;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) num.push_back(advance());
        if (!eof() && peek() == '.') {
          num.push_back(advance());
          if (eof() || !std::isdigit(static_cast<unsigned char>(peek()))) {
            throw SyntaxError("malformed number literal", line, col);
          }
          while (!eof() && std::isdigit(static_cast<unsigned char>(peek())))
            num.push_back(advance());
        }
        toks.push_back({TokType::Number, num, line, col});
      } else if (c == '"' || c == '\'') {
        toks.push_back({TokType::String, lex_string(), line, col});
      } else {
        toks.push_back({TokType::Punct, lex_punct(), line, col});
      }
    }
    return toks;
  }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
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

  void skip_trivia() {
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!eof() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        int line = line_, col = col_;
        advance();
        advance();
        while (!(peek() == '*' && peek(1) == '/')) {
          if (eof()) throw SyntaxError("unterminated comment", line, col);
          advance();
        }
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string lex_string() {
    int line = line_, col = col_;
    char quote = advance();
    std::string out;
    while (true) {
      if (eof()) throw SyntaxError("unterminated string literal", line, col);
      char c = advance();
      if (c == quote) break;
      if (c == '\n') throw SyntaxError("newline in string literal", line, col);
      if (c == '\\') {
        if (eof()) throw SyntaxError("unterminated string literal", line, col);
        char esc = advance();
        switch (esc) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '\\': out.push_back('\\'); break;
          case '"': out.push_back('"'); break;
          case '\'': out.push_back('\''); break;
          default:
            throw SyntaxError(std::string("unknown escape '\\") + esc + "'", line_, col_);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  std::string lex_punct() {
    int line = line_, col = col_;
    static constexpr std::string_view two[] = {"==", "!=", "<=", ">=", "&&", "||"};
    std::string pair{peek(), peek(1)};
    for (auto t : two) {
      if (t == pair) {
        advance();
        advance();
        return std::string(t);
      }
    }
    char c = advance();
    static constexpr std::string_view singles = "(){}[];,.:=<>!+-*/%";
    if (singles.find(c) == std::string_view::npos) {
      throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
    }
    return std::string(1, c);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

using NodePtr = std::unique_ptr<BuilderNode>;

NodePtr make(NodeKind kind, std::optional<std::string> value = std::nullopt) {
  return std::make_unique<BuilderNode>(kind, std::move(value));
}

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  NodePtr run() {
    auto program = make(NodeKind::Program);
    while (!at_end()) program->add(statement());
    return program;
  }

 private:
  const Tok& cur() const { return toks_[pos_]; }
  const Tok& next() const { return toks_[pos_ + 1 < toks_.size() ? pos_ + 1 : pos_]; }
  bool at_end() const { return cur().type == TokType::End; }

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(message, cur().line, cur().column);
  }

  Tok take() { return toks_[pos_++]; }

  bool is_punct(std::string_view text) const {
    return cur().type == TokType::Punct && cur().text == text;
  }
  bool is_keyword_tok(std::string_view text) const {
    return cur().type == TokType::Keyword && cur().text == text;
  }

  void expect_punct(std::string_view text) {
    if (!is_punct(text)) fail("expected '" + std::string(text) + "'");
    take();
  }

  std::string expect_ident() {
    if (cur().type != TokType::Ident) fail("expected identifier");
    return take().text;
  }

  std::string expect_binding_name() {
    if (cur().type != TokType::Ident) fail("expected identifier");
    if (is_reserved_binding(cur().text)) fail("cannot redeclare builtin '" + cur().text + "'");
    return take().text;
  }

  NodePtr statement() {
    if (is_keyword_tok("var")) return var_declaration();
    if (is_keyword_tok("function")) return function_declaration();
    if (is_keyword_tok("return")) return return_statement();
    if (is_keyword_tok("if")) return if_statement();
    if (is_keyword_tok("try")) return try_statement();
    if (is_punct("{")) return block();
    return expression_or_assignment();
  }

  NodePtr var_declaration() {
    take();  // var
    auto node = make(NodeKind::VarDeclaration, expect_binding_name());
    if (is_punct("=")) {
      take();
      node->add(expression());
    }
    expect_punct(";");
    return node;
  }

  NodePtr function_declaration() {
    take();  // function
    auto node = make(NodeKind::FunctionDeclaration, expect_binding_name());
    parse_params_and_body(*node);
    return node;
  }

  void parse_params_and_body(BuilderNode& fn) {
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        fn.add(make(NodeKind::Parameter, expect_binding_name()));
        if (!is_punct(",")) break;
        take();
      }
    }
    expect_punct(")");
    fn.add(block());
  }

  NodePtr return_statement() {
    take();  // return
    auto node = make(NodeKind::ReturnStatement);
    if (!is_punct(";")) node->add(expression());
    expect_punct(";");
    return node;
  }

  NodePtr if_statement() {
    take();  // if
    auto node = make(NodeKind::IfStatement);
    expect_punct("(");
    node->add(expression());
    expect_punct(")");
    node->add(block());
    if (is_keyword_tok("else")) {
      take();
      if (is_keyword_tok("if")) {
        node->add(if_statement());
      } else {
        node->add(block());
      }
    }
    return node;
  }

  NodePtr try_statement() {
    take();  // try
    auto node = make(NodeKind::TryStatement);
    node->add(block());
    if (!is_keyword_tok("catch")) fail("expected 'catch'");
    take();
    auto clause = make(NodeKind::CatchClause);
    expect_punct("(");
    clause->add(make(NodeKind::Parameter, expect_binding_name()));
    expect_punct(")");
    clause->add(block());
    node->add(std::move(clause));
    return node;
  }

  NodePtr block() {
    expect_punct("{");
    auto node = make(NodeKind::BlockStatement);
    while (!is_punct("}")) {
      if (at_end()) fail("unterminated block");
      node->add(statement());
    }
    take();
    return node;
  }

  NodePtr expression_or_assignment() {
    auto expr = expression();
    if (is_punct("=")) {
      if (expr->kind != NodeKind::Identifier && expr->kind != NodeKind::MemberExpression) {
        fail("invalid assignment target");
      }
      take();
      auto node = make(NodeKind::Assignment);
      node->add(std::move(expr));
      node->add(expression());
      expect_punct(";");
      return node;
    }
    expect_punct(";");
    auto node = make(NodeKind::ExpressionStatement);
    node->add(std::move(expr));
    return node;
  }

  NodePtr expression() { return binary(0); }

  // Precedence-climbing over left-associative binary operators.
  static int precedence_of(const Tok& tok) {
    if (tok.type != TokType::Punct) return -1;
    const std::string& t = tok.text;
    if (t == "||") return 1;
    if (t == "&&") return 2;
    if (t == "==" || t == "!=") return 3;
    if (t == "<" || t == "<=" || t == ">" || t == ">=") return 4;
    if (t == "+" || t == "-") return 5;
    if (t == "*" || t == "/" || t == "%") return 6;
    return -1;
  }

  NodePtr binary(int min_prec) {
    auto lhs = unary();
    while (true) {
      int prec = precedence_of(cur());
      if (prec < 0 || prec < min_prec) return lhs;
      std::string op = take().text;
      auto rhs = binary(prec + 1);
      auto node = make(NodeKind::BinaryExpression, op);
      node->add(std::move(lhs));
      node->add(std::move(rhs));
      lhs = std::move(node);
    }
  }

  NodePtr unary() {
    if (is_punct("!") || is_punct("-") || is_punct("+") || is_keyword_tok("typeof")) {
      std::string op = take().text;
      auto node = make(NodeKind::UnaryExpression, op);
      node->add(unary());
      return node;
    }
    return postfix();
  }

  NodePtr postfix() {
    auto expr = primary();
    while (true) {
      if (is_punct(".")) {
        take();
        auto node = make(NodeKind::MemberExpression);
        node->add(std::move(expr));
        node->add(make(NodeKind::Identifier, expect_ident()));
        expr = std::move(node);
      } else if (is_punct("(")) {
        auto node = make(NodeKind::CallExpression);
        node->add(std::move(expr));
        parse_arguments(*node);
        expr = std::move(node);
      } else {
        return expr;
      }
    }
  }

  void parse_arguments(BuilderNode& call) {
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        auto arg = make(NodeKind::Argument);
        arg->add(expression());
        call.add(std::move(arg));
        if (!is_punct(",")) break;
        take();
      }
    }
    expect_punct(")");
  }

  NodePtr new_expression() {
    take();  // new
    auto node = make(NodeKind::NewExpression);
    NodePtr callee = make(NodeKind::Identifier, expect_ident());
    while (is_punct(".")) {
      take();
      auto member = make(NodeKind::MemberExpression);
      member->add(std::move(callee));
      member->add(make(NodeKind::Identifier, expect_ident()));
      callee = std::move(member);
    }
    node->add(std::move(callee));
    parse_arguments(*node);
    return node;
  }

  NodePtr primary() {
    switch (cur().type) {
      case TokType::Number: return make(NodeKind::LiteralNumber, take().text);
      case TokType::String: return make(NodeKind::LiteralString, take().text);
      case TokType::Ident: return make(NodeKind::Identifier, take().text);
      case TokType::Keyword: {
        const std::string& t = cur().text;
        if (t == "true" || t == "false") return make(NodeKind::LiteralBoolean, take().text);
        if (t == "null") {
          take();
          return make(NodeKind::LiteralNull);
        }
        if (t == "this") {
          take();
          return make(NodeKind::ThisExpression);
        }
        if (t == "new") return new_expression();
        if (t == "function") {
          take();
          std::optional<std::string> name;
          if (cur().type == TokType::Ident) name = expect_binding_name();
          auto node = make(NodeKind::FunctionExpression, std::move(name));
          parse_params_and_body(*node);
          return node;
        }
        fail("unexpected keyword '" + t + "'");
      }
      case TokType::Punct: {
        if (is_punct("(")) {
          take();
          auto inner = expression();
          expect_punct(")");
          return inner;
        }
        if (is_punct("{")) return object_literal();
        if (is_punct("[")) return array_literal();
        fail("unexpected token '" + cur().text + "'");
      }
      case TokType::End: fail("unexpected end of input");
    }
    fail("unexpected token");
  }

  NodePtr object_literal() {
    take();  // {
    auto node = make(NodeKind::ObjectExpression);
    if (!is_punct("}")) {
      while (true) {
        node->add(make(NodeKind::Identifier, expect_ident()));
        expect_punct(":");
        node->add(expression());
        if (!is_punct(",")) break;
        take();
      }
    }
    expect_punct("}");
    return node;
  }

  NodePtr array_literal() {
    take();  // [
    auto node = make(NodeKind::ArrayExpression);
    if (!is_punct("]")) {
      while (true) {
        node->add(expression());
        if (!is_punct(",")) break;
        take();
      }
    }
    expect_punct("]");
    return node;
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Ast parse(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return detail::finalize(*parser.run()).ast;
}

}  // namespace analearn::minijs
