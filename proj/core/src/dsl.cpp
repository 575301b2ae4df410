#include <array>
#include <cassert>
#include <sstream>

#include "analearn/dsl.hpp"

namespace analearn::dsl {

using minijs::NodeKind;

namespace {

constexpr std::array<std::string_view, 14> kMoveNames = {
    "Up",        "Left",       "Right",     "DownFirst",   "DownLast",
    "Top",       "GoToGlobal", "GoToUndef", "GoToNull",    "GoToThis",
    "UpUntilFunc", "GoToCaller", "PrevNodeValue", "PrevNodeType",
};

constexpr std::array<std::string_view, 8> kWriteNames = {
    "WriteValue", "WritePos", "WriteType",        "HasLeft",
    "HasRight",   "HasChild", "HasCaller",        "HasPrevNodeValue",
};

constexpr std::array<Move, 12> kPointsToMoves = {
    Move::Up,        Move::Left,      Move::Right,    Move::DownFirst,
    Move::DownLast,  Move::Top,       Move::GoToGlobal, Move::GoToUndef,
    Move::GoToNull,  Move::GoToThis,  Move::UpUntilFunc, Move::GoToCaller,
};

constexpr std::array<Move, 8> kAllocMoves = {
    Move::Up,       Move::Left,          Move::Right,        Move::DownFirst,
    Move::DownLast, Move::Top,           Move::PrevNodeValue, Move::PrevNodeType,
};

constexpr std::array<Write, 7> kPointsToWrites = {
    Write::WriteValue, Write::WritePos, Write::WriteType, Write::HasLeft,
    Write::HasRight,   Write::HasChild, Write::HasCaller,
};

constexpr std::array<Write, 4> kAllocWrites = {
    Write::WriteValue,
    Write::WritePos,
    Write::WriteType,
    Write::HasPrevNodeValue,
};

}  // namespace

std::string_view move_name(Move m) { return kMoveNames[static_cast<std::size_t>(m)]; }
std::string_view write_name(Write w) { return kWriteNames[static_cast<std::size_t>(w)]; }

bool move_in_lang(Move m, Lang lang) {
  for (Move cand : moves_of(lang)) {
    if (cand == m) return true;
  }
  return false;
}

bool write_in_lang(Write w, Lang lang) {
  for (Write cand : writes_of(lang)) {
    if (cand == w) return true;
  }
  return false;
}

std::span<const Move> moves_of(Lang lang) {
  if (lang == Lang::PointsTo) return kPointsToMoves;
  return kAllocMoves;
}

std::span<const Write> writes_of(Lang lang) {
  if (lang == Lang::PointsTo) return kPointsToWrites;
  return kAllocWrites;
}

bool Token::operator<(const Token& other) const {
  if (kind != other.kind) return kind < other.kind;
  switch (kind) {
    case Kind::NodeKind: return node_kind < other.node_kind;
    case Kind::Str: return str < other.str;
    case Kind::Num: return num < other.num;
  }
  return false;
}

std::string token_to_string(const Token& t) {
  switch (t.kind) {
    case Token::Kind::NodeKind: return std::string(minijs::node_kind_name(t.node_kind));
    case Token::Kind::Num: return std::to_string(t.num);
    case Token::Kind::Str: {
      std::string out = "\"";
      for (char c : t.str) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out.push_back('"');
      return out;
    }
  }
  return {};
}

std::string lattice_result_to_string(const LatticeResult& r) {
  switch (r.kind) {
    case LatticeResult::Kind::Node: return "NODE " + std::to_string(r.node);
    case LatticeResult::Kind::Top: return "TOP";
    case LatticeResult::Kind::Bottom: return "BOTTOM";
    case LatticeResult::Kind::NewAlloc: return "NEWALLOC";
    case LatticeResult::Kind::NoAlloc: return "NOALLOC";
  }
  return {};
}

DslProgram DslProgram::leaf(std::vector<Move> action) {
  DslProgram p;
  p.lang = Lang::PointsTo;
  p.is_leaf = true;
  p.action = std::move(action);
  return p;
}

DslProgram DslProgram::leaf(AllocVerdict verdict) {
  DslProgram p;
  p.lang = Lang::Alloc;
  p.is_leaf = true;
  p.verdict = verdict;
  return p;
}

DslProgram DslProgram::branch_on(std::vector<Instruction> guard, Context expected,
                                 DslProgram then_p, DslProgram else_p) {
  bool has_write = false;
  for (const Instruction& inst : guard) has_write |= inst.kind == Instruction::Kind::Write;
  if (!has_write) throw std::invalid_argument("guard must contain at least one Write");
  if (then_p.lang != else_p.lang) throw std::invalid_argument("mixed-language branch");
  DslProgram p;
  p.lang = then_p.lang;
  p.is_leaf = false;
  p.branch = std::make_shared<DslProgram::Branch>(
      DslProgram::Branch{std::move(guard), std::move(expected), std::move(then_p),
                         std::move(else_p)});
  return p;
}

namespace {

// Nearest proper function ancestor, or kNoNode for top-level scope. Used by
// the PrevNode* moves which never cross scope boundaries.
NodeId scope_of(const Ast& t, NodeId n) { return t.enclosing_function(n); }

bool same_write_token(const Ast& t, Write w, NodeId a, NodeId b);

NodeId prev_node_matching(const Ast& t, NodeId n, Write w) {
  NodeId scope = scope_of(t, n);
  for (NodeId cand = n; cand-- > 0;) {
    if (scope_of(t, cand) != scope) continue;
    if (same_write_token(t, w, cand, n)) return cand;
  }
  return kNoNode;
}

}  // namespace

StepState apply_move(Move m, StepState s, const Ast& t, std::span<const NodeId> call_trace) {
  assert(s.pos.is_node());
  NodeId n = s.pos.node;
  auto to = [&s](NodeId target) {
    s.pos = target == kNoNode ? Position::bottom() : Position::at(target);
    return s;
  };
  switch (m) {
    case Move::Up: return to(t.parent_of(n));
    case Move::Left: return to(t.left_sibling(n));
    case Move::Right: return to(t.right_sibling(n));
    case Move::DownFirst: return to(t.first_child(n));
    case Move::DownLast: return to(t.last_child(n));
    case Move::Top:
      s.pos = Position::top();
      return s;
    case Move::GoToGlobal: return to(t.synthetic_global);
    case Move::GoToUndef: return to(t.synthetic_undefined);
    case Move::GoToNull: return to(t.synthetic_null);
    case Move::GoToThis: return to(t.synthetic_this);
    case Move::UpUntilFunc: {
      NodeId cur = n;
      while (true) {
        NodeId parent = t.parent_of(cur);
        if (parent == kNoNode) return to(cur);  // reached the root
        NodeKind k = t.node(parent).kind;
        if (k == NodeKind::FunctionDeclaration || k == NodeKind::FunctionExpression) {
          return to(cur);
        }
        cur = parent;
      }
    }
    case Move::GoToCaller: {
      if (s.caller_index >= call_trace.size()) return to(kNoNode);
      NodeId site = call_trace[s.caller_index];
      ++s.caller_index;
      return to(site);
    }
    case Move::PrevNodeValue: return to(prev_node_matching(t, n, Write::WriteValue));
    case Move::PrevNodeType: return to(prev_node_matching(t, n, Write::WriteType));
  }
  return to(kNoNode);
}

Token apply_write(Write w, const StepState& s, const Ast& t, std::span<const NodeId> call_trace) {
  assert(s.pos.is_node());
  NodeId n = s.pos.node;
  const minijs::Node& node = t.node(n);
  switch (w) {
    case Write::WriteType: return Token::of(node.kind);
    case Write::WriteValue:
      return node.value ? Token::of_str(*node.value) : Token::of_num(0);
    case Write::WritePos:
      // 1-based index among the parent's children; 0 at the root.
      return Token::of_num(node.parent == kNoNode ? 0 : node.index_in_parent + 1);
    case Write::HasLeft: return Token::of_num(t.left_sibling(n) != kNoNode ? 1 : 0);
    case Write::HasRight: return Token::of_num(t.right_sibling(n) != kNoNode ? 1 : 0);
    case Write::HasChild: return Token::of_num(node.children.empty() ? 0 : 1);
    case Write::HasCaller:
      return Token::of_num(s.caller_index < call_trace.size() ? 1 : 0);
    case Write::HasPrevNodeValue:
      return Token::of_num(prev_node_matching(t, n, Write::WriteValue) != kNoNode ? 1 : 0);
  }
  return Token::of_num(0);
}

ExecState mv(Move m, ExecState s) {
  StepState step{s.pos, 0};
  step = apply_move(m, step, *s.tree, s.call_trace);
  s.pos = step.pos;
  if (step.caller_index > 0) s.call_trace.erase(s.call_trace.begin());
  return s;
}

Token wr(Write w, const ExecState& s) {
  return apply_write(w, StepState{s.pos, 0}, *s.tree, s.call_trace);
}

namespace {

bool same_write_token(const Ast& t, Write w, NodeId a, NodeId b) {
  if (w == Write::WriteType) return t.node(a).kind == t.node(b).kind;
  return t.node(a).value == t.node(b).value;  // absent values match each other
}

void note_read(std::vector<NodeId>* read_set, const Position& pos) {
  if (read_set == nullptr || !pos.is_node()) return;
  for (NodeId seen : *read_set) {
    if (seen == pos.node) return;
  }
  read_set->push_back(pos.node);
}

Context run_guard(std::span<const Instruction> guard, const ExecState& init,
                  std::vector<NodeId>* read_set) {
  StepState s{init.pos, 0};
  Context ctx;
  for (const Instruction& inst : guard) {
    if (inst.kind == Instruction::Kind::Move) {
      s = apply_move(inst.move, s, *init.tree, init.call_trace);
      if (!s.pos.is_node()) break;  // Move-Fail: drop the rest of the sequence
      note_read(read_set, s.pos);
    } else {
      ctx.push_back(apply_write(inst.write, s, *init.tree, init.call_trace));
    }
  }
  return ctx;
}

Position run_action(std::span<const Move> action, const ExecState& init,
                    std::vector<NodeId>* read_set) {
  StepState s{init.pos, 0};
  for (Move m : action) {
    s = apply_move(m, s, *init.tree, init.call_trace);
    if (!s.pos.is_node()) break;
    note_read(read_set, s.pos);
  }
  return s.pos;
}

}  // namespace

Context exec_guard(std::span<const Instruction> guard, ExecState s) {
  assert(s.ctx.empty());
  return run_guard(guard, s, nullptr);
}

ExecOutcome exec_program(const DslProgram& p, const Ast& tree, NodeId start,
                         std::vector<NodeId> call_trace, const Trace& trace) {
  ExecOutcome out;
  note_read(&out.read_set, Position::at(start));
  const DslProgram* cur = &p;
  while (!cur->is_leaf) {
    // The guard runs on a copy of the state; the chosen subtree starts from
    // the state seen before guard evaluation.
    ExecState guard_state(tree, start, call_trace, &trace);
    Context observed = run_guard(cur->branch->guard, guard_state, &out.read_set);
    cur = observed == cur->branch->expected ? &cur->branch->then_p : &cur->branch->else_p;
  }
  if (cur->lang == Lang::Alloc) {
    switch (cur->verdict) {
      case AllocVerdict::NewAlloc: out.result = LatticeResult::new_alloc(); break;
      case AllocVerdict::NoAlloc: out.result = LatticeResult::no_alloc(); break;
      case AllocVerdict::Top: out.result = LatticeResult::top(); break;
    }
    return out;
  }
  ExecState state(tree, start, std::move(call_trace), &trace);
  Position end = run_action(cur->action, state, &out.read_set);
  switch (end.kind) {
    case Position::Kind::Node: out.result = LatticeResult::at(end.node); break;
    case Position::Kind::Top: out.result = LatticeResult::top(); break;
    case Position::Kind::Bottom: out.result = LatticeResult::bottom(); break;
  }
  return out;
}

std::string instruction_to_string(const Instruction& inst) {
  return std::string(inst.kind == Instruction::Kind::Move ? move_name(inst.move)
                                                          : write_name(inst.write));
}

}  // namespace analearn::dsl
