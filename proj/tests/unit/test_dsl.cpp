#include <doctest.h>

#include <random>

#include "analearn/dsl.hpp"

using namespace analearn::dsl;
using analearn::minijs::Ast;
using analearn::minijs::interpret;
using analearn::minijs::NodeKind;
using analearn::minijs::parse;
using analearn::minijs::SyntaxError;

namespace {

struct Fixture {
  Ast ast = parse("var b = {};\na = b;");
  Trace trace = interpret(ast).trace;
  // Pre-order: 0 Program, 1 VarDeclaration:b, 2 ObjectExpression,
  // 3 Assignment, 4 Identifier:a, 5 Identifier:b.
  ExecState at(NodeId n, std::vector<NodeId> calls = {}) const {
    return ExecState(ast, n, std::move(calls), &trace);
  }
};

const DslProgram& assign_rule() {
  static DslProgram p = parse_program(
      "IF [WritePos Up WriteType] = [1 Assignment] THEN DO [Right] ELSE DO [Top]");
  return p;
}

}  // namespace

TEST_CASE("moves over the assignment tree") {
  Fixture f;

  SUBCASE("up at the root is bottom") {
    ExecState s = mv(Move::Up, f.at(0));
    CHECK(s.pos == Position::bottom());
  }
  SUBCASE("right of the assignment lhs is its rhs") {
    ExecState s = mv(Move::Right, f.at(4));
    CHECK(s.pos == Position::at(5));
  }
  SUBCASE("top approximates from anywhere") {
    for (NodeId n : {NodeId(0), NodeId(3), NodeId(5)}) {
      CHECK(mv(Move::Top, f.at(n)).pos == Position::top());
    }
  }
  SUBCASE("goto moves reach the synthetic leaves") {
    CHECK(mv(Move::GoToGlobal, f.at(4)).pos == Position::at(f.ast.synthetic_global));
    CHECK(mv(Move::GoToUndef, f.at(4)).pos == Position::at(f.ast.synthetic_undefined));
    CHECK(mv(Move::GoToNull, f.at(4)).pos == Position::at(f.ast.synthetic_null));
    CHECK(mv(Move::GoToThis, f.at(4)).pos == Position::at(f.ast.synthetic_this));
  }
  SUBCASE("goto caller pops the call trace") {
    ExecState s = mv(Move::GoToCaller, f.at(4, {3, 1}));
    CHECK(s.pos == Position::at(3));
    CHECK(s.call_trace == std::vector<NodeId>{1});
    CHECK(mv(Move::GoToCaller, f.at(4)).pos == Position::bottom());
  }
  SUBCASE("siblings and children fail off the edges") {
    CHECK(mv(Move::Left, f.at(4)).pos == Position::bottom());
    CHECK(mv(Move::DownFirst, f.at(5)).pos == Position::bottom());
    CHECK(mv(Move::DownLast, f.at(3)).pos == Position::at(5));
  }
}

TEST_CASE("up until function stops below the function node") {
  Ast ast = parse("function f(x) { return this; }");
  Trace trace = interpret(ast).trace;
  NodeId this_node = kNoNode;
  NodeId block = kNoNode;
  for (NodeId id = 0; id < ast.size(); ++id) {
    if (ast.is_synthetic(id)) continue;
    if (ast.node(id).kind == NodeKind::ThisExpression) this_node = id;
    if (ast.node(id).kind == NodeKind::BlockStatement) block = id;
  }
  ExecState s = mv(Move::UpUntilFunc, ExecState(ast, this_node, {}, &trace));
  CHECK(s.pos == Position::at(block));
  // From top-level code it runs to the root.
  ExecState top = mv(Move::UpUntilFunc, ExecState(ast, ast.synthetic_global, {}, &trace));
  CHECK(top.pos == Position::at(0));
}

TEST_CASE("prev node moves search the same scope") {
  Ast ast = parse("var a = 1;\nvar b = 2;\nvar a2 = a;\nfunction f() { var a3 = a; }");
  Trace trace = interpret(ast).trace;
  // Identifier:a occurrences: inside "var a2 = a" (top level) and in f.
  NodeId top_use = kNoNode, fn_use = kNoNode, decl = kNoNode;
  for (NodeId id = 0; id < ast.size(); ++id) {
    if (ast.is_synthetic(id)) continue;
    const auto& n = ast.node(id);
    if (n.kind == NodeKind::VarDeclaration && n.value == "a") decl = id;
    if (n.kind == NodeKind::Identifier && n.value == "a") {
      if (ast.enclosing_function(id) == kNoNode) {
        top_use = id;
      } else {
        fn_use = id;
      }
    }
  }
  REQUIRE(decl != kNoNode);
  REQUIRE(top_use != kNoNode);
  REQUIRE(fn_use != kNoNode);
  // WriteValue at the declaration and the use are both "a": same value.
  ExecState s = mv(Move::PrevNodeValue, ExecState(ast, top_use, {}, &trace));
  CHECK(s.pos == Position::at(decl));
  // Inside f the search cannot cross the scope boundary.
  ExecState t = mv(Move::PrevNodeValue, ExecState(ast, fn_use, {}, &trace));
  CHECK(t.pos == Position::bottom());
}

TEST_CASE("writes observe the current node") {
  Fixture f;
  CHECK(wr(Write::WritePos, f.at(4)) == Token::of_num(1));
  CHECK(wr(Write::WritePos, f.at(5)) == Token::of_num(2));
  CHECK(wr(Write::WritePos, f.at(0)) == Token::of_num(0));  // root has no parent
  CHECK(wr(Write::WriteType, f.at(3)) == Token::of(NodeKind::Assignment));
  CHECK(wr(Write::WriteValue, f.at(5)) == Token::of_str("b"));
  CHECK(wr(Write::WriteValue, f.at(3)) == Token::of_num(0));  // no terminal value
  CHECK(wr(Write::HasLeft, f.at(4)) == Token::of_num(0));
  CHECK(wr(Write::HasRight, f.at(4)) == Token::of_num(1));
  CHECK(wr(Write::HasChild, f.at(3)) == Token::of_num(1));
  CHECK(wr(Write::HasChild, f.at(5)) == Token::of_num(0));
  CHECK(wr(Write::HasCaller, f.at(4, {3})) == Token::of_num(1));
  CHECK(wr(Write::HasCaller, f.at(4)) == Token::of_num(0));
}

TEST_CASE("tokens of different kinds never compare equal") {
  CHECK(Token::of_num(1) != Token::of_str("1"));
  CHECK(Token::of_str("Assignment") != Token::of(NodeKind::Assignment));
  CHECK(Token::of_num(0) != Token::of_str(""));
}

TEST_CASE("guard execution accumulates context and absorbs move failures") {
  Fixture f;

  SUBCASE("appendix example: pos then parent type") {
    std::vector<Instruction> guard = {Instruction::of(Write::WritePos),
                                      Instruction::of(Move::Up),
                                      Instruction::of(Write::WriteType)};
    Context ctx = exec_guard(guard, f.at(4));
    REQUIRE(ctx.size() == 2);
    CHECK(ctx[0] == Token::of_num(1));
    CHECK(ctx[1] == Token::of(NodeKind::Assignment));
  }
  SUBCASE("empty guard gives empty context") {
    CHECK(exec_guard({}, f.at(4)).empty());
  }
  SUBCASE("a failing move drops the rest") {
    // Up twice from the assignment falls off the root; the write never runs.
    std::vector<Instruction> guard = {
        Instruction::of(Move::Up), Instruction::of(Move::Up), Instruction::of(Move::Up),
        Instruction::of(Write::WriteType)};
    CHECK(exec_guard(guard, f.at(4)).empty());
  }
  SUBCASE("partial context survives a later failure") {
    std::vector<Instruction> guard = {Instruction::of(Write::WritePos),
                                      Instruction::of(Move::DownFirst),
                                      Instruction::of(Write::WriteType)};
    Context ctx = exec_guard(guard, f.at(4));  // Identifier:a has no children
    REQUIRE(ctx.size() == 1);
    CHECK(ctx[0] == Token::of_num(1));
  }
}

TEST_CASE("program execution follows the appendix worked example") {
  Fixture f;
  ExecOutcome at_a = exec_program(assign_rule(), f.ast, 4, {}, f.trace);
  CHECK(at_a.result == LatticeResult::at(5));
  // Guard and action touched exactly the lhs, the assignment, and the rhs.
  CHECK(at_a.read_set == std::vector<NodeId>{4, 3, 5});

  ExecOutcome at_b = exec_program(assign_rule(), f.ast, 5, {}, f.trace);
  CHECK(at_b.result == LatticeResult::top());  // context [2 Assignment] mismatches
}

TEST_CASE("empty action is the identity") {
  Fixture f;
  DslProgram idp = DslProgram::leaf(std::vector<Move>{});
  for (NodeId n : {NodeId(1), NodeId(4), NodeId(5)}) {
    CHECK(exec_program(idp, f.ast, n, {}, f.trace).result == LatticeResult::at(n));
  }
}

TEST_CASE("guard evaluation restores position and call trace for the subtree") {
  Fixture f;
  // Guard consumes the caller; the then-branch still sees it.
  DslProgram p = parse_program(
      "IF [GoToCaller WriteType] = [Assignment] THEN DO [GoToCaller] ELSE DO []");
  ExecOutcome out = exec_program(p, f.ast, 4, {3}, f.trace);
  CHECK(out.result == LatticeResult::at(3));
}

TEST_CASE("alloc leaves answer directly") {
  Fixture f;
  CHECK(exec_program(DslProgram::leaf(AllocVerdict::NewAlloc), f.ast, 2, {}, f.trace).result ==
        LatticeResult::new_alloc());
  CHECK(exec_program(DslProgram::leaf(AllocVerdict::NoAlloc), f.ast, 2, {}, f.trace).result ==
        LatticeResult::no_alloc());
  CHECK(exec_program(DslProgram::leaf(AllocVerdict::Top), f.ast, 2, {}, f.trace).result ==
        LatticeResult::top());
}

TEST_CASE("program text round-trips") {
  const char* texts[] = {
      "DO [Top]",
      "DO []",
      "IF [WritePos Up WriteType] = [1 Assignment] THEN DO [Right] ELSE DO [Top]",
      "IF [GoToCaller DownFirst Right Right DownFirst WriteValue] = [\"undefined\"] THEN\n"
      "  DO [GoToGlobal]\nELSE\n  DO [GoToCaller DownFirst Right Right]",
      "IF [HasPrevNodeValue] = [1] THEN TOP ELSE NEWALLOC",
      "IF [WriteValue] = [\"a \\\"quoted\\\" name\"] THEN DO [] ELSE DO [Top]",
  };
  for (const char* text : texts) {
    CAPTURE(text);
    DslProgram p = parse_program(text);
    std::string rendered = render_program(p);
    DslProgram q = parse_program(rendered);
    CHECK(render_program(q) == rendered);
  }
}

TEST_CASE("parser enforces the language rules") {
  CHECK_THROWS_AS(parse_program("IF [] = [] THEN DO [] ELSE DO [Top]"), SyntaxError);
  CHECK_THROWS_AS(parse_program("IF [Up Up] = [1] THEN DO [] ELSE DO []"), SyntaxError);
  CHECK_THROWS_AS(parse_program("DO [Sideways]"), SyntaxError);
  CHECK_THROWS_AS(parse_program("IF [WriteType] = [NotAKind] THEN DO [] ELSE DO []"),
                  SyntaxError);
  CHECK_THROWS_AS(parse_program("IF [HasCaller] = [1] THEN NEWALLOC ELSE NOALLOC"), SyntaxError);
  CHECK_THROWS_AS(parse_program("IF [PrevNodeValue WriteType] = [1] THEN DO [] ELSE DO []"),
                  SyntaxError);
  CHECK_THROWS_AS(parse_program("DO [Top] DO [Top]"), SyntaxError);
}

TEST_CASE("the appendix example program parses to the expected tree") {
  DslProgram p = parse_program(
      "IF [WritePos Up WriteType] = [1 Assignment] THEN DO [Right] ELSE DO [Top]");
  REQUIRE(!p.is_leaf);
  CHECK(p.lang == Lang::PointsTo);
  CHECK(p.branch->guard.size() == 3);
  REQUIRE(p.branch->expected.size() == 2);
  CHECK(p.branch->expected[0] == Token::of_num(1));
  CHECK(p.branch->expected[1] == Token::of(NodeKind::Assignment));
  CHECK(p.branch->then_p.action == std::vector<Move>{Move::Right});
  CHECK(p.branch->else_p.action == std::vector<Move>{Move::Top});
}

TEST_CASE("once failed no later instruction executes") {
  Fixture f;
  std::mt19937 rng(7);
  std::span<const Move> moves = moves_of(Lang::PointsTo);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Move> action;
    for (int i = 0; i < 6; ++i) action.push_back(moves[rng() % moves.size()]);
    NodeId start = static_cast<NodeId>(rng() % f.ast.size());
    // Reference: stop at the first non-node position.
    StepState s{Position::at(start), 0};
    std::vector<NodeId> calls{3};
    for (Move m : action) {
      if (!s.pos.is_node()) break;
      s = apply_move(m, s, f.ast, calls);
    }
    DslProgram p = DslProgram::leaf(action);
    LatticeResult got = exec_program(p, f.ast, start, calls, f.trace).result;
    LatticeResult want = s.pos.kind == Position::Kind::Node ? LatticeResult::at(s.pos.node)
                         : s.pos.kind == Position::Kind::Top ? LatticeResult::top()
                                                             : LatticeResult::bottom();
    CHECK(got == want);
  }
}

TEST_CASE("read set is stable under value rewrites outside it") {
  // Re-running on a tree that differs only in values at unvisited nodes keeps
  // the result (node kinds, shapes and visited values are unchanged).
  Ast ast = parse("var b = {};\nvar c = 1;\na = b;");
  Trace trace = interpret(ast).trace;
  NodeId query = kNoNode;
  for (NodeId id = 0; id < ast.size(); ++id) {
    if (!ast.is_synthetic(id) && ast.node(id).kind == NodeKind::Identifier &&
        ast.node(id).value == "b" ) {
      query = id;
    }
  }
  REQUIRE(query != kNoNode);
  DslProgram p = parse_program(
      "IF [WritePos Up WriteType] = [2 Assignment] THEN DO [Up Left Left DownFirst] ELSE DO [Top]");
  ExecOutcome base = exec_program(p, ast, query, {}, trace);

  Ast rewritten = ast;
  for (NodeId id = 0; id < ast.size(); ++id) {
    bool in_read_set = false;
    for (NodeId seen : base.read_set) in_read_set |= seen == id;
    if (!in_read_set && rewritten.nodes[id].value) {
      rewritten.nodes[id].value = "zz" + *rewritten.nodes[id].value;
    }
  }
  ExecOutcome again = exec_program(p, rewritten, query, {}, trace);
  CHECK(again.result == base.result);
}
