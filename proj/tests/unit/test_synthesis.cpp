#include <doctest.h>

#include <cmath>

#include "analearn/synthesis.hpp"

using namespace analearn::synthesis;
using analearn::dataset::AllocLabel;
using analearn::dataset::AnalysisMode;
using analearn::dataset::Dataset;
using analearn::dataset::Example;
using analearn::dataset::make_program;
using analearn::dataset::ProgramRef;
using analearn::dsl::AllocVerdict;
using analearn::dsl::DslProgram;
using analearn::dsl::Instruction;
using analearn::dsl::Move;
using analearn::dsl::Token;
using analearn::dsl::Write;
using analearn::minijs::NodeKind;

namespace {

Dataset var_dataset(std::initializer_list<const char*> sources) {
  std::vector<ProgramRef> programs;
  for (const char* source : sources) programs.push_back(make_program(source));
  return analearn::dataset::build_dataset(programs, AnalysisMode::PointsToVar);
}

}  // namespace

TEST_CASE("entropy matches hand-computed values") {
  CHECK(entropy(std::vector<int>{0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(entropy(std::vector<int>{0, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(entropy(std::vector<int>{0, 1, 1, 1}) ==
        doctest::Approx(0.8112781244591328).epsilon(1e-12));
  CHECK_THROWS_AS(entropy(std::vector<int>{}), EmptyVector);
}

TEST_CASE("omega counts instructions with doubled observations") {
  CHECK(omega(DslProgram::leaf(std::vector<Move>{Move::Top})) == 1.0);
  CHECK(omega(DslProgram::leaf(std::vector<Move>{Move::Up, Move::Right})) == 2.0);
  DslProgram branch = DslProgram::branch_on(
      {Instruction::of(Write::WritePos), Instruction::of(Move::Up),
       Instruction::of(Write::WriteType)},
      {Token::of_num(1), Token::of(NodeKind::Assignment)},
      DslProgram::leaf(std::vector<Move>{Move::Right}),
      DslProgram::leaf(std::vector<Move>{Move::Top}));
  CHECK(omega(branch) == 6.0);  // 2 + 1 + 1 + 1 + 1
  CHECK(omega(DslProgram::leaf(AllocVerdict::Top)) == 1.0);
}

TEST_CASE("regularized cost adds the weighted size") {
  Dataset d = var_dataset({"var b = {};\na = b;"});
  DslProgram top = DslProgram::leaf(std::vector<Move>{Move::Top});
  CHECK(cost_reg(d, top, 0.01) == doctest::Approx(1.01));
  CHECK(cost_reg(d, top, 0.0) == doctest::Approx(1.0));
  DslProgram precise = analearn::dsl::parse_program("DO [Up Left DownFirst]");
  CHECK(cost_reg(d, precise, 0.01) == doctest::Approx(0.03));
}

TEST_CASE("info gain matches hand-computed splits") {
  // Four single-example programs; the guard [WriteValue] distinguishes reads
  // of `a` from reads of `b`.
  Dataset d = var_dataset({
      "var a = {};\nvar k1 = a;",
      "var a = {};\nvar k2 = a;",
      "var b = {};\nu = b;",
      "var b = {};\nw = b;",
  });
  REQUIRE(d.size() == 4);
  // [Up Left DownFirst] resolves declarations, which works for the first two
  // (declaration right before) but lands on the wrong node for the other two?
  // Both layouts are decl-then-use, so check what r actually gives first.
  Action decl_rule;
  decl_rule.lang = analearn::dsl::Lang::PointsTo;
  decl_rule.moves = {Move::Up, Move::Left, Move::DownFirst};

  GuardCondition by_name{{Instruction::of(Write::WriteValue)}, {Token::of_str("a")}};
  double ig = info_gain(d, decl_rule, by_name);

  // Independent recomputation from the r vector.
  DslProgram leaf = decl_rule.to_leaf();
  std::vector<int> w;
  std::vector<int> w_in, w_out;
  for (const Example& ex : d.examples) {
    int ri = analearn::dataset::r(ex, leaf);
    w.push_back(ri);
    const auto& label = ex.program->ast.node(ex.query).value;
    (label == "a" ? w_in : w_out).push_back(ri);
  }
  double expected = entropy(w);
  if (!w_in.empty()) {
    expected -= (static_cast<double>(w_in.size()) / w.size()) * entropy(w_in);
  }
  if (!w_out.empty()) {
    expected -= (static_cast<double>(w_out.size()) / w.size()) * entropy(w_out);
  }
  CHECK(ig == doctest::Approx(expected).epsilon(1e-12));

  // A guard matching every example gains nothing.
  GuardCondition vacuous{{Instruction::of(Write::HasCaller)}, {Token::of_num(0)}};
  CHECK(info_gain(d, decl_rule, vacuous) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gen_action finds the sibling rule") {
  // Two programs whose variable reads resolve to the right sibling... they do
  // not exist in this language, so use the declaration rule instead: every
  // read sits in "var fresh = x;" and the answer is the previous initializer.
  Dataset d = var_dataset({
      "var a = {};\nvar b = a;",
      "var c = {};\nvar d = c;",
  });
  CandidateSpace space;
  space.action_bound = 3;
  Action best = gen_action(d, space);
  CHECK(best.moves == std::vector<Move>{Move::Up, Move::Left, Move::DownFirst});
  CHECK(analearn::dataset::cost(d, best.to_leaf()) == 0);
}

TEST_CASE("gen_action on alloc datasets picks the majority verdict") {
  ProgramRef p = make_program("var a = {};\nvar b = [1];\nvar c = {};");
  Dataset d = analearn::dataset::build_dataset({p}, AnalysisMode::AllocSite);
  REQUIRE(!d.empty());
  for (const Example& ex : d.examples) {
    CHECK(std::get<AllocLabel>(ex.label).is_alloc);
  }
  CandidateSpace space;
  Action best = gen_action(d, space);
  CHECK(best.lang == analearn::dsl::Lang::Alloc);
  CHECK(best.verdict == AllocVerdict::NewAlloc);
}

TEST_CASE("gen_action stays defined when nothing is precise") {
  // A single example whose acceptable set is unreachable within one move.
  Dataset d = var_dataset({"var a = {};\nvar p1 = 1;\nvar p2 = 2;\nvar b = a;"});
  CandidateSpace space;
  space.action_bound = 1;
  Action best = gen_action(d, space);
  CHECK(analearn::dataset::cost(d, best.to_leaf()) == d.size());
  CHECK(best.moves.empty());  // the cheapest among equally imprecise actions
}

TEST_CASE("gen_branch separates the overfit action's failures") {
  // The previous-statement action answers the plain program but lands on the
  // inserted declaration in the padded one.
  Dataset d = var_dataset({
      "var b = {};\na = b;",
      "var b = {};\nvar c = 1;\na = b;",
  });
  CandidateSpace space;
  space.guard_bound = 3;
  Action sibling;
  sibling.lang = analearn::dsl::Lang::PointsTo;
  sibling.moves = {Move::Up, Move::Left, Move::DownFirst};
  auto g = gen_branch(sibling, d, space);
  REQUIRE(g.has_value());
  double best_ig = info_gain(d, sibling, *g);
  CHECK(best_ig == doctest::Approx(1.0).epsilon(1e-12));  // a clean two-way split

  // Brute-force check that no enumerated guard beats it.
  std::span<const Move> moves = analearn::dsl::moves_of(analearn::dsl::Lang::PointsTo);
  std::span<const Write> writes = analearn::dsl::writes_of(analearn::dsl::Lang::PointsTo);
  double max_ig = 0.0;
  std::vector<std::vector<Move>> prefixes{{}};
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    std::vector<Move> prefix = prefixes[i];
    if (prefix.size() < 2) {
      for (Move m : moves) {
        auto extended = prefix;
        extended.push_back(m);
        prefixes.push_back(std::move(extended));
      }
    }
    for (Write w : writes) {
      GuardCondition cand;
      for (Move m : prefix) cand.guard.push_back(Instruction::of(m));
      cand.guard.push_back(Instruction::of(w));
      // Try every observed context as the expected value.
      for (const Example& ex : d.examples) {
        analearn::dsl::ExecState state(ex.program->ast, ex.query, ex.call_trace,
                                       &ex.program->trace);
        cand.expected = analearn::dsl::exec_guard(cand.guard, std::move(state));
        max_ig = std::max(max_ig, info_gain(d, sibling, cand));
      }
    }
  }
  CHECK(best_ig == doctest::Approx(max_ig).epsilon(1e-9));
}

TEST_CASE("gen_branch returns nothing when the action is already precise") {
  Dataset d = var_dataset({"var a = {};\nvar b = a;"});
  Action decl_rule;
  decl_rule.lang = analearn::dsl::Lang::PointsTo;
  decl_rule.moves = {Move::Up, Move::Left, Move::DownFirst};
  CandidateSpace space;
  CHECK(!gen_branch(decl_rule, d, space).has_value());
}

TEST_CASE("gen_branch returns nothing on a single imprecise example") {
  Dataset d = var_dataset({"var a = {};\nvar b = a;"});
  Action nothing;
  nothing.lang = analearn::dsl::Lang::PointsTo;
  nothing.moves = {Move::Top};
  CandidateSpace space;
  CHECK(!gen_branch(nothing, d, space).has_value());
}

TEST_CASE("synthesize returns a zero-cost program on the running example") {
  Dataset d = var_dataset({"var b = {};\na = b;"});
  CandidateSpace space;
  DslProgram pa = synthesize(d, space);
  CHECK(analearn::dataset::cost(d, pa) == 0);
  CHECK(analearn::dataset::is_correct_on(d, pa));
  CHECK(pa.is_leaf);  // a single example never needs a branch
}

TEST_CASE("synthesize with the counter-example rules out the overfit action") {
  Dataset d = var_dataset({
      "var b = {};\na = b;",
      "var b = {};\nvar c = 1;\na = b;",
  });
  CandidateSpace space;
  DslProgram pa = synthesize(d, space);
  CHECK(analearn::dataset::is_correct_on(d, pa));
  CHECK(analearn::dataset::cost(d, pa) == 0);
  // The naive previous-statement action is unsound on the second program.
  DslProgram overfit = analearn::dsl::parse_program("DO [Up Left DownFirst]");
  CHECK(!analearn::dataset::is_correct_on(d, overfit));
}

TEST_CASE("synthesize approximates contradictory datasets with top") {
  // Two examples that no bounded guard can tell apart: identical local
  // neighborhoods, different acceptable sets.
  Dataset d = var_dataset({
      "var a = {};\nvar b = a;",
      "var u = 1;\nvar a = {};\nvar b = a;\nvar w = b;",
  });
  CandidateSpace space;
  space.action_bound = 1;
  space.guard_bound = 1;  // a guard is [Write] only: both reads look alike
  // Restrict to the two reads named `a` so the write observations coincide.
  Dataset narrowed;
  narrowed.mode = d.mode;
  for (const Example& ex : d.examples) {
    if (ex.program->ast.node(ex.query).value == "a") narrowed.add(ex);
  }
  REQUIRE(narrowed.size() == 2);
  DslProgram pa = synthesize(narrowed, space);
  CHECK(analearn::dataset::is_correct_on(narrowed, pa));
  REQUIRE(pa.is_leaf);
  CHECK(pa.action == std::vector<Move>{Move::Top});
}

TEST_CASE("synthesize rejects empty and mixed datasets") {
  Dataset empty;
  CandidateSpace space;
  CHECK_THROWS_AS(synthesize(empty, space), InvalidDataset);

  Dataset mixed = var_dataset({"var b = {};\na = b;"});
  ProgramRef p = make_program("var q = {};");
  for (Example& ex : analearn::dataset::extract_examples(p, AnalysisMode::AllocSite)) {
    mixed.add(std::move(ex));
  }
  CHECK_THROWS_AS(synthesize(mixed, space), InvalidDataset);
}

TEST_CASE("synthesize is deterministic across thread counts") {
  Dataset d = var_dataset({
      "var b = {};\na = b;",
      "var b = {};\nvar c = 1;\na = b;",
      "var k = {};\nvar m = k;\nvar n = m;",
  });
  CandidateSpace space;
  space.action_bound = 4;
  space.guard_bound = 4;
  space.jobs = 1;
  std::string single = analearn::dsl::render_program(synthesize(d, space));
  space.jobs = 4;
  std::string parallel = analearn::dsl::render_program(synthesize(d, space));
  space.jobs = 13;
  std::string oversubscribed = analearn::dsl::render_program(synthesize(d, space));
  CHECK(single == parallel);
  CHECK(single == oversubscribed);
}

TEST_CASE("config files configure the space") {
  CandidateSpace space = space_from_config(
      "# learner parameters\naction_bound = 3\nguard_bound=4\nvalue_top_k = 7\n"
      "lambda = 0.5\nig_tolerance = 1e-9\n");
  CHECK(space.action_bound == 3);
  CHECK(space.guard_bound == 4);
  CHECK(space.value_top_k == 7);
  CHECK(space.lambda == doctest::Approx(0.5));
  CHECK(space.ig_tolerance == doctest::Approx(1e-9));
  CHECK_THROWS_AS(space_from_config("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(space_from_config("action_bound = -2\n"), ConfigError);
  CHECK_THROWS_AS(space_from_config("lambda == oops\n"), ConfigError);
}
