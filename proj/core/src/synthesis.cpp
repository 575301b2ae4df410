#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "analearn/synthesis.hpp"

namespace analearn::synthesis {

using dataset::AllocLabel;
using dataset::AnalysisMode;
using dataset::PointsToLabel;
using dsl::Context;
using dsl::DslProgram;
using dsl::Instruction;
using dsl::Lang;
using dsl::Move;
using dsl::Position;
using dsl::StepState;
using dsl::Token;
using dsl::Write;
using minijs::NodeId;

namespace {

double instruction_weight(const Instruction& inst) {
  // Position and value observations are less stable under program
  // modification, so they are charged double.
  if (inst.kind == Instruction::Kind::Write &&
      (inst.write == Write::WritePos || inst.write == Write::WriteValue)) {
    return 2.0;
  }
  return 1.0;
}

double h2(std::size_t a, std::size_t b) {
  std::size_t total = a + b;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (std::size_t c : {a, b}) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

// Shared by the public info_gain and the enumerative fast path so that both
// produce bit-identical values.
double ig_from_counts(std::size_t in0, std::size_t in1, std::size_t out0, std::size_t out1) {
  std::size_t total = in0 + in1 + out0 + out1;
  if (total == 0) return 0.0;
  double n = static_cast<double>(total);
  double gain = h2(in0 + out0, in1 + out1);
  gain -= (static_cast<double>(in0 + in1) / n) * h2(in0, in1);
  gain -= (static_cast<double>(out0 + out1) / n) * h2(out0, out1);
  return gain;
}

}  // namespace

double entropy(std::span<const int> classes) {
  if (classes.empty()) throw EmptyVector();
  std::map<int, std::size_t> counts;
  for (int c : classes) ++counts[c];
  double k = static_cast<double>(classes.size());
  double h = 0.0;
  for (const auto& [cls, count] : counts) {
    double p = static_cast<double>(count) / k;
    h -= p * std::log2(p);
  }
  return h;
}

double omega(const DslProgram& p) {
  if (p.is_leaf) {
    if (p.lang == Lang::Alloc) return 1.0;
    return static_cast<double>(p.action.size());
  }
  double total = 0.0;
  for (const Instruction& inst : p.branch->guard) total += instruction_weight(inst);
  return total + omega(p.branch->then_p) + omega(p.branch->else_p);
}

double cost_reg(const Dataset& d, const DslProgram& pa, double lambda) {
  return static_cast<double>(dataset::cost(d, pa)) + lambda * omega(pa);
}

DslProgram Action::to_leaf() const {
  if (lang == Lang::Alloc) return DslProgram::leaf(verdict);
  return DslProgram::leaf(moves);
}

CandidateSpace space_from_config(std::string_view text) {
  CandidateSpace space;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto not_space = [](char c) { return !std::isspace(static_cast<unsigned char>(c)); };
    line.erase(line.begin(), std::find_if(line.begin(), line.end(), not_space));
    line.erase(std::find_if(line.rbegin(), line.rend(), not_space).base(), line.end());
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    try {
      if (key == "action_bound") {
        space.action_bound = std::stoi(value);
      } else if (key == "guard_bound") {
        space.guard_bound = std::stoi(value);
      } else if (key == "value_top_k") {
        space.value_top_k = std::stoi(value);
      } else if (key == "lambda") {
        space.lambda = std::stod(value);
      } else if (key == "ig_tolerance") {
        space.ig_tolerance = std::stod(value);
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + value + "'");
    }
  }
  if (space.action_bound <= 0 || space.guard_bound <= 0 || space.value_top_k <= 0) {
    throw ConfigError("bounds must be positive");
  }
  if (space.lambda < 0) throw ConfigError("lambda must be nonnegative");
  return space;
}

namespace {

// View of one example used by the hot enumeration loops.
struct ExampleView {
  const Example* ex;
  const minijs::Ast* ast;
  std::span<const NodeId> call_trace;
};

std::vector<ExampleView> make_views(std::span<const Example* const> examples) {
  std::vector<ExampleView> views;
  views.reserve(examples.size());
  for (const Example* ex : examples) {
    views.push_back(ExampleView{ex, &ex->program->ast, ex->call_trace});
  }
  return views;
}

int r_of_position(const Position& pos, const Example& ex) {
  if (pos.kind != Position::Kind::Node) return 1;  // Top is sound but imprecise
  const auto& label = std::get<PointsToLabel>(ex.label);
  if (pos.node == ex.query) return label.self_ok ? 0 : 1;
  return label.accepts(pos.node) ? 0 : 1;
}

// Runs chunk 0..count-1 on up to `jobs` threads; the chunk index decides the
// merge order, so the result does not depend on scheduling.
template <typename Result, typename RunChunk, typename Merge>
void for_each_chunk_ordered(int jobs, int count, RunChunk run, Merge merge) {
  int threads = std::max(1, std::min(jobs, count));
  if (threads <= 1) {
    for (int c = 0; c < count; ++c) {
      Result result = run(c);
      merge(std::move(result));
    }
    return;
  }
  std::vector<std::optional<Result>> results(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int c = t; c < count; c += threads) results[c] = run(c);
    });
  }
  for (std::thread& th : pool) th.join();
  for (int c = 0; c < count; ++c) merge(std::move(*results[c]));
}

// --- gen_action ---

struct ActionBest {
  bool valid = false;
  double cost_reg = 0.0;
  std::size_t raw_cost = 0;
  std::vector<Move> moves;

  // Enumeration runs in lexicographic order, so a strict improvement is the
  // only reason to replace (equal cost_reg and length keeps the earlier one).
  bool improves(double candidate_reg, std::size_t candidate_len) const {
    if (!valid) return true;
    if (candidate_reg != cost_reg) return candidate_reg < cost_reg;
    return candidate_len < moves.size();
  }
};

class ActionSearch {
 public:
  ActionSearch(const std::vector<ExampleView>& views, const CandidateSpace& space, Lang lang)
      : views_(views), space_(space), moves_(dsl::moves_of(lang)) {
    states_.resize(static_cast<std::size_t>(space.action_bound) + 1);
    for (auto& level : states_) level.resize(views.size());
  }

  // Evaluates every action whose first move is `first` (depth-first, so in
  // lexicographic order within the chunk).
  ActionBest run_chunk(Move first) {
    best_ = {};
    for (std::size_t i = 0; i < views_.size(); ++i) {
      states_[0][i] = StepState{Position::at(views_[i].ex->query), 0};
    }
    extend(first, 1);
    return std::move(best_);
  }

  ActionBest run_empty() {
    best_ = {};
    for (std::size_t i = 0; i < views_.size(); ++i) {
      states_[0][i] = StepState{Position::at(views_[i].ex->query), 0};
    }
    evaluate(0);
    return std::move(best_);
  }

 private:
  void extend(Move m, int depth) {
    prefix_.push_back(m);
    bool any_alive = false;
    for (std::size_t i = 0; i < views_.size(); ++i) {
      const StepState& prev = states_[depth - 1][i];
      if (!prev.pos.is_node()) {
        states_[depth][i] = prev;  // Move-Fail already absorbed the rest
      } else {
        states_[depth][i] = dsl::apply_move(m, prev, *views_[i].ast, views_[i].call_trace);
      }
      any_alive |= states_[depth][i].pos.is_node();
    }
    evaluate(depth);
    // Once every example fell off the tree, longer suffixes cannot change any
    // outcome and only cost more.
    if (any_alive && depth < space_.action_bound) {
      for (Move next : moves_) extend(next, depth + 1);
    }
    prefix_.pop_back();
  }

  void evaluate(int depth) {
    double reg = space_.lambda * static_cast<double>(depth);
    std::size_t cost = 0;
    for (std::size_t i = 0; i < views_.size(); ++i) {
      cost += static_cast<std::size_t>(r_of_position(states_[depth][i].pos, *views_[i].ex));
      if (static_cast<double>(cost) + reg > best_.cost_reg && best_.valid) return;
    }
    double total = static_cast<double>(cost) + reg;
    if (best_.improves(total, prefix_.size())) {
      best_ = ActionBest{true, total, cost, prefix_};
    }
  }

  const std::vector<ExampleView>& views_;
  const CandidateSpace& space_;
  std::span<const Move> moves_;
  std::vector<std::vector<StepState>> states_;
  std::vector<Move> prefix_;
  ActionBest best_;
};

Action gen_action_points_to(std::span<const Example* const> examples, const CandidateSpace& space,
                            Lang lang) {
  std::vector<ExampleView> views = make_views(examples);

  ActionSearch root_search(views, space, lang);
  ActionBest best = root_search.run_empty();

  std::span<const Move> moves = dsl::moves_of(lang);
  if (space.action_bound >= 1) {
    auto run = [&](int chunk) {
      ActionSearch search(views, space, lang);
      return search.run_chunk(moves[static_cast<std::size_t>(chunk)]);
    };
    auto merge = [&](ActionBest chunk_best) {
      if (chunk_best.valid && best.improves(chunk_best.cost_reg, chunk_best.moves.size())) {
        best = std::move(chunk_best);
      }
    };
    for_each_chunk_ordered<ActionBest>(space.jobs, static_cast<int>(moves.size()), run, merge);
  }

  Action action;
  action.lang = lang;
  action.moves = std::move(best.moves);
  return action;
}

Action gen_action_alloc(std::span<const Example* const> examples) {
  std::size_t alloc_count = 0;
  for (const Example* ex : examples) {
    alloc_count += std::get<AllocLabel>(ex->label).is_alloc ? 1 : 0;
  }
  // NewAlloc, NoAlloc, Top in tie-break order; Top is never precise.
  struct Cand {
    dsl::AllocVerdict verdict;
    std::size_t cost;
  };
  Cand candidates[3] = {
      {dsl::AllocVerdict::NewAlloc, examples.size() - alloc_count},
      {dsl::AllocVerdict::NoAlloc, alloc_count},
      {dsl::AllocVerdict::Top, examples.size()},
  };
  Cand best = candidates[0];
  for (const Cand& c : candidates) {
    if (c.cost < best.cost) best = c;
  }
  Action action;
  action.lang = Lang::Alloc;
  action.verdict = best.verdict;
  return action;
}

// --- gen_branch ---

struct TokenKey {
  // Observed context compressed to one slot: absent (move failed before the
  // write) or a single token.
  bool absent = true;
  Token token;

  bool operator==(const TokenKey&) const = default;
  bool operator<(const TokenKey& other) const {
    if (absent != other.absent) return absent;  // [] sorts before [token]
    if (absent) return false;
    return token < other.token;
  }
};

struct TokenKeyHash {
  std::size_t operator()(const TokenKey& k) const {
    if (k.absent) return 0x9e3779b97f4a7c15ull;
    std::size_t seed = static_cast<std::size_t>(k.token.kind) * 0x100000001b3ull;
    switch (k.token.kind) {
      case Token::Kind::NodeKind: seed ^= static_cast<std::size_t>(k.token.node_kind); break;
      case Token::Kind::Num: seed ^= std::hash<std::uint64_t>{}(k.token.num); break;
      case Token::Kind::Str: seed ^= std::hash<std::string>{}(k.token.str); break;
    }
    return seed;
  }
};

struct BranchBest {
  bool valid = false;
  double ig = 0.0;
  double guard_omega = 0.0;
  std::vector<Instruction> guard;
  TokenKey value;

  bool improves(double candidate_ig, double candidate_omega) const {
    if (!valid) return true;
    if (candidate_ig != ig) return candidate_ig > ig;
    return candidate_omega < guard_omega;
  }
};

class BranchSearch {
 public:
  BranchSearch(const std::vector<ExampleView>& views, const std::vector<int>& w,
               const CandidateSpace& space, Lang lang)
      : views_(views), w_(w), space_(space), moves_(dsl::moves_of(lang)),
        writes_(dsl::writes_of(lang)), move_bound_(space.guard_bound - 1) {
    states_.resize(static_cast<std::size_t>(move_bound_) + 1);
    for (auto& level : states_) level.resize(views.size());
    total1_ = static_cast<std::size_t>(std::count(w.begin(), w.end(), 1));
    total0_ = w.size() - total1_;
    keys_.resize(views.size());
  }

  // Chunks 0..#moves-1 are the move-rooted subtrees; the final chunk holds
  // the write-only guards, which sort last under the instruction order.
  BranchBest run_chunk(int chunk) {
    best_ = {};
    for (std::size_t i = 0; i < views_.size(); ++i) {
      states_[0][i] = StepState{Position::at(views_[i].ex->query), 0};
    }
    if (chunk >= static_cast<int>(moves_.size())) {
      evaluate_writes(0);
    } else if (move_bound_ >= 1) {
      extend(moves_[static_cast<std::size_t>(chunk)], 1);
    }
    return std::move(best_);
  }

 private:
  void extend(Move m, int depth) {
    prefix_.push_back(Instruction::of(m));
    bool any_alive = false;
    for (std::size_t i = 0; i < views_.size(); ++i) {
      const StepState& prev = states_[depth - 1][i];
      if (!prev.pos.is_node()) {
        states_[depth][i] = prev;
      } else {
        states_[depth][i] = dsl::apply_move(m, prev, *views_[i].ast, views_[i].call_trace);
      }
      any_alive |= states_[depth][i].pos.is_node();
    }
    if (depth < move_bound_) {
      for (Move next : moves_) extend(next, depth + 1);
    }
    // Dead prefixes observe [] everywhere: a vacuous split for every write.
    if (any_alive) evaluate_writes(depth);
    prefix_.pop_back();
  }

  void evaluate_writes(int depth) {
    for (Write w : writes_) {
      double guard_omega = static_cast<double>(depth) +
                           instruction_weight(Instruction::of(w));
      for (std::size_t i = 0; i < views_.size(); ++i) {
        const StepState& s = states_[depth][i];
        if (s.pos.is_node()) {
          keys_[i] = TokenKey{false,
                              dsl::apply_write(w, s, *views_[i].ast, views_[i].call_trace)};
        } else {
          keys_[i] = TokenKey{};
        }
      }
      counts_.clear();
      for (std::size_t i = 0; i < views_.size(); ++i) {
        auto& slot = counts_[keys_[i]];
        ++slot.first;
        slot.second += static_cast<std::size_t>(w_[i]);
      }
      // Top-K most frequent observed values, most frequent first.
      scratch_.assign(counts_.begin(), counts_.end());
      std::sort(scratch_.begin(), scratch_.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.first < b.first;
      });
      std::size_t limit = std::min<std::size_t>(scratch_.size(),
                                                static_cast<std::size_t>(space_.value_top_k));
      for (std::size_t v = 0; v < limit; ++v) {
        const auto& [key, tally] = scratch_[v];
        std::size_t in1 = tally.second;
        std::size_t in0 = tally.first - in1;
        double ig = ig_from_counts(in0, in1, total0_ - in0, total1_ - in1);
        if (best_.improves(ig, guard_omega)) {
          best_.valid = true;
          best_.ig = ig;
          best_.guard_omega = guard_omega;
          best_.guard = prefix_;
          best_.guard.push_back(Instruction::of(w));
          best_.value = key;
        }
      }
    }
  }

  const std::vector<ExampleView>& views_;
  const std::vector<int>& w_;
  const CandidateSpace& space_;
  std::span<const Move> moves_;
  std::span<const Write> writes_;
  int move_bound_;
  std::size_t total0_ = 0;
  std::size_t total1_ = 0;
  std::vector<std::vector<StepState>> states_;
  std::vector<Instruction> prefix_;
  std::vector<TokenKey> keys_;
  std::unordered_map<TokenKey, std::pair<std::size_t, std::size_t>, TokenKeyHash> counts_;
  std::vector<std::pair<TokenKey, std::pair<std::size_t, std::size_t>>> scratch_;
  BranchBest best_;
};

std::vector<int> w_vector(std::span<const Example* const> examples, const Action& a_best) {
  DslProgram leaf = a_best.to_leaf();
  std::vector<int> w;
  w.reserve(examples.size());
  for (const Example* ex : examples) w.push_back(dataset::r(*ex, leaf));
  return w;
}

std::optional<GuardCondition> gen_branch_impl(const Action& a_best,
                                              std::span<const Example* const> examples,
                                              const CandidateSpace& space, Lang lang) {
  std::vector<ExampleView> views = make_views(examples);
  std::vector<int> w = w_vector(examples, a_best);

  BranchBest best;
  auto run = [&](int chunk) {
    BranchSearch search(views, w, space, lang);
    return search.run_chunk(chunk);
  };
  auto merge = [&](BranchBest chunk_best) {
    if (chunk_best.valid && best.improves(chunk_best.ig, chunk_best.guard_omega)) {
      best = std::move(chunk_best);
    }
  };
  int chunks = 1 + static_cast<int>(dsl::moves_of(lang).size());
  for_each_chunk_ordered<BranchBest>(space.jobs, chunks, run, merge);

  if (!best.valid || best.ig <= space.ig_tolerance) return std::nullopt;
  GuardCondition condition;
  condition.guard = std::move(best.guard);
  if (!best.value.absent) condition.expected.push_back(best.value.token);
  return condition;
}

// --- synthesize ---

Context observe_guard(const GuardCondition& g, const Example& ex) {
  dsl::ExecState state(ex.program->ast, ex.query, ex.call_trace, &ex.program->trace);
  return dsl::exec_guard(g.guard, std::move(state));
}

struct Synthesizer {
  const CandidateSpace& space;
  Lang lang;

  DslProgram run(std::vector<const Example*> examples) {
    Action a_best = gen_action_on(examples);
    if (cost_on(examples, a_best) == 0) return a_best.to_leaf();
    std::optional<GuardCondition> g = gen_branch_impl(a_best, examples, space, lang);
    if (!g) return approximate();
    std::vector<const Example*> match;
    std::vector<const Example*> rest;
    for (const Example* ex : examples) {
      if (observe_guard(*g, *ex) == g->expected) {
        match.push_back(ex);
      } else {
        rest.push_back(ex);
      }
    }
    // Positive information gain forces both sides to be nonempty.
    if (match.empty() || rest.empty()) return approximate();
    DslProgram then_p = run(std::move(match));
    DslProgram else_p = run(std::move(rest));
    return DslProgram::branch_on(std::move(g->guard), std::move(g->expected), std::move(then_p),
                                 std::move(else_p));
  }

  Action gen_action_on(std::span<const Example* const> examples) const {
    if (lang == Lang::Alloc) return gen_action_alloc(examples);
    return gen_action_points_to(examples, space, lang);
  }

  std::size_t cost_on(std::span<const Example* const> examples, const Action& a) const {
    DslProgram leaf = a.to_leaf();
    std::size_t total = 0;
    for (const Example* ex : examples) total += static_cast<std::size_t>(dataset::r(*ex, leaf));
    return total;
  }

  DslProgram approximate() const {
    if (lang == Lang::Alloc) return DslProgram::leaf(dsl::AllocVerdict::Top);
    return DslProgram::leaf(std::vector<Move>{Move::Top});
  }
};

void validate(const Dataset& d) {
  if (d.empty()) throw InvalidDataset("dataset is empty");
  for (const Example& ex : d.examples) {
    if (ex.mode != d.mode) throw InvalidDataset("dataset mixes analysis modes");
  }
}

}  // namespace

double info_gain(const Dataset& d, const Action& a_best, const GuardCondition& g) {
  if (d.empty()) return 0.0;
  DslProgram leaf = a_best.to_leaf();
  std::size_t in0 = 0, in1 = 0, out0 = 0, out1 = 0;
  for (const Example& ex : d.examples) {
    int ri = dataset::r(ex, leaf);
    bool matches = observe_guard(g, ex) == g.expected;
    if (matches) {
      (ri == 0 ? in0 : in1) += 1;
    } else {
      (ri == 0 ? out0 : out1) += 1;
    }
  }
  return ig_from_counts(in0, in1, out0, out1);
}

Action gen_action(const Dataset& d, const CandidateSpace& space) {
  validate(d);
  std::vector<const Example*> examples;
  examples.reserve(d.size());
  for (const Example& ex : d.examples) examples.push_back(&ex);
  if (dataset::lang_of(d.mode) == Lang::Alloc) return gen_action_alloc(examples);
  return gen_action_points_to(examples, space, Lang::PointsTo);
}

std::optional<GuardCondition> gen_branch(const Action& a_best, const Dataset& d,
                                         const CandidateSpace& space) {
  validate(d);
  std::vector<const Example*> examples;
  examples.reserve(d.size());
  for (const Example& ex : d.examples) examples.push_back(&ex);
  return gen_branch_impl(a_best, examples, space, dataset::lang_of(d.mode));
}

dsl::DslProgram synthesize(const Dataset& d, const CandidateSpace& space) {
  validate(d);
  std::vector<const Example*> examples;
  examples.reserve(d.size());
  for (const Example& ex : d.examples) examples.push_back(&ex);
  Synthesizer synth{space, dataset::lang_of(d.mode)};
  return synth.run(std::move(examples));
}

}  // namespace analearn::synthesis
