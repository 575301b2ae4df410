#include <random>
#include <sstream>

#include <json.hpp>

#include "analearn/oracle.hpp"

namespace analearn::oracle {

using dataset::check_correct;
using dataset::Correctness;
using dsl::LatticeResult;

std::vector<NodeId> read_positions(const dsl::DslProgram& pa, const Example& ex) {
  return dataset::run_analysis(pa, ex).read_set;
}

namespace {

struct ProgramGroup {
  ProgramRef program;
  std::vector<const Example*> examples;
};

std::vector<ProgramGroup> group_by_program(const Dataset& d) {
  std::vector<ProgramGroup> groups;
  for (const Example& ex : d.examples) {
    ProgramGroup* group = nullptr;
    for (ProgramGroup& g : groups) {
      if (g.program->source == ex.program->source) {
        group = &g;
        break;
      }
    }
    if (group == nullptr) {
      groups.push_back(ProgramGroup{ex.program, {}});
      group = &groups.back();
    }
    group->examples.push_back(&ex);
  }
  return groups;
}

bool results_equal_under_map(const LatticeResult& base, const LatticeResult& mutated,
                             const std::unordered_map<NodeId, NodeId>& id_map) {
  if (base.kind != LatticeResult::Kind::Node || mutated.kind != LatticeResult::Kind::Node) {
    return base.kind == mutated.kind;
  }
  auto it = id_map.find(base.node);
  return it != id_map.end() && it->second == mutated.node;
}

class CounterExampleSearch {
 public:
  CounterExampleSearch(const dsl::DslProgram& pa, const Dataset& d, std::size_t budget)
      : pa_(pa), d_(d), budget_(budget) {}

  // Evaluates one mutant; fills `found` when it is a counter-example. Returns
  // false once the budget is exhausted.
  bool consider(const Mutant& mutant, const ProgramGroup& group,
                std::optional<CounterExampleReport>& found) {
    if (tried_ == budget_) return false;
    ++tried_;
    if (mutant.program->runtime_error) return true;  // unusable ground truth

    std::vector<Example> mutant_examples = dataset::extract_examples(mutant.program, d_.mode);

    if (is_ema(mutant.kind)) {
      // A correct analysis answers identically (modulo node renumbering) on a
      // semantics-preserving transformation of the program.
      for (const Example* ex : group.examples) {
        auto transported = transport_example(*ex, mutant);
        if (!transported) continue;
        LatticeResult base = dataset::run_analysis(pa_, *ex).result;
        LatticeResult mutated = dataset::run_analysis(pa_, *transported).result;
        if (results_equal_under_map(base, mutated, mutant.id_map)) continue;
        for (const Example& fresh : mutant_examples) {
          if (fresh.query != transported->query || fresh.call_trace != transported->call_trace) {
            continue;
          }
          if (d_.contains(fresh.program->source, fresh.query, fresh.call_trace)) break;
          found = CounterExampleReport{fresh, ViolationKind::Ema, tried_};
          return true;
        }
      }
    }

    for (const Example& fresh : mutant_examples) {
      if (check_correct(dataset::run_analysis(pa_, fresh).result, fresh) != Correctness::Unsound) {
        continue;
      }
      if (d_.contains(fresh.program->source, fresh.query, fresh.call_trace)) continue;
      found = CounterExampleReport{fresh, ViolationKind::Dataset, tried_};
      return true;
    }
    return true;
  }

  std::size_t tried() const { return tried_; }

 private:
  const dsl::DslProgram& pa_;
  const Dataset& d_;
  std::size_t budget_;
  std::size_t tried_ = 0;
};

std::vector<NodeId> ranked_sites(const dsl::DslProgram& pa, const ProgramGroup& group) {
  std::vector<NodeId> sites;
  auto add = [&sites](NodeId site) {
    for (NodeId seen : sites) {
      if (seen == site) return;
    }
    sites.push_back(site);
  };
  for (const Example* ex : group.examples) {
    for (NodeId site : read_positions(pa, *ex)) add(site);
  }
  return sites;
}

}  // namespace

std::optional<CounterExampleReport> find_counterexample(const dsl::DslProgram& pa,
                                                        const Dataset& d, std::size_t budget) {
  if (budget == 0) return std::nullopt;
  CounterExampleSearch search(pa, d, budget);
  std::optional<CounterExampleReport> found;
  for (const ProgramGroup& group : group_by_program(d)) {
    for (NodeId site : ranked_sites(pa, group)) {
      for (const Mutant& mutant : mutate_ema(group.program->ast, site)) {
        if (!search.consider(mutant, group, found)) return std::nullopt;
        if (found) return found;
      }
      for (const Mutant& mutant : mutate_gj(group.program->ast, site)) {
        if (!search.consider(mutant, group, found)) return std::nullopt;
        if (found) return found;
      }
    }
  }
  return std::nullopt;
}

std::optional<CounterExampleReport> blackbox_counterexample(const dsl::DslProgram& pa,
                                                            const Dataset& d, std::size_t budget,
                                                            std::uint64_t seed) {
  if (budget == 0) return std::nullopt;
  std::vector<ProgramGroup> groups = group_by_program(d);
  if (groups.empty()) return std::nullopt;
  std::mt19937_64 rng(seed);
  CounterExampleSearch search(pa, d, budget);
  std::optional<CounterExampleReport> found;
  // Uniformly random program and site; every applicable modification is tried
  // at the picked site. Picks are capped so that mutation-free sites cannot
  // spin forever.
  std::size_t max_picks = budget * 16 + 64;
  for (std::size_t pick = 0; pick < max_picks; ++pick) {
    const ProgramGroup& group = groups[rng() % groups.size()];
    NodeId site = static_cast<NodeId>(rng() % group.program->ast.size());
    for (const Mutant& mutant : mutate_ema(group.program->ast, site)) {
      if (!search.consider(mutant, group, found)) return std::nullopt;
      if (found) return found;
    }
    for (const Mutant& mutant : mutate_gj(group.program->ast, site)) {
      if (!search.consider(mutant, group, found)) return std::nullopt;
      if (found) return found;
    }
  }
  return std::nullopt;
}

std::string cex_log_to_jsonl(const std::vector<CexLogEntry>& log) {
  std::ostringstream out;
  for (const CexLogEntry& entry : log) {
    nlohmann::json line;
    line["iter"] = entry.iter;
    line["violation"] = entry.violation == ViolationKind::Ema ? "ema" : "dataset";
    line["candidatesTried"] = entry.candidates_tried;
    line["source"] = entry.source;
    out << line.dump() << '\n';
  }
  return out.str();
}

LearnResult learn_loop(const Dataset& d0, const synthesis::CandidateSpace& space,
                       std::size_t max_iters, std::size_t budget) {
  LearnResult result;
  result.dataset = d0;
  result.program = synthesis::synthesize(result.dataset, space);
  while (result.refinements < max_iters) {
    std::optional<CounterExampleReport> cex =
        find_counterexample(result.program, result.dataset, budget);
    if (!cex) {
      result.converged = true;
      return result;
    }
    ++result.refinements;
    result.log.push_back(CexLogEntry{result.refinements, cex->violation, cex->candidates_tried,
                                     cex->example.program->source});
    result.dataset.add(cex->example);
    result.program = synthesis::synthesize(result.dataset, space);
  }
  result.converged = false;
  return result;
}

}  // namespace analearn::oracle
