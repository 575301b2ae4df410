#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "analearn/dataset.hpp"
#include "analearn/synthesis.hpp"

// Counter-example search: analyzer-guided mutation of the training programs
// (semantics-preserving EMA edits and semantics-changing global jumps) inside
// the outer refinement loop.
namespace analearn::oracle {

using dataset::Dataset;
using dataset::Example;
using dataset::ProgramRef;
using minijs::Ast;
using minijs::NodeId;

enum class MutationKind : std::uint8_t {
  // semantics-preserving (EMA)
  AddDeadCode,
  RenameVariable,
  RenameUserFunction,
  AddSideEffectFreeExpr,
  // global jumps
  AddMethodArgument,
  AddMethodParameter,
  ChangeConstant,
};

std::string_view mutation_kind_name(MutationKind kind);
bool is_ema(MutationKind kind);

struct Mutant {
  MutationKind kind;
  NodeId site = minijs::kNoNode;
  std::string payload;  // inserted name, new constant, argument description
  ProgramRef program;   // parsed and interpreted mutant
  // Node ids of the base program mapped into the mutant (stable nodes only;
  // includes the synthetic leaves).
  std::unordered_map<NodeId, NodeId> id_map;
};

// Semantics-preserving mutations near `site`: dead code behind a constant-false
// branch, consistent renames, and a fresh side-effect-free declaration.
// Synthetic sites yield nothing.
std::vector<Mutant> mutate_ema(const Ast& ast, NodeId site);

// Possibly semantics-changing mutations: constants swapped from a fixed pool,
// arguments appended to the enclosing call, parameters appended to the
// enclosing function.
std::vector<Mutant> mutate_gj(const Ast& ast, NodeId site);

// Maps an example of the base program onto the mutant; nullopt when a node it
// mentions did not survive the edit.
std::optional<Example> transport_example(const Example& ex, const Mutant& mutant);

// Nodes the analyzer inspects while answering `ex`, in first-visit order.
// These are the prioritized mutation sites.
std::vector<NodeId> read_positions(const dsl::DslProgram& pa, const Example& ex);

enum class ViolationKind : std::uint8_t { Ema, Dataset };

struct CounterExampleReport {
  Example example;
  ViolationKind violation = ViolationKind::Dataset;
  std::size_t candidates_tried = 0;
};

// First mutant (in deterministic order, analyzer-read positions first) that
// either breaks the EMA equivalence of `pa` or is answered unsoundly against
// its freshly interpreted ground truth. NONE once `budget` mutants were tried.
std::optional<CounterExampleReport> find_counterexample(const dsl::DslProgram& pa,
                                                        const Dataset& d, std::size_t budget);

// Baseline oracle: programs and sites picked uniformly at random instead of
// analyzer-guided.
std::optional<CounterExampleReport> blackbox_counterexample(const dsl::DslProgram& pa,
                                                            const Dataset& d, std::size_t budget,
                                                            std::uint64_t seed);

struct CexLogEntry {
  std::size_t iter = 0;
  ViolationKind violation = ViolationKind::Dataset;
  std::size_t candidates_tried = 0;
  std::string source;
};

std::string cex_log_to_jsonl(const std::vector<CexLogEntry>& log);

struct LearnResult {
  dsl::DslProgram program;
  Dataset dataset;
  bool converged = false;
  std::size_t refinements = 0;
  std::vector<CexLogEntry> log;
};

// Synthesize / find-counter-example / grow-dataset until the oracle comes up
// empty, or `max_iters` refinements happened (result flagged unconverged).
LearnResult learn_loop(const Dataset& d0, const synthesis::CandidateSpace& space,
                       std::size_t max_iters, std::size_t budget);

}  // namespace analearn::oracle
