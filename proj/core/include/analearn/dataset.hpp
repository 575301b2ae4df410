#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "analearn/dsl.hpp"
#include "analearn/minijs.hpp"

// Turns instrumented traces into labeled analysis examples and defines the
// correctness predicate and precision cost the learner optimizes.
namespace analearn::dataset {

using minijs::NodeId;
using minijs::ObjectId;

enum class AnalysisMode : std::uint8_t { PointsToThis, PointsToVar, AllocSite };

std::string_view mode_name(AnalysisMode mode);  // pointsto-this | pointsto-var | alloc
std::optional<AnalysisMode> mode_from_name(std::string_view name);
dsl::Lang lang_of(AnalysisMode mode);

// A parsed program with its trace; shared by all examples drawn from it.
struct ProgramInfo {
  std::string source;
  minijs::Ast ast;
  minijs::Trace trace;
  std::optional<minijs::RuntimeErrorInfo> runtime_error;
};

using ProgramRef = std::shared_ptr<const ProgramInfo>;

// Parses and interprets `source`. Throws minijs::SyntaxError on parse errors;
// a runtime fault is recorded in the result, with the trace prefix kept.
ProgramRef make_program(std::string source);

// Points-to ground truth: SELF when the object had not been read before the
// query, otherwise every node the object was read at strictly earlier.
struct PointsToLabel {
  ObjectId object = minijs::kNoObject;
  bool self_ok = false;
  std::vector<NodeId> accept;  // sorted ascending

  bool accepts(NodeId n) const;
};

struct AllocLabel {
  bool is_alloc = false;
};

struct Example {
  ProgramRef program;
  NodeId query = minijs::kNoNode;
  std::vector<NodeId> call_trace;  // most recent first; empty in alloc mode
  AnalysisMode mode = AnalysisMode::PointsToThis;
  std::variant<PointsToLabel, AllocLabel> label;
};

std::vector<Example> extract_examples(const ProgramRef& program, AnalysisMode mode);

struct Dataset {
  AnalysisMode mode = AnalysisMode::PointsToThis;
  std::vector<Example> examples;

  // Keeps the first occurrence of each (source, query, call trace) triple.
  bool add(Example ex);
  bool contains(const std::string& source, NodeId query,
                const std::vector<NodeId>& call_trace) const;
  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

Dataset build_dataset(const std::vector<ProgramRef>& programs, AnalysisMode mode);

enum class Correctness : std::uint8_t { Precise, SoundApprox, Unsound };

std::string_view correctness_name(Correctness c);

Correctness check_correct(const dsl::LatticeResult& result, const Example& ex);

dsl::ExecOutcome run_analysis(const dsl::DslProgram& pa, const Example& ex);

// Precision indicator: 0 only when the analysis answer is precise; a sound
// but approximate Top still counts 1.
int r(const Example& ex, const dsl::DslProgram& pa);

std::size_t cost(const Dataset& d, const dsl::DslProgram& pa);

// True when no example is answered unsoundly (cost 0 implies this).
bool is_correct_on(const Dataset& d, const dsl::DslProgram& pa);

// JSON-lines serialization. Loading re-parses and re-interprets every source
// and validates the stored labels against the recomputed ones.
std::string dataset_to_jsonl(const Dataset& d);
Dataset dataset_from_jsonl(std::string_view text);

}  // namespace analearn::dataset
