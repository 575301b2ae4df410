#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "analearn/dataset.hpp"

namespace analearn::dataset {

using minijs::NodeKind;
using minijs::Trace;
using minijs::TraceEvent;
using minijs::TraceEventKind;

std::string_view mode_name(AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::PointsToThis: return "pointsto-this";
    case AnalysisMode::PointsToVar: return "pointsto-var";
    case AnalysisMode::AllocSite: return "alloc";
  }
  return {};
}

std::optional<AnalysisMode> mode_from_name(std::string_view name) {
  if (name == "pointsto-this") return AnalysisMode::PointsToThis;
  if (name == "pointsto-var") return AnalysisMode::PointsToVar;
  if (name == "alloc") return AnalysisMode::AllocSite;
  return std::nullopt;
}

dsl::Lang lang_of(AnalysisMode mode) {
  return mode == AnalysisMode::AllocSite ? dsl::Lang::Alloc : dsl::Lang::PointsTo;
}

ProgramRef make_program(std::string source) {
  auto info = std::make_shared<ProgramInfo>();
  info->source = std::move(source);
  info->ast = minijs::parse(info->source);
  minijs::InterpretResult run = minijs::interpret(info->ast);
  info->trace = std::move(run.trace);
  info->runtime_error = run.error;
  return info;
}

bool PointsToLabel::accepts(NodeId n) const {
  return std::binary_search(accept.begin(), accept.end(), n);
}

namespace {

PointsToLabel points_to_label(const Trace& trace, std::size_t query_index) {
  const TraceEvent& query = trace.events[query_index];
  PointsToLabel label;
  label.object = query.object;
  std::set<NodeId> nodes;
  for (std::size_t i = 0; i < query_index; ++i) {
    const TraceEvent& ev = trace.events[i];
    if (is_read_event(ev.kind) && ev.object == query.object) nodes.insert(ev.node);
  }
  label.accept.assign(nodes.begin(), nodes.end());
  label.self_ok = label.accept.empty();
  return label;
}

bool is_member_property_position(const minijs::Ast& ast, NodeId n) {
  NodeId parent = ast.parent_of(n);
  return parent != minijs::kNoNode && ast.node(parent).kind == NodeKind::MemberExpression &&
         ast.node(n).index_in_parent == 1;
}

// Activation id per event: 0 for the global scope, a fresh id per MethodEnter.
std::vector<std::uint32_t> activation_ids(const Trace& trace) {
  std::vector<std::uint32_t> ids(trace.events.size());
  std::vector<std::uint32_t> stack{0};
  std::uint32_t next = 1;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    switch (trace.events[i].kind) {
      case TraceEventKind::MethodEnter:
        stack.push_back(next++);
        break;
      case TraceEventKind::MethodExit:
        if (stack.size() > 1) stack.pop_back();
        break;
      default: break;
    }
    ids[i] = stack.back();
  }
  return ids;
}

}  // namespace

std::vector<Example> extract_examples(const ProgramRef& program, AnalysisMode mode) {
  const Trace& trace = program->trace;
  const minijs::Ast& ast = program->ast;
  std::vector<Example> out;

  if (mode == AnalysisMode::PointsToThis) {
    std::set<std::pair<NodeId, std::vector<NodeId>>> seen;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      const TraceEvent& ev = trace.events[i];
      if (ev.kind != TraceEventKind::ThisRead) continue;
      if (!seen.insert({ev.node, ev.call_trace}).second) continue;
      out.push_back(Example{program, ev.node, ev.call_trace, mode, points_to_label(trace, i)});
    }
    return out;
  }

  if (mode == AnalysisMode::PointsToVar) {
    std::unordered_set<NodeId> seen;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      const TraceEvent& ev = trace.events[i];
      if (ev.kind != TraceEventKind::ObjectRead) continue;
      if (ast.node(ev.node).kind != NodeKind::Identifier) continue;
      if (ast.is_synthetic(ev.node)) continue;
      if (is_member_property_position(ast, ev.node)) continue;  // not a variable
      if (!seen.insert(ev.node).second) continue;
      out.push_back(Example{program, ev.node, {}, mode, points_to_label(trace, i)});
    }
    return out;
  }

  // Alloc mode: every first read of an object at a position, minus reads of
  // `this` and field accesses. A position is an allocation site when the
  // object had not been read earlier within the same method activation.
  std::vector<std::uint32_t> activation = activation_ids(trace);
  std::unordered_set<NodeId> seen;
  std::unordered_map<ObjectId, std::vector<std::size_t>> reads_of_object;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& ev = trace.events[i];
    if (!is_read_event(ev.kind)) continue;
    reads_of_object[ev.object].push_back(i);
    if (ev.kind == TraceEventKind::ThisRead) continue;
    if (ast.is_synthetic(ev.node)) continue;
    if (ast.node(ev.node).kind == NodeKind::ThisExpression) continue;
    if (is_member_property_position(ast, ev.node)) continue;
    if (!seen.insert(ev.node).second) continue;
    bool seen_before = false;
    for (std::size_t j : reads_of_object[ev.object]) {
      if (j >= i) break;
      if (activation[j] == activation[i]) {
        seen_before = true;
        break;
      }
    }
    out.push_back(Example{program, ev.node, {}, mode, AllocLabel{!seen_before}});
  }
  return out;
}

bool Dataset::add(Example ex) {
  if (contains(ex.program->source, ex.query, ex.call_trace)) return false;
  examples.push_back(std::move(ex));
  return true;
}

bool Dataset::contains(const std::string& source, NodeId query,
                       const std::vector<NodeId>& call_trace) const {
  for (const Example& ex : examples) {
    if (ex.query == query && ex.call_trace == call_trace && ex.program->source == source) {
      return true;
    }
  }
  return false;
}

Dataset build_dataset(const std::vector<ProgramRef>& programs, AnalysisMode mode) {
  Dataset d;
  d.mode = mode;
  for (const ProgramRef& program : programs) {
    for (Example& ex : extract_examples(program, mode)) d.add(std::move(ex));
  }
  return d;
}

std::string_view correctness_name(Correctness c) {
  switch (c) {
    case Correctness::Precise: return "precise";
    case Correctness::SoundApprox: return "sound-approx";
    case Correctness::Unsound: return "unsound";
  }
  return {};
}

Correctness check_correct(const dsl::LatticeResult& result, const Example& ex) {
  using Kind = dsl::LatticeResult::Kind;
  if (result.kind == Kind::Top) return Correctness::SoundApprox;
  if (result.kind == Kind::Bottom) return Correctness::Unsound;

  if (const auto* label = std::get_if<PointsToLabel>(&ex.label)) {
    if (result.kind != Kind::Node) return Correctness::Unsound;
    if (result.node == ex.query) {
      return label->self_ok ? Correctness::Precise : Correctness::Unsound;
    }
    return label->accepts(result.node) ? Correctness::Precise : Correctness::Unsound;
  }
  const auto& label = std::get<AllocLabel>(ex.label);
  if (result.kind == Kind::NewAlloc) {
    return label.is_alloc ? Correctness::Precise : Correctness::Unsound;
  }
  if (result.kind == Kind::NoAlloc) {
    return label.is_alloc ? Correctness::Unsound : Correctness::Precise;
  }
  return Correctness::Unsound;
}

dsl::ExecOutcome run_analysis(const dsl::DslProgram& pa, const Example& ex) {
  return dsl::exec_program(pa, ex.program->ast, ex.query, ex.call_trace, ex.program->trace);
}

int r(const Example& ex, const dsl::DslProgram& pa) {
  return check_correct(run_analysis(pa, ex).result, ex) == Correctness::Precise ? 0 : 1;
}

std::size_t cost(const Dataset& d, const dsl::DslProgram& pa) {
  std::size_t total = 0;
  for (const Example& ex : d.examples) total += static_cast<std::size_t>(r(ex, pa));
  return total;
}

bool is_correct_on(const Dataset& d, const dsl::DslProgram& pa) {
  for (const Example& ex : d.examples) {
    if (check_correct(run_analysis(pa, ex).result, ex) == Correctness::Unsound) return false;
  }
  return true;
}

}  // namespace analearn::dataset
