#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "analearn/dataset.hpp"

namespace analearn::dataset {

namespace {

using nlohmann::json;

json example_to_json(const Example& ex) {
  json line;
  line["source"] = ex.program->source;
  line["node"] = ex.query;
  line["calltrace"] = ex.call_trace;
  if (const auto* label = std::get_if<PointsToLabel>(&ex.label)) {
    line["label"] = json{{"self", label->self_ok}, {"accept", label->accept}};
  } else {
    line["label"] = json{{"alloc", std::get<AllocLabel>(ex.label).is_alloc}};
  }
  line["mode"] = std::string(mode_name(ex.mode));
  return line;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
  throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + message);
}

}  // namespace

std::string dataset_to_jsonl(const Dataset& d) {
  std::ostringstream out;
  for (const Example& ex : d.examples) out << example_to_json(ex).dump() << '\n';
  return out.str();
}

Dataset dataset_from_jsonl(std::string_view text) {
  Dataset out;
  std::map<std::string, ProgramRef> programs;
  std::map<std::string, std::vector<Example>> recomputed;
  bool mode_set = false;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded()) fail(line_no, "malformed JSON");
    auto mode = mode_from_name(entry.value("mode", ""));
    if (!mode) fail(line_no, "unknown mode");
    if (!mode_set) {
      out.mode = *mode;
      mode_set = true;
    } else if (*mode != out.mode) {
      fail(line_no, "mixed analysis modes");
    }

    std::string source = entry.at("source").get<std::string>();
    auto it = programs.find(source);
    if (it == programs.end()) {
      ProgramRef program = make_program(source);
      it = programs.emplace(source, program).first;
      recomputed[source] = extract_examples(program, *mode);
    }

    NodeId query = entry.at("node").get<NodeId>();
    std::vector<NodeId> call_trace = entry.at("calltrace").get<std::vector<NodeId>>();

    const Example* match = nullptr;
    for (const Example& ex : recomputed[source]) {
      if (ex.query == query && ex.call_trace == call_trace) {
        match = &ex;
        break;
      }
    }
    if (match == nullptr) fail(line_no, "no example at this query position");

    const json& label = entry.at("label");
    if (const auto* pt = std::get_if<PointsToLabel>(&match->label)) {
      if (!label.contains("self") || !label.contains("accept")) {
        fail(line_no, "expected a points-to label");
      }
      if (label["self"].get<bool>() != pt->self_ok ||
          label["accept"].get<std::vector<NodeId>>() != pt->accept) {
        fail(line_no, "label does not match the recomputed trace");
      }
    } else {
      const auto& alloc = std::get<AllocLabel>(match->label);
      if (!label.contains("alloc")) fail(line_no, "expected an alloc label");
      if (label["alloc"].get<bool>() != alloc.is_alloc) {
        fail(line_no, "label does not match the recomputed trace");
      }
    }
    out.add(*match);
  }
  return out;
}

}  // namespace analearn::dataset
