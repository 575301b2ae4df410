#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "analearn/dataset.hpp"
#include "analearn/oracle.hpp"
#include "analearn/synthesis.hpp"

namespace fs = std::filesystem;
using analearn::dataset::AnalysisMode;
using analearn::dataset::Dataset;
using analearn::dataset::ProgramRef;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParseError = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitBadNode = 4;
constexpr int kExitUnsound = 5;

struct CommonOpts {
  std::string mode_name = "pointsto-this";
  std::string corpus;
  std::string out;
  std::string config;
  std::uint64_t seed = 1;
  std::size_t budget = 5000;
  std::size_t max_iters = 100;
  int jobs = 1;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

AnalysisMode parse_mode_or_exit(const std::string& name) {
  auto mode = analearn::dataset::mode_from_name(name);
  if (!mode) {
    std::cerr << "error: unknown mode '" << name << "'\n";
    std::exit(kExitBadConfig);
  }
  return *mode;
}

analearn::synthesis::CandidateSpace load_space(const CommonOpts& opts) {
  analearn::synthesis::CandidateSpace space;
  if (!opts.config.empty()) {
    space = analearn::synthesis::space_from_config(read_file(opts.config));
  }
  space.jobs = opts.jobs > 0 ? opts.jobs
                             : static_cast<int>(std::thread::hardware_concurrency());
  return space;
}

// Sorted for a stable corpus order regardless of directory enumeration.
std::vector<fs::path> corpus_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mini") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<ProgramRef> load_corpus(const std::string& dir) {
  std::vector<ProgramRef> programs;
  for (const fs::path& file : corpus_files(dir)) {
    ProgramRef program = analearn::dataset::make_program(read_file(file));
    if (program->runtime_error) {
      throw std::runtime_error(file.string() + ": runtime fault at node " +
                               std::to_string(program->runtime_error->node) + ": " +
                               program->runtime_error->message);
    }
    programs.push_back(std::move(program));
  }
  return programs;
}

int run_learn(const CommonOpts& opts) {
  AnalysisMode mode = parse_mode_or_exit(opts.mode_name);
  if (opts.corpus.empty() || opts.out.empty()) {
    std::cerr << "error: learn needs --corpus and --out\n";
    return kExitBadConfig;
  }
  analearn::synthesis::CandidateSpace space;
  try {
    space = load_space(opts);
  } catch (const analearn::synthesis::ConfigError& err) {
    std::cerr << "error: config: " << err.what() << "\n";
    return kExitBadConfig;
  }

  Dataset seed;
  try {
    seed = analearn::dataset::build_dataset(load_corpus(opts.corpus), mode);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  if (seed.empty()) {
    std::cerr << "error: corpus produced no examples\n";
    return kExitBadConfig;
  }

  analearn::oracle::LearnResult result =
      analearn::oracle::learn_loop(seed, space, opts.max_iters, opts.budget);

  fs::path out(opts.out);
  fs::path stem = out.parent_path() / out.stem();
  write_file(out, analearn::dsl::render_program(result.program));
  write_file(stem.string() + ".dataset.jsonl", analearn::dataset::dataset_to_jsonl(result.dataset));
  write_file(stem.string() + ".cex.jsonl", analearn::oracle::cex_log_to_jsonl(result.log));

  std::cout << "examples: " << result.dataset.size() << "\n"
            << "refinements: " << result.refinements << "\n"
            << "converged: " << (result.converged ? "yes" : "no") << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

int run_analyze(const CommonOpts& opts, const std::string& program_path,
                const std::string& dsl_path, std::uint64_t node) {
  ProgramRef program;
  analearn::dsl::DslProgram pa;
  try {
    program = analearn::dataset::make_program(read_file(program_path));
    pa = analearn::dsl::parse_program(read_file(dsl_path));
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  if (node >= program->ast.size()) {
    std::cerr << "error: node " << node << " out of range (tree has " << program->ast.size()
              << " nodes)\n";
    return kExitBadNode;
  }
  AnalysisMode mode = parse_mode_or_exit(opts.mode_name);
  std::vector<analearn::minijs::NodeId> call_trace;
  // For this-mode queries, reuse the call trace the interpreter observed.
  for (const analearn::dataset::Example& ex :
       analearn::dataset::extract_examples(program, mode)) {
    if (ex.query == node) {
      call_trace = ex.call_trace;
      break;
    }
  }
  analearn::dsl::ExecOutcome out = analearn::dsl::exec_program(
      pa, program->ast, static_cast<analearn::minijs::NodeId>(node), call_trace, program->trace);
  std::cout << analearn::dsl::lattice_result_to_string(out.result);
  if (out.result.kind == analearn::dsl::LatticeResult::Kind::Node) {
    std::cout << " " << analearn::minijs::node_kind_name(program->ast.node(out.result.node).kind)
              << " \"" << analearn::minijs::render_snippet(program->ast, out.result.node) << "\"";
  }
  std::cout << "\n";
  return kExitOk;
}

int run_trace(const std::string& program_path) {
  try {
    ProgramRef program = analearn::dataset::make_program(read_file(program_path));
    std::cout << analearn::minijs::format_trace(program->trace);
    if (program->runtime_error) {
      std::cerr << "runtime error at node " << program->runtime_error->node << ": "
                << program->runtime_error->message << "\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  return kExitOk;
}

int run_mutate(const std::string& program_path, std::optional<std::uint64_t> site) {
  ProgramRef program;
  try {
    program = analearn::dataset::make_program(read_file(program_path));
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  auto dump = [&](const analearn::oracle::Mutant& m) {
    std::cout << "// " << analearn::oracle::mutation_kind_name(m.kind) << " @ node " << m.site
              << " (" << m.payload << ")\n"
              << m.program->source << "---\n";
  };
  std::vector<analearn::minijs::NodeId> sites;
  if (site) {
    sites.push_back(static_cast<analearn::minijs::NodeId>(*site));
  } else {
    for (analearn::minijs::NodeId id = 0; id < program->ast.size(); ++id) sites.push_back(id);
  }
  for (analearn::minijs::NodeId s : sites) {
    if (s >= program->ast.size()) {
      std::cerr << "error: node " << s << " out of range\n";
      return kExitBadNode;
    }
    for (const auto& m : analearn::oracle::mutate_ema(program->ast, s)) dump(m);
    for (const auto& m : analearn::oracle::mutate_gj(program->ast, s)) dump(m);
  }
  return kExitOk;
}

int run_eval(const std::string& dsl_path, const std::string& dataset_path) {
  analearn::dsl::DslProgram pa;
  Dataset d;
  try {
    pa = analearn::dsl::parse_program(read_file(dsl_path));
    d = analearn::dataset::dataset_from_jsonl(read_file(dataset_path));
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  std::size_t precise = 0, approx = 0, unsound = 0;
  for (const analearn::dataset::Example& ex : d.examples) {
    switch (analearn::dataset::check_correct(analearn::dataset::run_analysis(pa, ex).result, ex)) {
      case analearn::dataset::Correctness::Precise: ++precise; break;
      case analearn::dataset::Correctness::SoundApprox: ++approx; break;
      case analearn::dataset::Correctness::Unsound: ++unsound; break;
    }
  }
  auto pct = [&](std::size_t n) {
    return d.empty() ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(d.size());
  };
  char line[128];
  std::snprintf(line, sizeof(line), "precise      %6zu  (%.1f%%)", precise, pct(precise));
  std::cout << line << "\n";
  std::snprintf(line, sizeof(line), "sound-approx %6zu  (%.1f%%)", approx, pct(approx));
  std::cout << line << "\n";
  std::snprintf(line, sizeof(line), "unsound      %6zu  (%.1f%%)", unsound, pct(unsound));
  std::cout << line << "\n";
  return unsound == 0 ? kExitOk : kExitUnsound;
}

int run_dataset_build(const CommonOpts& opts) {
  AnalysisMode mode = parse_mode_or_exit(opts.mode_name);
  if (opts.corpus.empty() || opts.out.empty()) {
    std::cerr << "error: dataset-build needs --corpus and --out\n";
    return kExitBadConfig;
  }
  try {
    Dataset d = analearn::dataset::build_dataset(load_corpus(opts.corpus), mode);
    write_file(opts.out, analearn::dataset::dataset_to_jsonl(d));
    std::cout << "examples: " << d.size() << "\n";
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analearn: learn static-analysis rules from interpreted MiniJS programs"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&opts](CLI::App* cmd) {
    cmd->add_option("--mode", opts.mode_name, "pointsto-this | pointsto-var | alloc");
    cmd->add_option("--corpus", opts.corpus, "directory of .mini programs");
    cmd->add_option("--out", opts.out, "output path");
    cmd->add_option("--config", opts.config, "learner config file (key=value)");
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--budget", opts.budget, "oracle candidate budget");
    cmd->add_option("--max-iters", opts.max_iters, "maximum refinement iterations");
    cmd->add_option("--jobs", opts.jobs, "enumeration threads (0 = hardware)");
  };

  CLI::App* learn = app.add_subcommand("learn", "learn a rule set from a corpus");
  add_common(learn);

  std::string program_path, dsl_path, dataset_path;
  std::uint64_t node = 0;
  std::optional<std::uint64_t> mutate_site;

  CLI::App* analyze = app.add_subcommand("analyze", "run a learned program on one query");
  add_common(analyze);
  analyze->add_option("program", program_path, "MiniJS file")->required();
  analyze->add_option("dsl", dsl_path, "learned .dsl file")->required();
  analyze->add_option("node", node, "query node id")->required();

  CLI::App* trace = app.add_subcommand("trace", "dump the instrumented trace of a program");
  trace->add_option("program", program_path, "MiniJS file")->required();

  CLI::App* mutate = app.add_subcommand("mutate", "dump the mutants of a program");
  mutate->add_option("program", program_path, "MiniJS file")->required();
  std::uint64_t site_value = 0;
  CLI::Option* site_opt = mutate->add_option("--site", site_value, "restrict to one site");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a learned program on a dataset");
  eval->add_option("dsl", dsl_path, "learned .dsl file")->required();
  eval->add_option("dataset", dataset_path, "JSON-lines dataset")->required();

  CLI::App* dataset_build = app.add_subcommand("dataset-build", "extract a dataset from a corpus");
  add_common(dataset_build);

  CLI11_PARSE(app, argc, argv);

  try {
    if (learn->parsed()) return run_learn(opts);
    if (analyze->parsed()) return run_analyze(opts, program_path, dsl_path, node);
    if (trace->parsed()) return run_trace(program_path);
    if (mutate->parsed()) {
      if (site_opt->count() > 0) mutate_site = site_value;
      return run_mutate(program_path, mutate_site);
    }
    if (eval->parsed()) return run_eval(dsl_path, dataset_path);
    if (dataset_build->parsed()) return run_dataset_build(opts);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitParseError;
  }
  return kExitOk;
}
