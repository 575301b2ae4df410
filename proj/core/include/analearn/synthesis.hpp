#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "analearn/dataset.hpp"
#include "analearn/dsl.hpp"

// ID3-style decision-tree learner over the tree-navigation languages:
// exhaustive action/guard enumeration, information-gain branch selection and
// a regularized cost that prefers shorter programs.
namespace analearn::synthesis {

using dataset::Dataset;
using dataset::Example;

struct EmptyVector : std::invalid_argument {
  EmptyVector() : std::invalid_argument("entropy of an empty vector") {}
};

struct InvalidDataset : std::invalid_argument {
  explicit InvalidDataset(const std::string& what) : std::invalid_argument(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct CandidateSpace {
  int action_bound = 5;    // max instructions per action
  int guard_bound = 6;     // max instructions per guard, including its single write
  int value_top_k = 10;    // most common observed contexts tried per guard
  double lambda = 0.01;    // regularization constant
  double ig_tolerance = 1e-12;
  int jobs = 1;            // enumeration threads; results are schedule-independent
};

// key=value lines: action_bound, guard_bound, value_top_k, lambda, ig_tolerance.
CandidateSpace space_from_config(std::string_view text);

// A branchless candidate program: a move sequence (points-to) or a verdict.
struct Action {
  dsl::Lang lang = dsl::Lang::PointsTo;
  std::vector<dsl::Move> moves;
  dsl::AllocVerdict verdict = dsl::AllocVerdict::Top;

  dsl::DslProgram to_leaf() const;
};

struct GuardCondition {
  std::vector<dsl::Instruction> guard;
  dsl::Context expected;
};

// Shannon entropy of a class-label vector, in bits.
double entropy(std::span<const int> classes);

double omega(const dsl::DslProgram& p);

double cost_reg(const Dataset& d, const dsl::DslProgram& pa, double lambda);

double info_gain(const Dataset& d, const Action& a_best, const GuardCondition& g);

// Most precise branchless program: argmin of the regularized cost over the
// bounded enumeration, ties broken by size then enumeration order.
Action gen_action(const Dataset& d, const CandidateSpace& space);

// Best guard/expected-context split by information gain, or nullopt when no
// candidate gains anything.
std::optional<GuardCondition> gen_branch(const Action& a_best, const Dataset& d,
                                         const CandidateSpace& space);

dsl::DslProgram synthesize(const Dataset& d, const CandidateSpace& space);

}  // namespace analearn::synthesis
