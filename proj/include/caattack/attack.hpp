#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "caattack/gradient.hpp"
#include "caattack/graph.hpp"
#include "caattack/loss.hpp"
#include "caattack/model.hpp"

namespace caatk {

struct ConstraintConfig {
  bool forbid_singletons = true;
  bool degree_test = false;
  // Upper bound on the power-law likelihood-ratio statistic.
  double degree_test_threshold = 0.004;
};

struct AttackConfig {
  std::size_t budget = 0;
  LossSpec loss;
  std::size_t retrain_every = 1;
  SurrogateHyper surrogate;
  ConstraintConfig constraints;
  std::uint64_t seed = 0;
  // DICE only.
  double dice_delete_probability = 0.5;
  std::size_t dice_max_retries = 1000;

  void validate() const;
};

enum class FlipOp { add, remove };
std::string to_string(FlipOp op);

struct Flip {
  std::size_t i = 0;
  std::size_t j = 0;
  FlipOp op = FlipOp::add;

  friend bool operator==(const Flip&, const Flip&) = default;
};

struct IterationTrace {
  std::size_t iteration = 0;
  bool retrained = false;
  double score = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::size_t negative_margins = 0;  // unlabeled nodes, current surrogate vs pseudo-labels
  double mean_margin = 0.0;
  std::size_t rejected = 0;  // better-scoring candidates refused by constraints
};

struct AttackResult {
  std::vector<Flip> flips;
  Graph poisoned;
  std::vector<IterationTrace> trace;
  bool exhausted = false;  // stopped before the budget: no feasible improving flip
};

struct Candidate {
  std::size_t i = 0;
  std::size_t j = 0;
  double score = 0.0;
};

// All pairs i < j scored by M_ij * (1 - 2 A_ij): positive means flipping the
// pair in its only feasible direction increases the attack objective.
// Sorted by score descending, then (i, j) ascending.
std::vector<Candidate> score_flips(const GradMatrix& m, const Graph& g);

// Power-law fit of a degree sequence restricted to degrees >= d_min, kept as
// sufficient statistics so single flips can be scored incrementally.
struct PowerLawStats {
  static constexpr double d_min = 2.0;
  double count = 0.0;
  double sum_log = 0.0;

  static PowerLawStats of(std::span<const std::size_t> degrees);
  void remove(std::size_t degree);
  void add(std::size_t degree);
  double alpha() const;
  double log_likelihood() const;
};

// Likelihood-ratio statistic comparing "one shared power law" against "two
// separate power laws" for the clean and modified degree sequences.
double degree_likelihood_ratio(const PowerLawStats& clean, const PowerLawStats& modified);

enum class Rejection { none, singleton, degree_distribution, self_loop };
std::string to_string(Rejection r);

struct ConstraintVerdict {
  Rejection reason = Rejection::none;
  bool allowed() const { return reason == Rejection::none; }
};

// `clean` must be supplied when the degree test is enabled.
ConstraintVerdict constraint_check(const Graph& g, std::size_t i, std::size_t j,
                                   const ConstraintConfig& cfg,
                                   const PowerLawStats* clean = nullptr);

// Greedy gradient attack: retrain the surrogate every `retrain_every` flips,
// take the best-scoring feasible flip, repeat until the budget is spent.
// Pseudo-labels come from the surrogate trained on the clean graph.
AttackResult meta_attack(const Graph& g, const AttackConfig& cfg);

// Random baseline: delete edges inside a pseudo-label class or add edges
// across classes. Throws std::runtime_error when no feasible flip is found
// within the retry bound.
AttackResult dice_attack(const Graph& g, const AttackConfig& cfg);

}  // namespace caatk
