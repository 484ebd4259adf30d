#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "caattack/attack.hpp"
#include "caattack/graph.hpp"
#include "caattack/loss.hpp"
#include "caattack/model.hpp"

namespace caatk {

struct SampleSummary {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;  // 1.96 * s / sqrt(n), s the sample standard deviation
  bool degenerate = false;      // n == 1: half-width reported as 0
};

SampleSummary summarize(std::span<const double> values);

struct EvalReport {
  std::string dataset;
  std::string attack;
  std::string loss;
  double budget_fraction = 0.0;
  std::size_t budget = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_accuracy;
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
  bool degenerate_ci = false;
  double wall_clock_seconds = 0.0;
  std::vector<Flip> flips;
  bool exhausted = false;
  nlohmann::json config = nlohmann::json::object();
};

// Trains the victim once per seed on `poisoned` and scores it on the
// unlabeled nodes against ground truth. Throws std::invalid_argument for an
// empty seed list or graphs that disagree on nodes or labels.
EvalReport evaluate(const Graph& clean, const Graph& poisoned, const VictimHyper& hyper,
                    std::span<const std::uint64_t> seeds);

struct ScatterPoint {
  std::size_t node = 0;
  double margin = 0.0;
  double grad_l2 = 0.0;
};

// Trains the surrogate on `g` and reports, per unlabeled node, its margin and
// the norm of its own gradient term. Both are measured against ground-truth
// labels so misclassified nodes show up with negative margins.
std::vector<ScatterPoint> margin_gradient_scatter(const Graph& g, const LossSpec& spec,
                                                  const SurrogateHyper& hyper = {});

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points);

}  // namespace caatk
