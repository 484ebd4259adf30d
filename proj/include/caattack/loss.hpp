#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caattack/matrix.hpp"

namespace caatk {

enum class BaseLoss { nll, cw };

std::string to_string(BaseLoss base);
BaseLoss parse_base_loss(const std::string& name);

// Margin-dependent weight schedule w = alpha * exp(-beta * margin^2), with
// one (alpha, beta) pair for non-negative margins and one for negative ones.
struct CAWeightParams {
  double alpha1 = 4.5;
  double beta1 = 1.0;
  double alpha2 = 1.0;
  double beta2 = 1.0;

  // Alphas must be positive. Betas may be zero, which turns the schedule into
  // constant per-branch weights.
  void validate() const;
};

struct LossSpec {
  BaseLoss base = BaseLoss::nll;
  std::optional<CAWeightParams> ca;  // engaged iff cost-aware weighting is on
  double cw_kappa = 0.0;

  bool ca_enabled() const { return ca.has_value(); }
  // "CE", "CW", "CA-CE", "CA-CW"
  std::string name() const;
  void validate() const;
};

// Per-node values are indexed by node id; entries outside the evaluated
// node set are zero, so `total` is the sum of `per_node`.
struct LossValue {
  double total = 0.0;
  std::vector<double> per_node;
};

// Class margin z[label] - max_{c != label} z[c] per row. Throws for K < 2.
std::vector<double> margins(const Matrix& logits, std::span<const int> labels);

// Row-wise argmax, ties to the smallest class index.
std::vector<int> argmax_rows(const Matrix& logits);

LossValue nll_loss(const Matrix& logits, std::span<const int> labels,
                   std::span<const std::size_t> nodes);

// max(margin, -kappa) per node.
LossValue cw_loss(const Matrix& logits, std::span<const int> labels,
                  std::span<const std::size_t> nodes, double kappa);

// Zero margins take the non-negative branch.
std::vector<double> ca_weights(std::span<const double> margins, const CAWeightParams& p);

// Weighted base loss; weights come from the current margins and act as
// constants.
LossValue ca_loss(const Matrix& logits, std::span<const int> labels,
                  std::span<const std::size_t> nodes, const CAWeightParams& p, BaseLoss base,
                  double kappa = 0.0);

// Per-node weights implied by a spec: all ones unless cost-aware.
std::vector<double> loss_weights(const Matrix& logits, std::span<const int> labels,
                                 const LossSpec& spec);

// The quantity the attack ascends: +sum w*nll for NLL and -sum w*cw for CW,
// over `nodes`, with the given weights held fixed. `dlogits` is its gradient
// with respect to the logits.
struct ObjectiveTerms {
  double value = 0.0;
  std::vector<double> per_node;
  Matrix dlogits;
};

ObjectiveTerms attack_objective(const Matrix& logits, std::span<const int> labels,
                                std::span<const std::size_t> nodes, const LossSpec& spec,
                                std::span<const double> weights);

}  // namespace caatk
