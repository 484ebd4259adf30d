#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "caattack/graph.hpp"
#include "caattack/loss.hpp"
#include "caattack/matrix.hpp"
#include "caattack/model.hpp"

namespace caatk {

// Symmetric N x N gradient of the attack objective with respect to A, with a
// zero diagonal.
struct GradMatrix {
  Matrix matrix;
};

// Everything one gradient evaluation produces. `raw` is dJ/dA with each
// entry of A treated independently; `symmetric` is (raw + rawᵀ) / 2 with the
// diagonal zeroed. Margins and weights are those of the current logits
// against `labels`.
struct GradientEvaluation {
  Matrix raw;
  GradMatrix symmetric;
  double objective = 0.0;
  std::vector<double> margins;
  std::vector<double> weights;
};

// Gradient of the objective the attack ascends (see attack_objective),
// summed over the unlabeled nodes of `g`, with the surrogate weights frozen.
// The chain rule runs through the normalization of Â, including the degree
// matrix. Cost-aware weights are recomputed from the current margins and
// treated as constants.
GradientEvaluation evaluate_attack_gradient(const Graph& g, const SurrogateParams& p,
                                            const LossSpec& spec, std::span<const int> labels);

GradMatrix attack_gradient(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                           std::span<const int> labels);

// Objective value alone (weights from the current margins).
double attack_objective_value(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                              std::span<const int> labels);

struct NodeGradientNorm {
  std::size_t node = 0;
  double norm = 0.0;  // Frobenius norm of that node's raw gradient matrix
};

// For every unlabeled node v, the Frobenius norm of d(w_v * l_v)/dA. Uses the
// rank-two structure of each node's contribution, O(N K + nnz) per node.
std::vector<NodeGradientNorm> per_node_gradients(const Graph& g, const SurrogateParams& p,
                                                 const LossSpec& spec,
                                                 std::span<const int> labels);

// Dense raw gradient of one node's term; O(N^2 K), meant for checks.
Matrix per_node_gradient_matrix(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                                std::span<const int> labels, std::size_t node);

// Central differences on the relaxed adjacency. For each pair i < j, A_ij and
// A_ji move together by +-h; the difference quotient is halved so the result
// is comparable with the symmetrized analytic gradient. Weights are frozen at
// the unperturbed point. Intended for small graphs (N <= 30).
GradMatrix finite_difference_gradient(const Graph& g, const SurrogateParams& p,
                                      const LossSpec& spec, std::span<const int> labels,
                                      double h);

// Objective value on an arbitrary real adjacency with fixed weights; the
// evaluation path behind finite_difference_gradient.
double relaxed_objective(const Matrix& adjacency, const Matrix& features, const Matrix& weight,
                         const LossSpec& spec, std::span<const int> labels,
                         std::span<const std::size_t> nodes, std::span<const double> weights);

}  // namespace caatk
