#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "caattack/graph.hpp"
#include "caattack/matrix.hpp"

namespace caatk {

// Linearized two-layer GCN: logits = Â Â X W.
struct SurrogateParams {
  Matrix weight;  // d x K
};

// primal updates W directly (cost L*d*K per epoch); dual keeps W in the row
// space of the labeled features (L*L*K per epoch). Both give the same W up to
// rounding; automatic picks dual when L < d.
enum class SurrogateSolver { automatic, primal, dual };

struct SurrogateHyper {
  double lr = 0.1;
  int epochs = 200;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  SurrogateSolver solver = SurrogateSolver::automatic;
};

// Zero-mean uniform entries in [-1/sqrt(d), 1/sqrt(d)].
SurrogateParams init_surrogate(std::size_t feature_dim, std::size_t num_classes,
                               std::uint64_t seed);

Matrix forward_logits(const SurrogateParams& p, const NormalizedAdjacency& adj, const Matrix& x);
Matrix forward_logits(const SurrogateParams& p, const Graph& g);

// Full-batch gradient descent on mean NLL over the labeled nodes plus
// weight decay. When `loss_curve` is given it receives the objective before
// each update and after the last one (epochs + 1 values).
SurrogateParams train_surrogate(const Graph& g, const SurrogateHyper& hyper,
                                std::vector<double>* loss_curve = nullptr);

// Ground truth on labeled nodes, surrogate argmax elsewhere.
std::vector<int> pseudo_labels(const Matrix& logits, const Graph& g);
std::vector<int> pseudo_labels(const SurrogateParams& p, const Graph& g);

// Victim: logits = Â relu(Â X W1) W2, dropout on the hidden layer while training.
struct VictimParams {
  Matrix w1;  // d x hidden
  Matrix w2;  // hidden x K
};

struct VictimHyper {
  std::size_t hidden = 16;
  double lr = 0.01;
  int epochs = 200;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::uint64_t seed = 0;
};

struct VictimResult {
  VictimParams params;
  double accuracy = 0.0;  // on unlabeled nodes against ground truth
};

VictimResult train_victim(const Graph& g, const VictimHyper& hyper);

// Mean NLL over the labeled nodes without dropout or weight decay; fills
// `grad` when given.
double victim_training_loss(const VictimParams& p, const Graph& g, VictimParams* grad = nullptr);
Matrix victim_logits(const VictimParams& p, const Graph& g);

// Fraction of `nodes` whose row argmax matches `labels`.
double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::size_t> nodes);

}  // namespace caatk
