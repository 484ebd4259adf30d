#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "caattack/dataset.hpp"
#include "caattack/graph.hpp"
#include "caattack/matrix.hpp"
#include "caattack/model.hpp"

namespace caatk::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Erdos-Renyi graph with dense random features, labels cycling through the
// classes and the first `labeled` nodes labeled. A path through all nodes is
// added so no node is isolated.
inline Graph random_graph(std::size_t n, double p, std::size_t d, int k, std::uint64_t seed,
                          std::size_t labeled = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NodePair> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (j == i + 1 || u(rng) < p) edges.emplace_back(i, j);
  std::vector<int> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<int>(v % static_cast<std::size_t>(k));
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t v = 0; v < labeled && v < n; ++v) mask[v] = 1;
  return build_graph(n, edges, random_matrix(n, d, seed + 1), labels, mask, k);
}

// Surrogate weights scaled up so logits are far from uniform and margins of
// both signs appear.
inline SurrogateParams random_surrogate(std::size_t d, int k, std::uint64_t seed,
                                        double scale = 3.0) {
  SurrogateParams p = init_surrogate(d, static_cast<std::size_t>(k), seed);
  p.weight *= scale;
  return p;
}

inline Graph small_sbm(std::uint64_t seed) {
  SbmConfig cfg;
  cfg.seed = seed;
  return stochastic_block_model(cfg);
}

}  // namespace caatk::testing
