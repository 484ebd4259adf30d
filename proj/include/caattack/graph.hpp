#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "caattack/matrix.hpp"

namespace caatk {

using NodePair = std::pair<std::size_t, std::size_t>;

// Node features in dense form plus row/column sparse views for products.
struct FeatureStore {
  Matrix dense;
  CsrMatrix csr;
  CsrMatrix csr_t;

  explicit FeatureStore(Matrix x);
};

// Undirected, unweighted attributed graph. Values are immutable; every
// structural change produces a new Graph that shares features and labels
// with its source.
class Graph {
 public:
  Graph(std::size_t n_nodes, std::vector<std::uint8_t> adjacency,
        std::shared_ptr<const FeatureStore> features, std::vector<int> labels,
        std::vector<std::uint8_t> labeled_mask, int num_classes);

  std::size_t n_nodes() const { return n_; }
  int num_classes() const { return num_classes_; }
  std::size_t edge_count() const { return edge_count_; }

  bool has_edge(std::size_t i, std::size_t j) const { return (*adjacency_)[i * n_ + j] != 0; }
  std::span<const std::uint8_t> adjacency() const { return *adjacency_; }
  std::span<const std::uint8_t> adjacency_row(std::size_t i) const {
    return std::span<const std::uint8_t>(*adjacency_).subspan(i * n_, n_);
  }
  std::size_t degree(std::size_t i) const { return degrees_[i]; }
  std::span<const std::size_t> degrees() const { return degrees_; }

  const Matrix& features() const { return features_->dense; }
  const FeatureStore& feature_store() const { return *features_; }
  std::shared_ptr<const FeatureStore> shared_features() const { return features_; }
  std::size_t feature_dim() const { return features_->dense.cols(); }

  std::span<const int> labels() const { return *labels_; }
  std::span<const std::uint8_t> labeled_mask() const { return *labeled_mask_; }
  bool is_labeled(std::size_t v) const { return (*labeled_mask_)[v] != 0; }
  std::vector<std::size_t> labeled_nodes() const;
  std::vector<std::size_t> unlabeled_nodes() const;

  // Unordered pairs (i < j) with an edge, in lexicographic order.
  std::vector<NodePair> edges() const;
  // Adjacency as a real matrix (the relaxed form used by gradient checks).
  Matrix adjacency_matrix() const;

  Graph with_labeled_mask(std::vector<std::uint8_t> mask) const;
  Graph with_toggled(std::size_t i, std::size_t j) const;

 private:
  std::size_t n_;
  int num_classes_;
  std::shared_ptr<const std::vector<std::uint8_t>> adjacency_;
  std::vector<std::size_t> degrees_;
  std::size_t edge_count_ = 0;
  std::shared_ptr<const FeatureStore> features_;
  std::shared_ptr<const std::vector<int>> labels_;
  std::shared_ptr<const std::vector<std::uint8_t>> labeled_mask_;
};

// D^{-1/2} (A + I) D^{-1/2}, D the row sums of A + I.
struct NormalizedAdjacency {
  CsrMatrix matrix;
  std::vector<double> degree;  // row sums of A + I

  std::size_t size() const { return matrix.rows; }
  Matrix to_dense() const { return matrix.to_dense(); }
};

// Throws std::invalid_argument on out-of-range indices, self-loops, or
// labels outside [0, num_classes). num_classes < 0 infers max(label) + 1.
Graph build_graph(std::size_t n_nodes, std::span<const NodePair> edges, Matrix features,
                  std::vector<int> labels, std::vector<std::uint8_t> labeled_mask,
                  int num_classes = -1);

NormalizedAdjacency normalize_adjacency(const Graph& g);

// Same normalization on a real-valued (possibly relaxed) adjacency matrix.
Matrix normalize_dense(const Matrix& adjacency);

// Nodes of the largest connected component in increasing order. Ties go to
// the component holding the smallest node index.
std::vector<std::size_t> largest_component_nodes(const Graph& g);
Graph induced_subgraph(const Graph& g, std::span<const std::size_t> nodes);
Graph largest_connected_component(const Graph& g);
std::size_t connected_component_count(const Graph& g);

Graph flip_edge(const Graph& g, std::size_t i, std::size_t j);

// Unordered pairs whose adjacency differs.
std::size_t count_flips(const Graph& a, const Graph& b);

// Relabels node v as perm[v].
Graph permute_nodes(const Graph& g, std::span<const std::size_t> perm);

}  // namespace caatk
