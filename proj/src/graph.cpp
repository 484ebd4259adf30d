#include "caattack/graph.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace caatk {

FeatureStore::FeatureStore(Matrix x)
    : dense(std::move(x)), csr(CsrMatrix::from_dense(dense)), csr_t(csr.transposed()) {}

Graph::Graph(std::size_t n_nodes, std::vector<std::uint8_t> adjacency,
             std::shared_ptr<const FeatureStore> features, std::vector<int> labels,
             std::vector<std::uint8_t> labeled_mask, int num_classes)
    : n_(n_nodes), num_classes_(num_classes), degrees_(n_nodes, 0) {
  if (adjacency.size() != n_ * n_) throw std::invalid_argument("adjacency must be N x N");
  if (!features || features->dense.rows() != n_)
    throw std::invalid_argument("feature rows must equal node count");
  if (labels.size() != n_) throw std::invalid_argument("one label per node required");
  if (labeled_mask.size() != n_) throw std::invalid_argument("one mask entry per node required");
  if (num_classes_ < 1) throw std::invalid_argument("num_classes must be positive");
  for (int y : labels)
    if (y < 0 || y >= num_classes_)
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes_) + ")");
  for (std::size_t i = 0; i < n_; ++i) {
    if (adjacency[i * n_ + i] != 0) throw std::invalid_argument("adjacency diagonal must be zero");
    for (std::size_t j = 0; j < n_; ++j) {
      const auto a = adjacency[i * n_ + j];
      if (a > 1) throw std::invalid_argument("adjacency entries must be 0 or 1");
      if (a != adjacency[j * n_ + i]) throw std::invalid_argument("adjacency must be symmetric");
      degrees_[i] += a;
    }
    edge_count_ += degrees_[i];
  }
  edge_count_ /= 2;
  for (auto& m : labeled_mask) m = m != 0 ? 1 : 0;
  adjacency_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(adjacency));
  features_ = std::move(features);
  labels_ = std::make_shared<const std::vector<int>>(std::move(labels));
  labeled_mask_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(labeled_mask));
}

std::vector<std::size_t> Graph::labeled_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n_; ++v)
    if (is_labeled(v)) out.push_back(v);
  return out;
}

std::vector<std::size_t> Graph::unlabeled_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n_; ++v)
    if (!is_labeled(v)) out.push_back(v);
  return out;
}

std::vector<NodePair> Graph::edges() const {
  std::vector<NodePair> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

Matrix Graph::adjacency_matrix() const {
  Matrix a(n_, n_);
  for (std::size_t k = 0; k < n_ * n_; ++k) a.data()[k] = (*adjacency_)[k];
  return a;
}

Graph Graph::with_labeled_mask(std::vector<std::uint8_t> mask) const {
  if (mask.size() != n_) throw std::invalid_argument("one mask entry per node required");
  Graph g = *this;
  for (auto& m : mask) m = m != 0 ? 1 : 0;
  g.labeled_mask_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(mask));
  return g;
}

Graph Graph::with_toggled(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::invalid_argument("node index out of range");
  if (i == j) throw std::invalid_argument("cannot flip a self-loop");
  Graph g = *this;
  auto adj = std::make_shared<std::vector<std::uint8_t>>(*adjacency_);
  const std::uint8_t next = (*adj)[i * n_ + j] ? 0 : 1;
  (*adj)[i * n_ + j] = next;
  (*adj)[j * n_ + i] = next;
  if (next) {
    ++g.degrees_[i];
    ++g.degrees_[j];
    ++g.edge_count_;
  } else {
    --g.degrees_[i];
    --g.degrees_[j];
    --g.edge_count_;
  }
  g.adjacency_ = std::move(adj);
  return g;
}

Graph build_graph(std::size_t n_nodes, std::span<const NodePair> edges, Matrix features,
                  std::vector<int> labels, std::vector<std::uint8_t> labeled_mask,
                  int num_classes) {
  std::vector<std::uint8_t> adj(n_nodes * n_nodes, 0);
  for (const auto& [i, j] : edges) {
    if (i >= n_nodes || j >= n_nodes)
      throw std::invalid_argument("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") out of range for " + std::to_string(n_nodes) + " nodes");
    if (i == j) throw std::invalid_argument("self-loop on node " + std::to_string(i));
    adj[i * n_nodes + j] = 1;
    adj[j * n_nodes + i] = 1;
  }
  if (num_classes < 0) {
    num_classes = 0;
    for (int y : labels) num_classes = std::max(num_classes, y + 1);
    num_classes = std::max(num_classes, 1);
  }
  return Graph(n_nodes, std::move(adj), std::make_shared<const FeatureStore>(std::move(features)),
               std::move(labels), std::move(labeled_mask), num_classes);
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const std::size_t n = g.n_nodes();
  NormalizedAdjacency out;
  out.degree.resize(n);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.degree[i] = static_cast<double>(g.degree(i)) + 1.0;
    inv_sqrt[i] = 1.0 / std::sqrt(out.degree[i]);
  }
  auto& m = out.matrix;
  m.rows = m.cols = n;
  m.row_ptr.assign(1, 0);
  m.row_ptr.reserve(n + 1);
  m.col_idx.reserve(2 * g.edge_count() + n);
  m.values.reserve(2 * g.edge_count() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = g.adjacency_row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] || i == j) {
        m.col_idx.push_back(static_cast<std::uint32_t>(j));
        m.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
      }
    }
    m.row_ptr.push_back(m.values.size());
  }
  return out;
}

Matrix normalize_dense(const Matrix& adjacency) {
  require_shape(adjacency.rows() == adjacency.cols(), "adjacency must be square");
  const std::size_t n = adjacency.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += adjacency(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = (adjacency(i, j) + (i == j ? 1.0 : 0.0)) * inv_sqrt[i] * inv_sqrt[j];
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> components(const Graph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      comp.push_back(u);
      const auto row = g.adjacency_row(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (row[v] && !seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace

std::vector<std::size_t> largest_component_nodes(const Graph& g) {
  auto comps = components(g);
  if (comps.empty()) return {};
  // Components are discovered in order of their smallest node, so the first
  // strictly largest one wins ties.
  std::size_t best = 0;
  for (std::size_t c = 1; c < comps.size(); ++c)
    if (comps[c].size() > comps[best].size()) best = c;
  return comps[best];
}

std::size_t connected_component_count(const Graph& g) { return components(g).size(); }

Graph induced_subgraph(const Graph& g, std::span<const std::size_t> nodes) {
  const std::size_t m = nodes.size();
  const std::size_t n = g.n_nodes();
  std::vector<std::uint8_t> adj(m * m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    if (nodes[a] >= n) throw std::invalid_argument("subgraph node out of range");
    for (std::size_t b = 0; b < m; ++b) adj[a * m + b] = g.has_edge(nodes[a], nodes[b]);
  }
  const Matrix& x = g.features();
  Matrix xs(m, x.cols());
  std::vector<int> labels(m);
  std::vector<std::uint8_t> mask(m);
  for (std::size_t a = 0; a < m; ++a) {
    std::copy(x.row(nodes[a]).begin(), x.row(nodes[a]).end(), xs.row(a).begin());
    labels[a] = g.labels()[nodes[a]];
    mask[a] = g.labeled_mask()[nodes[a]];
  }
  return Graph(m, std::move(adj), std::make_shared<const FeatureStore>(std::move(xs)),
               std::move(labels), std::move(mask), g.num_classes());
}

Graph largest_connected_component(const Graph& g) {
  const auto nodes = largest_component_nodes(g);
  if (nodes.size() == g.n_nodes()) return g;
  return induced_subgraph(g, nodes);
}

Graph flip_edge(const Graph& g, std::size_t i, std::size_t j) { return g.with_toggled(i, j); }

std::size_t count_flips(const Graph& a, const Graph& b) {
  if (a.n_nodes() != b.n_nodes()) throw std::invalid_argument("count_flips: node counts differ");
  const std::size_t n = a.n_nodes();
  std::size_t diff = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) diff += a.has_edge(i, j) != b.has_edge(i, j);
  return diff;
}

Graph permute_nodes(const Graph& g, std::span<const std::size_t> perm) {
  const std::size_t n = g.n_nodes();
  if (perm.size() != n) throw std::invalid_argument("permutation size must equal node count");
  std::vector<std::uint8_t> seen(n, 0);
  for (auto p : perm) {
    if (p >= n || seen[p]) throw std::invalid_argument("not a permutation");
    seen[p] = 1;
  }
  std::vector<std::uint8_t> adj(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) adj[perm[i] * n + perm[j]] = g.has_edge(i, j);
  const Matrix& x = g.features();
  Matrix xp(n, x.cols());
  std::vector<int> labels(n);
  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(x.row(i).begin(), x.row(i).end(), xp.row(perm[i]).begin());
    labels[perm[i]] = g.labels()[i];
    mask[perm[i]] = g.labeled_mask()[i];
  }
  return Graph(n, std::move(adj), std::make_shared<const FeatureStore>(std::move(xp)),
               std::move(labels), std::move(mask), g.num_classes());
}

}  // namespace caatk
