#include "caattack/gradient.hpp"

#include <cmath>
#include <stdexcept>

#include "caattack/kernels.hpp"

namespace caatk {

namespace {

// Forward pass pieces shared by the full and per-node gradients.
struct ForwardCache {
  NormalizedAdjacency adj;
  Matrix h;       // X W
  Matrix p1;      // Â X W
  Matrix logits;  // Â Â X W
  std::vector<std::size_t> nodes;
  std::vector<double> margins;
  std::vector<double> weights;
  ObjectiveTerms terms;
};

ForwardCache forward(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                     std::span<const int> labels) {
  require_shape(p.weight.rows() == g.feature_dim(), "surrogate weight rows vs feature dim");
  require_shape(p.weight.cols() == static_cast<std::size_t>(g.num_classes()),
                "surrogate weight cols vs classes");
  require_shape(labels.size() == g.n_nodes(), "one label per node");
  spec.validate();
  ForwardCache c;
  c.adj = normalize_adjacency(g);
  c.h = kernels::spmm(g.feature_store().csr, p.weight);
  c.p1 = kernels::spmm(c.adj.matrix, c.h);
  c.logits = kernels::spmm(c.adj.matrix, c.p1);
  c.nodes = g.unlabeled_nodes();
  if (c.nodes.empty()) throw std::invalid_argument("attack objective needs unlabeled nodes");
  c.margins = margins(c.logits, labels);
  c.weights = spec.ca ? ca_weights(c.margins, *spec.ca) : std::vector<double>(g.n_nodes(), 1.0);
  c.terms = attack_objective(c.logits, labels, c.nodes, spec, c.weights);
  return c;
}


}  // namespace

GradientEvaluation evaluate_attack_gradient(const Graph& g, const SurrogateParams& p,
                                            const LossSpec& spec, std::span<const int> labels) {
  ForwardCache c = forward(g, p, spec, labels);
  const Matrix& dz = c.terms.dlogits;
  const Matrix adz = kernels::spmm(c.adj.matrix, dz);
  // dJ/dÂ for Z = Â (Â H): dZ P1ᵀ + Âᵀ dZ Hᵀ, with Â symmetric.
  const Matrix gbar = kernels::outer_sum_nt(dz, c.p1, adz, c.h);
  GradientEvaluation out;
  out.raw = kernels::normalization_backward(gbar, c.adj.matrix, c.adj.degree);
  out.symmetric.matrix = kernels::symmetrize_zero_diagonal(out.raw);
  out.objective = c.terms.value;
  out.margins = std::move(c.margins);
  out.weights = std::move(c.weights);
  return out;
}

GradMatrix attack_gradient(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                           std::span<const int> labels) {
  return evaluate_attack_gradient(g, p, spec, labels).symmetric;
}

double attack_objective_value(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                              std::span<const int> labels) {
  return forward(g, p, spec, labels).terms.value;
}

std::vector<NodeGradientNorm> per_node_gradients(const Graph& g, const SurrogateParams& p,
                                                 const LossSpec& spec,
                                                 std::span<const int> labels) {
  const ForwardCache c = forward(g, p, spec, labels);
  const std::size_t n = g.n_nodes();
  const std::size_t k = c.h.cols();
  const CsrMatrix& ahat = c.adj.matrix;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 / std::sqrt(c.adj.degree[i]);

  std::vector<NodeGradientNorm> out(c.nodes.size());
  const auto count = static_cast<std::ptrdiff_t>(c.nodes.size());
#pragma omp parallel
  {
    std::vector<double> a(n), cv(n), b(n), ac(n), ab(n), r(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
      const std::size_t v = c.nodes[t];
      const auto gv = c.terms.dlogits.row(v);
      for (std::size_t j = 0; j < n; ++j) {
        const auto p1 = c.p1.row(j);
        const auto hj = c.h.row(j);
        double x = 0.0, y = 0.0;
        for (std::size_t q = 0; q < k; ++q) {
          x += p1[q] * gv[q];
          y += hj[q] * gv[q];
        }
        a[j] = x;
        cv[j] = y;
      }
      std::fill(b.begin(), b.end(), 0.0);
      double a_hat_a_v = 0.0;
      for (std::size_t e = ahat.row_ptr[v]; e < ahat.row_ptr[v + 1]; ++e) {
        b[ahat.col_idx[e]] = ahat.values[e];
        a_hat_a_v += ahat.values[e] * a[ahat.col_idx[e]];
      }
      for (std::size_t i = 0; i < n; ++i) {
        double x = 0.0, y = 0.0;
        for (std::size_t e = ahat.row_ptr[i]; e < ahat.row_ptr[i + 1]; ++e) {
          x += ahat.values[e] * cv[ahat.col_idx[e]];
          y += ahat.values[e] * b[ahat.col_idx[e]];
        }
        ac[i] = x;
        ab[i] = y;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double inner = (i == v ? a_hat_a_v : 0.0) + b[i] * ac[i] + b[i] * a[i] + cv[i] * ab[i];
        r[i] = -0.5 * inner / c.adj.degree[i];
      }
      // Raw gradient = (s_v e_v)(s∘a)ᵀ + (s∘b)(s∘c)ᵀ + r 1ᵀ; its squared
      // Frobenius norm is the sum of Gram products of the factors.
      double u22 = 0.0, u23 = 0.0, u33 = 0.0;
      double w11 = 0.0, w12 = 0.0, w13 = 0.0, w22 = 0.0, w23 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sb = s[i] * b[i];
        const double sa = s[i] * a[i];
        const double sc = s[i] * cv[i];
        u22 += sb * sb;
        u23 += sb * r[i];
        u33 += r[i] * r[i];
        w11 += sa * sa;
        w12 += sa * sc;
        w13 += sa;
        w22 += sc * sc;
        w23 += sc;
      }
      const double u11 = s[v] * s[v];
      const double u12 = s[v] * s[v] * b[v];
      const double u13 = s[v] * r[v];
      const double w33 = static_cast<double>(n);
      const double sq = u11 * w11 + u22 * w22 + u33 * w33 +
                        2.0 * (u12 * w12 + u13 * w13 + u23 * w23);
      out[t] = {v, std::sqrt(std::max(sq, 0.0))};
    }
  }
  return out;
}

Matrix per_node_gradient_matrix(const Graph& g, const SurrogateParams& p, const LossSpec& spec,
                                std::span<const int> labels, std::size_t node) {
  const ForwardCache c = forward(g, p, spec, labels);
  if (node >= g.n_nodes() || g.is_labeled(node))
    throw std::invalid_argument("per-node gradient requires an unlabeled node");
  Matrix dz(g.n_nodes(), c.h.cols());
  std::copy(c.terms.dlogits.row(node).begin(), c.terms.dlogits.row(node).end(),
            dz.row(node).begin());
  const Matrix ahat = c.adj.to_dense();
  const Matrix gbar = kernels::reference::outer_sum_nt(dz, c.p1, kernels::reference::matmul(ahat, dz),
                                                        c.h);
  return kernels::reference::normalization_backward(gbar, c.adj.matrix, c.adj.degree);
}

double relaxed_objective(const Matrix& adjacency, const Matrix& features, const Matrix& weight,
                         const LossSpec& spec, std::span<const int> labels,
                         std::span<const std::size_t> nodes, std::span<const double> weights) {
  const Matrix ahat = normalize_dense(adjacency);
  const Matrix logits = kernels::reference::matmul(
      ahat, kernels::reference::matmul(ahat, kernels::reference::matmul(features, weight)));
  const LossValue base = spec.base == BaseLoss::nll ? nll_loss(logits, labels, nodes)
                                                    : cw_loss(logits, labels, nodes, spec.cw_kappa);
  const double sign = spec.base == BaseLoss::nll ? 1.0 : -1.0;
  double total = 0.0;
  for (auto v : nodes) total += sign * weights[v] * base.per_node[v];
  return total;
}

GradMatrix finite_difference_gradient(const Graph& g, const SurrogateParams& p,
                                      const LossSpec& spec, std::span<const int> labels,
                                      double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  spec.validate();
  const std::size_t n = g.n_nodes();
  const auto nodes = g.unlabeled_nodes();
  Matrix a = g.adjacency_matrix();
  const Matrix& x = g.features();

  const Matrix ahat = normalize_dense(a);
  const Matrix logits0 = kernels::reference::matmul(
      ahat, kernels::reference::matmul(ahat, kernels::reference::matmul(x, p.weight)));
  const auto weights = loss_weights(logits0, labels, spec);

  GradMatrix out{Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double orig = a(i, j);
      a(i, j) = a(j, i) = orig + h;
      const double up = relaxed_objective(a, x, p.weight, spec, labels, nodes, weights);
      a(i, j) = a(j, i) = orig - h;
      const double down = relaxed_objective(a, x, p.weight, spec, labels, nodes, weights);
      a(i, j) = a(j, i) = orig;
      const double d = (up - down) / (4.0 * h);
      out.matrix(i, j) = d;
      out.matrix(j, i) = d;
    }
  }
  return out;
}

}  // namespace caatk
