#include "caattack/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "caattack/kernels.hpp"
#include "caattack/loss.hpp"

namespace caatk {

namespace {

// Rows `rows` of (adj * b), as a dense |rows| x cols matrix.
Matrix spmm_rows(const CsrMatrix& adj, const Matrix& b, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), b.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    double* o = out.row(r).data();
    for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const double v = adj.values[k];
      const double* br = b.row(adj.col_idx[k]).data();
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += v * br[j];
    }
  }
  return out;
}

// Mean NLL over rows of `logits` against `targets`, and its gradient.
double mean_nll(const Matrix& logits, std::span<const int> targets, Matrix* grad) {
  const std::size_t m = logits.rows();
  const std::size_t k = logits.cols();
  double total = 0.0;
  if (grad) *grad = Matrix(m, k);
  for (std::size_t r = 0; r < m; ++r) {
    const auto z = logits.row(r);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    total += lse - z[targets[r]];
    if (grad) {
      auto g = grad->row(r);
      for (std::size_t c = 0; c < k; ++c) g[c] = std::exp(z[c] - lse) / static_cast<double>(m);
      g[targets[r]] -= 1.0 / static_cast<double>(m);
    }
  }
  return total / static_cast<double>(m);
}

double squared_norm(const Matrix& w) {
  double s = 0.0;
  for (double v : w.values()) s += v * v;
  return s;
}

void require_labeled(const Graph& g) {
  for (std::size_t v = 0; v < g.n_nodes(); ++v)
    if (g.is_labeled(v)) return;
  throw std::invalid_argument("training requires at least one labeled node");
}

// Adam with L2 folded into the gradient (grad += wd * w).
class Adam {
 public:
  Adam(const Matrix& shape, double lr, double wd)
      : lr_(lr), wd_(wd), m_(shape.rows(), shape.cols()), v_(shape.rows(), shape.cols()) {}

  void step(Matrix& w, const Matrix& grad) {
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grad.data()[i] + wd_ * w.data()[i];
      double& m = m_.data()[i];
      double& v = v_.data()[i];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      w.data()[i] -= lr_ * (m / c1) / (std::sqrt(v / c2) + eps);
    }
  }

 private:
  double lr_;
  double wd_;
  int t_ = 0;
  Matrix m_;
  Matrix v_;
};

Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(rows, cols);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  return w;
}

}  // namespace

SurrogateParams init_surrogate(std::size_t feature_dim, std::size_t num_classes,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(feature_dim, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  SurrogateParams p{Matrix(feature_dim, num_classes)};
  for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = u(rng);
  return p;
}

Matrix forward_logits(const SurrogateParams& p, const NormalizedAdjacency& adj, const Matrix& x) {
  require_shape(x.rows() == adj.size(), "features rows vs adjacency");
  require_shape(x.cols() == p.weight.rows(), "features cols vs weight rows");
  const Matrix h = kernels::matmul(x, p.weight);
  return kernels::spmm(adj.matrix, kernels::spmm(adj.matrix, h));
}

Matrix forward_logits(const SurrogateParams& p, const Graph& g) {
  require_shape(g.feature_dim() == p.weight.rows(), "features cols vs weight rows");
  const auto adj = normalize_adjacency(g);
  const Matrix h = kernels::spmm(g.feature_store().csr, p.weight);
  return kernels::spmm(adj.matrix, kernels::spmm(adj.matrix, h));
}

SurrogateParams train_surrogate(const Graph& g, const SurrogateHyper& hyper,
                                std::vector<double>* loss_curve) {
  require_labeled(g);
  if (hyper.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  const std::size_t k = static_cast<std::size_t>(g.num_classes());
  SurrogateParams p = init_surrogate(g.feature_dim(), k, hyper.seed);
  if (loss_curve) loss_curve->clear();

  const auto labeled = g.labeled_nodes();
  std::vector<int> targets;
  targets.reserve(labeled.size());
  for (auto v : labeled) targets.push_back(g.labels()[v]);

  // Only labeled rows of Â² X enter the training loss.
  const auto adj = normalize_adjacency(g);
  const Matrix ax = kernels::spmm(adj.matrix, g.features());
  const Matrix s = spmm_rows(adj.matrix, ax, labeled);

  const bool dual = hyper.solver == SurrogateSolver::dual ||
                    (hyper.solver == SurrogateSolver::automatic && s.rows() < s.cols());
  if (!dual) {
    auto objective = [&](Matrix* grad) {
      const Matrix logits = kernels::matmul(s, p.weight);
      Matrix dlogits;
      const double nll = mean_nll(logits, targets, grad ? &dlogits : nullptr);
      if (grad) *grad = kernels::matmul_tn(s, dlogits);
      return nll + 0.5 * hyper.weight_decay * squared_norm(p.weight);
    };
    Matrix grad;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      const double value = objective(&grad);
      if (loss_curve) loss_curve->push_back(value);
      for (std::size_t i = 0; i < p.weight.size(); ++i)
        p.weight.data()[i] -= hyper.lr * (grad.data()[i] + hyper.weight_decay * p.weight.data()[i]);
    }
    if (loss_curve) loss_curve->push_back(objective(nullptr));
    return p;
  }

  // Every update lies in the row space of S, so W_t = c^t W_0 + Sᵀ B_t with
  // c = 1 - lr * wd, and the logits only need the L x L Gram matrix S Sᵀ.
  const double c = 1.0 - hyper.lr * hyper.weight_decay;
  const Matrix gram = kernels::matmul_nt(s, s);
  const Matrix z0 = kernels::matmul(s, p.weight);
  const double w0_norm = squared_norm(p.weight);
  Matrix b(s.rows(), k);
  double scale = 1.0;  // c^t
  auto objective = [&](Matrix* grad) {
    const Matrix gb = kernels::matmul(gram, b);
    Matrix logits = z0;
    logits *= scale;
    logits += gb;
    double z0b = 0.0, bgb = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      z0b += z0.data()[i] * b.data()[i];
      bgb += b.data()[i] * gb.data()[i];
    }
    const double norm = scale * scale * w0_norm + 2.0 * scale * z0b + bgb;
    return mean_nll(logits, targets, grad) + 0.5 * hyper.weight_decay * norm;
  };
  Matrix dlogits;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double value = objective(&dlogits);
    if (loss_curve) loss_curve->push_back(value);
    for (std::size_t i = 0; i < b.size(); ++i)
      b.data()[i] = c * b.data()[i] - hyper.lr * dlogits.data()[i];
    scale *= c;
  }
  if (loss_curve) loss_curve->push_back(objective(nullptr));
  p.weight *= scale;
  p.weight += kernels::matmul_tn(s, b);
  return p;
}

std::vector<int> pseudo_labels(const Matrix& logits, const Graph& g) {
  require_shape(logits.rows() == g.n_nodes(), "logits rows vs nodes");
  auto out = argmax_rows(logits);
  for (std::size_t v = 0; v < g.n_nodes(); ++v)
    if (g.is_labeled(v)) out[v] = g.labels()[v];
  return out;
}

std::vector<int> pseudo_labels(const SurrogateParams& p, const Graph& g) {
  return pseudo_labels(forward_logits(p, g), g);
}

Matrix victim_logits(const VictimParams& p, const Graph& g) {
  const auto adj = normalize_adjacency(g);
  Matrix h = kernels::spmm(adj.matrix, kernels::spmm(g.feature_store().csr, p.w1));
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::max(0.0, h.data()[i]);
  return kernels::spmm(adj.matrix, kernels::matmul(h, p.w2));
}

namespace {

// Mean NLL over the labeled nodes and its gradient. `mask` multiplies the
// post-relu hidden activations (dropout); null means no dropout.
double victim_objective(const VictimParams& p, const Graph& g, const NormalizedAdjacency& adj,
                        std::span<const std::size_t> labeled, std::span<const int> targets,
                        const Matrix* mask, VictimParams* grad) {
  const std::size_t k = p.w2.cols();
  const auto& x = g.feature_store();
  const Matrix pre = kernels::spmm(adj.matrix, kernels::spmm(x.csr, p.w1));
  Matrix hidden(pre.rows(), pre.cols());
  Matrix gate(pre.rows(), pre.cols());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double m = mask ? mask->data()[i] : 1.0;
    gate.data()[i] = pre.data()[i] > 0.0 ? m : 0.0;
    hidden.data()[i] = std::max(0.0, pre.data()[i]) * m;
  }
  const Matrix logits = kernels::spmm(adj.matrix, kernels::matmul(hidden, p.w2));

  Matrix labeled_logits(labeled.size(), k);
  for (std::size_t r = 0; r < labeled.size(); ++r)
    std::copy(logits.row(labeled[r]).begin(), logits.row(labeled[r]).end(),
              labeled_logits.row(r).begin());
  Matrix dl;
  const double loss = mean_nll(labeled_logits, targets, grad ? &dl : nullptr);
  if (!grad) return loss;

  Matrix dlogits(g.n_nodes(), k);
  for (std::size_t r = 0; r < labeled.size(); ++r)
    std::copy(dl.row(r).begin(), dl.row(r).end(), dlogits.row(labeled[r]).begin());
  const Matrix dhw = kernels::spmm(adj.matrix, dlogits);
  grad->w2 = kernels::matmul_tn(hidden, dhw);
  Matrix dpre = kernels::matmul_nt(dhw, p.w2);
  for (std::size_t i = 0; i < dpre.size(); ++i) dpre.data()[i] *= gate.data()[i];
  grad->w1 = kernels::spmm(x.csr_t, kernels::spmm(adj.matrix, dpre));
  return loss;
}

std::vector<int> labeled_targets(const Graph& g, std::span<const std::size_t> labeled) {
  std::vector<int> targets;
  targets.reserve(labeled.size());
  for (auto v : labeled) targets.push_back(g.labels()[v]);
  return targets;
}

}  // namespace

double victim_training_loss(const VictimParams& p, const Graph& g, VictimParams* grad) {
  require_labeled(g);
  require_shape(p.w1.rows() == g.feature_dim(), "victim w1 rows vs feature dim");
  require_shape(p.w1.cols() == p.w2.rows(), "victim w1 cols vs w2 rows");
  const auto labeled = g.labeled_nodes();
  return victim_objective(p, g, normalize_adjacency(g), labeled, labeled_targets(g, labeled),
                          nullptr, grad);
}

VictimResult train_victim(const Graph& g, const VictimHyper& hyper) {
  require_labeled(g);
  if (hyper.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (!(hyper.dropout >= 0.0 && hyper.dropout < 1.0))
    throw std::invalid_argument("dropout must lie in [0, 1)");
  const std::size_t k = static_cast<std::size_t>(g.num_classes());
  std::mt19937_64 rng(hyper.seed);
  VictimParams p{glorot(g.feature_dim(), hyper.hidden, rng), glorot(hyper.hidden, k, rng)};

  const auto labeled = g.labeled_nodes();
  const auto targets = labeled_targets(g, labeled);
  const auto adj = normalize_adjacency(g);
  Adam opt1(p.w1, hyper.lr, hyper.weight_decay);
  Adam opt2(p.w2, hyper.lr, hyper.weight_decay);
  std::bernoulli_distribution keep(1.0 - hyper.dropout);
  const double scale = 1.0 / (1.0 - hyper.dropout);

  Matrix mask(g.n_nodes(), hyper.hidden);
  VictimParams grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask.data()[i] = hyper.dropout > 0.0 ? (keep(rng) ? scale : 0.0) : 1.0;
    victim_objective(p, g, adj, labeled, targets, &mask, &grad);
    opt1.step(p.w1, grad.w1);
    opt2.step(p.w2, grad.w2);
  }

  VictimResult out{std::move(p), 0.0};
  const auto unlabeled = g.unlabeled_nodes();
  if (!unlabeled.empty())
    out.accuracy = accuracy(victim_logits(out.params, g), g.labels(), unlabeled);
  return out;
}

double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::size_t> nodes) {
  if (nodes.empty()) throw std::invalid_argument("accuracy over an empty node set");
  const auto pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (auto v : nodes) hits += pred[v] == labels[v];
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

}  // namespace caatk
