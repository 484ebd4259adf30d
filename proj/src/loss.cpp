#include "caattack/loss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace caatk {

std::string to_string(BaseLoss base) { return base == BaseLoss::nll ? "nll" : "cw"; }

BaseLoss parse_base_loss(const std::string& name) {
  if (name == "nll" || name == "ce" || name == "NLL" || name == "CE") return BaseLoss::nll;
  if (name == "cw" || name == "CW") return BaseLoss::cw;
  throw std::invalid_argument("unknown base loss '" + name + "' (expected nll or cw)");
}

void CAWeightParams::validate() const {
  if (!(alpha1 > 0 && alpha2 > 0)) throw std::invalid_argument("cost-aware alpha must be positive");
  if (!(beta1 >= 0 && beta2 >= 0))
    throw std::invalid_argument("cost-aware beta must be non-negative");
}

std::string LossSpec::name() const {
  const std::string b = base == BaseLoss::nll ? "CE" : "CW";
  return ca ? "CA-" + b : b;
}

void LossSpec::validate() const {
  if (!(cw_kappa >= 0.0)) throw std::invalid_argument("cw_kappa must be non-negative");
  if (ca) ca->validate();
}

namespace {

void check_labels(const Matrix& logits, std::span<const int> labels) {
  require_shape(labels.size() == logits.rows(), "one label per logits row");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
      throw std::invalid_argument("label outside logits columns");
}

void check_nodes(const Matrix& logits, std::span<const std::size_t> nodes) {
  if (nodes.empty()) throw std::invalid_argument("loss over an empty node set");
  for (auto v : nodes)
    if (v >= logits.rows()) throw std::invalid_argument("node outside logits rows");
}

double logsumexp(std::span<const double> z) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

// Best class other than `label`, ties to the smallest index.
std::size_t runner_up(std::span<const double> z, int label) {
  std::size_t best = z.size();
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (static_cast<int>(c) == label) continue;
    if (best == z.size() || z[c] > z[best]) best = c;
  }
  return best;
}

double nll_term(std::span<const double> z, int label) { return logsumexp(z) - z[label]; }

double margin_term(std::span<const double> z, int label) {
  return z[label] - z[runner_up(z, label)];
}

}  // namespace

std::vector<double> margins(const Matrix& logits, std::span<const int> labels) {
  if (logits.cols() < 2) throw std::invalid_argument("margins need at least two classes");
  check_labels(logits, labels);
  std::vector<double> out(logits.rows());
  for (std::size_t v = 0; v < logits.rows(); ++v) out[v] = margin_term(logits.row(v), labels[v]);
  return out;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t v = 0; v < logits.rows(); ++v) {
    const auto z = logits.row(v);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c)
      if (z[c] > z[best]) best = c;
    out[v] = static_cast<int>(best);
  }
  return out;
}

LossValue nll_loss(const Matrix& logits, std::span<const int> labels,
                   std::span<const std::size_t> nodes) {
  check_labels(logits, labels);
  check_nodes(logits, nodes);
  LossValue out{0.0, std::vector<double>(logits.rows(), 0.0)};
  for (auto v : nodes) {
    const double l = nll_term(logits.row(v), labels[v]);
    out.per_node[v] = l;
    out.total += l;
  }
  return out;
}

LossValue cw_loss(const Matrix& logits, std::span<const int> labels,
                  std::span<const std::size_t> nodes, double kappa) {
  if (logits.cols() < 2) throw std::invalid_argument("cw loss needs at least two classes");
  check_labels(logits, labels);
  check_nodes(logits, nodes);
  LossValue out{0.0, std::vector<double>(logits.rows(), 0.0)};
  for (auto v : nodes) {
    const double l = std::max(margin_term(logits.row(v), labels[v]), -kappa);
    out.per_node[v] = l;
    out.total += l;
  }
  return out;
}

std::vector<double> ca_weights(std::span<const double> m, const CAWeightParams& p) {
  std::vector<double> w(m.size());
  for (std::size_t v = 0; v < m.size(); ++v) {
    const double phi2 = m[v] * m[v];
    w[v] = m[v] >= 0.0 ? p.alpha1 * std::exp(-p.beta1 * phi2) : p.alpha2 * std::exp(-p.beta2 * phi2);
  }
  return w;
}

LossValue ca_loss(const Matrix& logits, std::span<const int> labels,
                  std::span<const std::size_t> nodes, const CAWeightParams& p, BaseLoss base,
                  double kappa) {
  LossValue inner =
      base == BaseLoss::nll ? nll_loss(logits, labels, nodes) : cw_loss(logits, labels, nodes, kappa);
  const auto w = ca_weights(margins(logits, labels), p);
  LossValue out{0.0, std::vector<double>(logits.rows(), 0.0)};
  for (auto v : nodes) {
    out.per_node[v] = w[v] * inner.per_node[v];
    out.total += out.per_node[v];
  }
  return out;
}

std::vector<double> loss_weights(const Matrix& logits, std::span<const int> labels,
                                 const LossSpec& spec) {
  if (!spec.ca) return std::vector<double>(logits.rows(), 1.0);
  return ca_weights(margins(logits, labels), *spec.ca);
}

ObjectiveTerms attack_objective(const Matrix& logits, std::span<const int> labels,
                                std::span<const std::size_t> nodes, const LossSpec& spec,
                                std::span<const double> weights) {
  check_labels(logits, labels);
  check_nodes(logits, nodes);
  require_shape(weights.size() == logits.rows(), "one weight per node");
  const std::size_t k = logits.cols();
  ObjectiveTerms out{0.0, std::vector<double>(logits.rows(), 0.0), Matrix(logits.rows(), k)};
  for (auto v : nodes) {
    const auto z = logits.row(v);
    const int y = labels[v];
    const double w = weights[v];
    auto g = out.dlogits.row(v);
    if (spec.base == BaseLoss::nll) {
      const double lse = logsumexp(z);
      const double term = w * (lse - z[y]);
      out.per_node[v] = term;
      out.value += term;
      for (std::size_t c = 0; c < k; ++c) g[c] = w * std::exp(z[c] - lse);
      g[y] -= w;
    } else {
      if (k < 2) throw std::invalid_argument("cw loss needs at least two classes");
      const std::size_t other = runner_up(z, y);
      const double phi = z[y] - z[other];
      const double term = -w * std::max(phi, -spec.cw_kappa);
      out.per_node[v] = term;
      out.value += term;
      if (phi > -spec.cw_kappa) {
        g[y] = -w;
        g[other] = w;
      }
    }
  }
  return out;
}

}  // namespace caatk
