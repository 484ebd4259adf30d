#include "caattack/eval.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "caattack/gradient.hpp"

namespace caatk {

SampleSummary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty sample");
  SampleSummary s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() == 1) {
    s.degenerate = true;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.ci95_halfwidth = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return s;
}

EvalReport evaluate(const Graph& clean, const Graph& poisoned, const VictimHyper& hyper,
                    std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("evaluation needs at least one seed");
  if (clean.n_nodes() != poisoned.n_nodes())
    throw std::invalid_argument("clean and poisoned graphs differ in node count");
  for (std::size_t v = 0; v < clean.n_nodes(); ++v)
    if (clean.labels()[v] != poisoned.labels()[v] ||
        clean.labeled_mask()[v] != poisoned.labeled_mask()[v])
      throw std::invalid_argument("clean and poisoned graphs differ in labels or split");

  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.per_seed_accuracy.assign(seeds.size(), 0.0);
  const auto count = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    VictimHyper h = hyper;
    h.seed = seeds[s];
    report.per_seed_accuracy[s] = train_victim(poisoned, h).accuracy;
  }
  const auto summary = summarize(report.per_seed_accuracy);
  report.mean = summary.mean;
  report.ci95_halfwidth = summary.ci95_halfwidth;
  report.degenerate_ci = summary.degenerate;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<ScatterPoint> margin_gradient_scatter(const Graph& g, const LossSpec& spec,
                                                  const SurrogateHyper& hyper) {
  const SurrogateParams p = train_surrogate(g, hyper);
  const auto truth = g.labels();
  const auto norms = per_node_gradients(g, p, spec, truth);
  const auto m = margins(forward_logits(p, g), truth);
  std::vector<ScatterPoint> out;
  out.reserve(norms.size());
  for (const auto& n : norms) out.push_back({n.node, m[n.node], n.norm});
  return out;
}

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points) {
  const auto old = out.precision(17);
  out << "node_id,margin,grad_l2\n";
  for (const auto& p : points) out << p.node << ',' << p.margin << ',' << p.grad_l2 << '\n';
  out.precision(old);
}

}  // namespace caatk
