#include "caattack/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <optional>
#include <stdexcept>

namespace caatk {

void AttackConfig::validate() const {
  if (retrain_every < 1) throw std::invalid_argument("retrain_every must be at least 1");
  if (!(dice_delete_probability >= 0.0 && dice_delete_probability <= 1.0))
    throw std::invalid_argument("dice delete probability must lie in [0, 1]");
  if (constraints.degree_test && !(constraints.degree_test_threshold > 0.0))
    throw std::invalid_argument("degree test threshold must be positive");
  loss.validate();
}

std::string to_string(FlipOp op) { return op == FlipOp::add ? "add" : "remove"; }

std::string to_string(Rejection r) {
  switch (r) {
    case Rejection::none: return "allowed";
    case Rejection::singleton: return "singleton";
    case Rejection::degree_distribution: return "degree-distribution";
    case Rejection::self_loop: return "self-loop";
  }
  return "unknown";
}

namespace {

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

double flip_score(const GradMatrix& m, const Graph& g, std::size_t i, std::size_t j) {
  return m.matrix(i, j) * (g.has_edge(i, j) ? -1.0 : 1.0);
}

// The `capacity` best pairs with positive score that were not flipped before,
// best first.
std::vector<Candidate> best_improving(const GradMatrix& m, const Graph& g,
                                      const std::vector<std::uint8_t>& flipped,
                                      std::size_t capacity) {
  const std::size_t n = g.n_nodes();
  std::vector<Candidate> heap;  // front is the worst kept candidate
  heap.reserve(capacity + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto grad = m.matrix.row(i);
    const auto adj = g.adjacency_row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = adj[j] ? -grad[j] : grad[j];
      if (!(s > 0.0) || flipped[i * n + j]) continue;
      const Candidate c{i, j, s};
      if (heap.size() < capacity) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end(), ranks_before);
      } else if (ranks_before(c, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), ranks_before);
        heap.back() = c;
        std::push_heap(heap.begin(), heap.end(), ranks_before);
      }
    }
  }
  std::sort_heap(heap.begin(), heap.end(), ranks_before);
  return heap;
}

void check_split(const Graph& g) {
  bool any_labeled = false, any_unlabeled = false;
  for (std::size_t v = 0; v < g.n_nodes(); ++v) (g.is_labeled(v) ? any_labeled : any_unlabeled) = true;
  if (!any_labeled || !any_unlabeled)
    throw std::invalid_argument("attack needs both labeled and unlabeled nodes");
}

void check_budget(const Graph& g, const AttackConfig& cfg) {
  const std::size_t n = g.n_nodes();
  const std::size_t pairs = n < 2 ? 0 : n * (n - 1) / 2;
  if (cfg.budget > pairs)
    throw std::invalid_argument("budget " + std::to_string(cfg.budget) + " exceeds the " +
                                std::to_string(pairs) + " node pairs");
}


}  // namespace

std::vector<Candidate> score_flips(const GradMatrix& m, const Graph& g) {
  const std::size_t n = g.n_nodes();
  require_shape(m.matrix.rows() == n && m.matrix.cols() == n, "gradient vs graph size");
  std::vector<Candidate> out;
  out.reserve(n < 2 ? 0 : n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.push_back({i, j, flip_score(m, g, i, j)});
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

PowerLawStats PowerLawStats::of(std::span<const std::size_t> degrees) {
  PowerLawStats s;
  for (auto d : degrees) s.add(d);
  return s;
}

void PowerLawStats::add(std::size_t degree) {
  if (static_cast<double>(degree) < d_min) return;
  count += 1.0;
  sum_log += std::log(static_cast<double>(degree));
}

void PowerLawStats::remove(std::size_t degree) {
  if (static_cast<double>(degree) < d_min) return;
  count -= 1.0;
  sum_log -= std::log(static_cast<double>(degree));
}

double PowerLawStats::alpha() const {
  return 1.0 + count / (sum_log - count * std::log(d_min - 0.5));
}

double PowerLawStats::log_likelihood() const {
  const double a = alpha();
  return count * std::log(a) + count * a * std::log(d_min) - (a + 1.0) * sum_log;
}

double degree_likelihood_ratio(const PowerLawStats& clean, const PowerLawStats& modified) {
  PowerLawStats combined;
  combined.count = clean.count + modified.count;
  combined.sum_log = clean.sum_log + modified.sum_log;
  return -2.0 * combined.log_likelihood() +
         2.0 * (clean.log_likelihood() + modified.log_likelihood());
}

ConstraintVerdict constraint_check(const Graph& g, std::size_t i, std::size_t j,
                                   const ConstraintConfig& cfg, const PowerLawStats* clean) {
  if (i == j) return {Rejection::self_loop};
  const bool removing = g.has_edge(i, j);
  if (cfg.forbid_singletons && removing && (g.degree(i) <= 1 || g.degree(j) <= 1))
    return {Rejection::singleton};
  if (cfg.degree_test) {
    if (!clean) throw std::invalid_argument("degree test needs clean-graph statistics");
    PowerLawStats modified = PowerLawStats::of(g.degrees());
    for (auto v : {i, j}) {
      const std::size_t d = g.degree(v);
      modified.remove(d);
      modified.add(removing ? d - 1 : d + 1);
    }
    if (!(degree_likelihood_ratio(*clean, modified) < cfg.degree_test_threshold))
      return {Rejection::degree_distribution};
  }
  return {};
}

AttackResult meta_attack(const Graph& g, const AttackConfig& cfg) {
  cfg.validate();
  check_budget(g, cfg);
  AttackResult result{{}, g, {}, false};
  if (cfg.budget == 0) return result;
  check_split(g);

  const std::size_t n = g.n_nodes();
  SurrogateHyper hyper = cfg.surrogate;
  hyper.seed = cfg.seed;
  SurrogateParams surrogate = train_surrogate(g, hyper);
  const std::vector<int> labels = pseudo_labels(surrogate, g);
  const PowerLawStats clean_stats = PowerLawStats::of(g.degrees());
  const auto unlabeled = g.unlabeled_nodes();
  std::vector<std::uint8_t> flipped(n * n, 0);

  Graph current = g;
  for (std::size_t it = 0; it < cfg.budget; ++it) {
    IterationTrace tr;
    tr.iteration = it;
    if (it > 0 && it % cfg.retrain_every == 0) {
      surrogate = train_surrogate(current, hyper);
      tr.retrained = true;
    } else {
      tr.retrained = it == 0;
    }

    const GradientEvaluation eval = evaluate_attack_gradient(current, surrogate, cfg.loss, labels);
    tr.objective_before = eval.objective;
    double margin_sum = 0.0;
    for (auto v : unlabeled) {
      margin_sum += eval.margins[v];
      tr.negative_margins += eval.margins[v] < 0.0;
    }
    tr.mean_margin = margin_sum / static_cast<double>(unlabeled.size());

    // Rank lazily: keep only the best `capacity` improving pairs and widen
    // the window in the rare case all of them are rejected.
    std::optional<Candidate> chosen;
    std::size_t examined = 0;
    for (std::size_t capacity = 256;; capacity *= 4) {
      const auto best = best_improving(eval.symmetric, current, flipped, capacity);
      for (; examined < best.size(); ++examined) {
        const Candidate& c = best[examined];
        if (constraint_check(current, c.i, c.j, cfg.constraints, &clean_stats).allowed()) {
          chosen = c;
          break;
        }
        ++tr.rejected;
      }
      if (chosen || best.size() < capacity) break;
    }
    if (!chosen) {
      result.exhausted = true;
      break;
    }

    const FlipOp op = current.has_edge(chosen->i, chosen->j) ? FlipOp::remove : FlipOp::add;
    current = flip_edge(current, chosen->i, chosen->j);
    flipped[chosen->i * n + chosen->j] = flipped[chosen->j * n + chosen->i] = 1;
    result.flips.push_back({chosen->i, chosen->j, op});
    tr.score = chosen->score;
    tr.objective_after = attack_objective_value(current, surrogate, cfg.loss, labels);
    result.trace.push_back(tr);
  }
  result.poisoned = std::move(current);
  return result;
}

AttackResult dice_attack(const Graph& g, const AttackConfig& cfg) {
  cfg.validate();
  check_budget(g, cfg);
  AttackResult result{{}, g, {}, false};
  if (cfg.budget == 0) return result;
  check_split(g);

  const std::size_t n = g.n_nodes();
  SurrogateHyper hyper = cfg.surrogate;
  hyper.seed = cfg.seed;
  const std::vector<int> labels = pseudo_labels(train_surrogate(g, hyper), g);
  const PowerLawStats clean_stats = PowerLawStats::of(g.degrees());

  std::vector<NodePair> same_label_edges;
  for (const auto& [i, j] : g.edges())
    if (labels[i] == labels[j]) same_label_edges.emplace_back(i, j);

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(cfg.dice_delete_probability);
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  std::vector<std::uint8_t> flipped(n * n, 0);
  Graph current = g;

  for (std::size_t step = 0; step < cfg.budget; ++step) {
    std::optional<Flip> chosen;
    std::size_t rejected = 0;
    for (std::size_t attempt = 0; attempt < cfg.dice_max_retries && !chosen; ++attempt) {
      Flip f;
      if (coin(rng)) {
        if (same_label_edges.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, same_label_edges.size() - 1);
        const auto [i, j] = same_label_edges[pick(rng)];
        f = {i, j, FlipOp::remove};
      } else {
        const std::size_t i = node(rng);
        const std::size_t j = node(rng);
        if (i == j || labels[i] == labels[j] || current.has_edge(i, j)) continue;
        if (flipped[i * n + j]) continue;
        f = {std::min(i, j), std::max(i, j), FlipOp::add};
      }
      if (!constraint_check(current, f.i, f.j, cfg.constraints, &clean_stats).allowed()) {
        ++rejected;
        continue;
      }
      chosen = f;
    }
    if (!chosen)
      throw std::runtime_error("dice: no feasible flip after " +
                               std::to_string(cfg.dice_max_retries) + " attempts");
    if (chosen->op == FlipOp::remove)
      std::erase(same_label_edges, NodePair{chosen->i, chosen->j});
    current = flip_edge(current, chosen->i, chosen->j);
    flipped[chosen->i * n + chosen->j] = flipped[chosen->j * n + chosen->i] = 1;
    result.flips.push_back(*chosen);
    IterationTrace tr;
    tr.iteration = step;
    tr.rejected = rejected;
    result.trace.push_back(tr);
  }
  result.poisoned = std::move(current);
  return result;
}

}  // namespace caatk
