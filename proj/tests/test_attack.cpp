#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "caattack/attack.hpp"
#include "support.hpp"

namespace caatk {
namespace {

using testing::random_graph;
using testing::small_sbm;

// Power-law log-likelihood of a degree list, from the closed-form MLE,
// computed over the raw list.
double power_law_ll(const std::vector<double>& degrees) {
  double n = 0.0, s = 0.0;
  for (double d : degrees)
    if (d >= 2.0) {
      n += 1.0;
      s += std::log(d);
    }
  const double alpha = 1.0 + n / (s - n * std::log(1.5));
  return n * std::log(alpha) + n * alpha * std::log(2.0) - (alpha + 1.0) * s;
}

double likelihood_ratio_by_hand(const std::vector<double>& clean, const std::vector<double>& mod) {
  std::vector<double> both = clean;
  both.insert(both.end(), mod.begin(), mod.end());
  return -2.0 * power_law_ll(both) + 2.0 * (power_law_ll(clean) + power_law_ll(mod));
}

std::vector<double> as_double(std::span<const std::size_t> d) { return {d.begin(), d.end()}; }

AttackConfig base_config(std::size_t budget) {
  AttackConfig cfg;
  cfg.budget = budget;
  return cfg;
}

TEST(ScoreFlips, SignFollowsCurrentEdgeState) {
  const std::vector<NodePair> edges{{0, 1}, {1, 2}};
  const Graph g = build_graph(3, edges, Matrix::identity(3), {0, 1, 0}, {1, 0, 0});
  const GradMatrix m{Matrix::from_rows({{0, 0.5, -0.2}, {0.5, 0, 0.1}, {-0.2, 0.1, 0}})};
  const auto c = score_flips(m, g);
  ASSERT_EQ(c.size(), 3u);
  // (0,2) absent: score = M; (0,1), (1,2) present: score = -M
  EXPECT_EQ(c[0].i, 1u);
  EXPECT_EQ(c[0].j, 2u);
  EXPECT_DOUBLE_EQ(c[0].score, -0.1);
  EXPECT_DOUBLE_EQ(c[1].score, -0.2);
  EXPECT_DOUBLE_EQ(c[2].score, -0.5);
}

TEST(Constraints, SingletonRule) {
  const std::vector<NodePair> edges{{0, 1}, {1, 2}, {2, 3}, {1, 3}};
  const Graph g = build_graph(4, edges, Matrix::identity(4), {0, 1, 0, 1}, {1, 0, 0, 0});
  ConstraintConfig cfg;
  EXPECT_EQ(constraint_check(g, 0, 1, cfg).reason, Rejection::singleton);
  EXPECT_TRUE(constraint_check(g, 1, 2, cfg).allowed());
  EXPECT_TRUE(constraint_check(g, 0, 3, cfg).allowed());
  EXPECT_EQ(constraint_check(g, 2, 2, cfg).reason, Rejection::self_loop);
  cfg.forbid_singletons = false;
  EXPECT_TRUE(constraint_check(g, 0, 1, cfg).allowed());
}

TEST(Constraints, AdditionsNeverIsolate) {
  const Graph g = random_graph(20, 0.1, 2, 2, 3);
  const ConstraintConfig cfg;
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = i + 1; j < 20; ++j)
      if (!g.has_edge(i, j)) EXPECT_TRUE(constraint_check(g, i, j, cfg).allowed());
}

TEST(DegreeTest, StatisticMatchesClosedForm) {
  const Graph g = random_graph(60, 0.08, 2, 2, 4);
  const auto clean = as_double(g.degrees());
  for (auto [i, j] : std::vector<NodePair>{{0, 1}, {3, 40}, {10, 11}}) {
    const Graph h = flip_edge(g, i, j);
    const double want = likelihood_ratio_by_hand(clean, as_double(h.degrees()));
    const double got = degree_likelihood_ratio(PowerLawStats::of(g.degrees()),
                                               PowerLawStats::of(h.degrees()));
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want)));
  }
  const auto same = PowerLawStats::of(g.degrees());
  EXPECT_NEAR(degree_likelihood_ratio(same, same), 0.0, 1e-9);
}

TEST(DegreeTest, GatesFlipsAtTheThreshold) {
  const Graph g = random_graph(60, 0.08, 2, 2, 5);
  const auto clean = PowerLawStats::of(g.degrees());
  ConstraintConfig cfg;
  cfg.degree_test = true;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 60; i += 7)
    for (std::size_t j = i + 1; j < 60; j += 5) {
      if (g.has_edge(i, j) && (g.degree(i) == 1 || g.degree(j) == 1)) continue;
      const double lr = likelihood_ratio_by_hand(as_double(g.degrees()),
                                                 as_double(flip_edge(g, i, j).degrees()));
      const auto v = constraint_check(g, i, j, cfg, &clean);
      EXPECT_EQ(v.allowed(), lr < cfg.degree_test_threshold) << i << "," << j << " lr " << lr;
      ++checked;
    }
  EXPECT_GT(checked, 20u);
  cfg.degree_test_threshold = 1e9;
  EXPECT_TRUE(constraint_check(g, 0, 30, cfg, &clean).allowed());
  EXPECT_THROW(constraint_check(g, 0, 30, cfg, nullptr), std::invalid_argument);
}

TEST(MetaAttack, ZeroBudgetIsIdentity) {
  const Graph g = small_sbm(1);
  const auto r = meta_attack(g, base_config(0));
  EXPECT_TRUE(r.flips.empty());
  EXPECT_EQ(count_flips(g, r.poisoned), 0u);
  EXPECT_FALSE(r.exhausted);
  const auto d = dice_attack(g, base_config(0));
  EXPECT_TRUE(d.flips.empty());
  EXPECT_EQ(count_flips(g, d.poisoned), 0u);
}

TEST(MetaAttack, BudgetAbovePairCountThrows) {
  const Graph g = random_graph(5, 0.5, 2, 2, 1);
  EXPECT_THROW(meta_attack(g, base_config(11)), std::invalid_argument);
  EXPECT_THROW(dice_attack(g, base_config(11)), std::invalid_argument);
}

TEST(MetaAttack, DeterministicForFixedSeed) {
  const Graph g = small_sbm(2);
  AttackConfig cfg = base_config(15);
  cfg.loss.ca = CAWeightParams{};
  const auto a = meta_attack(g, cfg);
  const auto b = meta_attack(g, cfg);
  EXPECT_EQ(a.flips, b.flips);
  EXPECT_EQ(count_flips(a.poisoned, b.poisoned), 0u);
}

TEST(MetaAttack, UnitCostAwareWeightsGiveTheBaseFlips) {
  const Graph g = small_sbm(3);
  for (auto base : {BaseLoss::nll, BaseLoss::cw}) {
    AttackConfig cfg = base_config(12);
    cfg.loss.base = base;
    const auto plain = meta_attack(g, cfg);
    cfg.loss.ca = CAWeightParams{1.0, 0.0, 1.0, 0.0};
    const auto unit = meta_attack(g, cfg);
    EXPECT_EQ(plain.flips, unit.flips);
  }
}

// Replays the attack and checks every chosen flip against all feasible
// competitors at that iteration.
TEST(MetaAttack, EachChoiceIsTheBestFeasibleFlip) {
  const Graph g = random_graph(24, 0.15, 6, 3, 7, 6);
  for (std::size_t retrain : {1u, 3u}) {
    AttackConfig cfg = base_config(10);
    cfg.retrain_every = retrain;
    cfg.loss.ca = CAWeightParams{};
    cfg.surrogate.epochs = 100;
    const auto r = meta_attack(g, cfg);
    ASSERT_EQ(r.trace.size(), r.flips.size());

    SurrogateHyper hyper = cfg.surrogate;
    hyper.seed = cfg.seed;
    SurrogateParams p = train_surrogate(g, hyper);
    const auto labels = pseudo_labels(p, g);
    Graph current = g;
    std::set<NodePair> flipped;
    for (std::size_t it = 0; it < r.flips.size(); ++it) {
      if (it > 0 && it % retrain == 0) p = train_surrogate(current, hyper);
      EXPECT_EQ(r.trace[it].retrained, it % retrain == 0);
      const auto ranked = score_flips(attack_gradient(current, p, cfg.loss, labels), current);
      const Flip& f = r.flips[it];
      double best = -INFINITY;
      for (const auto& c : ranked)
        if (!flipped.count({c.i, c.j}) && constraint_check(current, c.i, c.j, cfg.constraints).allowed()) {
          best = c.score;
          break;
        }
      EXPECT_DOUBLE_EQ(r.trace[it].score, best);
      EXPECT_GT(r.trace[it].score, 0.0);
      EXPECT_EQ(f.op == FlipOp::remove, current.has_edge(f.i, f.j));
      current = flip_edge(current, f.i, f.j);
      flipped.insert({f.i, f.j});
    }
  }
}

TEST(MetaAttack, StopsWhenNothingImproves) {
  // Five nodes allow ten flips at most; asking for all of them runs the
  // candidate pool dry.
  bool saw_exhaustion = false;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Graph g = random_graph(5, 0.4, 3, 2, seed, 2);
    const auto r = meta_attack(g, base_config(10));
    EXPECT_EQ(r.exhausted, r.flips.size() < 10);
    saw_exhaustion |= r.exhausted;
  }
  EXPECT_TRUE(saw_exhaustion);
}

TEST(Dice, FailsWhenNoFlipIsFeasible) {
  const std::vector<NodePair> edges{{0, 1}};
  const Graph g = build_graph(2, edges, Matrix::identity(2), {0, 0}, {1, 0}, 2);
  AttackConfig cfg = base_config(1);
  cfg.dice_max_retries = 50;
  EXPECT_THROW(dice_attack(g, cfg), std::runtime_error);
}

TEST(Dice, DeleteOnlyAndAddOnly) {
  const Graph g = small_sbm(4);
  AttackConfig cfg = base_config(20);
  cfg.dice_delete_probability = 1.0;
  for (const auto& f : dice_attack(g, cfg).flips) EXPECT_EQ(f.op, FlipOp::remove);
  cfg.dice_delete_probability = 0.0;
  for (const auto& f : dice_attack(g, cfg).flips) EXPECT_EQ(f.op, FlipOp::add);
}

void expect_graph_invariants(const Graph& g) {
  const std::size_t n = g.n_nodes();
  const auto adj = g.adjacency();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(adj[i * n + i], 0);
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_LE(adj[i * n + j], 1);
      EXPECT_EQ(adj[i * n + j], adj[j * n + i]);
    }
  }
}

// Randomized configurations on SBM graphs: budget, symmetry, diagonal,
// singleton and DICE label properties.
TEST(AttackProperties, RandomizedConfigurations) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    SbmConfig sc;
    sc.block_sizes = {20 + rng() % 20, 20 + rng() % 20};
    if (trial % 3 == 0) sc.block_sizes.push_back(15 + rng() % 10);
    sc.p_in = 0.1 + 0.2 * u(rng);
    sc.p_out = 0.01 + 0.03 * u(rng);
    sc.seed = rng();
    const Graph g = largest_connected_component(stochastic_block_model(sc));

    AttackConfig cfg;
    cfg.budget = static_cast<std::size_t>(u(rng) * 0.15 * static_cast<double>(g.edge_count()));
    cfg.loss.base = u(rng) < 0.5 ? BaseLoss::nll : BaseLoss::cw;
    if (u(rng) < 0.5) cfg.loss.ca = CAWeightParams{0.5 + 4.0 * u(rng), u(rng), 0.5 + u(rng), u(rng)};
    cfg.retrain_every = 1 + rng() % 4;
    cfg.constraints.forbid_singletons = u(rng) < 0.8;
    cfg.constraints.degree_test = u(rng) < 0.2;
    cfg.surrogate.epochs = 100;
    cfg.seed = rng();
    const bool dice = trial % 2 == 1;
    SCOPED_TRACE("trial " + std::to_string(trial) + (dice ? " dice" : " meta"));

    const AttackResult r = dice ? dice_attack(g, cfg) : meta_attack(g, cfg);
    EXPECT_LE(r.flips.size(), cfg.budget);
    EXPECT_EQ(count_flips(g, r.poisoned), r.flips.size());
    expect_graph_invariants(r.poisoned);
    if (cfg.constraints.forbid_singletons)
      for (std::size_t v = 0; v < g.n_nodes(); ++v) EXPECT_GT(r.poisoned.degree(v), 0u);
    std::set<NodePair> seen;
    for (const auto& f : r.flips) EXPECT_TRUE(seen.insert({f.i, f.j}).second);

    if (dice) {
      SurrogateHyper h = cfg.surrogate;
      h.seed = cfg.seed;
      const auto labels = pseudo_labels(train_surrogate(g, h), g);
      for (const auto& f : r.flips) {
        if (f.op == FlipOp::remove) EXPECT_EQ(labels[f.i], labels[f.j]);
        else EXPECT_NE(labels[f.i], labels[f.j]);
        EXPECT_EQ(g.has_edge(f.i, f.j), f.op == FlipOp::remove);
      }
    }
  }
}

}  // namespace
}  // namespace caatk
