#include <gtest/gtest.h>

#include <cmath>

#include "caattack/loss.hpp"
#include "support.hpp"

namespace caatk {
namespace {

using testing::random_matrix;

const Matrix kLogits = Matrix::from_rows({{2.0, 1.0, 0.5}, {0.0, 3.0, -1.0}, {1.0, 1.0, 0.0}});

double lse(std::initializer_list<double> z) {
  double s = 0.0;
  for (double v : z) s += std::exp(v);
  return std::log(s);
}

TEST(Margins, TrueMinusBestOther) {
  const std::vector<int> labels{0, 0, 2};
  const auto m = margins(kLogits, labels);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], -3.0);
  EXPECT_DOUBLE_EQ(m[2], -1.0);
}

TEST(Margins, TieIsZeroAndArgmaxTakesSmallestIndex) {
  const std::vector<int> labels{1, 1, 1};
  EXPECT_DOUBLE_EQ(margins(kLogits, labels)[2], 0.0);
  EXPECT_EQ(argmax_rows(kLogits), (std::vector<int>{0, 1, 0}));
  EXPECT_THROW(margins(Matrix(2, 1), std::vector<int>{0, 0}), std::invalid_argument);
}

TEST(Nll, MatchesLogSumExp) {
  const std::vector<int> labels{0, 2, 1};
  const std::vector<std::size_t> nodes{0, 1};
  const auto v = nll_loss(kLogits, labels, nodes);
  EXPECT_NEAR(v.per_node[0], lse({2.0, 1.0, 0.5}) - 2.0, 1e-15);
  EXPECT_NEAR(v.per_node[1], lse({0.0, 3.0, -1.0}) + 1.0, 1e-15);
  EXPECT_EQ(v.per_node[2], 0.0);
  EXPECT_NEAR(v.total, v.per_node[0] + v.per_node[1], 1e-15);
  EXPECT_THROW(nll_loss(kLogits, labels, std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(nll_loss(kLogits, labels, std::vector<std::size_t>{7}), std::invalid_argument);
}

TEST(Nll, StableForLargeLogits) {
  const Matrix big = Matrix::from_rows({{1000.0, 0.0}});
  const auto v = nll_loss(big, std::vector<int>{1}, std::vector<std::size_t>{0});
  EXPECT_DOUBLE_EQ(v.total, 1000.0);
}

TEST(Cw, ClampsAtMinusKappa) {
  const std::vector<int> labels{0, 0, 2};
  const std::vector<std::size_t> nodes{0, 1, 2};
  const auto v = cw_loss(kLogits, labels, nodes, 0.5);
  EXPECT_DOUBLE_EQ(v.per_node[0], 1.0);
  EXPECT_DOUBLE_EQ(v.per_node[1], -0.5);
  EXPECT_DOUBLE_EQ(v.per_node[2], -0.5);
  EXPECT_DOUBLE_EQ(cw_loss(kLogits, labels, nodes, 0.0).per_node[1], 0.0);
}

TEST(CaWeights, PiecewiseGaussianOfTheMargin) {
  const CAWeightParams p{4.5, 1.0, 1.0, 1.0};
  const std::vector<double> m{0.0, 0.5, -1.0, 2.0};
  const auto w = ca_weights(m, p);
  EXPECT_DOUBLE_EQ(w[0], 4.5);
  EXPECT_DOUBLE_EQ(w[1], 4.5 * std::exp(-0.25));
  EXPECT_DOUBLE_EQ(w[2], std::exp(-1.0));
  EXPECT_DOUBLE_EQ(w[3], 4.5 * std::exp(-4.0));
}

TEST(CaWeights, SecondParameterSet) {
  const CAWeightParams p{1.0, 0.5, 1.0, 0.1};
  const std::vector<double> m{1.0, -2.0};
  const auto w = ca_weights(m, p);
  EXPECT_DOUBLE_EQ(w[0], std::exp(-0.5));
  EXPECT_DOUBLE_EQ(w[1], std::exp(-0.4));
}

TEST(CaWeights, PeakAtZeroAndMonotoneInMagnitude) {
  const CAWeightParams p{4.5, 1.0, 1.0, 1.0};
  std::vector<double> grid;
  for (int i = -40; i <= 40; ++i) grid.push_back(0.1 * i);
  const auto w = ca_weights(grid, p);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    EXPECT_GT(w[i], 0.0);
    if (grid[i + 1] <= 0.0 && grid[i + 1] < -1e-12) EXPECT_LE(w[i], w[i + 1]);
    if (grid[i] >= 0.0) EXPECT_GE(w[i], w[i + 1]);
  }
  EXPECT_DOUBLE_EQ(*std::max_element(w.begin(), w.end()), 4.5);
}

TEST(CaWeights, ValidatesParameters) {
  EXPECT_THROW((CAWeightParams{0.0, 1.0, 1.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CAWeightParams{1.0, 1.0, -1.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CAWeightParams{1.0, -0.1, 1.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((CAWeightParams{1.0, 0.0, 1.0, 0.0}.validate()));
}

TEST(CaLoss, ReducesToBaseLossWithUnitWeights) {
  const Matrix z = random_matrix(30, 4, 5, -3.0, 3.0);
  std::vector<int> labels(30);
  for (std::size_t v = 0; v < 30; ++v) labels[v] = static_cast<int>(v % 4);
  std::vector<std::size_t> nodes(30);
  for (std::size_t v = 0; v < 30; ++v) nodes[v] = v;
  const CAWeightParams unit{1.0, 0.0, 1.0, 0.0};
  const auto ca = ca_loss(z, labels, nodes, unit, BaseLoss::nll);
  const auto base = nll_loss(z, labels, nodes);
  EXPECT_EQ(ca.per_node, base.per_node);
  EXPECT_NEAR(ca.total, base.total, 1e-12 * std::abs(base.total));
  const auto cw = ca_loss(z, labels, nodes, unit, BaseLoss::cw, 0.3);
  EXPECT_EQ(cw.per_node, cw_loss(z, labels, nodes, 0.3).per_node);
}

TEST(CaLoss, WeightsEachNodeByItsMargin) {
  const std::vector<int> labels{0, 0, 1};
  const std::vector<std::size_t> nodes{0, 1, 2};
  const CAWeightParams p{};
  const auto m = margins(kLogits, labels);
  const auto w = ca_weights(m, p);
  const auto ca = ca_loss(kLogits, labels, nodes, p, BaseLoss::nll);
  const auto base = nll_loss(kLogits, labels, nodes);
  for (std::size_t v = 0; v < 3; ++v) EXPECT_DOUBLE_EQ(ca.per_node[v], w[v] * base.per_node[v]);
}

TEST(LossSpec, NamesAndParsing) {
  LossSpec s;
  EXPECT_EQ(s.name(), "CE");
  s.ca = CAWeightParams{};
  EXPECT_EQ(s.name(), "CA-CE");
  s.base = BaseLoss::cw;
  EXPECT_EQ(s.name(), "CA-CW");
  s.ca.reset();
  EXPECT_EQ(s.name(), "CW");
  EXPECT_EQ(parse_base_loss("ce"), BaseLoss::nll);
  EXPECT_EQ(parse_base_loss("NLL"), BaseLoss::nll);
  EXPECT_EQ(parse_base_loss("cw"), BaseLoss::cw);
  EXPECT_THROW(parse_base_loss("hinge"), std::invalid_argument);
  s.cw_kappa = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

// dlogits against central differences of the objective in each logit.
void check_dlogits(const LossSpec& spec, std::uint64_t seed) {
  const Matrix z = random_matrix(12, 3, seed, -2.0, 2.0);
  std::vector<int> labels(12);
  for (std::size_t v = 0; v < 12; ++v) labels[v] = static_cast<int>((v * 7 + seed) % 3);
  const std::vector<std::size_t> nodes{1, 2, 3, 5, 8, 9, 11};
  const auto w = loss_weights(z, labels, spec);
  const auto terms = attack_objective(z, labels, nodes, spec, w);
  const double h = 1e-6;
  for (std::size_t i = 0; i < z.size(); ++i) {
    Matrix zp = z, zm = z;
    zp.data()[i] += h;
    zm.data()[i] -= h;
    const double fd = (attack_objective(zp, labels, nodes, spec, w).value -
                       attack_objective(zm, labels, nodes, spec, w).value) /
                      (2.0 * h);
    EXPECT_NEAR(terms.dlogits.data()[i], fd, 1e-7) << spec.name() << " entry " << i;
  }
}

TEST(AttackObjective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    LossSpec spec;
    check_dlogits(spec, seed);
    spec.ca = CAWeightParams{};
    check_dlogits(spec, seed);
    spec.base = BaseLoss::cw;
    spec.cw_kappa = 0.5;
    check_dlogits(spec, seed);
    spec.ca.reset();
    check_dlogits(spec, seed);
  }
}

TEST(AttackObjective, SignsFollowTheBaseLoss) {
  const std::vector<int> labels{0, 0, 2};
  const std::vector<std::size_t> nodes{0, 1, 2};
  const std::vector<double> ones(3, 1.0);
  LossSpec nll;
  EXPECT_NEAR(attack_objective(kLogits, labels, nodes, nll, ones).value,
              nll_loss(kLogits, labels, nodes).total, 1e-14);
  LossSpec cw;
  cw.base = BaseLoss::cw;
  EXPECT_NEAR(attack_objective(kLogits, labels, nodes, cw, ones).value,
              -cw_loss(kLogits, labels, nodes, 0.0).total, 1e-14);
}

}  // namespace
}  // namespace caatk
