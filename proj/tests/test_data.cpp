#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rwl/data.hpp"
#include "rwl/errors.hpp"

using namespace rwl;

namespace {

DataParams het(std::size_t dim = 10) {
  DataParams p;
  p.heterogeneous = true;
  p.dim = dim;
  p.sigma_low_sq = 1.0;
  p.sigma_high_sq = 100.0;
  p.p_high = 0.01;
  p.placement = Placement::fixed_count;
  return p;
}

ProblemInstance scalar_instance(double a, double y) {
  Eigen::MatrixXd f(1, 1);
  f(0, 0) = a;
  Eigen::VectorXd r(1);
  r[0] = y;
  return ProblemInstance(Graph::from_edges(1, std::vector<Edge>{}), f, r, LossModel::linear_regression);
}

}  // namespace

TEST(Homogeneous, FeatureScale) {
  DataParams p;
  p.dim = 10;
  p.sigma_sq = 1.0;
  const auto inst = gen_homogeneous(build_ring(1000), p);
  EXPECT_NEAR(inst.features().rowwise().squaredNorm().mean(), 10.0, 0.5);
  EXPECT_EQ(inst.high_count(), 0u);
}

TEST(Homogeneous, DeterministicUnderSeeds) {
  DataParams p;
  const auto a = gen_homogeneous(build_ring(50), p);
  const auto b = gen_homogeneous(build_ring(50), p);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_EQ(a.responses(), b.responses());
  p.data_seed = 99;
  EXPECT_NE(gen_homogeneous(build_ring(50), p).features(), a.features());
}

TEST(Homogeneous, ModelSeedOnlyMovesTruth) {
  DataParams p;
  const auto a = gen_homogeneous(build_ring(20), p);
  p.model_seed = 77;
  const auto b = gen_homogeneous(build_ring(20), p);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_NE(a.true_model(), b.true_model());
}

TEST(Homogeneous, SingleNodeLipschitzStats) {
  DataParams p;
  const auto inst = gen_homogeneous(Graph::from_edges(1, std::vector<Edge>{}), p);
  EXPECT_EQ(inst.lipschitz_min(), inst.lipschitz_mean());
  EXPECT_EQ(inst.lipschitz_max(), inst.lipschitz_mean());
}

TEST(Heterogeneous, FixedCountPlacesExactly) {
  auto p = het();
  p.p_high = 0.002;
  EXPECT_EQ(gen_heterogeneous(build_ring(1000), p).high_count(), 2u);
  EXPECT_EQ(gen_heterogeneous(build_ring(200), het()).high_count(), 2u);
}

TEST(Heterogeneous, ZeroHighNodesIsAnError) {
  auto p = het();
  p.p_high = 0.001;
  EXPECT_THROW(gen_heterogeneous(build_ring(200), p), InvalidArgument);
}

TEST(Heterogeneous, RejectsBadVariances) {
  auto p = het();
  p.sigma_high_sq = 0.5;
  EXPECT_THROW(gen_heterogeneous(build_ring(200), p), InvalidArgument);
  p = het();
  p.p_high = 1.0;
  EXPECT_THROW(gen_heterogeneous(build_ring(200), p), InvalidArgument);
}

TEST(Heterogeneous, BernoulliPlacementRate) {
  auto p = het();
  p.placement = Placement::bernoulli;
  p.p_high = 0.1;
  const auto inst = gen_heterogeneous(build_ring(5000), p);
  EXPECT_NEAR(static_cast<double>(inst.high_count()) / 5000.0, 0.1, 0.015);
}

TEST(Heterogeneous, LipschitzRatioAboutHundred) {
  // E|A_v|^2 = d sigma^2, so L_high / L_low -> 100.
  auto p = het();
  p.placement = Placement::bernoulli;
  p.p_high = 0.5;
  const auto inst = gen_heterogeneous(build_ring(10000), p);
  double hi = 0, lo = 0;
  std::size_t nh = 0, nl = 0;
  for (std::size_t v = 0; v < inst.size(); ++v) {
    if (inst.high_variance()[v]) {
      hi += inst.lipschitz()[static_cast<Eigen::Index>(v)];
      ++nh;
    } else {
      lo += inst.lipschitz()[static_cast<Eigen::Index>(v)];
      ++nl;
    }
  }
  hi /= static_cast<double>(nh);
  lo /= static_cast<double>(nl);
  EXPECT_NEAR(hi, 2000.0, 60.0);
  EXPECT_NEAR(lo, 20.0, 0.6);
  EXPECT_NEAR(hi / lo, 100.0, 6.0);
}

TEST(Instance, InvariantsHold) {
  const auto inst = gen_heterogeneous(build_ring(200), het());
  EXPECT_LE(inst.lipschitz_min(), inst.lipschitz_mean());
  EXPECT_LE(inst.lipschitz_mean(), inst.lipschitz_max());
  EXPECT_TRUE((inst.lipschitz().array() > 0).all());
  for (std::size_t v = 0; v < inst.size(); ++v)
    EXPECT_DOUBLE_EQ(inst.lipschitz()[static_cast<Eigen::Index>(v)],
                     2.0 * inst.features().row(static_cast<Eigen::Index>(v)).squaredNorm());
  EXPECT_LE(inst.sigma_star_sq(), inst.sigma_max_sq());
}

TEST(Instance, LogisticLipschitzIsQuarterNorm) {
  auto p = het();
  p.loss = LossModel::logistic_regression;
  const auto inst = gen_heterogeneous(build_ring(100), p);
  for (std::size_t v = 0; v < inst.size(); ++v)
    EXPECT_DOUBLE_EQ(inst.lipschitz()[static_cast<Eigen::Index>(v)],
                     0.25 * inst.features().row(static_cast<Eigen::Index>(v)).squaredNorm());
  for (std::size_t v = 0; v < inst.size(); ++v) {
    const double y = inst.responses()[static_cast<Eigen::Index>(v)];
    EXPECT_TRUE(y == 0.0 || y == 1.0);
  }
  EXPECT_FALSE(inst.has_optimum());
  EXPECT_THROW(inst.optimum(), Unsupported);
  EXPECT_THROW(solve_optimum(inst), Unsupported);
}

TEST(Instance, SigmaStatsMatchDefinition) {
  const auto inst = gen_heterogeneous(build_ring(200), het());
  double mx = 0, mean = 0;
  for (std::size_t v = 0; v < inst.size(); ++v) {
    const double g = local_grad(inst, static_cast<NodeId>(v), inst.optimum()).squaredNorm();
    mx = std::max(mx, g);
    mean += g / static_cast<double>(inst.size());
  }
  EXPECT_NEAR(inst.sigma_max_sq(), mx, 1e-9 * mx);
  EXPECT_NEAR(inst.sigma_star_sq(), mean, 1e-9 * mean);
}

TEST(Instance, RejectsZeroRowsAndShapes) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Ones(3, 2);
  f.row(1).setZero();
  EXPECT_THROW(ProblemInstance(build_ring(3), f, Eigen::VectorXd::Zero(3), LossModel::linear_regression),
               InvalidArgument);
  EXPECT_THROW(ProblemInstance(build_ring(3), Eigen::MatrixXd::Ones(4, 2), Eigen::VectorXd::Zero(4),
                               LossModel::linear_regression),
               InvalidArgument);
}

TEST(Loss, HandEvaluatedQuadratic) {
  Eigen::MatrixXd f(1, 3);
  f << 1, 0, 0;
  Eigen::VectorXd y(1);
  y << 3;
  const ProblemInstance inst(Graph::from_edges(1, std::vector<Edge>{}), f, y, LossModel::linear_regression);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  EXPECT_DOUBLE_EQ(local_loss(inst, 0, x), 9.0);
  EXPECT_EQ(local_grad(inst, 0, x), (Eigen::Vector3d(-6, 0, 0)));
}

TEST(Loss, ZeroGradientAtInterpolant) {
  const auto inst = scalar_instance(2.0, 4.0);
  Eigen::VectorXd x(1);
  x << 2.0;
  EXPECT_EQ(local_grad(inst, 0, x)[0], 0.0);
}

TEST(Loss, DimensionMismatchThrows) {
  const auto inst = scalar_instance(1.0, 1.0);
  EXPECT_THROW(local_grad(inst, 0, Eigen::VectorXd::Zero(2)), InvalidArgument);
  EXPECT_THROW(local_loss(inst, 1, Eigen::VectorXd::Zero(1)), InvalidArgument);
}

TEST(Loss, GlobalIsMeanOfLocals) {
  const auto inst = gen_heterogeneous(build_ring(200), het());
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.3);
  double acc = 0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(10);
  for (NodeId v = 0; v < 200; ++v) {
    acc += local_loss(inst, v, x);
    g += local_grad(inst, v, x);
  }
  EXPECT_NEAR(global_loss(inst, x), acc / 200.0, 1e-9 * acc);
  EXPECT_LT((global_grad(inst, x) - g / 200.0).norm(), 1e-9 * g.norm());
}

class FiniteDifference : public ::testing::TestWithParam<LossModel> {};

TEST_P(FiniteDifference, MatchesAnalyticGradient) {
  auto p = het(6);
  p.loss = GetParam();
  const auto inst = gen_heterogeneous(build_ring(500), p);
  std::mt19937 gen(123);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<NodeId> node(0, 499);
  for (int probe = 0; probe < 100; ++probe) {
    const NodeId v = node(gen);
    Eigen::VectorXd x(6);
    for (auto& e : x) e = nd(gen);
    const auto fd = oracle::numeric_gradient([&](const Eigen::VectorXd& z) { return local_loss(inst, v, z); }, x, 1e-6);
    const Eigen::VectorXd g = local_grad(inst, v, x);
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_LE(std::abs(fd[i] - g[i]), 1e-5 * (1.0 + std::abs(g[i])));
  }
}

INSTANTIATE_TEST_SUITE_P(BothLosses, FiniteDifference,
                         ::testing::Values(LossModel::linear_regression, LossModel::logistic_regression));

TEST(Lipschitz, BoundHoldsAndIsTightAlongFeature) {
  const auto inst = gen_heterogeneous(build_ring(200), het());
  std::mt19937 gen(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (NodeId v = 0; v < 200; v += 7) {
    Eigen::VectorXd x(10), y(10);
    for (auto& e : x) e = nd(gen);
    for (auto& e : y) e = nd(gen);
    const double lv = inst.lipschitz()[v];
    EXPECT_LE((local_grad(inst, v, x) - local_grad(inst, v, y)).norm(), lv * (x - y).norm() * (1 + 1e-12));
    const Eigen::VectorXd z = x + inst.features().row(v).transpose();
    EXPECT_NEAR((local_grad(inst, v, x) - local_grad(inst, v, z)).norm(), lv * (x - z).norm(), 1e-9 * lv);
  }
}

TEST(Optimum, NoiselessRecoversTruth) {
  DataParams p;
  p.noise_std = 0.0;
  const auto inst = gen_homogeneous(build_ring(50), p);
  EXPECT_LT((inst.optimum() - inst.true_model()).norm(), 1e-8);
}

TEST(Optimum, ScalarLeastSquares) {
  EXPECT_NEAR(scalar_instance(2.0, 4.0).optimum()[0], 2.0, 1e-15);
}

TEST(Optimum, MatchesQrAndIsStationary) {
  const auto inst = gen_heterogeneous(build_ring(200), het());
  const Eigen::VectorXd qr = oracle::least_squares_qr(inst.features(), inst.responses());
  EXPECT_LT((inst.optimum() - qr).norm(), 1e-8 * (1 + qr.norm()));
  const double scale = inst.features().rowwise().squaredNorm().sum();
  EXPECT_LE((global_grad(inst, inst.optimum()) * 200.0).norm(), 1e-8 * scale);
}

TEST(Optimum, RankDeficientGetsRidge) {
  Eigen::MatrixXd f(3, 2);
  f << 1, 1, 2, 2, 3, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const Eigen::VectorXd x = solve_optimum(f, y);
  EXPECT_TRUE(x.allFinite());
  EXPECT_NEAR(x[0] + x[1], 1.0, 1e-6);
}

TEST(InstanceFile, RoundTripIsExact) {
  const auto inst = gen_heterogeneous(build_watts_strogatz(60, 4, 0.2, 4), het(5));
  std::stringstream ss;
  write_instance(inst, ss);
  const auto back = read_instance(ss);
  EXPECT_EQ(back.graph(), inst.graph());
  EXPECT_EQ(back.features(), inst.features());
  EXPECT_EQ(back.responses(), inst.responses());
  EXPECT_EQ(back.high_variance(), inst.high_variance());
  EXPECT_EQ(back.true_model(), inst.true_model());
  EXPECT_EQ(back.params(), inst.params());
  EXPECT_EQ(back.loss(), inst.loss());
  EXPECT_EQ(back.optimum(), inst.optimum());
}

TEST(InstanceFile, RejectsTruncated) {
  const auto inst = gen_heterogeneous(build_ring(100), het(3));
  std::stringstream ss;
  write_instance(inst, ss);
  const std::string text = ss.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_instance(cut), InvalidArgument);
}
