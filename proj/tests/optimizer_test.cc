#include "dpcd/optimizer.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dpcd/geometry.h"
#include "dpcd/metrics.h"
#include "dpcd/st_graph.h"
#include "dpcd/synthetic.h"
#include "test_util.h"

namespace dpcd {
namespace {

using testing::make_frame;
using testing::random_points;

// A random FrameSystem over n points with every ingredient populated.
FrameSystem random_system(Index n, std::uint64_t seed, bool temporal = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Points p = random_points(n, seed);
  FrameSystem s;
  const Index k = std::min<Index>(5, n - 1);
  const Index m = std::max<Index>(2, n / 3);
  s.patches = build_patches(make_frame(p), m, k, seed);
  s.centers = s.patches.centers(p);
  std::vector<Edge> edges;
  const Index rows = s.patches.row_count();
  for (Index i = 0; i < rows; ++i) {
    for (Index j = i + 1; j < rows; ++j) {
      if (u(rng) < 4.0 / static_cast<double>(rows)) edges.push_back({i, j, u(rng)});
    }
  }
  s.spatial = SparseGraph(rows, edges);
  if (temporal) {
    s.reference = Eigen::MatrixXd::Random(rows, 3) * 0.1;
    s.temporal_weights = Eigen::VectorXd::NullaryExpr(m, [&] { return u(rng); });
    s.temporal_weights[0] = 0.0;
  }
  return s;
}

struct DenseSystem {
  Eigen::MatrixXd s;  // sampling matrix, rows x n
  Eigen::MatrixXd w;  // rows x rows
  Eigen::MatrixXd l;  // rows x rows
  Eigen::MatrixXd c;  // rows x 3
};

DenseSystem densify(const FrameSystem& sys, Index n) {
  DenseSystem d;
  const Index rows = sys.patches.row_count();
  d.s = Eigen::MatrixXd::Zero(rows, n);
  d.c.resize(rows, 3);
  d.w = Eigen::MatrixXd::Zero(rows, rows);
  for (Index r = 0; r < rows; ++r) {
    d.s(r, sys.patches.point_of_row(r)) = 1.0;
    d.c.row(r) = sys.centers.row(r / sys.patches.patch_size());
    if (sys.has_temporal()) d.w(r, r) = sys.temporal_weights[r / sys.patches.patch_size()];
  }
  const Eigen::MatrixXd a = sys.spatial.dense_adjacency();
  d.l = -a;
  for (Index i = 0; i < rows; ++i) d.l(i, i) += a.row(i).sum();
  return d;
}

TEST(Objective, ZeroWhenUnchangedAndNoRegularizers) {
  const FrameSystem s = random_system(30, 1);
  const Points u = random_points(30, 1);
  EXPECT_EQ(objective(u, u, s, 0.0, 0.0).total, 0.0);
}

TEST(Objective, ZeroWeightsKillTemporalTerm) {
  FrameSystem s = random_system(30, 2);
  s.temporal_weights.setZero();
  const Points u = random_points(30, 9);
  EXPECT_EQ(objective(u, u, s, 1.0, 1.0).temporal, 0.0);
}

TEST(Objective, MatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 20 + static_cast<Index>(seed) * 3;
    const FrameSystem s = random_system(n, seed);
    const DenseSystem d = densify(s, n);
    const Points u = random_points(n, seed + 50);
    const Points uh = random_points(n, seed + 60);
    const Eigen::MatrixXd p = d.s * Eigen::MatrixXd(u) - d.c;
    const double fid = (Eigen::MatrixXd(u) - Eigen::MatrixXd(uh)).squaredNorm();
    const double tem = ((p - s.reference).transpose() * d.w * (p - s.reference)).trace();
    const double spa = (p.transpose() * d.l * p).trace();
    const ObjectiveBreakdown o = objective(u, uh, s, 0.7, 1.3);
    EXPECT_NEAR(o.fidelity, fid, 1e-10);
    EXPECT_NEAR(o.temporal, tem, 1e-10);
    EXPECT_NEAR(o.spatial, spa, 1e-10);
    EXPECT_NEAR(o.total, fid + 0.7 * tem + 1.3 * spa, 1e-10);
  }
}

TEST(Objective, DimensionMismatch) {
  const FrameSystem s = random_system(30, 1);
  EXPECT_THROW(objective(random_points(30, 1), random_points(29, 1), s, 1, 1),
               PreconditionError);
  FrameSystem bad = s;
  bad.reference = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_THROW(objective(random_points(30, 1), random_points(30, 1), bad, 1, 1),
               PreconditionError);
}

TEST(SolvePointCloud, ZeroLambdasReturnInputExactly) {
  const FrameSystem s = random_system(40, 3);
  const Points uh = random_points(40, 4);
  const Points u = solve_point_cloud(uh, s, 0.0, 0.0, 1e-10, 100);
  EXPECT_EQ(u, uh);
}

TEST(SolvePointCloud, MatchesDenseSolve) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const Index n = 10 + static_cast<Index>(seed) * 3;
    const FrameSystem s = random_system(n, seed + 10, seed % 4 != 0);
    const DenseSystem d = densify(s, n);
    const Points uh = random_points(n, seed + 20);
    const double l1 = 0.8, l2 = 1.7;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) + l2 * d.s.transpose() * d.l * d.s;
    Eigen::MatrixXd b = Eigen::MatrixXd(uh) + l2 * d.s.transpose() * d.l * d.c;
    if (s.has_temporal()) {
      a += l1 * d.s.transpose() * d.w * d.s;
      b += l1 * d.s.transpose() * d.w * (d.c + s.reference);
    }
    const Eigen::MatrixXd oracle = a.ldlt().solve(b);
    const Points u = solve_point_cloud(uh, s, l1, l2, 1e-10, 1000);
    EXPECT_LE((Eigen::MatrixXd(u) - oracle).cwiseAbs().maxCoeff(), 1e-6);
    for (int col = 0; col < 3; ++col) {
      EXPECT_LE((a * u.col(col) - b.col(col)).norm() / b.col(col).norm(), 1e-8);
    }
    // The solution minimizes the objective: small perturbations never help.
    const double f0 = objective(u, uh, s, s.has_temporal() ? l1 : 0.0, l2).total;
    for (int t = 0; t < 5; ++t) {
      const Points up = u + random_points(n, seed * 7 + t) * 1e-4;
      EXPECT_GE(objective(up, uh, s, s.has_temporal() ? l1 : 0.0, l2).total, f0 - 1e-12);
    }
  }
}

TEST(SolvePointCloud, CapTooSmallThrowsWithResidual) {
  const FrameSystem s = random_system(60, 5);
  const Points uh = random_points(60, 6);
  try {
    solve_point_cloud(uh, s, 1.0, 50.0, 1e-14, 1);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_GT(e.achieved(), 1e-14);
  }
}

TEST(SolvePointCloud, RejectsBadWeights) {
  FrameSystem s = random_system(20, 5);
  s.temporal_weights[1] = 1.5;
  EXPECT_THROW(solve_point_cloud(random_points(20, 1), s, 1, 1, 1e-10, 100), PreconditionError);
}

TEST(SolveTemporalWeights, Examples) {
  const Eigen::Vector3d d(3, 1, 2);
  const Eigen::VectorXd w2 = solve_temporal_weights(d, 2.0);
  EXPECT_EQ(w2, Eigen::Vector3d(0, 1, 1));
  EXPECT_EQ(w2.dot(d), 3.0);
  const Eigen::VectorXd w15 = solve_temporal_weights(d, 1.5);
  EXPECT_EQ(w15, Eigen::Vector3d(0, 1, 0.5));
  EXPECT_EQ(w15.dot(d), 2.0);
  EXPECT_EQ(solve_temporal_weights(d, 3.0), Eigen::Vector3d::Ones());
}

TEST(SolveTemporalWeights, Infeasible) {
  try {
    solve_temporal_weights(Eigen::Vector3d(1, 2, 3), 3.5);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("infeasible"), std::string::npos);
  }
  EXPECT_THROW(solve_temporal_weights(Eigen::Vector3d(-1, 2, 3), 1.0), PreconditionError);
}

TEST(MetricLearning, IdenticalFeaturesGiveZeroGradient) {
  std::vector<MetricPair> pairs(10);
  for (auto& p : pairs) p.weight = 0.3;
  const Matrix6d r = Matrix6d::Identity() * (5.0 / 6.0);
  EXPECT_EQ(metric_gradient(pairs, r), Matrix6d::Zero());
  MetricLearningOptions o;
  const MetricLearningResult res = learn_metric(pairs, o);
  EXPECT_EQ(res.factor, r);
}

std::vector<MetricPair> random_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MetricPair> pairs(n);
  for (auto& p : pairs) {
    for (int k = 0; k < 6; ++k) p.feature_diff[k] = g(rng);
    p.weight = u(rng);
  }
  return pairs;
}

TEST(MetricLearning, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 20; ++t) {
    const auto pairs = random_pairs(40, 100 + t);
    Matrix6d r = Matrix6d::NullaryExpr([&] { return u(rng); });
    r = project_factor(r, 5.0);
    const Matrix6d g = metric_gradient(pairs, r);
    const double h = 1e-6;
    Matrix6d fd;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        Matrix6d rp = r, rm = r;
        rp(i, j) += h;
        rm(i, j) -= h;
        fd(i, j) = (metric_objective(pairs, rp) - metric_objective(pairs, rm)) / (2 * h);
      }
    }
    EXPECT_LE((g - fd).norm() / std::max(fd.norm(), 1e-12), 1e-4);
  }
}

TEST(MetricLearning, MonotoneAndFeasible) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pairs = random_pairs(200, seed);
    MetricLearningOptions o;
    o.step = 0.5;
    o.max_iters = 100;
    o.tol = 1e-12;
    const MetricLearningResult res = learn_metric(pairs, o);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
      EXPECT_LE(res.objective_trace[i], res.objective_trace[i - 1]);
    }
    EXPECT_LE(res.factor.trace(), 5.0 + 1e-12);
    for (int i = 0; i < 6; ++i) EXPECT_GE(res.factor(i, i), 0.0);
    EXPECT_LE((res.metric - res.factor.transpose() * res.factor).norm(), 1e-15);
  }
}

TEST(MetricLearning, HugeStepThrows) {
  // Pair A dominates the gradient, so a long step moves almost all of the
  // trace onto r_00. Pair B then loses its share and its term climbs.
  MetricPair a, b;
  a.feature_diff = Vector6d::Zero();
  a.feature_diff[0] = 5.0;
  a.weight = 0.3 * std::exp(25.0);
  b.feature_diff = Vector6d::Zero();
  b.feature_diff[1] = 1.0;
  b.weight = 1.0;
  MetricLearningOptions o;
  o.step = 1e9;
  o.trace_bound = 6.0;
  bool threw = false;
  try {
    learn_metric({a, b}, o);
  } catch (const SolverError& e) {
    threw = true;
    EXPECT_NE(std::string(e.what()).find("step size too large"), std::string::npos);
  }
  EXPECT_TRUE(threw);
  o.step = 1e-12;
  EXPECT_NO_THROW(learn_metric({a, b}, o));
}

TEST(ProjectFactor, ClampsAndRescales) {
  Matrix6d r = Matrix6d::Identity() * 2.0;
  r(0, 0) = -1.0;
  r(0, 1) = 3.0;
  const Matrix6d p = project_factor(r, 5.0);
  EXPECT_EQ(p(0, 0), 0.0);
  EXPECT_NEAR(p.trace(), 5.0, 1e-14);
  EXPECT_EQ(p(0, 1), 3.0);
  const Matrix6d small = Matrix6d::Identity() * 0.1;
  EXPECT_EQ(project_factor(small, 5.0), small);
}

TEST(CountRule, ParseAndFormat) {
  const CountRule rel = CountRule::parse("0.5N", 'N');
  EXPECT_TRUE(rel.relative);
  EXPECT_EQ(rel.resolve(2000), 1000.0);
  const CountRule abs = CountRule::parse("120", 'N');
  EXPECT_FALSE(abs.relative);
  EXPECT_EQ(abs.resolve(2000), 120.0);
  EXPECT_EQ(CountRule::parse(rel.to_string('N'), 'N').value, 0.5);
  EXPECT_THROW(CountRule::parse("abc", 'N'), PreconditionError);
  EXPECT_THROW(CountRule::parse("N", 'N'), PreconditionError);
}

TEST(DenoiseConfig, Validation) {
  DenoiseConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 2.0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = {};
  c.M_prime = {1.5, true};
  EXPECT_THROW(c.validate(), PreconditionError);
  c = {};
  c.lambda1 = -1.0;
  EXPECT_THROW(c.validate(), PreconditionError);
}

DenoiseConfig small_config() {
  DenoiseConfig c;
  c.K = 10;
  c.K_s = 4;
  c.xi = 5;
  c.outer_max_iters = 3;
  return c;
}

TEST(DenoiseFrame, ZeroLambdasReturnInput) {
  DenoiseConfig c = small_config();
  c.lambda1 = 0.0;
  c.lambda2 = 0.0;
  const Frame f = make_frame(random_points(100, 2));
  const FrameResult r = denoise_frame(f, nullptr, c);
  EXPECT_EQ(r.output.positions, f.positions);
}

TEST(DenoiseFrame, PlaneStaysOnPlane) {
  const Frame f = testing::random_plane(300, 3);
  const FrameResult r = denoise_frame(f, nullptr, small_config());
  for (Index i = 0; i < f.size(); ++i) EXPECT_EQ(r.output.positions(i, 2), 0.0);
}

TEST(DenoiseFrame, RegularGridStaysInItsPlane) {
  // Points may slide along the plane but never leave it.
  const Index side = 20;
  Frame f;
  f.positions.resize(side * side, 3);
  for (Index i = 0; i < side * side; ++i) {
    f.positions.row(i) << static_cast<double>(i % side) / side,
        static_cast<double>(i / side) / side, 0.0;
  }
  DenoiseConfig c = small_config();
  const FrameResult r = denoise_frame(f, nullptr, c);
  EXPECT_EQ(r.output.positions.col(2), Eigen::VectorXd::Zero(side * side));
  const double spacing = 1.0 / side;
  EXPECT_LE((r.output.positions - f.positions).rowwise().norm().maxCoeff(), spacing);
}

TEST(DenoiseFrame, AcceptedObjectivesAreNonIncreasing) {
  SyntheticSpec spec;
  spec.points = 400;
  spec.frames = 1;
  const Frame clean = generate_sequence(spec).frames[0];
  const Frame noisy = add_gaussian_noise(clean, 0.01, 3);
  DenoiseConfig c = small_config();
  c.outer_max_iters = 5;
  c.outer_tol = 1e-9;
  const FrameResult r = denoise_frame(noisy, nullptr, c);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& rec : r.trace) {
    if (!rec.accepted) continue;
    EXPECT_LE(rec.objective.total, prev);
    prev = rec.objective.total;
    EXPECT_LE(rec.trace_r, std::max(c.C, 6.0) + 1e-12);
  }
}

TEST(DenoiseFrame, SolverErrorsNameTheIteration) {
  DenoiseConfig c = small_config();
  c.cg_max_iters = 1;
  c.cg_tol = 1e-14;
  c.lambda2 = 100.0;
  const Frame f = add_gaussian_noise(make_frame(random_points(200, 5)), 0.05, 1);
  try {
    denoise_frame(f, nullptr, c);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("outer iteration 0: ", 0), 0u);
  }
}

TEST(DenoiseSequence, SingleFrameMatchesDenoiseFrame) {
  Sequence s;
  s.frames.push_back(add_gaussian_noise(make_frame(random_points(150, 1)), 0.02, 4));
  const DenoiseConfig c = small_config();
  const SequenceResult r = denoise_sequence(s, c);
  EXPECT_EQ(r.denoised.frames[0].positions, denoise_frame(s.frames[0], nullptr, c).output.positions);
}

TEST(DenoiseSequence, RepeatedFramesUseTemporalTerm) {
  const Frame noisy = add_gaussian_noise(testing::random_plane(200, 2), 0.01, 5);
  Sequence s;
  for (std::size_t t = 0; t < 3; ++t) {
    s.frames.push_back(noisy);
    s.frames.back().frame_index = t;
  }
  const SequenceResult r = denoise_sequence(s, small_config());
  EXPECT_EQ(r.frames[0].trace[0].objective.temporal, 0.0);
  for (std::size_t t = 1; t < 3; ++t) {
    const double temporal = r.frames[t].trace[0].objective.temporal;
    EXPECT_TRUE(std::isfinite(temporal));
    EXPECT_GT(temporal, 0.0);
  }
}

TEST(DenoiseSequence, ThreadCountDoesNotChangeOutput) {
  SyntheticSpec spec;
  spec.points = 300;
  spec.frames = 2;
  Sequence noisy = generate_sequence(spec);
  for (auto& f : noisy.frames) f = add_gaussian_noise(f, 0.01, f.frame_index + 1);
  DenoiseConfig c = small_config();
  const SequenceResult a = denoise_sequence(noisy, c);
  c.threads = 4;
  const SequenceResult b = denoise_sequence(noisy, c);
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_EQ(a.denoised.frames[t].positions, b.denoised.frames[t].positions);
  }
}

}  // namespace
}  // namespace dpcd
