#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mnn/graph.hpp"
#include "mnn/spectral.hpp"

using namespace mnn;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

KernelScheme scheme_for(KernelKind kind, const ManifoldModel& m, std::size_t n, double c) {
  return {kind, m.intrinsic_dim(), scale_parameter(n, m.intrinsic_dim(), c),
          calibration_constant(kind, m.intrinsic_dim(), m.volume())};
}

}  // namespace

TEST(Graph, ScaleParameterExamples) {
  EXPECT_NEAR(scale_parameter(1024, 2, 1.0), std::pow(2.0, -2.5), 1e-15);
  EXPECT_NEAR(scale_parameter(1024, 2, 1.0), 0.1767767, 1e-7);
  EXPECT_NEAR(scale_parameter(128, 1, 1.0), 0.25, 1e-15);
  EXPECT_NEAR(scale_parameter(4096, 2, 2.0), 0.25, 1e-15);
  EXPECT_THROW(scale_parameter(1, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(scale_parameter(16, 2, 0.0), std::invalid_argument);
}

TEST(Graph, CalibrationConstants) {
  EXPECT_DOUBLE_EQ(calibration_constant(KernelKind::heat, 2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(calibration_constant(KernelKind::heat, 1, 2 * std::numbers::pi), 2 * std::numbers::pi);
  // gaussian: 4 vol / pi^{d/2}; the eigenvalue oracles below pin the factor 4
  EXPECT_NEAR(calibration_constant(KernelKind::gaussian, 1, 2 * std::numbers::pi), 8 * std::sqrt(std::numbers::pi),
              1e-12);
  EXPECT_NEAR(calibration_constant(KernelKind::gaussian, 2, 4 * std::numbers::pi), 16.0, 1e-12);
  EXPECT_THROW(calibration_constant(KernelKind::gaussian, 3, 1.0), std::invalid_argument);
}

TEST(Graph, GaussianAdjacencyFormula) {
  PointCloud pts(ManifoldKind::sphere2, 3, {0, 0, 0, 0.5, 0, 0});
  const auto op = build_laplacian(pts, {KernelKind::gaussian, 2, 0.25, 1.0});
  EXPECT_NEAR(op.adjacency(0, 1), 4 * std::exp(-1.0), 1.471518 * 1e-7);
  EXPECT_NEAR(op.adjacency(0, 1), 1.471518, 1e-6);
  EXPECT_EQ(op.adjacency(0, 0), 0.0);
  // L = (1/(nt)) (D - A) with n = 2, t = 0.25
  EXPECT_NEAR(op.entry(0, 1), -op.adjacency(0, 1) / 0.5, 1e-12);
  EXPECT_NEAR(op.entry(0, 0), op.adjacency(0, 1) / 0.5, 1e-12);
}

TEST(Graph, HeatPrefactorAtUnitFourPiT) {
  const std::size_t n = 5;
  PointCloud pts(ManifoldKind::sphere2, 3, std::vector<double>(3 * n, 0.25));
  const auto op = build_laplacian(pts, {KernelKind::heat, 2, 1.0 / (4 * std::numbers::pi), 1.0});
  EXPECT_NEAR(op.adjacency(1, 3), 4 * std::numbers::pi / n, 1e-12);
}

TEST(Graph, DenseThreeByThreeOracle) {
  PointCloud pts(ManifoldKind::circle, 2, {1, 0, 0, 1, -0.6, 0.8});
  const double t = 0.7, calib = 1.3;
  const auto op = build_laplacian(pts, {KernelKind::gaussian, 1, t, calib});
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double dx = pts.point(i)[0] - pts.point(j)[0], dy = pts.point(i)[1] - pts.point(j)[1];
      a(i, j) = std::pow(t, -0.5) * std::exp(-(dx * dx + dy * dy) / t);
    }
  }
  const Eigen::Matrix3d d = a.rowwise().sum().asDiagonal();
  const Eigen::Matrix3d l = calib / (3 * t) * (d - a);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> e(3, 0.0);
    e[c] = 1.0;
    const auto y = op.matvec(e);
    for (int r = 0; r < 3; ++r) EXPECT_NEAR(y[r], l(r, c), 1e-6 * l.cwiseAbs().maxCoeff());
  }
}

TEST(Graph, StructuralInvariantsOnRandomOperators) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const auto m = k % 2 ? ManifoldModel::circle() : ManifoldModel::sphere2();
    const auto kind = k % 4 < 2 ? KernelKind::gaussian : KernelKind::heat;
    const std::size_t n = 64 + 16 * k;
    const auto pts = sample_uniform(m, n, 1000 + k);
    const auto op = build_laplacian(pts, scheme_for(kind, m, n, 0.5 + 0.1 * k));
    const auto x = random_vector(n, rng), y = random_vector(n, rng);
    const auto lx = op.matvec(x), ly = op.matvec(y);
    const double scale = op.spectral_upper_bound() * std::sqrt(dot(x, x) * dot(y, y));
    EXPECT_NEAR(dot(lx, y), dot(x, ly), 1e-10 * scale);
    EXPECT_GE(dot(x, lx), -1e-12 * dot(x, x));
    const auto l1 = op.matvec(std::vector<double>(n, 1.0));
    for (double v : l1) EXPECT_EQ(v, 0.0);
  }
}

TEST(Graph, DenseAndOnTheFlyStorageAgree) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {256u, 257u, 611u}) {
    const auto pts = sample_uniform(ManifoldModel::sphere2(), n, n);
    const auto s = scheme_for(KernelKind::gaussian, ManifoldModel::sphere2(), n, 1.0);
    LaplacianOptions dense, fly;
    dense.storage = StorageMode::cached_dense;
    fly.storage = StorageMode::on_the_fly;
    const auto a = build_laplacian(pts, s, dense);
    const auto b = build_laplacian(pts, s, fly);
    EXPECT_EQ(a.storage(), StorageMode::cached_dense);
    EXPECT_EQ(b.storage(), StorageMode::on_the_fly);
    const auto x = random_vector(n, rng);
    const auto ya = a.matvec(x), yb = b.matvec(x);
    double ref = 0.0;
    for (double v : ya) ref = std::max(ref, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ya[i], yb[i], 1e-12 * ref);
    EXPECT_EQ(a.entry(3, 7), b.entry(3, 7));
    EXPECT_DOUBLE_EQ(a.kernel_degree(5), b.kernel_degree(5));
  }
}

TEST(Graph, AutomaticStorageFollowsDenseLimit) {
  const auto pts = sample_uniform(ManifoldModel::circle(), 300, 1);
  const KernelScheme s{KernelKind::gaussian, 1, 0.1, 1.0};
  LaplacianOptions o;
  o.dense_limit = 299;
  EXPECT_EQ(build_laplacian(pts, s, o).storage(), StorageMode::on_the_fly);
  o.dense_limit = 300;
  EXPECT_EQ(build_laplacian(pts, s, o).storage(), StorageMode::cached_dense);
}

TEST(Graph, KernelCutoffZeroesSmallWeights) {
  const auto pts = sample_uniform(ManifoldModel::circle(), 200, 3);
  const KernelScheme s{KernelKind::gaussian, 1, 0.05, 1.0};
  LaplacianOptions o;
  o.kernel_cutoff = 1e-3;
  const auto op = build_laplacian(pts, s, o);
  std::size_t zeros = 0;
  for (std::size_t j = 1; j < 200; ++j) zeros += op.adjacency(0, j) == 0.0;
  EXPECT_GT(zeros, 0u);
  for (double v : op.matvec(std::vector<double>(200, 1.0))) EXPECT_EQ(v, 0.0);
}

TEST(Graph, InvalidInputsAreRejected) {
  const auto pts = sample_uniform(ManifoldModel::circle(), 10, 1);
  EXPECT_THROW(build_laplacian(pts, {KernelKind::gaussian, 1, 0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(build_laplacian(pts, {KernelKind::gaussian, 1, -1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(build_laplacian(pts, {KernelKind::gaussian, 1, 0.1, 0.0}), std::invalid_argument);
  PointCloud bad(ManifoldKind::circle, 2, {0, 0, std::nan(""), 1});
  EXPECT_THROW(build_laplacian(bad, {KernelKind::gaussian, 1, 0.1, 1.0}), std::invalid_argument);
  PointCloud one(ManifoldKind::circle, 2, {1, 0});
  EXPECT_THROW(build_laplacian(one, {KernelKind::gaussian, 1, 0.1, 1.0}), std::invalid_argument);
  const auto op = build_laplacian(pts, {KernelKind::gaussian, 1, 0.1, 1.0});
  EXPECT_THROW(op.matvec(std::vector<double>(9, 1.0)), std::invalid_argument);
  EXPECT_THROW(kernel_kind_from_string("cosine"), std::invalid_argument);
}

TEST(Graph, SmallestEigenvalueIsZeroWithConstantVector) {
  for (auto kind : {KernelKind::heat, KernelKind::gaussian}) {
    const auto m = ManifoldModel::sphere2();
    const auto pts = sample_uniform(m, 300, 2);
    const auto eig = dense_eigenpairs(build_laplacian(pts, scheme_for(kind, m, 300, 1.0)), 2);
    EXPECT_NEAR(eig.values(0), 0.0, 1e-9);
    const double first = eig.vectors(0, 0);
    for (Eigen::Index i = 0; i < eig.vectors.rows(); ++i) EXPECT_NEAR(eig.vectors(i, 0), first, 1e-8);
    EXPECT_GT(eig.values(1), 1e-3);
  }
}

TEST(Graph, CalibratedCircleFirstEigenvalueNearOne) {
  const std::size_t n = 8192;
  const auto m = ManifoldModel::circle();
  const auto pts = sample_uniform(m, n, 21);
  const auto eig = smallest_eigenpairs(build_laplacian(pts, scheme_for(KernelKind::gaussian, m, n, 0.5)), 3);
  EXPECT_NEAR(eig.values(1), 1.0, 0.1);
  EXPECT_NEAR(eig.values(2), 1.0, 0.1);
}

TEST(Graph, CalibratedSphereFirstGroupNearTwo) {
  const std::size_t n = 4096;
  const auto m = ManifoldModel::sphere2();
  const auto pts = sample_uniform(m, n, 22);
  const auto eig = smallest_eigenpairs(build_laplacian(pts, scheme_for(KernelKind::gaussian, m, n, 1.0)), 4);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(eig.values(i), 2.0, 0.2);
}

TEST(Graph, HeatAndGaussianSchemesAgreeOnTheCircle) {
  const std::size_t n = 8192;
  const auto m = ManifoldModel::circle();
  const auto pts = sample_uniform(m, n, 23);
  const auto heat = smallest_eigenpairs(build_laplacian(pts, scheme_for(KernelKind::heat, m, n, 1.0)), 5);
  const auto gauss = smallest_eigenpairs(build_laplacian(pts, scheme_for(KernelKind::gaussian, m, n, 0.5)), 5);
  EXPECT_NEAR(heat.values(0), 0.0, 1e-8);
  EXPECT_NEAR(gauss.values(0), 0.0, 1e-8);
  for (int i = 1; i < 5; ++i) EXPECT_NEAR(heat.values(i) / gauss.values(i), 1.0, 0.15) << "index " << i;
}
