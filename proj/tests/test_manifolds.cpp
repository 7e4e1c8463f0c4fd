#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mnn/manifolds.hpp"
#include "mnn/quadrature.hpp"

using namespace mnn;

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Gram matrix of the first `count` eigenfunctions under a quadrature rule,
// using the pointwise evaluators rather than the basis recurrences.
std::vector<std::vector<double>> gram(const ManifoldModel& m, std::size_t count, const QuadratureRule& q) {
  const auto table = continuum_eigenpairs(m, count);
  std::vector<std::vector<double>> g(count, std::vector<double>(count, 0.0));
  std::vector<double> v(count);
  for (std::size_t k = 0; k < q.weights.size(); ++k) {
    for (std::size_t i = 0; i < count; ++i) v[i] = table[i].value(q.nodes.point(k));
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < count; ++j) g[i][j] += q.weights[k] * v[i] * v[j];
    }
  }
  return g;
}

// Laplace-Beltrami on the unit sphere by central differences in (theta, phi).
double sphere_laplacian_fd(const ContinuumEigenpair& f, double theta, double phi) {
  auto at = [&](double t, double p) {
    const double x[3] = {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
    return f.value(x);
  };
  const double h = 1e-4;
  const double s = std::sin(theta);
  const double d_theta = (std::sin(theta + h / 2) * (at(theta + h, phi) - at(theta, phi)) -
                          std::sin(theta - h / 2) * (at(theta, phi) - at(theta - h, phi))) /
                         (h * h * s);
  const double d_phi = (at(theta, phi + h) - 2 * at(theta, phi) + at(theta, phi - h)) / (h * h * s * s);
  return d_theta + d_phi;
}

}  // namespace

TEST(Manifolds, ModelMetadata) {
  EXPECT_EQ(ManifoldModel::circle().intrinsic_dim(), 1);
  EXPECT_EQ(ManifoldModel::circle().ambient_dim(), 2);
  EXPECT_DOUBLE_EQ(ManifoldModel::circle().volume(), 2 * std::numbers::pi);
  EXPECT_EQ(ManifoldModel::sphere2().intrinsic_dim(), 2);
  EXPECT_EQ(ManifoldModel::sphere2().ambient_dim(), 3);
  EXPECT_DOUBLE_EQ(ManifoldModel::sphere2().volume(), 4 * std::numbers::pi);
  EXPECT_EQ(manifold_kind_from_string("circle"), ManifoldKind::circle);
  EXPECT_EQ(manifold_kind_from_string("sphere2"), ManifoldKind::sphere2);
  EXPECT_THROW(manifold_kind_from_string("torus"), std::invalid_argument);
}

TEST(Manifolds, SphereSamplesAreUnitVectors) {
  const auto pts = sample_uniform(ManifoldModel::sphere2(), 4, 7);
  ASSERT_EQ(pts.size(), 4u);
  ASSERT_EQ(pts.ambient_dim(), 3u);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(norm(pts.point(i)), 1.0, 1e-12);
}

TEST(Manifolds, CircleSamplesAreUnitVectorsInPlane) {
  const auto pts = sample_uniform(ManifoldModel::circle(), 3, 0);
  ASSERT_EQ(pts.size(), 3u);
  ASSERT_EQ(pts.ambient_dim(), 2u);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(norm(pts.point(i)), 1.0, 1e-12);
}

TEST(Manifolds, SphereSampleMeanZIsNearZero) {
  const auto pts = sample_uniform(ManifoldModel::sphere2(), 100000, 1);
  double z = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) z += pts.point(i)[2];
  z /= static_cast<double>(pts.size());
  EXPECT_GE(z, -0.01);
  EXPECT_LE(z, 0.01);
}

TEST(Manifolds, SamplingIsDeterministicPerSeed) {
  for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
    const auto a = sample_uniform(m, 500, 42);
    const auto b = sample_uniform(m, 500, 42);
    const auto c = sample_uniform(m, 500, 43);
    EXPECT_TRUE(std::equal(a.coords().begin(), a.coords().end(), b.coords().begin()));
    EXPECT_FALSE(std::equal(a.coords().begin(), a.coords().end(), c.coords().begin()));
    EXPECT_EQ(a.seed(), 42u);
  }
}

TEST(Manifolds, SamplingRejectsEmptyCloud) {
  EXPECT_THROW(sample_uniform(ManifoldModel::sphere2(), 0, 1), std::invalid_argument);
}

TEST(Manifolds, SphereEigenvaluesFollowDegreeFormula) {
  const auto table = continuum_eigenpairs(ManifoldModel::sphere2(), 9);
  const std::vector<double> expected{0, 2, 2, 2, 6, 6, 6, 6, 6};
  ASSERT_EQ(table.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_DOUBLE_EQ(table[i].eigenvalue(), expected[i]);
    EXPECT_EQ(table[i].index(), i);
  }
}

TEST(Manifolds, CircleEigenvaluesAreSquaredFrequencies) {
  const auto table = continuum_eigenpairs(ManifoldModel::circle(), 7);
  const std::vector<double> expected{0, 1, 1, 4, 4, 9, 9};
  for (std::size_t i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(table[i].eigenvalue(), expected[i]);
}

TEST(Manifolds, EigenvaluesNondecreasingAndConstantModeFirst) {
  for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
    const auto table = continuum_eigenpairs(m, 200);
    const double x[3] = {0.3, -0.4, std::sqrt(1 - 0.25)};
    const double xc[2] = {0.6, 0.8};
    EXPECT_EQ(table[0].eigenvalue(), 0.0);
    EXPECT_DOUBLE_EQ(table[0].value(m.kind() == ManifoldKind::circle ? std::span<const double>(xc)
                                                                     : std::span<const double>(x)),
                     1.0);
    for (std::size_t i = 1; i < table.size(); ++i) {
      EXPECT_LE(table[i - 1].eigenvalue(), table[i].eigenvalue());
    }
  }
}

TEST(Manifolds, EigenpairTableBounds) {
  EXPECT_THROW(continuum_eigenpairs(ManifoldModel::circle(), 0), std::invalid_argument);
  EXPECT_THROW(continuum_eigenpairs(ManifoldModel::circle(), kMaxContinuumEigenpairs + 1),
               std::invalid_argument);
  EXPECT_NO_THROW(continuum_eigenpairs(ManifoldModel::sphere2(), kMaxContinuumEigenpairs));
}

TEST(Manifolds, SphereHarmonicsSolveTheEigenproblem) {
  // -Delta phi = l(l+1) phi checked by finite differences at scattered points
  const auto table = continuum_eigenpairs(ManifoldModel::sphere2(), 25);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.3, std::numbers::pi - 0.3), ph(0.0, 2 * std::numbers::pi);
  for (const auto& f : table) {
    for (int k = 0; k < 5; ++k) {
      const double t = th(rng), p = ph(rng);
      const double x[3] = {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
      EXPECT_NEAR(-sphere_laplacian_fd(f, t, p), f.eigenvalue() * f.value(x), 2e-4 * (1 + f.eigenvalue()))
          << "index " << f.index();
    }
  }
}

TEST(Manifolds, CircleModesSolveTheEigenproblem) {
  const auto table = continuum_eigenpairs(ManifoldModel::circle(), 11);
  const double h = 1e-4;
  for (const auto& f : table) {
    for (double theta : {0.1, 1.3, 2.9, 4.4}) {
      auto at = [&](double t) {
        const double x[2] = {std::cos(t), std::sin(t)};
        return f.value(x);
      };
      const double lap = (at(theta + h) - 2 * at(theta) + at(theta - h)) / (h * h);
      EXPECT_NEAR(-lap, f.eigenvalue() * at(theta), 1e-4 * (1 + f.eigenvalue()));
    }
  }
}

TEST(Manifolds, SphereGramMatrixIsIdentityOnFibonacciNodes) {
  const auto g = gram(ManifoldModel::sphere2(), 9, sphere_fibonacci(100000));
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) EXPECT_NEAR(g[i][j], i == j ? 1.0 : 0.0, 1e-3);
  }
}

TEST(Manifolds, OrthonormalityToMicroTolerance) {
  for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
    const auto g = gram(m, 16, default_quadrature(m));
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(g[i][j], i == j ? 1.0 : 0.0, 1e-6);
    }
  }
}

TEST(Manifolds, BasisRecurrenceMatchesPointwiseEvaluators) {
  for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
    const std::size_t count = 144;
    const auto table = continuum_eigenpairs(m, count);
    const auto pts = sample_uniform(m, 50, 11);
    std::vector<double> basis(count);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      basis_values(m.kind(), pts.point(j), basis);
      for (std::size_t i = 0; i < count; ++i) {
        EXPECT_NEAR(basis[i], table[i].value(pts.point(j)), 1e-9 * (1 + std::abs(basis[i])));
      }
    }
  }
}

TEST(Manifolds, SupNormGrowthIsBoundedBySqrtIndex) {
  const auto rule = sphere_fibonacci(20000);
  const std::size_t count = 100;
  std::vector<double> sup(count, 0.0), basis(count);
  for (std::size_t k = 0; k < rule.weights.size(); ++k) {
    basis_values(ManifoldKind::sphere2, rule.nodes.point(k), basis);
    for (std::size_t i = 0; i < count; ++i) sup[i] = std::max(sup[i], std::abs(basis[i]));
  }
  double c = 0.0;
  for (std::size_t i = 0; i < 16; ++i) c = std::max(c, sup[i] / std::sqrt(i + 1.0));
  for (std::size_t i = 16; i < count; ++i) EXPECT_LE(sup[i], c * std::sqrt(i + 1.0)) << "index " << i;
}

TEST(Manifolds, ConstantSignalEvaluatesToOne) {
  const auto pts = sample_uniform(ManifoldModel::sphere2(), 64, 2);
  const auto v = evaluate_signal(BandlimitedSignal{{1, 0, 0, 0}}, ManifoldModel::sphere2(), pts);
  for (double x : v) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(Manifolds, ZeroSignalEvaluatesToZero) {
  const auto pts = sample_uniform(ManifoldModel::circle(), 64, 2);
  const auto v = evaluate_signal(BandlimitedSignal{std::vector<double>(5, 0.0)}, ManifoldModel::circle(), pts);
  for (double x : v) EXPECT_EQ(x, 0.0);
}

TEST(Manifolds, SingleModeSignalMatchesEigenfunctionAndMonteCarloNorm) {
  const std::size_t n = 4096;
  const auto m = ManifoldModel::sphere2();
  const auto pts = sample_uniform(m, n, 8);
  const auto v = evaluate_signal(BandlimitedSignal{{0, 1}}, m, pts);
  const auto phi1 = continuum_eigenpairs(m, 2)[1];
  double sq = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    EXPECT_NEAR(v[j], phi1.value(pts.point(j)), 1e-12);
    sq += v[j] * v[j];
  }
  sq /= static_cast<double>(n);
  const double nd = static_cast<double>(n);
  EXPECT_NEAR(sq, 1.0, 3 * std::sqrt(18 * std::log(nd) / nd));
}

TEST(Manifolds, TableAndManifoldEvaluationAgree) {
  const auto m = ManifoldModel::sphere2();
  const auto pts = sample_uniform(m, 32, 4);
  BandlimitedSignal f{{0.3, -1.2, 0.5, 2.0, 0.1, -0.7, 0.0, 1.5, 0.4, -0.2}};
  const auto table = continuum_eigenpairs(m, 10);
  const auto a = evaluate_signal(f, m, pts);
  const auto b = evaluate_signal(f, table, pts);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

TEST(Manifolds, SignalErrors) {
  const auto pts = sample_uniform(ManifoldModel::sphere2(), 8, 1);
  const auto table = continuum_eigenpairs(ManifoldModel::sphere2(), 4);
  EXPECT_THROW(evaluate_signal(BandlimitedSignal{std::vector<double>(5, 1.0)}, table, pts), std::invalid_argument);
  EXPECT_THROW(evaluate_signal(BandlimitedSignal{std::vector<double>(kMaxContinuumEigenpairs + 1, 1.0)},
                               ManifoldModel::sphere2(), pts),
               std::invalid_argument);
  EXPECT_THROW(evaluate_signal(BandlimitedSignal{{1.0}}, ManifoldModel::circle(), pts), std::invalid_argument);
}

TEST(Manifolds, ParsevalForRandomCoefficients) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
    BandlimitedSignal f;
    double expected = 0.0;
    for (int i = 0; i < 16; ++i) {
      f.coefficients.push_back(g(rng));
      expected += f.coefficients.back() * f.coefficients.back();
    }
    const auto rule = default_quadrature(m);
    const auto v = evaluate_signal(f, m, rule.nodes);
    double q = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) q += rule.weights[k] * v[k] * v[k];
    EXPECT_NEAR(q, expected, 1e-4);
  }
}

TEST(Quadrature, RulesIntegrateConstantsAndHaveUnitNodes) {
  for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
    const auto rule = default_quadrature(m, 1000);
    double w = 0.0;
    for (double x : rule.weights) w += x;
    EXPECT_NEAR(w, 1.0, 1e-12);
    for (std::size_t k = 0; k < rule.weights.size(); ++k) EXPECT_NEAR(norm(rule.nodes.point(k)), 1.0, 1e-12);
  }
  EXPECT_EQ(default_quadrature(ManifoldModel::circle()).weights.size(), kCircleQuadratureNodes);
  EXPECT_EQ(default_quadrature(ManifoldModel::sphere2()).weights.size(), kSphereQuadratureNodes);
  EXPECT_THROW(circle_trapezoid(1), std::invalid_argument);
  EXPECT_THROW(sphere_fibonacci(1), std::invalid_argument);
}
