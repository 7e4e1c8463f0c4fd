#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mnn {

enum class ManifoldKind { circle, sphere2 };

std::string_view to_string(ManifoldKind kind);
ManifoldKind manifold_kind_from_string(std::string_view name);

/// Unit-radius model manifold embedded in R^D.
class ManifoldModel {
 public:
  static ManifoldModel circle() { return ManifoldModel(ManifoldKind::circle); }
  static ManifoldModel sphere2() { return ManifoldModel(ManifoldKind::sphere2); }
  explicit ManifoldModel(ManifoldKind kind) : kind_(kind) {}

  ManifoldKind kind() const { return kind_; }
  int intrinsic_dim() const { return kind_ == ManifoldKind::circle ? 1 : 2; }
  int ambient_dim() const { return kind_ == ManifoldKind::circle ? 2 : 3; }
  /// Riemannian volume: 2*pi for the circle, 4*pi for the sphere.
  double volume() const;

  friend bool operator==(const ManifoldModel&, const ManifoldModel&) = default;

 private:
  ManifoldKind kind_;
};

/// n points in R^D stored row-major, with the manifold and seed they came from.
class PointCloud {
 public:
  PointCloud(ManifoldKind kind, std::size_t ambient_dim,
             std::vector<double> coords, std::uint64_t seed = 0);

  std::size_t size() const { return n_; }
  std::size_t ambient_dim() const { return dim_; }
  ManifoldKind manifold() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const { return coords_; }

 private:
  ManifoldKind kind_;
  std::size_t dim_;
  std::size_t n_;
  std::vector<double> coords_;
  std::uint64_t seed_;
};

/// n i.i.d. points, uniform w.r.t. the volume form. Bit-reproducible for a
/// given (manifold, n, seed).
PointCloud sample_uniform(const ManifoldModel& manifold, std::size_t n,
                          std::uint64_t seed);

/// Laplace-Beltrami eigenpair with eigenfunction orthonormal w.r.t. dV/vol(M).
///
/// Circle ordering: 1, sqrt2 cos(k theta), sqrt2 sin(k theta) for k = 1, 2, ...
/// with eigenvalue k^2. Sphere ordering: real spherical harmonics grouped by
/// degree l (eigenvalue l(l+1)), order m = -l..l inside each group.
class ContinuumEigenpair {
 public:
  ContinuumEigenpair(ManifoldKind kind, std::size_t index);

  std::size_t index() const { return index_; }
  double eigenvalue() const { return eigenvalue_; }
  /// k on the circle, l on the sphere.
  int group() const { return degree_; }
  int order() const { return order_; }

  double value(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return value(x); }

 private:
  ManifoldKind kind_;
  std::size_t index_;
  int degree_;
  int order_;  // circle: 0 const, +1 cos, -1 sin; sphere: m
  double eigenvalue_;
  double norm_;
};

/// Largest eigenpair table size any routine here will build.
inline constexpr std::size_t kMaxContinuumEigenpairs = 1024;

std::vector<ContinuumEigenpair> continuum_eigenpairs(const ManifoldModel& manifold,
                                                     std::size_t count);

/// Evaluates the first out.size() eigenfunctions at x in one pass using
/// recurrences. Matches ContinuumEigenpair::value to rounding.
void basis_values(ManifoldKind kind, std::span<const double> x, std::span<double> out);

/// f = sum_i alpha_i phi_i, i = 0..kappa.
struct BandlimitedSignal {
  std::vector<double> coefficients;

  std::size_t bandwidth() const {
    return coefficients.empty() ? 0 : coefficients.size() - 1;
  }
};

/// P_n f: the signal evaluated at each sample point.
std::vector<double> evaluate_signal(const BandlimitedSignal& f, const ManifoldModel& manifold,
                                    const PointCloud& points);
std::vector<double> evaluate_signal(const BandlimitedSignal& f,
                                    std::span<const ContinuumEigenpair> table,
                                    const PointCloud& points);

/// Projection of one continuum eigenfunction onto the sample points.
std::vector<double> project(const ContinuumEigenpair& phi, const PointCloud& points);

}  // namespace mnn
