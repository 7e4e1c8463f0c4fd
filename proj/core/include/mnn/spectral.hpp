#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mnn/graph.hpp"
#include "mnn/manifolds.hpp"

namespace mnn {

/// Vector on the sample points, measured in the G_n inner product
/// <x, y> = (1/n) sum_i x_i y_i.
using GnVector = std::vector<double>;

double gn_inner(std::span<const double> x, std::span<const double> y);
double gn_norm(std::span<const double> x);

/// Leading eigenpairs of a graph Laplacian. Column i of `vectors` is phi_i^n,
/// normalized so that ||phi_i^n||_{G_n} = 1, i.e. its Euclidean norm is sqrt(n).
struct EigenSystem {
  Eigen::VectorXd values;     // ascending
  Eigen::MatrixXd vectors;    // n x K
  Eigen::VectorXd residuals;  // ||L phi - lambda phi||_{G_n}
  std::size_t iterations = 0;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  std::size_t dimension() const { return static_cast<std::size_t>(vectors.rows()); }
  GnVector vector(std::size_t i) const;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals, std::size_t iterations)
      : std::runtime_error(what), residuals_(std::move(residuals)), iterations_(iterations) {}

  const std::vector<double>& residuals() const { return residuals_; }
  std::size_t iterations() const { return iterations_; }

 private:
  std::vector<double> residuals_;
  std::size_t iterations_;
};

struct LanczosOptions {
  /// Converged when every residual <= tol * max(lambda_{K-1}, 1).
  double tol = 1e-8;
  /// Seeds the start vector.
  std::uint64_t seed = 0;
  /// Krylov dimension cap; 0 means max(40 K, 200), clipped to n.
  std::size_t max_iterations = 0;
};

/// K algebraically smallest eigenpairs via Lanczos with full
/// reorthogonalization on the flipped operator sigma I - L, sigma being the
/// Gershgorin bound. When 4K >= n the problem is solved densely instead.
/// Throws ConvergenceError if the residuals do not reach tolerance.
EigenSystem smallest_eigenpairs(const LaplacianOperator& laplacian, std::size_t count,
                                const LanczosOptions& options = {});

/// Full dense symmetric eigendecomposition, truncated to the first `count`
/// pairs. Used as an oracle and for small n.
EigenSystem dense_eigenpairs(const Eigen::MatrixXd& matrix, std::size_t count);
EigenSystem dense_eigenpairs(const LaplacianOperator& laplacian, std::size_t count);

/// Group ids for a sorted eigenvalue list: consecutive values whose gap is
/// below rel_gap * max(1, lambda) share a group.
std::vector<int> group_by_gap(std::span<const double> values, double rel_gap = 1e-3);

/// Multiplicity group of each continuum eigenpair.
std::vector<int> continuum_groups(std::span<const ContinuumEigenpair> table);

/// n x K matrix whose column i is P_n phi_i.
Eigen::MatrixXd project_eigenfunctions(std::span<const ContinuumEigenpair> table,
                                       const PointCloud& points);

/// Rotates the discrete eigenvectors inside each group by the orthogonal
/// Procrustes solution against the projected continuum eigenfunctions. For
/// a singleton group this is a sign flip making <phi^n, P_n phi>_{G_n} >= 0.
/// Eigenvalues are returned unchanged.
EigenSystem align_to_continuum(const EigenSystem& discrete, const Eigen::MatrixXd& projected,
                               std::span<const int> groups);

struct EigenErrors {
  std::vector<double> eigenvalue_error;  // |lambda_i - lambda_i^n|
  std::vector<double> vector_error;      // ||P_n phi_i - phi_i^n||_{G_n}
  std::vector<int> group;                // continuum group per index
  /// sqrt of the summed squared vector errors, one entry per distinct group,
  /// in order of first appearance.
  std::vector<double> group_vector_error;
};

EigenErrors eigen_errors(const EigenSystem& aligned, std::span<const ContinuumEigenpair> table,
                         const PointCloud& points);

/// Largest principal angle (radians) between the column spans of a and b.
double max_subspace_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

using ScalarField = std::function<double(std::span<const double>)>;

struct HoeffdingReport {
  double violation_rate = 0.0;
  double bound = 0.0;
  double sup_fg = 0.0;
  double exact_inner = 0.0;
  double max_deviation = 0.0;
  std::size_t trials = 0;
};

/// Fraction of trials where |<P_n f, P_n g>_{G_n} - <f, g>| exceeds
/// sqrt(18 ln n / n) ||fg||_inf. The exact inner product and the sup norm
/// come from the manifold's default quadrature nodes.
HoeffdingReport hoeffding_check(const ScalarField& f, const ScalarField& g,
                                const ManifoldModel& manifold, std::size_t n,
                                std::size_t trials, std::uint64_t seed);

}  // namespace mnn
