#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mnn/manifolds.hpp"

namespace mnn {

enum class KernelKind {
  /// w_ij = (1/n) (t (4 pi t)^{d/2})^{-1} exp(-|xi-xj|^2 / 4t),  L = c (D - A)
  heat,
  /// a_ij = t^{-d/2} exp(-|xi-xj|^2 / t),  L = c (nt)^{-1} (D - A)
  gaussian,
};

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

struct KernelScheme {
  KernelKind kind = KernelKind::gaussian;
  int intrinsic_dim = 2;
  double bandwidth = 0.1;    // t
  double calibration = 1.0;  // multiplier on L so its spectrum targets Laplace-Beltrami

  void validate() const;
};

/// t = c * n^{-2/(d+6)}.
double scale_parameter(std::size_t n, int intrinsic_dim, double c);

/// Multiplier that makes the scheme's limit operator the Laplace-Beltrami
/// operator on a manifold of the given volume sampled uniformly.
///   heat:     vol(M)
///   gaussian: 4 vol(M) / pi^{d/2}
double calibration_constant(KernelKind kind, int intrinsic_dim, double volume);

enum class StorageMode { automatic, cached_dense, on_the_fly };

struct LaplacianOptions {
  StorageMode storage = StorageMode::automatic;
  /// Dense cache is used for n up to this size under StorageMode::automatic.
  std::size_t dense_limit = 8192;
  /// Kernel values exp(-r^2/s) below this are treated as zero. 0 disables it.
  double kernel_cutoff = 0.0;
};

/// Matrix-free graph Laplacian L = scale * (D - K), where K holds the raw
/// kernel values exp(-r^2/s) rounded to float32 and scale folds in the
/// scheme prefactors and calibration. The rounding is part of the operator,
/// so dense and on-the-fly storage give the same matrix.
class LaplacianOperator {
 public:
  std::size_t size() const { return n_; }
  const KernelScheme& scheme() const { return scheme_; }
  StorageMode storage() const { return storage_; }

  /// Scaled off-diagonal adjacency entry as written in the kernel formulas
  /// (without the calibration or the outer 1/(nt) of the gaussian scheme).
  double adjacency(std::size_t i, std::size_t j) const;
  /// Matrix entry L_ij.
  double entry(std::size_t i, std::size_t j) const;
  /// Raw degree sum_j k_ij of the stored kernel.
  double kernel_degree(std::size_t i) const { return degrees_[i]; }
  /// Factor s with L = s (D - K).
  double operator_scale() const { return scale_; }
  /// Gershgorin upper bound on the spectrum: 2 * scale * max degree.
  double spectral_upper_bound() const;

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> matvec(std::span<const double> x) const;

  /// Materialize L as a dense double matrix. O(n^2) memory.
  Eigen::MatrixXd to_dense() const;

 private:
  friend LaplacianOperator build_laplacian(const PointCloud&, const KernelScheme&,
                                           const LaplacianOptions&);
  LaplacianOperator() = default;

  float kernel(std::size_t i, std::size_t j) const;
  void apply_dense(std::span<const double> x, std::span<double> y) const;
  void apply_on_the_fly(std::span<const double> x, std::span<double> y) const;

  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  KernelScheme scheme_;
  StorageMode storage_ = StorageMode::cached_dense;
  double exponent_scale_ = 1.0;   // s in exp(-r^2/s)
  double weight_prefactor_ = 1.0; // adjacency = prefactor * kernel
  double scale_ = 1.0;
  float cutoff_ = 0.0f;
  std::shared_ptr<const std::vector<double>> coords_;
  std::vector<float> dense_;      // n*n row-major, zero diagonal
  std::vector<double> degrees_;
};

LaplacianOperator build_laplacian(const PointCloud& points, const KernelScheme& scheme,
                                  const LaplacianOptions& options = {});

}  // namespace mnn
