#include "mnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mnn {

std::string_view to_string(KernelKind kind) {
  return kind == KernelKind::heat ? "heat" : "gaussian";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "heat") return KernelKind::heat;
  if (name == "gaussian") return KernelKind::gaussian;
  throw std::invalid_argument("unknown kernel scheme '" + std::string(name) + "'");
}

void KernelScheme::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw std::invalid_argument("kernel bandwidth t must be positive and finite");
  }
  if (!(calibration > 0.0) || !std::isfinite(calibration)) {
    throw std::invalid_argument("kernel calibration must be positive and finite");
  }
  if (intrinsic_dim < 1) throw std::invalid_argument("intrinsic dimension must be >= 1");
}

double scale_parameter(std::size_t n, int intrinsic_dim, double c) {
  if (n < 2) throw std::invalid_argument("scale_parameter: n must be >= 2");
  if (!(c > 0.0)) throw std::invalid_argument("scale_parameter: c must be positive");
  if (intrinsic_dim < 1) throw std::invalid_argument("scale_parameter: d must be >= 1");
  return c * std::pow(static_cast<double>(n), -2.0 / (intrinsic_dim + 6.0));
}

double calibration_constant(KernelKind kind, int intrinsic_dim, double volume) {
  if (intrinsic_dim != 1 && intrinsic_dim != 2) {
    throw std::invalid_argument("calibration_constant: only d = 1 or d = 2 is supported");
  }
  if (!(volume > 0.0)) throw std::invalid_argument("calibration_constant: volume must be positive");
  if (kind == KernelKind::heat) return volume;
  // zeroth moment of exp(-|h|^2/t) is (pi t)^{d/2}, second moment per axis
  // (pi t)^{d/2} t/2, and the Taylor remainder contributes another 1/2.
  return 4.0 * volume / std::pow(std::numbers::pi, intrinsic_dim / 2.0);
}

float LaplacianOperator::kernel(std::size_t i, std::size_t j) const {
  const double* xi = coords_->data() + i * dim_;
  const double* xj = coords_->data() + j * dim_;
  double r2 = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) {
    const double d = xi[k] - xj[k];
    r2 += d * d;
  }
  const auto k = static_cast<float>(std::exp(-r2 / exponent_scale_));
  return k < cutoff_ ? 0.0f : k;
}

double LaplacianOperator::adjacency(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("adjacency index out of range");
  if (i == j) return 0.0;
  const float k = storage_ == StorageMode::cached_dense ? dense_[i * n_ + j] : kernel(i, j);
  return weight_prefactor_ * static_cast<double>(k);
}

double LaplacianOperator::entry(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("entry index out of range");
  if (i == j) return scale_ * degrees_[i];
  const float k = storage_ == StorageMode::cached_dense ? dense_[i * n_ + j] : kernel(i, j);
  return -scale_ * static_cast<double>(k);
}

double LaplacianOperator::spectral_upper_bound() const {
  const double dmax = degrees_.empty() ? 0.0 : *std::max_element(degrees_.begin(), degrees_.end());
  return 2.0 * scale_ * dmax;
}

void LaplacianOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) {
    throw std::invalid_argument("matvec: vector length does not match operator size");
  }
  if (storage_ == StorageMode::cached_dense) {
    apply_dense(x, y);
  } else {
    apply_on_the_fly(x, y);
  }
}

std::vector<double> LaplacianOperator::matvec(std::span<const double> x) const {
  std::vector<double> y(n_);
  apply(x, y);
  return y;
}

// Row sums use four interleaved accumulators combined in a fixed order, so
// results do not depend on the thread count.
void LaplacianOperator::apply_dense(std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::ptrdiff_t>(n_);
  const float* k = dense_.data();
  const double* xv = x.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const float* row = k + i * n;
    const double xi = xv[i];
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::ptrdiff_t j = 0;
    for (; j + 3 < n; j += 4) {
      a0 += static_cast<double>(row[j]) * (xi - xv[j]);
      a1 += static_cast<double>(row[j + 1]) * (xi - xv[j + 1]);
      a2 += static_cast<double>(row[j + 2]) * (xi - xv[j + 2]);
      a3 += static_cast<double>(row[j + 3]) * (xi - xv[j + 3]);
    }
    for (; j < n; ++j) a0 += static_cast<double>(row[j]) * (xi - xv[j]);
    y[i] = scale_ * ((a0 + a1) + (a2 + a3));
  }
}

void LaplacianOperator::apply_on_the_fly(std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::ptrdiff_t>(n_);
  const double* xv = x.data();
  constexpr std::ptrdiff_t kTile = 256;
#pragma omp parallel
  {
    float buf[kTile];
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double xi = xv[i];
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      for (std::ptrdiff_t j0 = 0; j0 < n; j0 += kTile) {
        const std::ptrdiff_t len = std::min(kTile, n - j0);
        for (std::ptrdiff_t jj = 0; jj < len; ++jj) {
          const std::ptrdiff_t j = j0 + jj;
          buf[jj] = j == i ? 0.0f : kernel(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
        // kTile is a multiple of 4, so accumulator lanes match the dense path
        std::ptrdiff_t jj = 0;
        for (; jj + 3 < len; jj += 4) {
          const std::ptrdiff_t j = j0 + jj;
          a0 += static_cast<double>(buf[jj]) * (xi - xv[j]);
          a1 += static_cast<double>(buf[jj + 1]) * (xi - xv[j + 1]);
          a2 += static_cast<double>(buf[jj + 2]) * (xi - xv[j + 2]);
          a3 += static_cast<double>(buf[jj + 3]) * (xi - xv[j + 3]);
        }
        // only the final tile can have a ragged tail; it folds into a0
        for (; jj < len; ++jj) a0 += static_cast<double>(buf[jj]) * (xi - xv[j0 + jj]);
      }
      y[i] = scale_ * ((a0 + a1) + (a2 + a3));
    }
  }
}

Eigen::MatrixXd LaplacianOperator::to_dense() const {
  Eigen::MatrixXd m(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) m(i, j) = entry(i, j);
  }
  return m;
}

LaplacianOperator build_laplacian(const PointCloud& points, const KernelScheme& scheme,
                                  const LaplacianOptions& options) {
  scheme.validate();
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("build_laplacian: need at least 2 points");
  for (double c : points.coords()) {
    if (!std::isfinite(c)) throw std::invalid_argument("build_laplacian: non-finite coordinate");
  }
  if (options.kernel_cutoff < 0.0) {
    throw std::invalid_argument("build_laplacian: kernel cutoff must be non-negative");
  }

  LaplacianOperator op;
  op.n_ = n;
  op.dim_ = points.ambient_dim();
  op.scheme_ = scheme;
  op.cutoff_ = static_cast<float>(options.kernel_cutoff);
  op.coords_ = std::make_shared<const std::vector<double>>(points.coords().begin(),
                                                           points.coords().end());

  const double t = scheme.bandwidth;
  const double d = scheme.intrinsic_dim;
  const double nd = static_cast<double>(n);
  if (scheme.kind == KernelKind::heat) {
    op.exponent_scale_ = 4.0 * t;
    op.weight_prefactor_ = 1.0 / (nd * t * std::pow(4.0 * std::numbers::pi * t, d / 2.0));
    op.scale_ = scheme.calibration * op.weight_prefactor_;
  } else {
    op.exponent_scale_ = t;
    op.weight_prefactor_ = std::pow(t, -d / 2.0);
    op.scale_ = scheme.calibration * op.weight_prefactor_ / (nd * t);
  }

  switch (options.storage) {
    case StorageMode::automatic:
      op.storage_ = n <= options.dense_limit ? StorageMode::cached_dense : StorageMode::on_the_fly;
      break;
    default:
      op.storage_ = options.storage;
  }

  const auto sn = static_cast<std::ptrdiff_t>(n);
  op.degrees_.assign(n, 0.0);
  if (op.storage_ == StorageMode::cached_dense) {
    op.dense_.assign(n * n, 0.0f);
    float* k = op.dense_.data();
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      for (std::ptrdiff_t j = i + 1; j < sn; ++j) {
        const float v = op.kernel(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        k[i * sn + j] = v;
        k[j * sn + i] = v;
      }
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      double acc = 0.0;
      for (std::ptrdiff_t j = 0; j < sn; ++j) acc += static_cast<double>(k[i * sn + j]);
      op.degrees_[i] = acc;
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      double acc = 0.0;
      for (std::ptrdiff_t j = 0; j < sn; ++j) {
        if (j != i) {
          acc += static_cast<double>(op.kernel(static_cast<std::size_t>(i),
                                               static_cast<std::size_t>(j)));
        }
      }
      op.degrees_[i] = acc;
    }
  }
  return op;
}

}  // namespace mnn
