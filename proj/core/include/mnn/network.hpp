#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mnn/filters.hpp"
#include "mnn/manifolds.hpp"
#include "mnn/spectral.hpp"

namespace mnn {

enum class Nonlinearity { abs, relu, identity };

std::string_view to_string(Nonlinearity sigma);
Nonlinearity nonlinearity_from_string(std::string_view name);

inline double apply_nonlinearity(Nonlinearity sigma, double a) {
  switch (sigma) {
    case Nonlinearity::abs: return a < 0.0 ? -a : a;
    case Nonlinearity::relu: return a > 0.0 ? a : 0.0;
    case Nonlinearity::identity: break;
  }
  return a;
}

/// L-layer network: widths F_0..F_L and filters bank[l-1][p][q] mapping
/// input feature q of layer l-1 to output feature p of layer l.
struct NetworkSpec {
  std::vector<std::size_t> widths;
  std::vector<std::vector<std::vector<SpectralFilter>>> bank;
  Nonlinearity sigma = Nonlinearity::abs;

  /// Every (l, p, q) slot gets the same filter.
  static NetworkSpec uniform(std::vector<std::size_t> widths, const SpectralFilter& filter,
                             Nonlinearity sigma);

  std::size_t depth() const { return widths.empty() ? 0 : widths.size() - 1; }
  const SpectralFilter& filter(std::size_t layer, std::size_t p, std::size_t q) const {
    return bank[layer - 1][p][q];
  }
  /// Throws std::invalid_argument unless the bank holds exactly
  /// sum_l F_l F_{l-1} filters in the declared shape.
  void validate() const;
};

/// Per-feature signals on n points: column q is feature q.
struct FeatureField {
  Eigen::MatrixXd values;
  std::size_t layer = 0;

  std::size_t features() const { return static_cast<std::size_t>(values.cols()); }
  std::size_t points() const { return static_cast<std::size_t>(values.rows()); }
  GnVector feature(std::size_t q) const;
};

/// P_n f for each input feature.
FeatureField project_inputs(std::span<const BandlimitedSignal> inputs,
                            const ManifoldModel& manifold, const PointCloud& points);

/// sum_{i<K} h^(lambda_i^n) <x, phi_i^n>_{G_n} phi_i^n. Negative round-off in
/// lambda_i^n is clamped to zero before evaluating the filter.
GnVector filter_apply_discrete(const SpectralFilter& h, const EigenSystem& eig,
                               std::span<const double> x);

/// x_l^p = sigma(sum_q h_l^{pq}(L_n) x_{l-1}^q), l = 1..L.
FeatureField forward_discrete(const NetworkSpec& net, const EigenSystem& eig,
                              const FeatureField& input);

struct ContinuumOptions {
  /// Coefficients kept when re-expanding hidden layers (layers 1..L-1).
  std::size_t reexpansion_bandwidth = 64;
  /// 0 selects the manifold's default quadrature size.
  std::size_t quadrature_nodes = 0;
  /// Relative L2 truncation residual above which the warning flag is raised.
  double residual_threshold = 1e-2;
};

/// Continuum network on the analytic eigenbasis. Layer 1 is exact; deeper
/// layers re-expand sigma(...) on the eigenbasis by quadrature. The final
/// layer's pre-activation coefficients are kept so the output can be
/// evaluated exactly at any points.
class ContinuumNetwork {
 public:
  ContinuumNetwork(const NetworkSpec& net, const ManifoldModel& manifold,
                   std::vector<BandlimitedSignal> inputs, const ContinuumOptions& options = {});

  /// P_n Phi(H, L, f): the output features at the given points.
  FeatureField evaluate(const PointCloud& points) const;

  /// Largest relative truncation residual over re-expanded features (0 for L = 1).
  double quadrature_residual() const { return quadrature_residual_; }
  bool quadrature_warning() const { return quadrature_warning_; }
  /// max over l, q of ||f_l^q||_{L2} and ||f_l^q||_inf, l = 0..L (quadrature estimates).
  double max_l2_norm() const { return max_l2_; }
  double max_sup_norm() const { return max_sup_; }

 private:
  ManifoldModel manifold_;
  Nonlinearity sigma_;
  std::size_t depth_;
  std::vector<std::vector<double>> final_preactivation_;
  double quadrature_residual_ = 0.0;
  bool quadrature_warning_ = false;
  double max_l2_ = 0.0;
  double max_sup_ = 0.0;
};

FeatureField forward_continuum(const NetworkSpec& net, const ManifoldModel& manifold,
                               std::span<const BandlimitedSignal> inputs, const PointCloud& points,
                               const ContinuumOptions& options = {});

/// sum_q ||a_q - b_q||_{G_n}.
double mnn_error(const FeatureField& discrete, const FeatureField& continuum);

}  // namespace mnn
