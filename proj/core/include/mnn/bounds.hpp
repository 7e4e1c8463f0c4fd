#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mnn {

// Closed-form quantities of the convergence-rate bound. "log" is the natural
// logarithm throughout; the big-O constants are explicit parameters.

struct BoundInputs {
  std::vector<std::size_t> widths;  // F_0..F_L
  double lipschitz = 1.0;           // C; the bound uses max(C, 1)
  int intrinsic_dim = 2;
  std::size_t n = 2;
  double max_l2_norm = 1.0;         // max_{l,q} ||f_l^q||
  double max_sup_norm = 1.0;        // max_{l,q} ||f_l^q||_inf

  std::size_t depth() const { return widths.empty() ? 0 : widths.size() - 1; }
  double lipschitz_tilde() const { return lipschitz > 1.0 ? lipschitz : 1.0; }
};

/// 2 / (d + 6).
double theoretical_rate_exponent(int intrinsic_dim);

enum class FilterCountVariant {
  /// sum_{k=1}^{L} prod_{j=L-k}^{L} F_j
  network,
  /// sum_{k=1}^{L} prod_{j=L-k}^{L-1} F_j  (per output feature)
  per_feature,
};

/// widths = F_0..F_L.
std::size_t filter_count_factor(std::span<const std::size_t> widths, FilterCountVariant variant);

struct BigOConstants {
  double c1 = 1.0;  // L2-norm term
  double c2 = 1.0;  // sup-norm term
};

/// Per-layer error increment delta_n.
///   d >= 2: C~ c1 sqrt(ln n)/n^{2/(d+6)} max||f|| + C~ c2 (ln n)^{3/4}/n^{1/4+2/(d+6)} max||f||_inf
///   d = 1:  C~ c1 sqrt(ln n)/n^{2/7}     max||f|| + C~ c2 sqrt(ln n)/n^{1/2}         max||f||_inf
double delta_n(const BoundInputs& inputs, const BigOConstants& constants = {});

/// eps_l = F_{l-1} (eps_{l-1} + delta), l = 1..L. Returns eps_1..eps_L.
std::vector<double> error_recurrence(double delta, double eps0, std::span<const std::size_t> widths);

/// delta * sum_{k=1}^{l} prod_{j=l-k}^{l-1} F_j: the recurrence unrolled with eps_0 = 0.
double error_closed_form(double delta, std::span<const std::size_t> widths, std::size_t layer);

/// sqrt(18 ln n / n) * sup_fg.
double hoeffding_bound(std::size_t n, double sup_fg);

/// Full bound shape: delta_n * filter_count_factor(network).
double network_bound(const BoundInputs& inputs, const BigOConstants& constants = {});

}  // namespace mnn
