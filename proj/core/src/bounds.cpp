#include "mnn/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace mnn {

double theoretical_rate_exponent(int intrinsic_dim) {
  if (intrinsic_dim < 1) throw std::invalid_argument("intrinsic dimension must be >= 1");
  return 2.0 / (intrinsic_dim + 6.0);
}

std::size_t filter_count_factor(std::span<const std::size_t> widths, FilterCountVariant variant) {
  if (widths.size() < 2) throw std::invalid_argument("filter_count_factor: need F_0..F_L with L >= 1");
  for (std::size_t f : widths) {
    if (f == 0) throw std::invalid_argument("filter_count_factor: widths must be positive");
  }
  const std::size_t depth = widths.size() - 1;
  const std::size_t last = variant == FilterCountVariant::network ? depth : depth - 1;
  std::size_t total = 0;
  for (std::size_t k = 1; k <= depth; ++k) {
    std::size_t prod = 1;
    for (std::size_t j = depth - k; j <= last; ++j) prod *= widths[j];
    total += prod;
  }
  return total;
}

double delta_n(const BoundInputs& in, const BigOConstants& constants) {
  if (in.n < 2) throw std::invalid_argument("delta_n: n must be >= 2");
  if (in.intrinsic_dim < 1) throw std::invalid_argument("delta_n: d must be >= 1");
  const double n = static_cast<double>(in.n);
  const double logn = std::log(n);
  const double ct = in.lipschitz_tilde();
  const double rate = theoretical_rate_exponent(in.intrinsic_dim);
  if (in.intrinsic_dim >= 2) {
    return ct * constants.c1 * std::sqrt(logn) / std::pow(n, rate) * in.max_l2_norm +
           ct * constants.c2 * std::pow(logn, 0.75) / std::pow(n, 0.25 + rate) * in.max_sup_norm;
  }
  return ct * constants.c1 * std::sqrt(logn) / std::pow(n, 2.0 / 7.0) * in.max_l2_norm +
         ct * constants.c2 * std::sqrt(logn) / std::sqrt(n) * in.max_sup_norm;
}

std::vector<double> error_recurrence(double delta, double eps0, std::span<const std::size_t> widths) {
  if (delta < 0.0 || eps0 < 0.0) throw std::invalid_argument("error_recurrence: negative input");
  if (widths.size() < 2) throw std::invalid_argument("error_recurrence: need F_0..F_L with L >= 1");
  std::vector<double> eps;
  eps.reserve(widths.size() - 1);
  double prev = eps0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    prev = static_cast<double>(widths[l - 1]) * (prev + delta);
    eps.push_back(prev);
  }
  return eps;
}

double error_closed_form(double delta, std::span<const std::size_t> widths, std::size_t layer) {
  if (layer == 0 || layer >= widths.size()) {
    throw std::invalid_argument("error_closed_form: layer must be in 1..L");
  }
  double total = 0.0;
  for (std::size_t k = 1; k <= layer; ++k) {
    double prod = 1.0;
    for (std::size_t j = layer - k; j <= layer - 1; ++j) prod *= static_cast<double>(widths[j]);
    total += prod;
  }
  return delta * total;
}

double hoeffding_bound(std::size_t n, double sup_fg) {
  if (n < 2) throw std::invalid_argument("hoeffding_bound: n must be >= 2");
  if (sup_fg < 0.0) throw std::invalid_argument("hoeffding_bound: sup norm must be >= 0");
  const double nd = static_cast<double>(n);
  return std::sqrt(18.0 * std::log(nd) / nd) * sup_fg;
}

double network_bound(const BoundInputs& inputs, const BigOConstants& constants) {
  return delta_n(inputs, constants) *
         static_cast<double>(filter_count_factor(inputs.widths, FilterCountVariant::network));
}

}  // namespace mnn
