#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mnn {

/// Frequency response h^(lambda) on [0, inf) with declared metadata.
class SpectralFilter {
 public:
  using Response = std::function<double(double)>;

  SpectralFilter(std::string family, Response response, double declared_sup,
                 double declared_lipschitz);

  /// scale * exp(-rate * lambda).
  static SpectralFilter exponential(double rate = 1.0, double scale = 1.0);
  static SpectralFilter constant(double value);
  static SpectralFilter identity() { return constant(1.0); }
  /// max(0, 1 - |lambda - center| / width).
  static SpectralFilter tent(double center, double width = 1.0);
  /// c0 + c1 lambda + c2 lambda^2 + c3 lambda^3 clipped to [-1, 1].
  static SpectralFilter polynomial(std::vector<double> coefficients);

  /// Throws std::invalid_argument for lambda < 0.
  double evaluate(double lambda) const;
  double operator()(double lambda) const { return evaluate(lambda); }

  const std::string& family() const { return family_; }
  double declared_sup() const { return declared_sup_; }
  double declared_lipschitz() const { return declared_lipschitz_; }

 private:
  std::string family_;
  Response response_;
  double declared_sup_;
  double declared_lipschitz_;
};

struct NonAmplifyingCheck {
  bool non_amplifying = false;
  double measured_sup = 0.0;
};

/// Grid check of sup |h^| <= 1 (+1e-12) on [0, lambda_max].
NonAmplifyingCheck check_nonamplifying(const SpectralFilter& h, double lambda_max,
                                       std::size_t grid_size);

/// Largest adjacent difference quotient on a uniform grid over [0, lambda_max];
/// a lower bound on the true Lipschitz constant.
double estimate_lipschitz(const SpectralFilter& h, double lambda_max, std::size_t grid_size);

}  // namespace mnn
