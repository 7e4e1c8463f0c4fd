#include "mnn/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mnn {

namespace {

std::vector<double> uniform_grid(double lambda_max, std::size_t size) {
  if (!(lambda_max > 0.0)) throw std::invalid_argument("filter grid: lambda_max must be positive");
  std::vector<double> grid(size);
  for (std::size_t k = 0; k < size; ++k) {
    grid[k] = lambda_max * static_cast<double>(k) / static_cast<double>(size - 1);
  }
  return grid;
}

}  // namespace

SpectralFilter::SpectralFilter(std::string family, Response response, double declared_sup,
                               double declared_lipschitz)
    : family_(std::move(family)),
      response_(std::move(response)),
      declared_sup_(declared_sup),
      declared_lipschitz_(declared_lipschitz) {
  if (!response_) throw std::invalid_argument("SpectralFilter: empty response");
}

SpectralFilter SpectralFilter::exponential(double rate, double scale) {
  if (!(rate >= 0.0)) throw std::invalid_argument("exponential filter: rate must be >= 0");
  return SpectralFilter(
      "exponential", [rate, scale](double l) { return scale * std::exp(-rate * l); },
      std::abs(scale), std::abs(scale) * rate);
}

SpectralFilter SpectralFilter::constant(double value) {
  return SpectralFilter("constant", [value](double) { return value; }, std::abs(value), 0.0);
}

SpectralFilter SpectralFilter::tent(double center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("tent filter: width must be positive");
  return SpectralFilter(
      "tent",
      [center, width](double l) { return std::max(0.0, 1.0 - std::abs(l - center) / width); },
      1.0, 1.0 / width);
}

SpectralFilter SpectralFilter::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty() || coefficients.size() > 4) {
    throw std::invalid_argument("polynomial filter: need 1 to 4 coefficients");
  }
  // a non-constant polynomial has no global Lipschitz bound before clipping;
  // declare it unknown (infinity)
  const double lipschitz = coefficients.size() <= 1 ? 0.0 : HUGE_VAL;
  return SpectralFilter(
      "polynomial",
      [c = std::move(coefficients)](double l) {
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * l + *it;
        return std::clamp(acc, -1.0, 1.0);
      },
      1.0, lipschitz);
}

double SpectralFilter::evaluate(double lambda) const {
  if (lambda < 0.0) throw std::invalid_argument("filter evaluated at a negative eigenvalue");
  return response_(lambda);
}

NonAmplifyingCheck check_nonamplifying(const SpectralFilter& h, double lambda_max,
                                       std::size_t grid_size) {
  if (grid_size < 2) throw std::invalid_argument("check_nonamplifying: grid_size must be >= 2");
  NonAmplifyingCheck out;
  for (double l : uniform_grid(lambda_max, grid_size)) {
    out.measured_sup = std::max(out.measured_sup, std::abs(h.evaluate(l)));
  }
  out.non_amplifying = out.measured_sup <= 1.0 + 1e-12;
  return out;
}

double estimate_lipschitz(const SpectralFilter& h, double lambda_max, std::size_t grid_size) {
  if (grid_size < 3) throw std::invalid_argument("estimate_lipschitz: grid_size must be >= 3");
  const auto grid = uniform_grid(lambda_max, grid_size);
  double best = 0.0;
  double prev = h.evaluate(grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = h.evaluate(grid[k]);
    best = std::max(best, std::abs(cur - prev) / (grid[k] - grid[k - 1]));
    prev = cur;
  }
  return best;
}

}  // namespace mnn
