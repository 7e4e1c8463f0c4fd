#include "mnn/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mnn {

QuadratureRule circle_trapezoid(std::size_t nodes) {
  if (nodes < 2) throw std::invalid_argument("circle_trapezoid: need at least 2 nodes");
  std::vector<double> coords(2 * nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nodes);
    coords[2 * k] = std::cos(theta);
    coords[2 * k + 1] = std::sin(theta);
  }
  return {PointCloud(ManifoldKind::circle, 2, std::move(coords)),
          std::vector<double>(nodes, 1.0 / static_cast<double>(nodes))};
}

QuadratureRule sphere_fibonacci(std::size_t nodes) {
  if (nodes < 2) throw std::invalid_argument("sphere_fibonacci: need at least 2 nodes");
  std::vector<double> coords(3 * nodes);
  const double m = static_cast<double>(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double kd = static_cast<double>(k);
    const double z = 1.0 - (2.0 * kd + 1.0) / m;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    // golden-angle azimuth, reduced before the trig call to keep it accurate
    const double turns = kd / std::numbers::phi;
    const double phi = 2.0 * std::numbers::pi * (turns - std::floor(turns));
    coords[3 * k] = rho * std::cos(phi);
    coords[3 * k + 1] = rho * std::sin(phi);
    coords[3 * k + 2] = z;
  }
  return {PointCloud(ManifoldKind::sphere2, 3, std::move(coords)),
          std::vector<double>(nodes, 1.0 / m)};
}

QuadratureRule default_quadrature(const ManifoldModel& manifold, std::size_t nodes) {
  if (manifold.kind() == ManifoldKind::circle) {
    return circle_trapezoid(nodes == 0 ? kCircleQuadratureNodes : nodes);
  }
  return sphere_fibonacci(nodes == 0 ? kSphereQuadratureNodes : nodes);
}

}  // namespace mnn
