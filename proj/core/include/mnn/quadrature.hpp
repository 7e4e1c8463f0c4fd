#pragma once

#include <cstddef>
#include <vector>

#include "mnn/manifolds.hpp"

namespace mnn {

/// Equal-or-weighted node rule for integrals against the normalized measure
/// dV/vol(M); weights sum to one.
struct QuadratureRule {
  PointCloud nodes;
  std::vector<double> weights;
};

inline constexpr std::size_t kCircleQuadratureNodes = std::size_t{1} << 17;
inline constexpr std::size_t kSphereQuadratureNodes = 200000;

/// Trapezoid rule on M equispaced angles.
QuadratureRule circle_trapezoid(std::size_t nodes);
/// Spherical Fibonacci lattice, equal weights.
QuadratureRule sphere_fibonacci(std::size_t nodes);
/// Default rule for the manifold (2^17 trapezoid / 2e5 Fibonacci), or with an
/// explicit node count when nodes != 0.
QuadratureRule default_quadrature(const ManifoldModel& manifold, std::size_t nodes = 0);

}  // namespace mnn
