#include "mnn/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace mnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_point(std::span<const double> x, std::size_t dim) {
  if (x.size() < dim) throw std::invalid_argument("point has too few coordinates");
}

}  // namespace

std::string_view to_string(ManifoldKind kind) {
  return kind == ManifoldKind::circle ? "circle" : "sphere2";
}

ManifoldKind manifold_kind_from_string(std::string_view name) {
  if (name == "circle") return ManifoldKind::circle;
  if (name == "sphere2" || name == "sphere") return ManifoldKind::sphere2;
  throw std::invalid_argument("unknown manifold '" + std::string(name) + "'");
}

double ManifoldModel::volume() const {
  return kind_ == ManifoldKind::circle ? kTwoPi : 4.0 * std::numbers::pi;
}

PointCloud::PointCloud(ManifoldKind kind, std::size_t ambient_dim, std::vector<double> coords,
                       std::uint64_t seed)
    : kind_(kind), dim_(ambient_dim), n_(0), coords_(std::move(coords)), seed_(seed) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) {
    throw std::invalid_argument("coordinate buffer is not a multiple of the ambient dimension");
  }
  n_ = coords_.size() / dim_;
}

PointCloud sample_uniform(const ManifoldModel& manifold, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_uniform: n must be at least 1");
  const auto dim = static_cast<std::size_t>(manifold.ambient_dim());
  std::vector<double> coords(n * dim);
  std::mt19937_64 rng(seed);

  if (manifold.kind() == ManifoldKind::circle) {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = angle(rng);
      coords[2 * i] = std::cos(theta);
      coords[2 * i + 1] = std::sin(theta);
    }
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      double g[3];
      double r = 0.0;
      do {
        g[0] = gauss(rng);
        g[1] = gauss(rng);
        g[2] = gauss(rng);
        r = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      } while (r < 1e-300);
      for (int k = 0; k < 3; ++k) coords[3 * i + k] = g[k] / r;
    }
  }
  return PointCloud(manifold.kind(), dim, std::move(coords), seed);
}

ContinuumEigenpair::ContinuumEigenpair(ManifoldKind kind, std::size_t index)
    : kind_(kind), index_(index) {
  if (kind == ManifoldKind::circle) {
    degree_ = static_cast<int>((index + 1) / 2);
    order_ = index == 0 ? 0 : (index % 2 == 1 ? 1 : -1);
    eigenvalue_ = static_cast<double>(degree_) * degree_;
    norm_ = index == 0 ? 1.0 : std::numbers::sqrt2;
  } else {
    const int l = static_cast<int>(std::sqrt(static_cast<double>(index)));
    // guard against sqrt rounding at perfect squares
    degree_ = (static_cast<std::size_t>(l + 1) * (l + 1) <= index) ? l + 1 : l;
    order_ = static_cast<int>(index) - degree_ * degree_ - degree_;
    eigenvalue_ = static_cast<double>(degree_) * (degree_ + 1);
    const int m = std::abs(order_);
    const double ratio = std::exp(std::lgamma(degree_ - m + 1.0) - std::lgamma(degree_ + m + 1.0));
    norm_ = std::sqrt((2.0 * degree_ + 1.0) * ratio) * (m == 0 ? 1.0 : std::numbers::sqrt2);
  }
}

double ContinuumEigenpair::value(std::span<const double> x) const {
  if (kind_ == ManifoldKind::circle) {
    check_point(x, 2);
    if (order_ == 0) return 1.0;
    const double theta = std::atan2(x[1], x[0]);
    return norm_ * (order_ > 0 ? std::cos(degree_ * theta) : std::sin(degree_ * theta));
  }
  check_point(x, 3);
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  const double z = std::clamp(x[2] / r, -1.0, 1.0);
  const int m = std::abs(order_);
  const double legendre =
      std::assoc_legendre(static_cast<unsigned>(degree_), static_cast<unsigned>(m), z);
  if (m == 0) return norm_ * legendre;
  const double phi = std::atan2(x[1], x[0]);
  return norm_ * legendre * (order_ > 0 ? std::cos(m * phi) : std::sin(m * phi));
}

std::vector<ContinuumEigenpair> continuum_eigenpairs(const ManifoldModel& manifold,
                                                     std::size_t count) {
  if (count == 0) throw std::invalid_argument("continuum_eigenpairs: count must be >= 1");
  if (count > kMaxContinuumEigenpairs) {
    throw std::invalid_argument("continuum_eigenpairs: count exceeds the eigenpair table (" +
                                std::to_string(kMaxContinuumEigenpairs) + ")");
  }
  std::vector<ContinuumEigenpair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(manifold.kind(), i);
  return out;
}

void basis_values(ManifoldKind kind, std::span<const double> x, std::span<double> out) {
  const std::size_t count = out.size();
  if (count == 0) return;
  out[0] = 1.0;

  if (kind == ManifoldKind::circle) {
    check_point(x, 2);
    const double r = std::hypot(x[0], x[1]);
    const double c1 = x[0] / r, s1 = x[1] / r;
    double c = 1.0, s = 0.0;
    for (std::size_t k = 1; 2 * k - 1 < count; ++k) {
      const double cn = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c = cn;
      out[2 * k - 1] = std::numbers::sqrt2 * c;
      if (2 * k < count) out[2 * k] = std::numbers::sqrt2 * s;
    }
    return;
  }

  check_point(x, 3);
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  const double z = std::clamp(x[2] / r, -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = std::atan2(x[1], x[0]);

  int lmax = 0;
  while (static_cast<std::size_t>(lmax + 1) * (lmax + 1) < count) ++lmax;

  // Q(l, m) = sqrt((2l+1)(l-m)!/(l+m)!) P_l^m(z), built column by column in m.
  std::vector<double> col(lmax + 1);
  double qmm = 1.0;
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) qmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    col.assign(lmax + 1, 0.0);
    col[m] = qmm;
    if (m + 1 <= lmax) col[m + 1] = std::sqrt(2.0 * m + 3.0) * z * qmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double l2 = static_cast<double>(l) * l, m2 = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double lm1 = l - 1.0;
      const double b = std::sqrt((lm1 * lm1 - m2) / (4.0 * lm1 * lm1 - 1.0));
      col[l] = a * (z * col[l - 1] - b * col[l - 2]);
    }
    const double cm = std::cos(m * phi), sm = std::sin(m * phi);
    for (int l = m; l <= lmax; ++l) {
      const auto base = static_cast<std::size_t>(l) * l + l;
      if (m == 0) {
        if (base < count) out[base] = col[l];
      } else {
        if (base + m < count) out[base + m] = std::numbers::sqrt2 * col[l] * cm;
        if (base - m < count) out[base - m] = std::numbers::sqrt2 * col[l] * sm;
      }
    }
  }
}

std::vector<double> evaluate_signal(const BandlimitedSignal& f,
                                    std::span<const ContinuumEigenpair> table,
                                    const PointCloud& points) {
  if (f.coefficients.size() > table.size()) {
    throw std::invalid_argument("evaluate_signal: bandwidth exceeds the eigenpair table");
  }
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t j = 0; j < points.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.coefficients.size(); ++i) {
      if (f.coefficients[i] != 0.0) acc += f.coefficients[i] * table[i].value(points.point(j));
    }
    out[j] = acc;
  }
  return out;
}

std::vector<double> evaluate_signal(const BandlimitedSignal& f, const ManifoldModel& manifold,
                                    const PointCloud& points) {
  if (points.manifold() != manifold.kind()) {
    throw std::invalid_argument("evaluate_signal: point cloud was sampled on another manifold");
  }
  const std::size_t count = f.coefficients.size();
  if (count > kMaxContinuumEigenpairs) {
    throw std::invalid_argument("evaluate_signal: bandwidth exceeds the eigenpair table");
  }
  std::vector<double> out(points.size(), 0.0);
  if (count == 0) return out;
  std::vector<double> basis(count);
  for (std::size_t j = 0; j < points.size(); ++j) {
    basis_values(manifold.kind(), points.point(j), basis);
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += f.coefficients[i] * basis[i];
    out[j] = acc;
  }
  return out;
}

std::vector<double> project(const ContinuumEigenpair& phi, const PointCloud& points) {
  std::vector<double> out(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) out[j] = phi.value(points.point(j));
  return out;
}

}  // namespace mnn
