#include "mnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "mnn/bounds.hpp"
#include "mnn/quadrature.hpp"
#include "mnn/seeding.hpp"

namespace mnn {

double gn_inner(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("gn_inner: length mismatch");
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc / static_cast<double>(x.size());
}

double gn_norm(std::span<const double> x) { return std::sqrt(gn_inner(x, x)); }

GnVector EigenSystem::vector(std::size_t i) const {
  const auto col = vectors.col(static_cast<Eigen::Index>(i));
  return GnVector(col.data(), col.data() + col.size());
}

namespace {

// Largest-magnitude entry positive; lowest index wins ties.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  v.cwiseAbs().maxCoeff(&best);
  if (v(best) < 0.0) v = -v;
}

Eigen::VectorXd apply(const LaplacianOperator& op, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  op.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
           std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
  return y;
}

Eigen::VectorXd random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  v.normalize();
  return v;
}

struct RitzCheck {
  bool converged = false;
  EigenSystem system;
};

// Ritz pairs for the `count` largest eigenvalues of the flipped tridiagonal,
// with explicit residuals against the unflipped operator.
RitzCheck ritz_pairs(const LaplacianOperator& op, const Eigen::MatrixXd& basis, Eigen::Index m,
                     const std::vector<double>& alpha, const std::vector<double>& beta,
                     double last_beta, double sigma, std::size_t count, double tol, bool force) {
  Eigen::VectorXd diag(m), sub(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index i = 0; i < m; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i + 1 < m; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

  const auto k = static_cast<Eigen::Index>(count);
  RitzCheck out;
  // cheap estimate first: |beta_m * s_{m-1,i}|
  if (!force) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      worst = std::max(worst, std::abs(last_beta * tri.eigenvectors()(m - 1, m - 1 - c)));
    }
    const double lambda_last = sigma - tri.eigenvalues()(m - k);
    if (worst > tol * std::max(1.0, lambda_last)) return out;
  }

  Eigen::MatrixXd s(m, k);
  for (Eigen::Index c = 0; c < k; ++c) s.col(c) = tri.eigenvectors().col(m - 1 - c);
  Eigen::MatrixXd u = basis.leftCols(m) * s;

  const double root_n = std::sqrt(static_cast<double>(op.size()));
  EigenSystem sys;
  sys.values.resize(k);
  sys.residuals.resize(k);
  sys.vectors.resize(u.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = u.col(c);
    v.normalize();
    const Eigen::VectorXd lv = apply(op, v);
    const double lambda = v.dot(lv);
    sys.values(c) = lambda;
    sys.residuals(c) = (lv - lambda * v).norm();
    fix_sign(v);
    sys.vectors.col(c) = root_n * v;
  }
  // Rayleigh quotients can reorder near-degenerate pairs
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) order[static_cast<std::size_t>(c)] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return sys.values(a) < sys.values(b); });
  EigenSystem sorted;
  sorted.values.resize(k);
  sorted.residuals.resize(k);
  sorted.vectors.resize(u.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    sorted.values(c) = sys.values(order[static_cast<std::size_t>(c)]);
    sorted.residuals(c) = sys.residuals(order[static_cast<std::size_t>(c)]);
    sorted.vectors.col(c) = sys.vectors.col(order[static_cast<std::size_t>(c)]);
  }
  sorted.iterations = static_cast<std::size_t>(m);

  const double threshold = tol * std::max(sorted.values(k - 1), 1.0);
  out.converged = (sorted.residuals.array() <= threshold).all();
  out.system = std::move(sorted);
  return out;
}

}  // namespace

EigenSystem dense_eigenpairs(const Eigen::MatrixXd& matrix, std::size_t count) {
  const auto n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("dense_eigenpairs: matrix must be square");
  if (count == 0 || static_cast<Eigen::Index>(count) > n) {
    throw std::invalid_argument("dense_eigenpairs: need 1 <= K <= n");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("dense eigensolver failed", {}, 0);
  }
  const auto k = static_cast<Eigen::Index>(count);
  const double root_n = std::sqrt(static_cast<double>(n));
  EigenSystem sys;
  sys.values = solver.eigenvalues().head(k);
  sys.vectors.resize(n, k);
  sys.residuals.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(c);
    sys.residuals(c) = (matrix * v - sys.values(c) * v).norm();
    fix_sign(v);
    sys.vectors.col(c) = root_n * v;
  }
  return sys;
}

EigenSystem dense_eigenpairs(const LaplacianOperator& laplacian, std::size_t count) {
  return dense_eigenpairs(laplacian.to_dense(), count);
}

EigenSystem smallest_eigenpairs(const LaplacianOperator& op, std::size_t count,
                                const LanczosOptions& options) {
  const std::size_t n = op.size();
  if (count == 0 || count > n) throw std::invalid_argument("smallest_eigenpairs: need 1 <= K <= n");
  if (!(options.tol > 0.0)) throw std::invalid_argument("smallest_eigenpairs: tol must be positive");
  if (4 * count >= n) return dense_eigenpairs(op, count);

  const std::size_t cap = std::min(
      n, options.max_iterations != 0 ? options.max_iterations : std::max<std::size_t>(40 * count, 200));
  const auto m_max = static_cast<Eigen::Index>(std::max(cap, count));
  const double sigma = op.spectral_upper_bound() * (1.0 + 1e-6) + 1e-300;
  const double breakdown = 1e-12 * std::max(sigma, 1.0);

  std::mt19937_64 rng(derive_seed({options.seed, 0x4c414e43u}));
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(n), m_max);
  basis.col(0) = random_unit(n, rng);
  std::vector<double> alpha, beta;
  alpha.reserve(static_cast<std::size_t>(m_max));
  beta.reserve(static_cast<std::size_t>(m_max));

  Eigen::Index next_check = static_cast<Eigen::Index>(count) + 10;
  RitzCheck last;
  for (Eigen::Index j = 0; j < m_max; ++j) {
    const Eigen::VectorXd v = basis.col(j);
    Eigen::VectorXd w = sigma * v - apply(op, v);
    if (j > 0) w -= beta.back() * basis.col(j - 1);
    double a = v.dot(w);
    w -= a * v;
    // full reorthogonalization, two classical Gram-Schmidt passes
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = basis.leftCols(j + 1).transpose() * w;
      w -= basis.leftCols(j + 1) * h;
      a += h(j);
    }
    alpha.push_back(a);
    double b = w.norm();
    const Eigen::Index m = j + 1;

    const bool exhausted = m == m_max;
    if (m >= static_cast<Eigen::Index>(count) && (m >= next_check || exhausted || b < breakdown)) {
      last = ritz_pairs(op, basis, m, alpha, beta, b, sigma, count, options.tol, exhausted);
      if (last.converged) return std::move(last.system);
      next_check = m + std::max<Eigen::Index>(5, m / 8);
    }
    if (exhausted) break;

    if (b < breakdown) {
      // invariant subspace: continue from a fresh direction orthogonal to the basis
      w = random_unit(n, rng);
      for (int pass = 0; pass < 2; ++pass) {
        w -= basis.leftCols(m) * (basis.leftCols(m).transpose() * w);
      }
      w.normalize();
      b = 0.0;
      beta.push_back(0.0);
      basis.col(m) = w;
    } else {
      beta.push_back(b);
      basis.col(m) = w / b;
    }
  }

  if (!last.system.values.size()) {
    last = ritz_pairs(op, basis, static_cast<Eigen::Index>(alpha.size()), alpha, beta, 0.0, sigma,
                      count, options.tol, true);
    if (last.converged) return std::move(last.system);
  }
  std::vector<double> residuals(last.system.residuals.data(),
                                last.system.residuals.data() + last.system.residuals.size());
  throw ConvergenceError("Lanczos did not converge in " + std::to_string(alpha.size()) +
                             " iterations",
                         std::move(residuals), alpha.size());
}

std::vector<int> group_by_gap(std::span<const double> values, double rel_gap) {
  std::vector<int> groups(values.size(), 0);
  int g = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] - values[i - 1] >= rel_gap * std::max(1.0, std::abs(values[i]))) ++g;
    groups[i] = g;
  }
  return groups;
}

std::vector<int> continuum_groups(std::span<const ContinuumEigenpair> table) {
  std::vector<int> groups;
  groups.reserve(table.size());
  for (const auto& p : table) groups.push_back(p.group());
  return groups;
}

Eigen::MatrixXd project_eigenfunctions(std::span<const ContinuumEigenpair> table,
                                       const PointCloud& points) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()),
                      static_cast<Eigen::Index>(table.size()));
  std::vector<double> basis(table.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    basis_values(points.manifold(), points.point(j), basis);
    for (std::size_t i = 0; i < table.size(); ++i) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = basis[i];
    }
  }
  return out;
}

EigenSystem align_to_continuum(const EigenSystem& discrete, const Eigen::MatrixXd& projected,
                               std::span<const int> groups) {
  const auto k = static_cast<Eigen::Index>(discrete.size());
  if (projected.cols() != k || groups.size() != discrete.size()) {
    throw std::invalid_argument("align_to_continuum: eigenpair, projection and group counts differ");
  }
  if (projected.rows() != discrete.vectors.rows()) {
    throw std::invalid_argument("align_to_continuum: projected vectors have the wrong length");
  }
  std::map<int, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < k; ++i) members[groups[static_cast<std::size_t>(i)]].push_back(i);

  EigenSystem out = discrete;
  const double n = static_cast<double>(discrete.vectors.rows());
  for (const auto& [id, idx] : members) {
    const auto g = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd phi(discrete.vectors.rows(), g), target(projected.rows(), g);
    for (Eigen::Index c = 0; c < g; ++c) {
      phi.col(c) = discrete.vectors.col(idx[static_cast<std::size_t>(c)]);
      target.col(c) = projected.col(idx[static_cast<std::size_t>(c)]);
    }
    const Eigen::MatrixXd cross = phi.transpose() * target / n;
    Eigen::MatrixXd rotation;
    if (g == 1) {
      rotation = Eigen::MatrixXd::Constant(1, 1, cross(0, 0) < 0.0 ? -1.0 : 1.0);
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
      rotation = svd.matrixU() * svd.matrixV().transpose();
    }
    const Eigen::MatrixXd rotated = phi * rotation;
    for (Eigen::Index c = 0; c < g; ++c) {
      out.vectors.col(idx[static_cast<std::size_t>(c)]) = rotated.col(c);
    }
  }
  return out;
}

EigenErrors eigen_errors(const EigenSystem& aligned, std::span<const ContinuumEigenpair> table,
                         const PointCloud& points) {
  if (aligned.dimension() != points.size()) {
    throw std::invalid_argument("eigen_errors: eigenvectors and points differ in length");
  }
  const std::size_t count = std::min(aligned.size(), table.size());
  const Eigen::MatrixXd projected = project_eigenfunctions(table.first(count), points);
  const double n = static_cast<double>(points.size());

  EigenErrors out;
  std::map<int, double> group_sq;
  std::vector<int> group_order;
  for (std::size_t i = 0; i < count; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    out.eigenvalue_error.push_back(std::abs(table[i].eigenvalue() - aligned.values(c)));
    const double err = (projected.col(c) - aligned.vectors.col(c)).norm() / std::sqrt(n);
    out.vector_error.push_back(err);
    out.group.push_back(table[i].group());
    if (!group_sq.contains(table[i].group())) group_order.push_back(table[i].group());
    group_sq[table[i].group()] += err * err;
  }
  for (int g : group_order) out.group_vector_error.push_back(std::sqrt(group_sq[g]));
  return out;
}

double max_subspace_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("max_subspace_angle: shapes differ");
  }
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                             Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                             Eigen::MatrixXd::Identity(b.rows(), b.cols());
  // sin of the largest angle = ||(I - Qa Qa^T) Qb||_2
  const Eigen::MatrixXd residual = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return std::asin(std::min(1.0, s));
}

HoeffdingReport hoeffding_check(const ScalarField& f, const ScalarField& g,
                                const ManifoldModel& manifold, std::size_t n, std::size_t trials,
                                std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("hoeffding_check: trials must be >= 1");
  const QuadratureRule rule = default_quadrature(manifold);
  HoeffdingReport report;
  report.trials = trials;
  for (std::size_t k = 0; k < rule.weights.size(); ++k) {
    const auto x = rule.nodes.point(k);
    const double fg = f(x) * g(x);
    report.exact_inner += rule.weights[k] * fg;
    report.sup_fg = std::max(report.sup_fg, std::abs(fg));
  }
  report.bound = hoeffding_bound(n, report.sup_fg);

  std::size_t violations = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const PointCloud pts = sample_uniform(manifold, n, derive_seed({seed, n, t}));
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += f(pts.point(j)) * g(pts.point(j));
    const double deviation = std::abs(acc / static_cast<double>(n) - report.exact_inner);
    report.max_deviation = std::max(report.max_deviation, deviation);
    if (deviation > report.bound) ++violations;
  }
  report.violation_rate = static_cast<double>(violations) / static_cast<double>(trials);
  return report;
}

}  // namespace mnn
