#include "mnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mnn/quadrature.hpp"

namespace mnn {

std::string_view to_string(Nonlinearity sigma) {
  switch (sigma) {
    case Nonlinearity::abs: return "abs";
    case Nonlinearity::relu: return "relu";
    case Nonlinearity::identity: break;
  }
  return "identity";
}

Nonlinearity nonlinearity_from_string(std::string_view name) {
  if (name == "abs") return Nonlinearity::abs;
  if (name == "relu") return Nonlinearity::relu;
  if (name == "identity") return Nonlinearity::identity;
  throw std::invalid_argument("unknown nonlinearity '" + std::string(name) + "'");
}

NetworkSpec NetworkSpec::uniform(std::vector<std::size_t> widths, const SpectralFilter& filter,
                                 Nonlinearity sigma) {
  NetworkSpec net;
  net.sigma = sigma;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    net.bank.emplace_back(widths[l], std::vector<SpectralFilter>(widths[l - 1], filter));
  }
  net.widths = std::move(widths);
  return net;
}

void NetworkSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t f : widths) {
    if (f == 0) throw std::invalid_argument("network widths must be positive");
  }
  if (bank.size() != depth()) throw std::invalid_argument("filter bank is missing layers");
  for (std::size_t l = 1; l <= depth(); ++l) {
    const auto& layer = bank[l - 1];
    if (layer.size() != widths[l]) {
      throw std::invalid_argument("filter bank layer " + std::to_string(l) +
                                  " has the wrong number of output features");
    }
    for (const auto& row : layer) {
      if (row.size() != widths[l - 1]) {
        throw std::invalid_argument("filter bank layer " + std::to_string(l) +
                                    " has the wrong number of input features");
      }
    }
  }
}

GnVector FeatureField::feature(std::size_t q) const {
  const auto col = values.col(static_cast<Eigen::Index>(q));
  return GnVector(col.data(), col.data() + col.size());
}

FeatureField project_inputs(std::span<const BandlimitedSignal> inputs,
                            const ManifoldModel& manifold, const PointCloud& points) {
  FeatureField field;
  field.values.resize(static_cast<Eigen::Index>(points.size()),
                      static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t q = 0; q < inputs.size(); ++q) {
    const auto v = evaluate_signal(inputs[q], manifold, points);
    field.values.col(static_cast<Eigen::Index>(q)) =
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return field;
}

namespace {

Eigen::VectorXd filter_response(const SpectralFilter& h, const Eigen::VectorXd& lambdas) {
  Eigen::VectorXd r(lambdas.size());
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) r(i) = h.evaluate(std::max(0.0, lambdas(i)));
  return r;
}

}  // namespace

GnVector filter_apply_discrete(const SpectralFilter& h, const EigenSystem& eig,
                               std::span<const double> x) {
  if (x.size() != eig.dimension()) {
    throw std::invalid_argument("filter_apply_discrete: signal length does not match eigenvectors");
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const double n = static_cast<double>(x.size());
  const Eigen::VectorXd coeff =
      (eig.vectors.transpose() * xv / n).cwiseProduct(filter_response(h, eig.values));
  const Eigen::VectorXd y = eig.vectors * coeff;
  return GnVector(y.data(), y.data() + y.size());
}

FeatureField forward_discrete(const NetworkSpec& net, const EigenSystem& eig,
                              const FeatureField& input) {
  net.validate();
  if (input.features() != net.widths[0]) {
    throw std::invalid_argument("forward_discrete: input feature count differs from F_0");
  }
  if (input.points() != eig.dimension()) {
    throw std::invalid_argument("forward_discrete: input length does not match eigenvectors");
  }
  const double n = static_cast<double>(input.points());
  Eigen::MatrixXd x = input.values;
  for (std::size_t l = 1; l <= net.depth(); ++l) {
    // spectral coefficients of every input feature, K x F_{l-1}
    const Eigen::MatrixXd coeff = eig.vectors.transpose() * x / n;
    Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(coeff.rows(), static_cast<Eigen::Index>(net.widths[l]));
    for (std::size_t p = 0; p < net.widths[l]; ++p) {
      for (std::size_t q = 0; q < net.widths[l - 1]; ++q) {
        mixed.col(static_cast<Eigen::Index>(p)) +=
            coeff.col(static_cast<Eigen::Index>(q))
                .cwiseProduct(filter_response(net.filter(l, p, q), eig.values));
      }
    }
    x = (eig.vectors * mixed).unaryExpr([s = net.sigma](double a) { return apply_nonlinearity(s, a); });
  }
  return {std::move(x), net.depth()};
}

ContinuumNetwork::ContinuumNetwork(const NetworkSpec& net, const ManifoldModel& manifold,
                                   std::vector<BandlimitedSignal> inputs,
                                   const ContinuumOptions& options)
    : manifold_(manifold), sigma_(net.sigma), depth_(net.depth()) {
  net.validate();
  if (inputs.size() != net.widths[0]) {
    throw std::invalid_argument("forward_continuum: input feature count differs from F_0");
  }
  std::size_t bandwidth = 1;
  for (const auto& f : inputs) bandwidth = std::max(bandwidth, f.coefficients.size());
  if (bandwidth > kMaxContinuumEigenpairs) {
    throw std::invalid_argument("forward_continuum: input bandwidth exceeds the eigenpair table");
  }
  if (depth_ > 1 && options.reexpansion_bandwidth > kMaxContinuumEigenpairs) {
    throw std::invalid_argument("forward_continuum: re-expansion bandwidth exceeds the eigenpair table");
  }

  // current layer coefficients, one vector per feature
  std::vector<std::vector<double>> coeff;
  for (auto& f : inputs) {
    f.coefficients.resize(bandwidth, 0.0);
    coeff.push_back(std::move(f.coefficients));
  }

  const QuadratureRule rule = default_quadrature(manifold, options.quadrature_nodes);
  const std::size_t nodes = rule.weights.size();

  // input norms: Parseval for L2, quadrature for the sup norm
  {
    std::vector<double> basis(bandwidth);
    for (const auto& c : coeff) {
      double l2 = 0.0;
      for (double a : c) l2 += a * a;
      max_l2_ = std::max(max_l2_, std::sqrt(l2));
    }
    for (std::size_t k = 0; k < nodes; ++k) {
      basis_values(manifold.kind(), rule.nodes.point(k), basis);
      for (const auto& c : coeff) {
        double v = 0.0;
        for (std::size_t i = 0; i < bandwidth; ++i) v += c[i] * basis[i];
        max_sup_ = std::max(max_sup_, std::abs(v));
      }
    }
  }

  const auto eigen_table = continuum_eigenpairs(
      manifold, std::max(bandwidth, depth_ > 1 ? options.reexpansion_bandwidth : bandwidth));

  for (std::size_t l = 1; l <= depth_; ++l) {
    const std::size_t k_cur = coeff.front().size();
    std::vector<std::vector<double>> pre(net.widths[l], std::vector<double>(k_cur, 0.0));
    for (std::size_t p = 0; p < net.widths[l]; ++p) {
      for (std::size_t q = 0; q < net.widths[l - 1]; ++q) {
        const auto& h = net.filter(l, p, q);
        for (std::size_t i = 0; i < k_cur; ++i) {
          pre[p][i] += h.evaluate(eigen_table[i].eigenvalue()) * coeff[q][i];
        }
      }
    }

    const bool last = l == depth_;
    const std::size_t k_next = last ? 0 : options.reexpansion_bandwidth;
    std::vector<std::vector<double>> next(net.widths[l], std::vector<double>(k_next, 0.0));
    std::vector<double> l2sq(net.widths[l], 0.0), sup(net.widths[l], 0.0);
    std::vector<double> basis(std::max(k_cur, k_next));
    for (std::size_t k = 0; k < nodes; ++k) {
      basis_values(manifold.kind(), rule.nodes.point(k), basis);
      const double w = rule.weights[k];
      for (std::size_t p = 0; p < net.widths[l]; ++p) {
        double g = 0.0;
        for (std::size_t i = 0; i < k_cur; ++i) g += pre[p][i] * basis[i];
        const double f = apply_nonlinearity(sigma_, g);
        l2sq[p] += w * f * f;
        sup[p] = std::max(sup[p], std::abs(f));
        for (std::size_t i = 0; i < k_next; ++i) next[p][i] += w * f * basis[i];
      }
    }
    for (std::size_t p = 0; p < net.widths[l]; ++p) {
      max_l2_ = std::max(max_l2_, std::sqrt(l2sq[p]));
      max_sup_ = std::max(max_sup_, sup[p]);
      if (!last) {
        double kept = 0.0;
        for (double c : next[p]) kept += c * c;
        const double total = l2sq[p];
        const double rel = total > 0.0 ? std::sqrt(std::max(0.0, total - kept) / total) : 0.0;
        quadrature_residual_ = std::max(quadrature_residual_, rel);
      }
    }
    if (last) {
      final_preactivation_ = std::move(pre);
    } else {
      coeff = std::move(next);
    }
  }
  quadrature_warning_ = quadrature_residual_ > options.residual_threshold;
}

FeatureField ContinuumNetwork::evaluate(const PointCloud& points) const {
  if (points.manifold() != manifold_.kind()) {
    throw std::invalid_argument("ContinuumNetwork: points were sampled on another manifold");
  }
  const std::size_t features = final_preactivation_.size();
  const std::size_t k = final_preactivation_.front().size();
  FeatureField out;
  out.layer = depth_;
  out.values.resize(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(features));
  std::vector<double> basis(k);
  for (std::size_t j = 0; j < points.size(); ++j) {
    basis_values(manifold_.kind(), points.point(j), basis);
    for (std::size_t p = 0; p < features; ++p) {
      double g = 0.0;
      for (std::size_t i = 0; i < k; ++i) g += final_preactivation_[p][i] * basis[i];
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) =
          apply_nonlinearity(sigma_, g);
    }
  }
  return out;
}

FeatureField forward_continuum(const NetworkSpec& net, const ManifoldModel& manifold,
                               std::span<const BandlimitedSignal> inputs, const PointCloud& points,
                               const ContinuumOptions& options) {
  ContinuumNetwork cont(net, manifold, std::vector<BandlimitedSignal>(inputs.begin(), inputs.end()),
                        options);
  return cont.evaluate(points);
}

double mnn_error(const FeatureField& discrete, const FeatureField& continuum) {
  if (discrete.values.rows() != continuum.values.rows() ||
      discrete.values.cols() != continuum.values.cols()) {
    throw std::invalid_argument("mnn_error: feature fields differ in shape");
  }
  const double n = static_cast<double>(discrete.values.rows());
  if (n == 0.0) return 0.0;
  double total = 0.0;
  for (Eigen::Index q = 0; q < discrete.values.cols(); ++q) {
    total += (discrete.values.col(q) - continuum.values.col(q)).norm() / std::sqrt(n);
  }
  return total;
}

}  // namespace mnn
