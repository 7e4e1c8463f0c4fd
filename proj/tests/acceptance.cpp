// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
//   acceptance [criterion ...]   run a subset, e.g. `acceptance 4 5 7`

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mnn/bounds.hpp"
#include "mnn/graph.hpp"
#include "mnn/harness.hpp"
#include "mnn/network.hpp"
#include "mnn/spectral.hpp"

using namespace mnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kConfigDir = MNN_CONFIG_DIR;

// Criteria 1, 2 and 9 share the sphere rate run.
struct RateRun {
  ExperimentConfig config;
  ExperimentResult result;
  double seconds = 0.0;
};

RateRun& rate_run() {
  static RateRun run = [] {
    RateRun r;
    r.config = load_config(kConfigDir / "sphere_rate.json");
    const auto t0 = std::chrono::steady_clock::now();
    r.result = run_convergence_experiment(r.config);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome sphere_rate_check() {
  const auto& run = rate_run();
  const auto& r = run.result;
  if (!r.fit) return {false, "fit skipped: " + r.fit_note};
  const double slope = r.fit->slope;
  const bool ok = slope >= -0.95 && slope <= -0.45 && slope < -0.25 && run.seconds <= 1800.0;
  return {ok, fmt("slope %.4f in [-0.95, -0.45], r2 %.3f, c=%g, calibration %s (%.4g), %.0f s", slope,
                  r.fit->r2, r.bandwidth_constant, r.calibration.path.c_str(), r.calibration.constant,
                  run.seconds)};
}

Outcome monotone_means() {
  const auto& per_n = rate_run().result.per_n;
  int inversions = 0;
  bool within = true;
  std::string where;
  for (std::size_t i = 0; i + 1 < per_n.size(); ++i) {
    const auto& a = per_n[i];
    const auto& b = per_n[i + 1];
    if (b.mean <= a.mean) continue;
    ++inversions;
    // standard error of the difference of the two means
    const double se = std::sqrt(a.std * a.std / a.trials_ok + b.std * b.std / b.trials_ok);
    within = within && (b.mean - a.mean) <= se;
    where += fmt(" n=%zu->%zu rise %.3g vs se %.3g;", a.n, b.n, b.mean - a.mean, se);
  }
  const bool ok = inversions == 0 || (inversions == 1 && within);
  return {ok, fmt("%d inversion(s)", inversions) + where};
}

bool strictly_decreasing(const std::vector<SampleSummary>& s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (!(s[i + 1].mean < s[i].mean)) return false;
  }
  return true;
}

Outcome eigen_convergence() {
  const auto cfg = load_config(kConfigDir / "circle_eigen.json");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = eigen_convergence_experiment(cfg);
  const double secs = seconds_since(t0);
  const EigenIndexSummary* first = nullptr;
  for (const auto& s : r.per_index) {
    if (s.index == 1) first = &s;
  }
  if (!first || !first->eigenvalue_fit || !first->vector_fit) return {false, "index 1 missing or unfitted"};
  const bool lam_dec = strictly_decreasing(first->eigenvalue);
  const bool vec_dec = strictly_decreasing(first->vector);
  const double ls = first->eigenvalue_fit->slope, vs = first->vector_fit->slope;
  const bool ok = lam_dec && vec_dec && ls <= -0.15 && vs <= -0.15 && secs <= 600.0;
  return {ok, fmt("lambda slope %.4f (%s), vector slope %.4f (%s), %.0f s", ls,
                  lam_dec ? "decreasing" : "NOT decreasing", vs, vec_dec ? "decreasing" : "NOT decreasing",
                  secs)};
}

LaplacianOperator operator_for(const ManifoldModel& m, KernelKind kind, std::size_t n, std::uint64_t seed,
                               double c) {
  const auto pts = sample_uniform(m, n, seed);
  const int d = m.intrinsic_dim();
  return build_laplacian(pts, {kind, d, scale_parameter(n, d, c), calibration_constant(kind, d, m.volume())});
}

Outcome oracle_equivalence() {
  const std::size_t n = 256, k = 10;
  double worst_value = 0.0, worst_angle = 0.0;
  for (auto kind : {KernelKind::heat, KernelKind::gaussian}) {
    for (auto m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
      const auto op = operator_for(m, kind, n, 101, 1.0);
      const auto lanczos = smallest_eigenpairs(op, k);
      const auto dense = dense_eigenpairs(op.to_dense(), k);
      worst_value = std::max(worst_value, (lanczos.values - dense.values).cwiseAbs().maxCoeff());
      const auto groups = group_by_gap({dense.values.data(), k});
      for (std::size_t i = 0; i < k;) {
        std::size_t j = i;
        while (j < k && groups[j] == groups[i]) ++j;
        if (j < k) {  // a group cut by the truncation has no well-defined subspace
          const auto a = static_cast<Eigen::Index>(i), w = static_cast<Eigen::Index>(j - i);
          worst_angle = std::max(worst_angle, max_subspace_angle(lanczos.vectors.middleCols(a, w),
                                                                 dense.vectors.middleCols(a, w)));
        }
        i = j;
      }
    }
  }
  return {worst_value <= 1e-8 && worst_angle <= 1e-6,
          fmt("max eigenvalue gap %.2e, max group angle %.2e", worst_value, worst_angle)};
}

Outcome exact_identity() {
  const auto cfg = parse_config(R"({
    "manifold": "sphere2",
    "signal": {"coefficients": [1, 1, 1, 1, 1, 1, 1, 1, 1]},
    "network": {"widths": [1, 1], "nonlinearity": "identity", "filter": {"family": "identity"}},
    "graph": {"scheme": "gaussian", "bandwidth_constant": 1.0, "calibration": "analytic"},
    "spectrum": {"truncation": "dense"},
    "n_grid": [64, 128], "trials": 5, "seed": 11})");
  const auto r = run_convergence_experiment(cfg);
  double worst = 0.0;
  bool all_ok = true;
  for (const auto& rec : r.records) {
    all_ok = all_ok && rec.ok;
    worst = std::max(worst, rec.error);
  }
  return {all_ok && worst <= 1e-7, fmt("max mnn_error %.2e over %zu trials", worst, r.records.size())};
}

Outcome invariants() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<std::size_t> size(20, 200);
  std::uniform_real_distribution<double> cdist(0.25, 4.0);

  double sym = 0.0, rows = 0.0, neg = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto m = k % 2 ? ManifoldModel::circle() : ManifoldModel::sphere2();
    const auto kind = (k / 2) % 2 ? KernelKind::heat : KernelKind::gaussian;
    const std::size_t n = size(rng);
    const auto op = operator_for(m, kind, n, rng(), cdist(rng));
    std::vector<double> x(n), y(n), ones(n, 1.0);
    for (auto& v : x) v = gauss(rng);
    for (auto& v : y) v = gauss(rng);
    const auto lx = op.matvec(x), ly = op.matvec(y), l1 = op.matvec(ones);
    double xly = 0, lxy = 0, scale = 0, row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      xly += x[i] * ly[i];
      lxy += lx[i] * y[i];
      scale += std::abs(x[i] * ly[i]) + std::abs(lx[i] * y[i]);
      row = std::max(row, std::abs(l1[i]));
    }
    const double norm = op.spectral_upper_bound();
    sym = std::max(sym, std::abs(xly - lxy) / scale);
    rows = std::max(rows, row / norm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.to_dense(), Eigen::EigenvaluesOnly);
    neg = std::max(neg, -es.eigenvalues().minCoeff() / norm);
  }

  const auto m = ManifoldModel::sphere2();
  const auto pts = sample_uniform(m, 500, 7);
  const auto op = build_laplacian(pts, {KernelKind::gaussian, 2, scale_parameter(500, 2, 1.0),
                                        calibration_constant(KernelKind::gaussian, 2, m.volume())});
  const auto eig = smallest_eigenpairs(op, 16);
  double amp = 0.0;
  const auto h = SpectralFilter::exponential();
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(500);
    for (auto& v : x) v = gauss(rng);
    amp = std::max(amp, gn_norm(filter_apply_discrete(h, eig, x)) / gn_norm(x));
  }

  FeatureField input;
  input.values = Eigen::MatrixXd(500, 2);
  for (Eigen::Index i = 0; i < input.values.size(); ++i) input.values.data()[i] = gauss(rng);
  const auto net = NetworkSpec::uniform({2, 3, 2}, SpectralFilter::exponential(0.5), Nonlinearity::abs);
  const auto ref = forward_discrete(net, eig, input);
  double flip = 0.0;
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 10; ++k) {
    EigenSystem flipped = eig;
    for (Eigen::Index c = 0; c < flipped.vectors.cols(); ++c) {
      if (coin(rng)) flipped.vectors.col(c) *= -1.0;
    }
    flip = std::max(flip, (forward_discrete(net, flipped, input).values - ref.values).cwiseAbs().maxCoeff());
  }

  bool expansive = false;
  std::uniform_real_distribution<double> wide(-10.0, 10.0);
  for (auto s : {Nonlinearity::abs, Nonlinearity::relu, Nonlinearity::identity}) {
    for (int k = 0; k < 1000; ++k) {
      const double a = wide(rng), b = wide(rng);
      expansive = expansive || std::abs(apply_nonlinearity(s, a) - apply_nonlinearity(s, b)) > std::abs(a - b);
    }
  }

  const bool ok = sym <= 1e-10 && rows <= 1e-10 && neg <= 1e-10 && amp <= 1.0 + 1e-12 && flip <= 1e-10 &&
                  !expansive;
  return {ok, fmt("symmetry %.1e, row sums %.1e, min eig %.1e, gain %.6f, sign flips %.1e, sigma %s", sym, rows,
                  -neg, amp, flip, expansive ? "expansive" : "non-expansive")};
}

Outcome bound_calculators() {
  const std::vector<std::size_t> twos{2, 2, 2};
  const auto count = filter_count_factor(twos, FilterCountVariant::network);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> w(1, 6), l(1, 6);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<std::size_t> widths(l(rng) + 1);
    for (auto& x : widths) x = w(rng);
    const double delta = d(rng);
    const auto eps = error_recurrence(delta, 0.0, widths);
    for (std::size_t layer = 1; layer < widths.size(); ++layer) {
      const double closed = error_closed_form(delta, widths, layer);
      worst = std::max(worst, std::abs(eps[layer - 1] - closed) / closed);
    }
  }
  const double hb = hoeffding_bound(4096, 1.0);
  const bool ok = count == 12 && worst <= 1e-12 && std::abs(hb - 0.19119) <= 1e-4;
  return {ok, fmt("filter count %zu, recurrence rel. gap %.1e, hoeffding(4096) %.5f", count, worst, hb)};
}

Outcome hoeffding() {
  const auto m = ManifoldModel::circle();
  const ContinuumEigenpair phi1(ManifoldKind::circle, 1);
  const ScalarField f = [&](std::span<const double> x) { return phi1.value(x); };
  const auto rep = hoeffding_check(f, f, m, 4096, 200, 20240603);
  return {rep.violation_rate <= 0.01,
          fmt("violation rate %.3f (bound %.4f, max deviation %.4f)", rep.violation_rate, rep.bound,
              rep.max_deviation)};
}

Outcome determinism() {
  auto& first = rate_run();
  const auto second = run_convergence_experiment(first.config);
  const auto dir = fs::temp_directory_path() / "mnn_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_trials_csv(first.result, dir / "a.csv");
  write_summary_json(first.result, dir / "a.json");
  write_trials_csv(second, dir / "b.csv");
  write_summary_json(second, dir / "b.json");
  const bool csv = slurp(dir / "a.csv") == slurp(dir / "b.csv");
  const bool json = slurp(dir / "a.json") == slurp(dir / "b.json");
  return {csv && json, fmt("CSV %s, summary JSON %s", csv ? "identical" : "DIFFERENT",
                           json ? "identical" : "DIFFERENT")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "sphere convergence rate", sphere_rate_check},
      {2, "monotone mean errors", monotone_means},
      {3, "eigen convergence on the circle", eigen_convergence},
      {4, "lanczos/dense oracle equivalence", oracle_equivalence},
      {5, "exact identity end-to-end", exact_identity},
      {6, "structural invariants", invariants},
      {7, "bound calculators", bound_calculators},
      {8, "hoeffding violation rate", hoeffding},
      {9, "determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s  %d  %-34s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
