#include "mnn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mnn/bounds.hpp"
#include "mnn/seeding.hpp"
#include "mnn/spectral.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mnn {

namespace {

using nlohmann::json;

// Stream tags keep probe/tuning samples independent of trial samples.
constexpr std::uint64_t kCalibrationStream = 0xca1b;
constexpr std::uint64_t kTuningStream = 0x7c0e;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json to_json(const std::optional<LogLogFit>& fit) {
  if (!fit) return nullptr;
  return {{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}};
}

json to_json(const std::vector<SampleSummary>& per_n) {
  json arr = json::array();
  for (const auto& s : per_n) {
    arr.push_back({{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"trials_ok", s.trials_ok}});
  }
  return arr;
}

json to_json(const CalibrationInfo& c) {
  return {{"path", c.path},
          {"constant", c.constant},
          {"analytic", c.analytic},
          {"oracle_ratio", c.oracle_ratio},
          {"probe_n", c.probe_n}};
}

json to_json(double c, const std::optional<BandwidthTuning>& t) {
  json j = {{"constant", c}, {"tuning", nullptr}};
  if (t) j["tuning"] = {{"candidates", t->candidates}, {"lambda1", t->lambda1}, {"best", t->best}};
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Mean of the first non-constant eigenvalue group of L_n, with the given
// calibration; second value is the continuum eigenvalue of that group.
std::pair<double, double> first_group_eigenvalue(const ManifoldModel& manifold, KernelKind scheme,
                                                 double bandwidth_constant, double calibration,
                                                 std::size_t n, std::uint64_t seed) {
  const auto table = continuum_eigenpairs(manifold, 8);
  std::size_t k = 2;
  while (table[k].group() == table[1].group()) ++k;
  const PointCloud pts = sample_uniform(manifold, n, seed);
  KernelScheme ks{scheme, manifold.intrinsic_dim(),
                  scale_parameter(n, manifold.intrinsic_dim(), bandwidth_constant), calibration};
  const LaplacianOperator op = build_laplacian(pts, ks);
  const EigenSystem eig = smallest_eigenpairs(op, k, {1e-8, seed, 0});
  double mean = 0.0;
  for (std::size_t i = 1; i < k; ++i) mean += eig.values(static_cast<Eigen::Index>(i));
  return {mean / static_cast<double>(k - 1), table[1].eigenvalue()};
}

struct Setup {
  double bandwidth_constant = 1.0;
  std::optional<BandwidthTuning> tuning;
  CalibrationInfo calibration;
};

Setup prepare(const ExperimentConfig& config) {
  Setup s;
  if (config.graph.tune_bandwidth) {
    s.tuning = tune_bandwidth_constant(config.graph.scheme, config.seed);
    s.bandwidth_constant = s.tuning->best;
  } else {
    s.bandwidth_constant = config.graph.bandwidth_constant;
  }
  s.calibration = resolve_calibration(config, s.bandwidth_constant);
  return s;
}

LaplacianOperator trial_laplacian(const ExperimentConfig& config, const Setup& setup,
                                  const PointCloud& pts) {
  const int d = config.manifold_model().intrinsic_dim();
  KernelScheme ks{config.graph.scheme, d,
                  scale_parameter(pts.size(), d, setup.bandwidth_constant), setup.calibration.constant};
  LaplacianOptions lo;
  lo.storage = config.graph.storage;
  lo.dense_limit = config.graph.dense_limit;
  return build_laplacian(pts, ks, lo);
}

std::vector<std::pair<std::size_t, std::size_t>> job_order(const ExperimentConfig& config) {
  // largest n first so the slowest trials start early
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t a = config.n_grid.size(); a-- > 0;) {
    for (std::size_t t = 0; t < config.trials; ++t) jobs.emplace_back(a, t);
  }
  return jobs;
}

void check_failures(std::size_t failures, std::size_t total) {
  if (failures * 10 > total) {
    throw ExperimentAborted(std::to_string(failures) + " of " + std::to_string(total) +
                                " trials failed to converge",
                            failures, total);
  }
}

}  // namespace

LogLogFit loglog_fit(std::span<const double> n, std::span<const double> error) {
  if (n.size() != error.size()) throw std::invalid_argument("loglog_fit: length mismatch");
  if (n.size() < 3) throw std::invalid_argument("loglog_fit: need at least 3 points");
  const auto m = static_cast<double>(n.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(error[i] > 0.0)) {
      throw std::invalid_argument("loglog_fit: n and error must be positive");
    }
    sx += std::log(n[i]);
    sy += std::log(error[i]);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dx = std::log(n[i]) - mx, dy = std::log(error[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_fit: all n are equal");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

CalibrationInfo resolve_calibration(const ExperimentConfig& config, double bandwidth_constant) {
  const ManifoldModel manifold = config.manifold_model();
  CalibrationInfo info;
  info.analytic = calibration_constant(config.graph.scheme, manifold.intrinsic_dim(), manifold.volume());
  switch (config.graph.calibration) {
    case CalibrationMode::fixed:
      info.path = "explicit";
      info.constant = config.graph.calibration_value;
      return info;
    case CalibrationMode::analytic:
      info.path = "analytic";
      info.constant = info.analytic;
      return info;
    case CalibrationMode::automatic:
      break;
  }
  info.probe_n = kCalibrationProbeN;
  const auto [measured, exact] =
      first_group_eigenvalue(manifold, config.graph.scheme, bandwidth_constant, info.analytic,
                             info.probe_n, derive_seed({config.seed, kCalibrationStream, info.probe_n}));
  info.oracle_ratio = measured / exact;
  if (std::abs(info.oracle_ratio - 1.0) <= kCalibrationTolerance) {
    info.path = "analytic-verified";
    info.constant = info.analytic;
  } else {
    info.path = "empirical";
    info.constant = info.analytic / info.oracle_ratio;
  }
  return info;
}

BandwidthTuning tune_bandwidth_constant(KernelKind scheme, std::uint64_t seed) {
  const ManifoldModel circle = ManifoldModel::circle();
  const double calib = calibration_constant(scheme, 1, circle.volume());
  constexpr std::size_t n = 4096;
  BandwidthTuning out;
  out.candidates = {0.5, 1.0, 2.0, 4.0};
  double best_gap = std::numeric_limits<double>::infinity();
  for (double c : out.candidates) {
    const auto [lambda, exact] =
        first_group_eigenvalue(circle, scheme, c, calib, n, derive_seed({seed, kTuningStream, n}));
    out.lambda1.push_back(lambda);
    if (std::abs(lambda - exact) < best_gap) {
      best_gap = std::abs(lambda - exact);
      out.best = c;
    }
  }
  return out;
}

std::vector<SampleSummary> summarize(std::span<const TrialRecord> records) {
  std::vector<SampleSummary> out;
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : records) {
    auto& v = by_n[r.n];
    if (r.ok) v.push_back(r.error);
  }
  for (const auto& [n, errs] : by_n) {
    SampleSummary s;
    s.n = n;
    s.trials_ok = errs.size();
    if (errs.empty()) {
      s.mean = std::numeric_limits<double>::quiet_NaN();
      s.std = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double e : errs) sum += e;
      s.mean = sum / static_cast<double>(errs.size());
      double ss = 0.0;
      for (double e : errs) ss += (e - s.mean) * (e - s.mean);
      s.std = errs.size() > 1 ? std::sqrt(ss / static_cast<double>(errs.size() - 1)) : 0.0;
    }
    out.push_back(s);
  }
  return out;
}

std::optional<LogLogFit> fit_summary(std::span<const SampleSummary> per_n, std::string* note) {
  std::vector<double> n, e;
  bool below_floor = false;
  for (const auto& s : per_n) {
    if (s.trials_ok == 0) continue;
    if (!(s.mean > kDegenerateErrorFloor)) {
      below_floor = true;
      continue;
    }
    n.push_back(static_cast<double>(s.n));
    e.push_back(s.mean);
  }
  auto set = [&](const char* msg) {
    if (note) *note = msg;
  };
  if (below_floor) {
    set("skipped: degenerate (mean error at or below 1e-9)");
    return std::nullopt;
  }
  if (n.size() < 3) {
    set("skipped: fewer than 3 grid points with successful trials");
    return std::nullopt;
  }
  set("");
  return loglog_fit(n, e);
}

ExperimentResult run_convergence_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const ManifoldModel manifold = config.manifold_model();
  const Setup setup = prepare(config);

  ExperimentResult result;
  result.config_hash = config.config_hash();
  result.calibration = setup.calibration;
  result.bandwidth_constant = setup.bandwidth_constant;
  result.tuning = setup.tuning;

  const ContinuumNetwork continuum(config.network, manifold, config.inputs, config.continuum);
  result.quadrature_residual = continuum.quadrature_residual();
  result.quadrature_warning = continuum.quadrature_warning();
  result.max_l2_norm = continuum.max_l2_norm();
  result.max_sup_norm = continuum.max_sup_norm();

  {
    std::size_t k = config.truncation != 0 ? config.truncation : std::min<std::size_t>(config.n_grid.front(), 64);
    for (const auto& f : config.inputs) k = std::max(k, f.coefficients.size());
    const auto table = continuum_eigenpairs(manifold, std::min(k, kMaxContinuumEigenpairs));
    const double lambda_max = 1.25 * std::max(table.back().eigenvalue(), 1.0);
    for (const auto& layer : config.network.bank) {
      for (const auto& row : layer) {
        for (const auto& h : row) {
          result.filters_non_amplifying =
              result.filters_non_amplifying && check_nonamplifying(h, lambda_max, 4097).non_amplifying;
          result.filter_lipschitz = std::max(result.filter_lipschitz, estimate_lipschitz(h, lambda_max, 4097));
        }
      }
    }
  }

  const std::size_t trials = config.trials;
  result.records.resize(config.n_grid.size() * trials);
  const auto jobs = job_order(config);
  std::exception_ptr fatal;
  const auto njobs = static_cast<std::ptrdiff_t>(jobs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < njobs; ++j) {
    const auto [a, t] = jobs[static_cast<std::size_t>(j)];
    const std::size_t n = config.n_grid[a];
    TrialRecord& rec = result.records[a * trials + t];
    rec.n = n;
    rec.trial = t;
    rec.seed = derive_seed({config.seed, n, t});
    try {
      const PointCloud pts = sample_uniform(manifold, n, rec.seed);
      const LaplacianOperator op = trial_laplacian(config, setup, pts);
      const EigenSystem eig = config.truncation == 0
                                  ? dense_eigenpairs(op, n)
                                  : smallest_eigenpairs(op, config.truncation, {config.eigen_tol, rec.seed, 0});
      const FeatureField discrete = forward_discrete(config.network, eig, project_inputs(config.inputs, manifold, pts));
      rec.error = mnn_error(discrete, continuum.evaluate(pts));
    } catch (const ConvergenceError&) {
      rec.ok = false;
      rec.error = std::numeric_limits<double>::quiet_NaN();
    } catch (...) {
#pragma omp critical(mnn_harness_fatal)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  for (const auto& r : result.records) result.failures += r.ok ? 0 : 1;
  check_failures(result.failures, result.records.size());

  result.per_n = summarize(result.records);
  result.fit = fit_summary(result.per_n, &result.fit_note);
  result.wall_clock_seconds = elapsed(start);
  return result;
}

EigenExperimentResult eigen_convergence_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const ManifoldModel manifold = config.manifold_model();
  const Setup setup = prepare(config);

  EigenExperimentResult result;
  result.config_hash = config.config_hash();
  result.calibration = setup.calibration;
  result.bandwidth_constant = setup.bandwidth_constant;
  result.tuning = setup.tuning;

  // extend K so the highest requested index sits in a complete group
  const std::size_t top = *std::max_element(config.eigen_indices.begin(), config.eigen_indices.end());
  const auto big = continuum_eigenpairs(manifold, std::min(kMaxContinuumEigenpairs, 2 * top + 10));
  const auto big_groups = continuum_groups(big);
  std::size_t k = top + 1;
  while (k < big.size() && big_groups[k] == big_groups[k - 1]) ++k;
  if (k > config.n_grid.front()) throw ConfigError("eigen indices need more eigenpairs than the smallest n");
  const std::vector<ContinuumEigenpair> table(big.begin(), big.begin() + static_cast<std::ptrdiff_t>(k));
  const std::vector<int> groups(big_groups.begin(), big_groups.begin() + static_cast<std::ptrdiff_t>(k));

  const std::size_t trials = config.trials;
  const std::size_t per = config.eigen_indices.size();
  result.records.resize(config.n_grid.size() * trials * per);
  std::vector<char> ok(config.n_grid.size() * trials, 1);
  const auto jobs = job_order(config);
  std::exception_ptr fatal;
  const auto njobs = static_cast<std::ptrdiff_t>(jobs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < njobs; ++j) {
    const auto [a, t] = jobs[static_cast<std::size_t>(j)];
    const std::size_t n = config.n_grid[a];
    const std::uint64_t seed = derive_seed({config.seed, n, t});
    const std::size_t slot = a * trials + t;
    for (std::size_t q = 0; q < per; ++q) {
      auto& rec = result.records[slot * per + q];
      rec.n = n;
      rec.trial = t;
      rec.seed = seed;
      rec.index = config.eigen_indices[q];
    }
    try {
      const PointCloud pts = sample_uniform(manifold, n, seed);
      const LaplacianOperator op = trial_laplacian(config, setup, pts);
      const EigenSystem eig = smallest_eigenpairs(op, k, {config.eigen_tol, seed, 0});
      const EigenSystem aligned = align_to_continuum(eig, project_eigenfunctions(table, pts), groups);
      const EigenErrors errs = eigen_errors(aligned, table, pts);
      for (std::size_t q = 0; q < per; ++q) {
        auto& rec = result.records[slot * per + q];
        rec.eigenvalue_error = errs.eigenvalue_error[rec.index];
        rec.vector_error = errs.vector_error[rec.index];
      }
    } catch (const ConvergenceError&) {
      ok[slot] = 0;
      for (std::size_t q = 0; q < per; ++q) {
        auto& rec = result.records[slot * per + q];
        rec.eigenvalue_error = rec.vector_error = std::numeric_limits<double>::quiet_NaN();
      }
    } catch (...) {
#pragma omp critical(mnn_harness_fatal)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  for (char c : ok) result.failures += c ? 0 : 1;
  check_failures(result.failures, ok.size());

  for (std::size_t q = 0; q < per; ++q) {
    std::vector<TrialRecord> lam, vec;
    for (std::size_t s = 0; s < ok.size(); ++s) {
      const auto& r = result.records[s * per + q];
      lam.push_back({r.n, r.trial, r.seed, r.eigenvalue_error, ok[s] != 0});
      vec.push_back({r.n, r.trial, r.seed, r.vector_error, ok[s] != 0});
    }
    EigenIndexSummary s;
    s.index = config.eigen_indices[q];
    s.eigenvalue = summarize(lam);
    s.vector = summarize(vec);
    s.eigenvalue_fit = fit_summary(s.eigenvalue);
    s.vector_fit = fit_summary(s.vector);
    result.per_index.push_back(std::move(s));
  }
  result.wall_clock_seconds = elapsed(start);
  return result;
}

void write_trials_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "n,trial,seed,error\n";
  for (const auto& r : result.records) {
    out << r.n << ',' << r.trial << ',' << r.seed << ',' << fmt(r.ok ? r.error : std::nan("")) << '\n';
  }
}

void write_summary_json(const ExperimentResult& result, const std::filesystem::path& path) {
  json j;
  j["config_hash"] = result.config_hash;
  j["per_n"] = to_json(result.per_n);
  j["fit"] = to_json(result.fit);
  j["fit_note"] = result.fit_note;
  j["calibration"] = to_json(result.calibration);
  j["bandwidth"] = to_json(result.bandwidth_constant, result.tuning);
  j["failures"] = result.failures;
  j["records"] = result.records.size();
  j["quadrature"] = {{"residual", result.quadrature_residual}, {"warning", result.quadrature_warning}};
  j["filters"] = {{"non_amplifying", result.filters_non_amplifying},
                  {"lipschitz_estimate", result.filter_lipschitz}};
  j["norms"] = {{"max_l2", result.max_l2_norm}, {"max_sup", result.max_sup_norm}};
  write_json(j, path);
}

void write_timing_json(double seconds, int threads, const std::filesystem::path& path) {
  write_json({{"wall_clock_seconds", seconds}, {"threads", threads}}, path);
}

void write_plot_data(const ExperimentResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# n mean_error\n";
  for (const auto& s : result.per_n) {
    if (s.trials_ok > 0) out << s.n << ' ' << fmt(s.mean) << '\n';
  }
  out << "\n\n# n fitted\n";
  if (result.fit) {
    for (const auto& s : result.per_n) {
      const double y = std::exp(result.fit->intercept + result.fit->slope * std::log(static_cast<double>(s.n)));
      out << s.n << ' ' << fmt(y) << '\n';
    }
  }
}

void write_bound_curves(const ExperimentResult& result, const ExperimentConfig& config,
                        const std::filesystem::path& path) {
  const int d = config.manifold_model().intrinsic_dim();
  const double rate = theoretical_rate_exponent(d);
  auto out = open_out(path);
  out << "# n mean_error rate_curve network_bound hoeffding\n";
  double anchor = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : result.per_n) {
    if (s.trials_ok > 0 && std::isnan(anchor)) {
      anchor = s.mean * std::pow(static_cast<double>(s.n), rate);
    }
  }
  for (const auto& s : result.per_n) {
    BoundInputs in;
    in.widths = config.network.widths;
    in.lipschitz = result.filter_lipschitz;
    in.intrinsic_dim = d;
    in.n = s.n;
    in.max_l2_norm = result.max_l2_norm;
    in.max_sup_norm = result.max_sup_norm;
    out << s.n << ' ' << fmt(s.mean) << ' ' << fmt(anchor * std::pow(static_cast<double>(s.n), -rate))
        << ' ' << fmt(network_bound(in)) << ' '
        << fmt(hoeffding_bound(s.n, result.max_sup_norm * result.max_sup_norm)) << '\n';
  }
}

void write_eigen_csv(const EigenExperimentResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "n,trial,seed,index,eigenvalue_error,vector_error\n";
  for (const auto& r : result.records) {
    out << r.n << ',' << r.trial << ',' << r.seed << ',' << r.index << ',' << fmt(r.eigenvalue_error)
        << ',' << fmt(r.vector_error) << '\n';
  }
}

void write_eigen_summary_json(const EigenExperimentResult& result, const std::filesystem::path& path) {
  json j;
  j["config_hash"] = result.config_hash;
  j["calibration"] = to_json(result.calibration);
  j["bandwidth"] = to_json(result.bandwidth_constant, result.tuning);
  j["failures"] = result.failures;
  json idx = json::array();
  for (const auto& s : result.per_index) {
    idx.push_back({{"index", s.index},
                   {"eigenvalue", {{"per_n", to_json(s.eigenvalue)}, {"fit", to_json(s.eigenvalue_fit)}}},
                   {"vector", {{"per_n", to_json(s.vector)}, {"fit", to_json(s.vector_fit)}}}});
  }
  j["per_index"] = idx;
  write_json(j, path);
}

std::vector<CsvFit> fit_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("fit_csv: empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  std::optional<std::size_t> n_col, index_col;
  std::vector<std::size_t> err_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "n") n_col = c;
    if (h == "index") index_col = c;
    if (h == "error" || (h.size() > 6 && h.ends_with("_error"))) err_cols.push_back(c);
  }
  if (!n_col || err_cols.empty()) throw std::invalid_argument("fit_csv: need an 'n' column and an error column");

  // (column, index) -> records, in first-seen order of index
  std::map<std::pair<std::size_t, std::size_t>, std::vector<TrialRecord>> groups;
  std::vector<std::size_t> index_order;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("fit_csv: row " + std::to_string(row) + " has the wrong number of cells");
    }
    try {
      const std::size_t n = std::stoull(cells[*n_col]);
      const std::size_t idx = index_col ? std::stoull(cells[*index_col]) : 0;
      if (std::find(index_order.begin(), index_order.end(), idx) == index_order.end()) index_order.push_back(idx);
      for (std::size_t c : err_cols) {
        const double e = std::stod(cells[c]);
        groups[{c, idx}].push_back({n, 0, 0, e, !std::isnan(e)});
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("fit_csv: row " + std::to_string(row) + " is not numeric");
    }
  }
  std::vector<CsvFit> out;
  for (std::size_t idx : index_order) {
    for (std::size_t c : err_cols) {
      CsvFit f;
      f.column = header[c];
      if (index_col) f.index = idx;
      f.per_n = summarize(groups[{c, idx}]);
      f.fit = fit_summary(f.per_n, &f.note);
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace mnn
