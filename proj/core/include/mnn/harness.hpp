#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mnn/graph.hpp"
#include "mnn/manifolds.hpp"
#include "mnn/network.hpp"

namespace mnn {

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many trials failed to converge; the experiment was abandoned.
class ExperimentAborted : public std::runtime_error {
 public:
  ExperimentAborted(const std::string& what, std::size_t failures, std::size_t total)
      : std::runtime_error(what), failures_(failures), total_(total) {}
  std::size_t failures() const { return failures_; }
  std::size_t total() const { return total_; }

 private:
  std::size_t failures_;
  std::size_t total_;
};

enum class CalibrationMode { automatic, analytic, fixed };

struct GraphConfig {
  KernelKind scheme = KernelKind::gaussian;
  /// c in t_n = c n^{-2/(d+6)}; ignored when tune_bandwidth is set.
  double bandwidth_constant = 1.0;
  bool tune_bandwidth = false;
  CalibrationMode calibration = CalibrationMode::automatic;
  double calibration_value = 0.0;  // used with CalibrationMode::fixed
  StorageMode storage = StorageMode::automatic;
  std::size_t dense_limit = 8192;
};

struct ExperimentConfig {
  ManifoldKind manifold = ManifoldKind::sphere2;
  std::vector<BandlimitedSignal> inputs;
  NetworkSpec network;
  GraphConfig graph;
  /// Number of eigenpairs kept; 0 means the full dense spectrum.
  std::size_t truncation = 9;
  double eigen_tol = 1e-8;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "results";
  std::string prefix = "convergence";
  ContinuumOptions continuum;
  /// Eigen experiment: eigenpair indices to report.
  std::vector<std::size_t> eigen_indices{0, 1, 2};
  /// Full-scale overrides applied by apply_full_scale().
  std::vector<std::size_t> full_n_grid;
  std::size_t full_trials = 100;
  /// Canonical JSON text of the parsed document; input to config_hash().
  std::string canonical;

  ManifoldModel manifold_model() const { return ManifoldModel(manifold); }
  std::string config_hash() const;
  void validate() const;
};

/// Parses a JSON document. Unknown keys, wrong types and violated invariants
/// raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Switches to the full-scale grid and trial count.
void apply_full_scale(ExperimentConfig& config);

/// n_k = round(lo (hi/lo)^{k/(count-1)}); throws ConfigError unless the
/// rounded grid is strictly increasing.
std::vector<std::size_t> log_spaced_grid(std::size_t lo, std::size_t hi, std::size_t count);

SpectralFilter make_filter(std::string_view family, std::span<const double> params);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares on (ln n, ln error). Needs >= 3 points, all positive.
LogLogFit loglog_fit(std::span<const double> n, std::span<const double> error);

struct CalibrationInfo {
  /// "explicit", "analytic", "analytic-verified" or "empirical".
  std::string path;
  double constant = 0.0;
  double analytic = 0.0;
  /// lambda_1^n / lambda_1 under the analytic constant; 0 when not probed.
  double oracle_ratio = 0.0;
  std::size_t probe_n = 0;
};

inline constexpr std::size_t kCalibrationProbeN = 4096;
inline constexpr double kCalibrationTolerance = 0.2;

/// Analytic constant gated by the lambda_1 oracle on the experiment's
/// manifold; if the ratio is off by more than 20% the constant is rescaled
/// by it.
CalibrationInfo resolve_calibration(const ExperimentConfig& config, double bandwidth_constant);

struct BandwidthTuning {
  double best = 1.0;
  std::vector<double> candidates;
  std::vector<double> lambda1;  // lambda_1^n on the circle per candidate
};

/// Picks c from {0.5, 1, 2, 4} minimizing |lambda_1^n - 1| on the circle at
/// n = 4096 with the analytic calibration.
BandwidthTuning tune_bandwidth_constant(KernelKind scheme, std::uint64_t seed);

struct TrialRecord {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double error = 0.0;
  bool ok = true;
};

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t trials_ok = 0;
};

/// Means at or below this are treated as exact and the fit is skipped.
inline constexpr double kDegenerateErrorFloor = 1e-9;

struct ExperimentResult {
  std::string config_hash;
  std::vector<TrialRecord> records;
  std::vector<SampleSummary> per_n;
  std::optional<LogLogFit> fit;
  std::string fit_note;
  CalibrationInfo calibration;
  double bandwidth_constant = 1.0;
  std::optional<BandwidthTuning> tuning;
  std::size_t failures = 0;
  double quadrature_residual = 0.0;
  bool quadrature_warning = false;
  bool filters_non_amplifying = true;
  double filter_lipschitz = 0.0;
  double max_l2_norm = 0.0;
  double max_sup_norm = 0.0;
  double wall_clock_seconds = 0.0;
};

/// Per-(n, trial): sample, build L_n, eigensolve, run both forward passes
/// and record mnn_error. Trials that fail to converge are excluded; more
/// than 10% failures throws ExperimentAborted.
ExperimentResult run_convergence_experiment(const ExperimentConfig& config);

struct EigenRecord {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t index = 0;
  double eigenvalue_error = 0.0;
  double vector_error = 0.0;
};

struct EigenIndexSummary {
  std::size_t index = 0;
  std::vector<SampleSummary> eigenvalue;
  std::vector<SampleSummary> vector;
  std::optional<LogLogFit> eigenvalue_fit;
  std::optional<LogLogFit> vector_fit;
};

struct EigenExperimentResult {
  std::string config_hash;
  std::vector<EigenRecord> records;
  std::vector<EigenIndexSummary> per_index;
  CalibrationInfo calibration;
  double bandwidth_constant = 1.0;
  std::optional<BandwidthTuning> tuning;
  std::size_t failures = 0;
  double wall_clock_seconds = 0.0;
};

EigenExperimentResult eigen_convergence_experiment(const ExperimentConfig& config);

/// Mean and sample standard deviation per n; the fit is attempted when at
/// least three means exceed kDegenerateErrorFloor.
std::vector<SampleSummary> summarize(std::span<const TrialRecord> records);
std::optional<LogLogFit> fit_summary(std::span<const SampleSummary> per_n, std::string* note = nullptr);

void write_trials_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_summary_json(const ExperimentResult& result, const std::filesystem::path& path);
/// Wall-clock and thread count live apart from the summary so repeated runs
/// produce identical summaries.
void write_timing_json(double seconds, int threads, const std::filesystem::path& path);
/// Gnuplot data: block 0 holds (n, mean), block 1 the fitted line.
void write_plot_data(const ExperimentResult& result, const std::filesystem::path& path);
/// Columns n, mean, rate (first mean scaled by n^{-2/(d+6)}), network bound
/// with unit big-O constants, Hoeffding deviation for the input's sup norm.
void write_bound_curves(const ExperimentResult& result, const ExperimentConfig& config,
                        const std::filesystem::path& path);

void write_eigen_csv(const EigenExperimentResult& result, const std::filesystem::path& path);
void write_eigen_summary_json(const EigenExperimentResult& result,
                              const std::filesystem::path& path);

struct CsvFit {
  std::string column;
  std::optional<std::size_t> index;
  std::vector<SampleSummary> per_n;
  std::optional<LogLogFit> fit;
  std::string note;
};

/// Reads a trial or eigen CSV and fits every error column (per index for
/// eigen tables).
std::vector<CsvFit> fit_csv(const std::filesystem::path& path);

}  // namespace mnn
