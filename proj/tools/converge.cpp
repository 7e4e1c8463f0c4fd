#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mnn/harness.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;
constexpr const char* kThreadsEnv = "CONVERGE_THREADS";

int configure_threads(int requested) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv(kThreadsEnv); env && *env) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw mnn::ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
      }
      if (threads <= 0) throw mnn::ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
    }
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void print_fit(const std::optional<mnn::LogLogFit>& fit, const std::string& note) {
  if (fit) {
    std::printf("fit: slope %.4f  intercept %.4f  r2 %.4f\n", fit->slope, fit->intercept, fit->r2);
  } else {
    std::printf("fit: %s\n", note.c_str());
  }
}

nlohmann::json fit_json(const mnn::CsvFit& f) {
  nlohmann::json j;
  j["column"] = f.column;
  j["index"] = f.index ? nlohmann::json(*f.index) : nlohmann::json(nullptr);
  j["per_n"] = nlohmann::json::array();
  for (const auto& s : f.per_n) {
    j["per_n"].push_back({{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"trials_ok", s.trials_ok}});
  }
  if (f.fit) {
    j["fit"] = {{"slope", f.fit->slope}, {"intercept", f.fit->intercept}, {"r2", f.fit->r2}};
  } else {
    j["fit"] = nullptr;
    j["note"] = f.note;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence experiments for manifold neural networks on sampled graphs"};
  app.require_subcommand(1);

  std::string config_path, out_dir, csv_path;
  bool full = false;
  int threads = 0;

  auto* run = app.add_subcommand("run", "discrete-vs-continuum network error over an n-grid");
  run->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_flag("--full", full, "full-scale grid and trial count");
  run->add_option("--out-dir", out_dir, "output directory (overrides the config)");
  run->add_option("--threads", threads, "worker threads (default: $CONVERGE_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  auto* eigen = app.add_subcommand("eigen", "eigenvalue/eigenvector convergence over an n-grid");
  eigen->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
  eigen->add_option("--out-dir", out_dir, "output directory (overrides the config)");
  eigen->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "log-log fit of a trials CSV");
  fit->add_option("--csv", csv_path, "CSV with n and error columns")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (fit->parsed()) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& f : mnn::fit_csv(csv_path)) out.push_back(fit_json(f));
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    mnn::ExperimentConfig config = mnn::load_config(config_path);
    if (full) mnn::apply_full_scale(config);
    if (!out_dir.empty()) config.out_dir = out_dir;
    const int nthreads = configure_threads(threads);
    const auto base = config.out_dir / config.prefix;

    if (run->parsed()) {
      const auto result = mnn::run_convergence_experiment(config);
      mnn::write_trials_csv(result, base.string() + "_trials.csv");
      mnn::write_summary_json(result, base.string() + "_summary.json");
      mnn::write_plot_data(result, base.string() + "_plot.dat");
      mnn::write_bound_curves(result, config, base.string() + "_bounds.dat");
      mnn::write_timing_json(result.wall_clock_seconds, nthreads, base.string() + "_timing.json");
      std::printf("calibration: %s (constant %.6g, oracle ratio %.4f)\n", result.calibration.path.c_str(),
                  result.calibration.constant, result.calibration.oracle_ratio);
      for (const auto& s : result.per_n) {
        std::printf("n=%zu mean=%.6g std=%.3g ok=%zu\n", s.n, s.mean, s.std, s.trials_ok);
      }
      print_fit(result.fit, result.fit_note);
      if (result.quadrature_warning) {
        std::fprintf(stderr, "warning: continuum re-expansion residual %.3g exceeds threshold\n",
                     result.quadrature_residual);
      }
      std::printf("failures: %zu  wall clock: %.1f s  threads: %d\n", result.failures,
                  result.wall_clock_seconds, nthreads);
    } else {
      const auto result = mnn::eigen_convergence_experiment(config);
      mnn::write_eigen_csv(result, base.string() + "_eigen.csv");
      mnn::write_eigen_summary_json(result, base.string() + "_eigen_summary.json");
      mnn::write_timing_json(result.wall_clock_seconds, nthreads, base.string() + "_eigen_timing.json");
      std::printf("calibration: %s (constant %.6g)\n", result.calibration.path.c_str(),
                  result.calibration.constant);
      for (const auto& s : result.per_index) {
        std::printf("index %zu eigenvalue ", s.index);
        print_fit(s.eigenvalue_fit, "skipped");
        std::printf("index %zu vector     ", s.index);
        print_fit(s.vector_fit, "skipped");
      }
      std::printf("failures: %zu  wall clock: %.1f s  threads: %d\n", result.failures,
                  result.wall_clock_seconds, nthreads);
    }
    return 0;
  } catch (const mnn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const mnn::ExperimentAborted& e) {
    std::fprintf(stderr, "aborted: %s\n", e.what());
    return kExitAborted;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
