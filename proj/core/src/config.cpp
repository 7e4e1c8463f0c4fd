#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mnn/harness.hpp"

namespace mnn {

namespace {

using nlohmann::json;

void allow_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) throw ConfigError(std::string(what) + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(std::string(what) + " must be finite");
  return x;
}

std::size_t count(const json& v, std::string_view what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string(what) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string text(const json& v, std::string_view what) {
  if (!v.is_string()) throw ConfigError(std::string(what) + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, std::string_view what) {
  if (!v.is_array()) throw ConfigError(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

SpectralFilter parse_filter(const json& f) {
  if (!f.is_object() || !f.contains("family")) throw ConfigError("filter needs a 'family'");
  const std::string family = text(f["family"], "filter.family");
  auto get = [&](const char* key, double fallback) {
    return f.contains(key) ? number(f[key], std::string("filter.") + key) : fallback;
  };
  std::vector<double> params;
  if (family == "exponential") {
    allow_keys(f, "exponential filter", {"family", "rate", "scale"});
    params = {get("rate", 1.0), get("scale", 1.0)};
  } else if (family == "constant") {
    allow_keys(f, "constant filter", {"family", "value"});
    params = {get("value", 1.0)};
  } else if (family == "identity") {
    allow_keys(f, "identity filter", {"family"});
  } else if (family == "tent") {
    allow_keys(f, "tent filter", {"family", "center", "width"});
    if (!f.contains("center")) throw ConfigError("tent filter needs 'center'");
    params = {get("center", 0.0), get("width", 1.0)};
  } else if (family == "polynomial") {
    allow_keys(f, "polynomial filter", {"family", "coefficients"});
    if (!f.contains("coefficients")) throw ConfigError("polynomial filter needs 'coefficients'");
    params = numbers(f["coefficients"], "filter.coefficients");
  }
  try {
    return make_filter(family, params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::size_t> parse_grid(const json& g, std::string_view where) {
  if (g.is_array()) {
    std::vector<std::size_t> out;
    for (const auto& v : g) out.push_back(count(v, where));
    return out;
  }
  allow_keys(g, where, {"min", "max", "count"});
  for (const char* k : {"min", "max", "count"}) {
    if (!g.contains(k)) throw ConfigError(std::string(where) + " range needs '" + k + "'");
  }
  return log_spaced_grid(count(g["min"], "n_grid.min"), count(g["max"], "n_grid.max"),
                         count(g["count"], "n_grid.count"));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::size_t> log_spaced_grid(std::size_t lo, std::size_t hi, std::size_t count) {
  if (lo < 2 || hi < lo) throw ConfigError("n-grid range needs 2 <= min <= max");
  if (count == 0) throw ConfigError("n-grid count must be positive");
  if (count == 1) return {lo};
  std::vector<std::size_t> grid;
  const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
  for (std::size_t k = 0; k < count; ++k) {
    const double e = static_cast<double>(k) / static_cast<double>(count - 1);
    grid.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(lo) * std::pow(ratio, e))));
  }
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k] <= grid[k - 1]) throw ConfigError("log-spaced n-grid is not strictly increasing");
  }
  return grid;
}

SpectralFilter make_filter(std::string_view family, std::span<const double> params) {
  auto param = [&](std::size_t i, double fallback) { return i < params.size() ? params[i] : fallback; };
  if (family == "exponential") return SpectralFilter::exponential(param(0, 1.0), param(1, 1.0));
  if (family == "constant") return SpectralFilter::constant(param(0, 1.0));
  if (family == "identity") return SpectralFilter::identity();
  if (family == "tent") {
    if (params.empty()) throw std::invalid_argument("tent filter needs a center");
    return SpectralFilter::tent(params[0], param(1, 1.0));
  }
  if (family == "polynomial") {
    return SpectralFilter::polynomial(std::vector<double>(params.begin(), params.end()));
  }
  throw std::invalid_argument("unknown filter family '" + std::string(family) + "'");
}

std::string ExperimentConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  return buf;
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 2) throw ConfigError("n_grid values must be >= 2");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw ConfigError("n_grid must be strictly increasing");
  }
  if (trials == 0) throw ConfigError("trials must be >= 1");
  if (truncation > n_grid.front()) throw ConfigError("truncation exceeds the smallest n");
  if (!(eigen_tol > 0.0)) throw ConfigError("spectrum.tol must be positive");
  try {
    network.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (inputs.size() != network.widths.front()) {
    throw ConfigError("signal feature count must equal network.widths[0]");
  }
  for (const auto& f : inputs) {
    if (f.coefficients.empty()) throw ConfigError("signal coefficients must not be empty");
    if (f.coefficients.size() > kMaxContinuumEigenpairs) throw ConfigError("signal has too many coefficients");
  }
  if (network.depth() > 1 && (continuum.reexpansion_bandwidth == 0 ||
                              continuum.reexpansion_bandwidth > kMaxContinuumEigenpairs)) {
    throw ConfigError("continuum.reexpansion_bandwidth out of range");
  }
  if (graph.calibration == CalibrationMode::fixed && !(graph.calibration_value > 0.0)) {
    throw ConfigError("graph.calibration must be positive");
  }
  if (!graph.tune_bandwidth && !(graph.bandwidth_constant > 0.0)) {
    throw ConfigError("graph.bandwidth_constant must be positive");
  }
  if (eigen_indices.empty()) throw ConfigError("eigen.indices must not be empty");
  for (std::size_t i : eigen_indices) {
    if (i >= kMaxContinuumEigenpairs) throw ConfigError("eigen index out of range");
  }
  if (prefix.empty()) throw ConfigError("output.prefix must not be empty");
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(doc, "config", {"manifold", "signal", "network", "graph", "spectrum", "continuum",
                             "n_grid", "trials", "seed", "output", "eigen", "full"});

  ExperimentConfig cfg;
  try {
    if (doc.contains("manifold")) cfg.manifold = manifold_kind_from_string(text(doc["manifold"], "manifold"));

    cfg.inputs = {BandlimitedSignal{std::vector<double>(9, 1.0)}};
    if (doc.contains("signal")) {
      const json& s = doc["signal"];
      allow_keys(s, "signal", {"coefficients", "features"});
      if (s.contains("coefficients") == s.contains("features")) {
        throw ConfigError("signal needs exactly one of 'coefficients' or 'features'");
      }
      if (s.contains("coefficients")) {
        cfg.inputs = {BandlimitedSignal{numbers(s["coefficients"], "signal.coefficients")}};
      } else {
        if (!s["features"].is_array()) throw ConfigError("signal.features must be an array");
        cfg.inputs.clear();
        for (const auto& f : s["features"]) {
          cfg.inputs.push_back(BandlimitedSignal{numbers(f, "signal.features")});
        }
      }
    }

    std::vector<std::size_t> widths{1, 1};
    SpectralFilter filter = SpectralFilter::exponential();
    Nonlinearity sigma = Nonlinearity::abs;
    std::optional<json> bank;
    if (doc.contains("network")) {
      const json& n = doc["network"];
      allow_keys(n, "network", {"widths", "nonlinearity", "filter", "filters"});
      if (n.contains("widths")) {
        if (!n["widths"].is_array()) throw ConfigError("network.widths must be an array");
        widths.clear();
        for (const auto& w : n["widths"]) widths.push_back(count(w, "network.widths"));
      }
      if (n.contains("nonlinearity")) sigma = nonlinearity_from_string(text(n["nonlinearity"], "network.nonlinearity"));
      if (n.contains("filter") && n.contains("filters")) {
        throw ConfigError("network takes 'filter' or 'filters', not both");
      }
      if (n.contains("filter")) filter = parse_filter(n["filter"]);
      if (n.contains("filters")) bank = n["filters"];
    }
    cfg.network = NetworkSpec::uniform(widths, filter, sigma);
    if (bank) {
      if (!bank->is_array()) throw ConfigError("network.filters must be an array");
      cfg.network.bank.clear();
      for (const auto& layer : *bank) {
        if (!layer.is_array()) throw ConfigError("network.filters layers must be arrays");
        auto& out_layer = cfg.network.bank.emplace_back();
        for (const auto& row : layer) {
          if (!row.is_array()) throw ConfigError("network.filters rows must be arrays");
          auto& out_row = out_layer.emplace_back();
          for (const auto& f : row) out_row.push_back(parse_filter(f));
        }
      }
    }

    if (doc.contains("graph")) {
      const json& g = doc["graph"];
      allow_keys(g, "graph", {"scheme", "bandwidth_constant", "calibration", "storage", "dense_limit"});
      if (g.contains("scheme")) cfg.graph.scheme = kernel_kind_from_string(text(g["scheme"], "graph.scheme"));
      if (g.contains("bandwidth_constant")) {
        const json& c = g["bandwidth_constant"];
        if (c.is_string()) {
          if (c.get<std::string>() != "tuned") throw ConfigError("graph.bandwidth_constant must be a number or \"tuned\"");
          cfg.graph.tune_bandwidth = true;
        } else {
          cfg.graph.bandwidth_constant = number(c, "graph.bandwidth_constant");
        }
      }
      if (g.contains("calibration")) {
        const json& c = g["calibration"];
        if (c.is_string()) {
          const auto mode = c.get<std::string>();
          if (mode == "auto") {
            cfg.graph.calibration = CalibrationMode::automatic;
          } else if (mode == "analytic") {
            cfg.graph.calibration = CalibrationMode::analytic;
          } else {
            throw ConfigError("graph.calibration must be \"auto\", \"analytic\" or a number");
          }
        } else {
          cfg.graph.calibration = CalibrationMode::fixed;
          cfg.graph.calibration_value = number(c, "graph.calibration");
        }
      }
      if (g.contains("storage")) {
        const auto s = text(g["storage"], "graph.storage");
        if (s == "auto") {
          cfg.graph.storage = StorageMode::automatic;
        } else if (s == "dense") {
          cfg.graph.storage = StorageMode::cached_dense;
        } else if (s == "on_the_fly") {
          cfg.graph.storage = StorageMode::on_the_fly;
        } else {
          throw ConfigError("graph.storage must be \"auto\", \"dense\" or \"on_the_fly\"");
        }
      }
      if (g.contains("dense_limit")) cfg.graph.dense_limit = count(g["dense_limit"], "graph.dense_limit");
    }

    if (doc.contains("spectrum")) {
      const json& s = doc["spectrum"];
      allow_keys(s, "spectrum", {"truncation", "tol"});
      if (s.contains("truncation")) {
        const json& k = s["truncation"];
        if (k.is_string()) {
          if (k.get<std::string>() != "dense") throw ConfigError("spectrum.truncation must be a count or \"dense\"");
          cfg.truncation = 0;
        } else {
          cfg.truncation = count(k, "spectrum.truncation");
          if (cfg.truncation == 0) throw ConfigError("spectrum.truncation must be positive");
        }
      }
      if (s.contains("tol")) cfg.eigen_tol = number(s["tol"], "spectrum.tol");
    }

    if (doc.contains("continuum")) {
      const json& c = doc["continuum"];
      allow_keys(c, "continuum", {"reexpansion_bandwidth", "quadrature_nodes", "residual_threshold"});
      if (c.contains("reexpansion_bandwidth")) {
        cfg.continuum.reexpansion_bandwidth = count(c["reexpansion_bandwidth"], "continuum.reexpansion_bandwidth");
      }
      if (c.contains("quadrature_nodes")) {
        cfg.continuum.quadrature_nodes = count(c["quadrature_nodes"], "continuum.quadrature_nodes");
      }
      if (c.contains("residual_threshold")) {
        cfg.continuum.residual_threshold = number(c["residual_threshold"], "continuum.residual_threshold");
      }
    }

    cfg.n_grid = doc.contains("n_grid") ? parse_grid(doc["n_grid"], "n_grid") : log_spaced_grid(1024, 8192, 8);
    if (doc.contains("trials")) cfg.trials = count(doc["trials"], "trials");
    if (doc.contains("seed")) cfg.seed = count(doc["seed"], "seed");

    if (doc.contains("output")) {
      const json& o = doc["output"];
      allow_keys(o, "output", {"dir", "prefix"});
      if (o.contains("dir")) cfg.out_dir = text(o["dir"], "output.dir");
      if (o.contains("prefix")) cfg.prefix = text(o["prefix"], "output.prefix");
    }

    if (doc.contains("eigen")) {
      const json& e = doc["eigen"];
      allow_keys(e, "eigen", {"indices"});
      if (e.contains("indices")) {
        if (!e["indices"].is_array()) throw ConfigError("eigen.indices must be an array");
        cfg.eigen_indices.clear();
        for (const auto& i : e["indices"]) cfg.eigen_indices.push_back(count(i, "eigen.indices"));
      }
    }

    cfg.full_n_grid = log_spaced_grid(1024, 16384, 10);
    if (doc.contains("full")) {
      const json& f = doc["full"];
      allow_keys(f, "full", {"n_grid", "trials"});
      if (f.contains("n_grid")) cfg.full_n_grid = parse_grid(f["n_grid"], "full.n_grid");
      if (f.contains("trials")) cfg.full_trials = count(f["trials"], "full.trials");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  cfg.canonical = doc.dump();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_full_scale(ExperimentConfig& config) {
  config.n_grid = config.full_n_grid;
  config.trials = config.full_trials;
  config.canonical += "#full";
  config.validate();
}

}  // namespace mnn
