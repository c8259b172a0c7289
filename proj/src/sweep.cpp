#include "lcgmm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace lcgmm {

const char* to_string(SweepMode m) {
  switch (m) {
    case SweepMode::lambda: return "lambda";
    case SweepMode::outliers: return "outliers";
    case SweepMode::noise: return "noise";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  if (grid.empty()) throw InputError("sweep grid is empty");
  if (trials_per_cell < 1) throw InputError("trials must be >= 1");
  if (methods.empty()) throw InputError("sweep needs at least one method");
  for (const auto& m : methods) {
    if (m != "lcgmm" && m != "icp") throw InputError("unknown method '" + m + "'");
  }
  if (jobs < 1) throw InputError("jobs must be >= 1");
  base.validate();
  lcgmm.validate();
  icp.validate();
  for (double v : grid) {
    if (!std::isfinite(v)) throw InputError("grid values must be finite");
    if (mode == SweepMode::lambda && v < 0) throw InputError("lambda grid values must be >= 0");
    if (mode == SweepMode::outliers && !(v >= 0 && v < 1)) throw InputError("outlier grid values must lie in [0, 1)");
    if (mode == SweepMode::noise && v < 0) throw InputError("noise grid values must be >= 0");
  }
}

SweepSpec default_sweep(SweepMode mode) {
  SweepSpec s;
  s.mode = mode;
  s.base.n_points = 3000;
  s.base.angle_range_deg = 60.0;
  s.base.trans_range = 10.0;
  s.base.seed = 2024;
  switch (mode) {
    case SweepMode::lambda:
      s.grid = {0.0, 0.4, 0.8, 1.2, 1.6, 2.0};
      s.base.outlier_ratio = 0.10;
      s.base.noise_sigma = 4.0;
      break;
    case SweepMode::outliers:
      s.grid = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40};
      s.base.noise_sigma = 4.0;
      s.lcgmm.lambda = 0.5;
      break;
    case SweepMode::noise:
      s.grid = {2.0, 3.0, 4.0, 5.0};
      s.base.outlier_ratio = 0.10;
      s.lcgmm.lambda = 0.5;
      break;
  }
  return s;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw InputError("config key '" + key + "': '" + v + "' is not a finite number");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw InputError("config key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream s(v);
  while (std::getline(s, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SweepMode parse_mode(const std::string& v) {
  if (v == "lambda") return SweepMode::lambda;
  if (v == "outliers") return SweepMode::outliers;
  if (v == "noise") return SweepMode::noise;
  throw InputError("unknown sweep mode '" + v + "' (lambda|outliers|noise)");
}

void apply_key(SweepSpec& s, const std::string& key, const std::string& v) {
  if (key == "mode") {
    s.mode = parse_mode(v);
  } else if (key == "grid") {
    s.grid.clear();
    for (const auto& item : split_list(v)) s.grid.push_back(to_double(key, item));
  } else if (key == "trials") {
    s.trials_per_cell = static_cast<int>(to_int(key, v));
  } else if (key == "methods") {
    s.methods = split_list(v);
  } else if (key == "n_points") {
    s.base.n_points = to_int(key, v);
  } else if (key == "model") {
    s.model_path = v;
  } else if (key == "model_points") {
    s.model_points = to_int(key, v);
  } else if (key == "model_seed") {
    s.model_seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "noise") {
    s.base.noise_sigma = to_double(key, v);
  } else if (key == "outliers") {
    s.base.outlier_ratio = to_double(key, v);
  } else if (key == "angle_range") {
    s.base.angle_range_deg = to_double(key, v);
  } else if (key == "trans_range") {
    s.base.trans_range = to_double(key, v);
  } else if (key == "seed") {
    s.base.seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "lambda") {
    s.lcgmm.lambda = to_double(key, v);
  } else if (key == "omega") {
    s.lcgmm.outlier_weight = to_double(key, v);
  } else if (key == "k") {
    s.lcgmm.knn_k = to_int(key, v);
  } else if (key == "max_iters") {
    s.lcgmm.max_iterations = static_cast<int>(to_int(key, v));
  } else if (key == "tol") {
    s.lcgmm.convergence_tol = to_double(key, v);
  } else if (key == "variance_floor") {
    s.lcgmm.variance_floor = to_double(key, v);
  } else if (key == "truncation") {
    s.lcgmm.posterior_truncation = to_double(key, v);
  } else if (key == "icp_max_iters") {
    s.icp.max_iterations = static_cast<int>(to_int(key, v));
  } else if (key == "icp_tol") {
    s.icp.convergence_tol = to_double(key, v);
  } else if (key == "icp_trim") {
    s.icp.trim_fraction = to_double(key, v);
  } else if (key == "rmse_convention") {
    s.convention = metrics::parse_convention(v);
  } else if (key == "paired_cells") {
    s.paired_cells = to_bool(key, v);
  } else if (key == "record_timing") {
    s.record_timing = to_bool(key, v);
  } else if (key == "jobs") {
    s.jobs = static_cast<int>(to_int(key, v));
  } else if (key == "out") {
    s.output = v;
  } else {
    throw InputError("unknown sweep key '" + key + "'");
  }
}

std::string sanitize(std::string reason) {
  for (char& c : reason) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return reason;
}

std::string trial_id(std::size_t cell, std::size_t trial) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "c%03zu-t%03zu", cell, trial);
  return buf;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

SweepSpec build_sweep_spec(const KeyValues& kv) {
  SweepMode mode = SweepMode::lambda;
  for (const auto& [k, v] : kv) {
    if (k == "mode") mode = parse_mode(v);
  }
  SweepSpec s = default_sweep(mode);
  for (const auto& [k, v] : kv) apply_key(s, k, v);
  s.validate();
  return s;
}

std::uint64_t trial_seed(const SweepSpec& spec, std::size_t cell, std::size_t trial) {
  const std::uint64_t cell_key = spec.paired_cells ? 0 : static_cast<std::uint64_t>(cell) + 1;
  return synth::derive_seed(spec.base.seed, cell_key, static_cast<std::uint64_t>(trial));
}

synth::CorruptionSpec trial_corruption(const SweepSpec& spec, std::size_t cell, std::size_t trial) {
  synth::CorruptionSpec c = spec.base;
  if (spec.mode == SweepMode::outliers) c.outlier_ratio = spec.grid.at(cell);
  if (spec.mode == SweepMode::noise) c.noise_sigma = spec.grid.at(cell);
  c.seed = trial_seed(spec, cell, trial);
  return c;
}

PointCloud sweep_model(const SweepSpec& spec) {
  if (spec.model_path) return io::read_cloud(*spec.model_path);
  return synth::blade_model(spec.model_points, spec.model_seed);
}

std::vector<io::ResultRow> run_sweep(const SweepSpec& spec, const PointCloud& model) {
  spec.validate();
  validate_cloud(model, "model cloud");
  std::vector<std::string> methods = spec.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  const std::size_t cells = spec.grid.size();
  const auto trials = static_cast<std::size_t>(spec.trials_per_cell);
  const std::size_t tasks = cells * trials;
  std::vector<io::ResultRow> rows(tasks * methods.size());

  auto run_task = [&](std::size_t task) {
    const std::size_t cell = task / trials;
    const std::size_t trial = task % trials;
    const synth::CorruptionSpec corruption = trial_corruption(spec, cell, trial);
    RegistrationConfig cfg = spec.lcgmm;
    if (spec.mode == SweepMode::lambda) cfg.lambda = spec.grid[cell];

    std::optional<synth::Trial> data;
    std::string data_error;
    try {
      data = synth::make_trial(model, corruption);
    } catch (const std::exception& e) {
      data_error = e.what();
    }

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      io::ResultRow row;
      row.trial_id = trial_id(cell, trial);
      row.method = methods[mi];
      row.lambda = cfg.lambda;
      row.outlier_ratio = corruption.outlier_ratio;
      row.noise_sigma = corruption.noise_sigma;
      row.n_points = corruption.n_points;
      row.k_neighbors = cfg.knn_k;
      row.omega = cfg.outlier_weight;
      row.rmse_convention = metrics::to_string(spec.convention);
      try {
        if (!data) throw InputError(data_error);
        const RegistrationReport report = methods[mi] == "lcgmm"
                                              ? register_clouds(data->scanned, model, cfg)
                                              : baselines::icp(data->scanned, model, spec.icp);
        const metrics::ErrorTriple err =
            metrics::evaluate(model, data->ground_truth, report.transform, spec.convention);
        row.rmse = err.rmse;
        row.rot_error = err.rot_error;
        row.trans_error = err.trans_error;
        row.iterations = report.iterations_run;
        row.wall_seconds = spec.record_timing ? report.wall_time : 0.0;
      } catch (const std::exception& e) {
        row.status = "failed:" + sanitize(e.what());
      }
      rows[task * methods.size() + mi] = std::move(row);
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) run_task(t);
      });
    }
  }
  return rows;
}

}  // namespace lcgmm
