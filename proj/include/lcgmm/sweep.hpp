#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcgmm/icp.hpp"
#include "lcgmm/io.hpp"
#include "lcgmm/metrics.hpp"
#include "lcgmm/mixture.hpp"
#include "lcgmm/synth.hpp"

namespace lcgmm {

enum class SweepMode { lambda, outliers, noise };

const char* to_string(SweepMode m);

/// A grid experiment: every grid value is a cell, every cell runs
/// trials_per_cell corrupted trials through each method.
struct SweepSpec {
  SweepMode mode = SweepMode::lambda;
  std::vector<double> grid;
  int trials_per_cell = 6;
  synth::CorruptionSpec base;
  RegistrationConfig lcgmm;
  baselines::IcpConfig icp;
  std::vector<std::string> methods{"lcgmm", "icp"};
  metrics::RmseConvention convention = metrics::RmseConvention::mean_then_sqrt;
  std::optional<std::filesystem::path> model_path;  // unset: synthetic blade
  Index model_points = 5000;
  std::uint64_t model_seed = 7;
  /// true: every cell reuses the trial's random draws (subsample, motion,
  /// noise, outliers), so cells differ only in the swept quantity.
  /// false: the cell index is mixed into each trial seed.
  bool paired_cells = true;
  bool record_timing = true;
  int jobs = 1;
  std::filesystem::path output = "sweep.csv";

  void validate() const;
};

/// Defaults for one sub-experiment: the lambda sweep runs at 10% outliers
/// and sigma 4; the outlier and noise sweeps run at lambda 0.5.
SweepSpec default_sweep(SweepMode mode);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// key=value lines; '#' starts a comment. Keys are not interpreted here.
KeyValues parse_key_values(const std::string& text);

/// Mode defaults first (from the last "mode" key), then every key in order.
SweepSpec build_sweep_spec(const KeyValues& kv);

/// Seed of trial `trial` in grid cell `cell`.
std::uint64_t trial_seed(const SweepSpec& spec, std::size_t cell, std::size_t trial);

/// Corruption parameters of one cell/trial.
synth::CorruptionSpec trial_corruption(const SweepSpec& spec, std::size_t cell, std::size_t trial);

/// Rows sorted by (cell, trial, method). Failed registrations become rows
/// with zeroed metrics and status "failed:<reason>".
std::vector<io::ResultRow> run_sweep(const SweepSpec& spec, const PointCloud& model);

/// Loads (or synthesizes) the model cloud named by the spec.
PointCloud sweep_model(const SweepSpec& spec);

}  // namespace lcgmm
