#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lcgmm/geometry.hpp"

namespace lcgmm::io {

/// One line of an experiment results file.
struct ResultRow {
  std::string trial_id;
  std::string method;  // "lcgmm" or "icp"
  double lambda = 0;
  double outlier_ratio = 0;
  double noise_sigma = 0;
  long long n_points = 0;
  long long k_neighbors = 0;
  double omega = 0;
  double rmse = 0;
  double rot_error = 0;
  double trans_error = 0;
  long long iterations = 0;
  double wall_seconds = 0;
  std::string rmse_convention = "mean_then_sqrt";
  std::string status = "ok";  // "ok" or "failed:<reason>"

  bool operator==(const ResultRow&) const = default;
};

/// Column order of every results file.
extern const char* const kResultHeader;

/// Plain-text cloud: three numbers per line, '#' comments and blank lines
/// skipped.
PointCloud read_xyz(const std::filesystem::path& path);
void write_xyz(const PointCloud& cloud, const std::filesystem::path& path);

/// ASCII PLY; only the x/y/z properties of the "vertex" element are read.
PointCloud read_ply(const std::filesystem::path& path);

/// Dispatches on the extension: ".ply" reads PLY, anything else XYZ.
PointCloud read_cloud(const std::filesystem::path& path);

/// Homogeneous 4x4 matrix, row-major, one row per line, 17 significant digits.
void write_transform(const RigidTransformd& t, const std::filesystem::path& path);
RigidTransformd read_transform(const std::filesystem::path& path);

std::string format_result(const ResultRow& row);
ResultRow parse_result(const std::string& line);

/// Appends one row, writing the header first if the file is new or empty.
void append_result(const ResultRow& row, const std::filesystem::path& path);
/// Replaces the file with header + rows.
void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

}  // namespace lcgmm::io
