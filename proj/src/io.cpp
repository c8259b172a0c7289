#include "lcgmm/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lcgmm::io {

namespace fs = std::filesystem;

const char* const kResultHeader =
    "trial_id,method,lambda,outlier_ratio,noise_sigma,n_points,k_neighbors,omega,"
    "rmse,rot_error,trans_error,iterations,wall_seconds,rmse_convention,status";

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double finite_number(std::string_view tok, const fs::path& path, std::size_t line_no) {
  double v = 0;
  if (!parse_double(tok, v)) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" +
                     std::string(tok) + "'");
  }
  if (!std::isfinite(v)) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": non-finite value");
  }
  return v;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

PointCloud to_cloud(const std::vector<Eigen::Vector3d>& pts) {
  PointCloud c(static_cast<Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) c.row(static_cast<Index>(i)) = pts[i].transpose();
  return c;
}

}  // namespace

PointCloud read_xyz(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok.front().front() == '#') continue;
    if (tok.size() != 3) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 3 values, found " +
                       std::to_string(tok.size()));
    }
    pts.emplace_back(finite_number(tok[0], path, line_no), finite_number(tok[1], path, line_no),
                     finite_number(tok[2], path, line_no));
  }
  return to_cloud(pts);
}

void write_xyz(const PointCloud& cloud, const fs::path& path) {
  validate_cloud(cloud);
  auto out = open_out(path);
  // shortest text that parses back to the same double
  char buf[32];
  for (Index i = 0; i < cloud.rows(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const auto r = std::to_chars(buf, buf + sizeof buf, cloud(i, a));
      out.write(buf, r.ptr - buf);
      out.put(a < 2 ? ' ' : '\n');
    }
  }
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

PointCloud read_ply(const fs::path& path) {
  auto in = open_in(path);
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> props;
    bool has_list = false;
  };
  std::vector<Element> elements;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line) || split_ws(line) != std::vector<std::string_view>{"ply"}) {
    throw InputError(path.string() + ": not a PLY file");
  }
  ++line_no;
  bool ascii = false, ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw InputError(path.string() + ": malformed format line");
      if (tok[1] != "ascii") throw InputError(path.string() + ": unsupported PLY format '" + std::string(tok[1]) + "' (ASCII only)");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed element line");
      Element e;
      e.name = tok[1];
      double count = 0;
      if (!parse_double(tok[2], count) || count < 0) throw InputError(path.string() + ": bad element count");
      e.count = static_cast<std::size_t>(count);
      elements.push_back(e);
    } else if (tok[0] == "property") {
      if (elements.empty() || tok.size() < 3) throw InputError(path.string() + ":" + std::to_string(line_no) + ": stray property");
      if (tok[1] == "list") elements.back().has_list = true;
      elements.back().props.emplace_back(tok.back());
    } else if (tok[0] == "end_header") {
      ended = true;
      break;
    } else {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!ascii) throw InputError(path.string() + ": missing PLY format line");
  if (!ended) throw InputError(path.string() + ": missing end_header");

  std::vector<Eigen::Vector3d> pts;
  bool found = false;
  for (const Element& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line)) throw InputError(path.string() + ": truncated body");
        ++line_no;
      }
      continue;
    }
    found = true;
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t k = 0; k < e.props.size(); ++k) {
      if (e.props[k] == "x") ix = static_cast<int>(k);
      if (e.props[k] == "y") iy = static_cast<int>(k);
      if (e.props[k] == "z") iz = static_cast<int>(k);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw InputError(path.string() + ": vertex element lacks x/y/z properties");
    if (e.has_list) throw InputError(path.string() + ": list properties on vertices are not supported");
    pts.reserve(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!std::getline(in, line)) throw InputError(path.string() + ": truncated vertex list");
      ++line_no;
      const auto tok = split_ws(line);
      if (tok.size() != e.props.size()) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(e.props.size()) + " values");
      }
      pts.emplace_back(finite_number(tok[ix], path, line_no), finite_number(tok[iy], path, line_no),
                       finite_number(tok[iz], path, line_no));
    }
    break;
  }
  if (!found) throw InputError(path.string() + ": no vertex element");
  return to_cloud(pts);
}

PointCloud read_cloud(const fs::path& path) {
  return path.extension() == ".ply" ? read_ply(path) : read_xyz(path);
}

void write_transform(const RigidTransformd& t, const fs::path& path) {
  const Eigen::Matrix4d h = t.matrix();
  auto out = open_out(path);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << (c ? " " : "") << fmt("%.17g", h(r, c));
    out << '\n';
  }
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

RigidTransformd read_transform(const fs::path& path) {
  auto in = open_in(path);
  Eigen::Matrix4d h;
  std::string line;
  std::size_t line_no = 0;
  int row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok.front().front() == '#') continue;
    if (row == 4) throw InputError(path.string() + ":" + std::to_string(line_no) + ": more than 4 rows");
    if (tok.size() != 4) throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 4 values");
    for (int c = 0; c < 4; ++c) h(row, c) = finite_number(tok[c], path, line_no);
    ++row;
  }
  if (row != 4) throw InputError(path.string() + ": expected 4 rows, found " + std::to_string(row));
  if ((h.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
    throw InputError(path.string() + ": last row must be 0 0 0 1");
  }
  const Eigen::Matrix3d r = h.topLeftCorner<3, 3>();
  if (!is_rotation<double>(r, 1e-6)) throw InputError(path.string() + ": not a proper rotation");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d proj = svd.matrixU() * svd.matrixV().transpose();
  RigidTransformd t;
  // already orthonormal to rounding: keep the stored values bit-exact
  t.rotation = (proj - r).norm() <= 1e-15 ? r : proj;
  t.translation = h.topRightCorner<3, 1>();
  return t;
}

std::string format_result(const ResultRow& r) {
  std::ostringstream s;
  s << r.trial_id << ',' << r.method << ',' << fmt("%.17g", r.lambda) << ','
    << fmt("%.17g", r.outlier_ratio) << ',' << fmt("%.17g", r.noise_sigma) << ',' << r.n_points << ','
    << r.k_neighbors << ',' << fmt("%.17g", r.omega) << ',' << fmt("%.17g", r.rmse) << ','
    << fmt("%.17g", r.rot_error) << ',' << fmt("%.17g", r.trans_error) << ',' << r.iterations << ','
    << fmt("%.17g", r.wall_seconds) << ',' << r.rmse_convention << ',' << r.status;
  return s.str();
}

ResultRow parse_result(const std::string& line) {
  std::vector<std::string> f;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  if (f.size() != 15) throw InputError("result row: expected 15 fields, found " + std::to_string(f.size()));
  auto num = [&](std::size_t i) {
    double v = 0;
    if (!parse_double(f[i], v) || !std::isfinite(v)) throw InputError("result row: bad number '" + f[i] + "'");
    return v;
  };
  auto integer = [&](std::size_t i) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(f[i].data(), f[i].data() + f[i].size(), v);
    if (ec != std::errc() || p != f[i].data() + f[i].size()) throw InputError("result row: bad integer '" + f[i] + "'");
    return v;
  };
  ResultRow r;
  r.trial_id = f[0];
  r.method = f[1];
  if (r.method != "lcgmm" && r.method != "icp") throw InputError("result row: unknown method '" + r.method + "'");
  r.lambda = num(2);
  r.outlier_ratio = num(3);
  r.noise_sigma = num(4);
  r.n_points = integer(5);
  r.k_neighbors = integer(6);
  r.omega = num(7);
  r.rmse = num(8);
  r.rot_error = num(9);
  r.trans_error = num(10);
  r.iterations = integer(11);
  r.wall_seconds = num(12);
  r.rmse_convention = f[13];
  r.status = f[14];
  return r;
}

void append_result(const ResultRow& row, const fs::path& path) {
  std::error_code ec;
  const bool fresh = !fs::exists(path, ec) || fs::file_size(path, ec) == 0;
  std::string chunk;
  if (fresh) chunk = std::string(kResultHeader) + '\n';
  chunk += format_result(row) + '\n';
  auto out = open_out(path, std::ios::app);
  out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  out.flush();
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

void write_results(const std::vector<ResultRow>& rows, const fs::path& path) {
  std::string body = std::string(kResultHeader) + '\n';
  for (const auto& r : rows) body += format_result(r) + '\n';
  const fs::path tmp = path.string() + ".tmp";
  {
    auto out = open_out(tmp);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw InputError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::vector<ResultRow> read_results(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) {
    throw InputError(path.string() + ": missing or unexpected results header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_result(line));
  }
  return rows;
}

}  // namespace lcgmm::io
