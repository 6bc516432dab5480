#include "lpf/bench/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lpf::bench {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  std::string line;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) line += ',';
      line += format_double(m(r, c));
    }
    line += '\n';
    out << line;
  }
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    while (*p != '\0') {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("malformed number in " + path.string());
      row.push_back(v);
      p = end;
      if (*p == ',') ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

nlohmann::json diagnostics_to_json(const lagged::StepDiagnostics& d) {
  nlohmann::json j;
  j["obs_index"] = d.obs_index;
  j["time"] = d.time;
  j["temperatures"] = d.temperatures;
  j["phi"] = d.phi;
  j["ess"] = d.ess;
  j["acceptance"] = d.acceptance;
  j["resampled"] = d.resampled;
  j["log_incr_var"] = d.log_incr_var;
  j["multiplier"] = d.multiplier;
  j["wall_seconds"] = d.wall_seconds;
  return j;
}

void write_diagnostics_jsonl(const std::filesystem::path& path, const std::vector<lagged::StepDiagnostics>& steps) {
  std::ofstream out = open_out(path);
  for (const auto& s : steps) out << diagnostics_to_json(s).dump() << '\n';
}

}  // namespace lpf::bench
