#pragma once

#include "lpf/common.hpp"
#include "lpf/lagged_filter.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace lpf::bench {

/// 17 significant digits ("%.17g"); round-trips every double.
std::string format_double(double x);

/// One row per line, comma separated, no header.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json diagnostics_to_json(const lagged::StepDiagnostics& d);
/// One JSON object per line.
void write_diagnostics_jsonl(const std::filesystem::path& path, const std::vector<lagged::StepDiagnostics>& steps);

}  // namespace lpf::bench
