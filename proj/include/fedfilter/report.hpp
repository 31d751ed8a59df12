#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedfilter/matrix.hpp"
#include "fedfilter/simulation.hpp"

namespace fedfilter {

enum class ReportFormat { kJson, kCsv };

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table delta_sweep_table(const std::vector<DeltaSweepRow>& rows);
Table device_sweep_table(const std::vector<DeviceSweepRow>& rows);

// Shortest round-trip decimal form; integers print without a fraction.
std::string format_number(double value);

// JSON object with lexicographically sorted keys.
std::string render_metrics_json(const RunMetrics& metrics);
// Scalar metrics as a header row plus one value row.
std::string render_metrics_csv(const RunMetrics& metrics);
std::string render_csv(const Table& table);
// Array of objects keyed by the header.
std::string render_json(const Table& table);
std::string render_matrix_csv(const Matrix& matrix);

// Writes through a temporary file in the same directory and renames it into
// place. Throws std::runtime_error naming the path on failure.
void write_atomic(const std::filesystem::path& path, const std::string& content);

void emit_report(const RunMetrics& metrics, const std::filesystem::path& path,
                 ReportFormat format);
void emit_report(const Table& table, const std::filesystem::path& path, ReportFormat format);

}  // namespace fedfilter
