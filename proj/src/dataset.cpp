#include "fedfilter/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include "fedfilter/errors.hpp"
#include "fedfilter/rng.hpp"

namespace fedfilter {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

// Splits on runs of blanks/tabs and parses every field as a double.
bool parse_row(std::string_view line, std::vector<double>& out, std::string& bad_field) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    const std::string_view field = line.substr(i, j - i);
    double value = 0.0;
    const char* first = field.data();
    if (!field.empty() && field.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
      bad_field = std::string(field);
      return false;
    }
    out.push_back(value);
    i = j;
  }
  return true;
}

}  // namespace

std::vector<SampleSeries> load_dataset(const std::filesystem::path& path,
                                       std::span<const std::size_t> columns) {
  if (columns.empty()) throw DataError("load_dataset: no columns selected");
  for (std::size_t c : columns) {
    if (c == 0) throw DataError("load_dataset: column indices are 1-based");
  }
  std::ifstream in(path);
  if (!in) throw DataError("load_dataset: cannot open " + path.string());

  const std::size_t needed = *std::max_element(columns.begin(), columns.end());
  std::vector<SampleSeries> series(columns.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    series[s].device_id = static_cast<std::uint32_t>(s);
  }

  std::string line;
  std::vector<double> fields;
  std::string bad;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    if (!parse_row(line, fields, bad)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field '" +
                      bad + "'");
    }
    if (fields.size() < needed) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": row has " +
                      std::to_string(fields.size()) + " columns, column " +
                      std::to_string(needed) + " requested");
    }
    for (std::size_t s = 0; s < columns.size(); ++s) {
      series[s].values.push_back(fields[columns[s] - 1]);
    }
  }
  if (in.bad()) throw DataError("load_dataset: read error on " + path.string());
  if (series.front().values.empty()) throw DataError("load_dataset: " + path.string() + " has no rows");
  return series;
}

std::vector<SampleSeries> partition_devices(const std::vector<SampleSeries>& series,
                                            std::size_t n_devices, std::size_t min_len) {
  if (n_devices == 0) throw ConfigError("partition: need at least one device");
  std::size_t total = 0;
  for (const auto& s : series) total += s.values.size();
  const std::size_t chunk = total / n_devices;
  if (chunk < std::max<std::size_t>(min_len, 1)) {
    throw ConfigError("partition: " + std::to_string(total) + " samples cannot give " +
                      std::to_string(n_devices) + " devices " +
                      std::to_string(std::max<std::size_t>(min_len, 1)) + " samples each");
  }
  std::vector<SampleSeries> out(n_devices);
  std::size_t device = 0;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (device == n_devices) break;
      out[device].values.push_back(v);
      if (out[device].values.size() == chunk) ++device;
    }
  }
  for (std::size_t i = 0; i < n_devices; ++i) {
    out[i].device_id = static_cast<std::uint32_t>(i);
    if (!series.empty()) out[i].period_s = series.front().period_s;
  }
  return out;
}

std::vector<double> synthetic_ar1(std::size_t length, double phi, double noise_sigma,
                                  double mean, std::uint64_t seed) {
  if (!(std::abs(phi) < 1.0)) throw ConfigError("synthetic_ar1: |phi| must be < 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synthetic_ar1: noise sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::vector<double> x;
  x.reserve(length);
  if (length == 0) return x;
  const double stationary_sd = noise_sigma / std::sqrt(1.0 - phi * phi);
  double deviation = stationary_sd * standard_normal(rng);
  x.push_back(mean + deviation);
  for (std::size_t t = 1; t < length; ++t) {
    deviation = phi * deviation + noise_sigma * standard_normal(rng);
    x.push_back(mean + deviation);
  }
  return x;
}

}  // namespace fedfilter
