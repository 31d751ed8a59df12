#include "fedfilter/report.hpp"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <system_error>

#include "json.hpp"

namespace fedfilter {

namespace {

using Json = nlohmann::json;

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json metrics_object(const RunMetrics& m) {
  Json j = Json::object();
  j["bytes_sent"] = m.bytes_sent;
  j["budget_overruns"] = m.budget_overruns;
  j["deadband_violations"] = m.deadband_violations;
  j["delta_final"] = number(m.delta_final);
  j["delta_initial"] = number(m.delta_initial);
  j["device_transmissions"] = m.device_transmissions;
  j["energy_efficiency"] = number(m.energy_efficiency);
  j["initial_uploads"] = m.initial_uploads;
  j["max_abs_recon_error"] = number(m.max_abs_recon_error);
  j["messages_total"] = m.messages_total;
  j["n_devices"] = m.n_devices;
  j["normalized_tol"] = number(m.normalized_tol);
  j["payload_bytes"] = m.payload_bytes;
  Json trace = Json::array();
  for (double v : m.perturb_trace) trace.push_back(number(v));
  j["perturb_trace"] = std::move(trace);
  j["rebalance_count"] = m.rebalance_count;
  j["rows"] = m.rows;
  j["samples_total"] = m.samples_total;
  j["suppressed_total"] = m.suppressed_total;
  j["suppression_ratio"] = number(m.suppression_ratio);
  j["tap_len"] = m.tap_len;
  j["tol_f"] = number(m.tol_f);
  j["transmissions_total"] = m.transmissions_total;
  return j;
}

// Scalar metrics keyed in lexicographic order.
std::map<std::string, double> scalar_metrics(const RunMetrics& m) {
  auto d = [](std::size_t v) { return static_cast<double>(v); };
  return {
      {"bytes_sent", d(m.bytes_sent)},
      {"budget_overruns", d(m.budget_overruns)},
      {"deadband_violations", d(m.deadband_violations)},
      {"delta_final", m.delta_final},
      {"delta_initial", m.delta_initial},
      {"energy_efficiency", m.energy_efficiency},
      {"initial_uploads", d(m.initial_uploads)},
      {"max_abs_recon_error", m.max_abs_recon_error},
      {"messages_total", d(m.messages_total)},
      {"n_devices", d(m.n_devices)},
      {"normalized_tol", m.normalized_tol},
      {"payload_bytes", d(m.payload_bytes)},
      {"rebalance_count", d(m.rebalance_count)},
      {"rows", d(m.rows)},
      {"samples_total", d(m.samples_total)},
      {"suppressed_total", d(m.suppressed_total)},
      {"suppression_ratio", m.suppression_ratio},
      {"tap_len", d(m.tap_len)},
      {"tol_f", m.tol_f},
      {"transmissions_total", d(m.transmissions_total)},
  };
}

}  // namespace

Table delta_sweep_table(const std::vector<DeltaSweepRow>& rows) {
  Table t{{"delta", "normalized_tol", "suppression_ratio", "transmissions"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.delta, r.normalized_tol, r.suppression_ratio,
                      static_cast<double>(r.transmissions)});
  }
  return t;
}

Table device_sweep_table(const std::vector<DeviceSweepRow>& rows) {
  Table t{{"n_devices", "energy_efficiency", "transmissions"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<double>(r.n_devices), r.energy_efficiency,
                      static_cast<double>(r.transmissions)});
  }
  return t;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::to_chars_result res;
  if (value == std::trunc(value) && std::abs(value) < 1e15) {
    res = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(value));
  } else {
    res = std::to_chars(buf, buf + sizeof buf, value);
  }
  return std::string(buf, res.ptr);
}

std::string render_metrics_json(const RunMetrics& metrics) {
  return metrics_object(metrics).dump(2) + "\n";
}

std::string render_metrics_csv(const RunMetrics& metrics) {
  Table t;
  std::vector<double> row;
  for (const auto& [key, value] : scalar_metrics(metrics)) {
    t.header.push_back(key);
    row.push_back(value);
  }
  t.rows.push_back(std::move(row));
  return render_csv(t);
}

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out += ',';
    out += table.header[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string render_json(const Table& table) {
  Json arr = Json::array();
  for (const auto& row : table.rows) {
    Json obj = Json::object();
    for (std::size_t c = 0; c < table.header.size() && c < row.size(); ++c) {
      obj[table.header[c]] = number(row[c]);
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

std::string render_matrix_csv(const Matrix& matrix) {
  std::string out;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    if (c) out += ',';
    out += "device_" + std::to_string(c);
  }
  out += '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      if (c) out += ',';
      out += format_number(matrix(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw std::runtime_error("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw std::runtime_error("cannot move report into " + path.string() + ": " + ec.message());
  }
}

void emit_report(const RunMetrics& metrics, const std::filesystem::path& path,
                 ReportFormat format) {
  write_atomic(path, format == ReportFormat::kJson ? render_metrics_json(metrics)
                                                   : render_metrics_csv(metrics));
}

void emit_report(const Table& table, const std::filesystem::path& path, ReportFormat format) {
  write_atomic(path, format == ReportFormat::kJson ? render_json(table) : render_csv(table));
}

}  // namespace fedfilter
