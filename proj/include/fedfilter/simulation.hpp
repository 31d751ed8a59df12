#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedfilter/device_node.hpp"
#include "fedfilter/lms.hpp"
#include "fedfilter/matrix.hpp"
#include "fedfilter/perturbation.hpp"

namespace fedfilter {

struct DatasetSource {
  // Unset: seeded AR(1) series with phi = 0.95 and unit noise.
  std::optional<std::string> path;
  std::vector<std::size_t> columns{1, 2, 3};
  std::size_t synthetic_samples = 100000;
  double synthetic_phi = 0.95;
};

enum class BudgetPolicy {
  // Lower delta and summon all devices when the estimate exceeds tol_f.
  kEnforce,
  // Track the estimate only; delta stays fixed for the whole run.
  kObserve,
};

struct SimConfig {
  std::size_t n_devices = 10;
  std::size_t tap_len = 4;
  AlphaPolicy alpha;
  // Exactly one of these drives the other through the calibration data.
  std::optional<double> delta;
  std::optional<double> normalized_tol;
  double fraction_k = 0.8;
  bool renormalize_weights = true;
  std::size_t warmup_len = 256;
  std::size_t window_rows = 256;
  std::size_t init_epochs = 20;
  std::size_t retrain_len = 64;
  std::size_t retrain_epochs = 5;
  std::uint64_t seed = 1;
  double energy_per_packet = 1.0;
  double tti = 1.0;
  std::size_t header_bytes = 16;
  BudgetPolicy budget = BudgetPolicy::kEnforce;
  DatasetSource source;
};

struct RunMetrics {
  std::size_t n_devices = 0;
  std::size_t tap_len = 0;
  std::size_t rows = 0;
  std::size_t samples_total = 0;
  std::size_t transmissions_total = 0;
  std::size_t suppressed_total = 0;
  std::size_t initial_uploads = 0;
  std::size_t messages_total = 0;
  double suppression_ratio = 0.0;
  std::size_t payload_bytes = 0;
  std::size_t bytes_sent = 0;
  double energy_efficiency = 0.0;
  double max_abs_recon_error = 0.0;
  // Stream samples whose reconstruction error exceeded the delta in force.
  std::size_t deadband_violations = 0;
  double delta_initial = 0.0;
  double delta_final = 0.0;
  double tol_f = 0.0;
  double normalized_tol = 0.0;
  std::size_t rebalance_count = 0;
  // Armed ticks where the estimate exceeded tol_f without a rebalance.
  std::size_t budget_overruns = 0;
  std::vector<double> perturb_trace;
  std::vector<std::size_t> device_transmissions;

  bool operator==(const RunMetrics&) const = default;
};

struct RunResult {
  RunMetrics metrics;
  // Stream part of the partition (warm-up rows excluded), m x n.
  Matrix real;
  // Fog's synchronised reconstruction, same shape as `real`.
  Matrix recon;
  // Averaged-model prediction, same shape as `real`.
  Matrix averaged;
};

// The warm-up rows give the fog its reference scale. Tr(Y^T Y) is rescaled to
// window_rows rows so tol_f is comparable with the monitor's estimate.
struct Calibration {
  double trace_ref = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  EigenSpectrum spectrum;
  double delta = 0.0;
  double tol_f = 0.0;
  double normalized_tol = 0.0;
};

Calibration calibrate(const Matrix& warmup, std::size_t window_rows, const SimConfig& config);
Calibration calibrate_for_delta(const Matrix& warmup, std::size_t window_rows, double delta);

// The unpartitioned series of the configured source.
std::vector<SampleSeries> load_source(const DatasetSource& source, std::uint64_t seed);

// Loads the configured source and partitions it across n_devices.
std::vector<SampleSeries> prepare_partition(const SimConfig& config);

// Throws ConfigError for invalid settings.
void validate_config(const SimConfig& config);

RunResult run(const SimConfig& config);
RunResult run(const SimConfig& config, const std::vector<SampleSeries>& partition);

// header + (tap_len weights + tap_len sync samples) * 8 bytes.
std::size_t payload_bytes(std::size_t tap_len, std::size_t header_bytes = 16);

// sum_n d_n / (E_n * r_n * tti). r_n below 1 counts as 1 (the initial upload).
// Throws ContractError if any E_n <= 0, tti <= 0 or the spans differ in length.
double energy_efficiency(std::span<const double> data_volume,
                         std::span<const double> energy_per_packet,
                         std::span<const double> packets, double tti = 1.0);

struct DeltaSweepRow {
  double delta = 0.0;
  double normalized_tol = 0.0;
  double suppression_ratio = 0.0;
  std::size_t transmissions = 0;
  double max_abs_recon_error = 0.0;
};

// One run per delta with delta held fixed (BudgetPolicy::kObserve) and the
// same seed. Throws ConfigError with fewer than two values.
std::vector<DeltaSweepRow> sweep_delta(const SimConfig& config, std::span<const double> deltas);
std::vector<DeltaSweepRow> sweep_delta(const SimConfig& config, std::span<const double> deltas,
                                       const std::vector<SampleSeries>& partition);

struct DeviceSweepRow {
  std::size_t n_devices = 0;
  double energy_efficiency = 0.0;
  std::size_t transmissions = 0;
};

// Every device gets the same number of samples: the source length divided by
// the largest n. A baseline n = 1 row is added if absent; rows are sorted by n.
std::vector<DeviceSweepRow> sweep_devices(const SimConfig& config,
                                          std::span<const std::size_t> device_counts);
std::vector<DeviceSweepRow> sweep_devices(const SimConfig& config,
                                          std::span<const std::size_t> device_counts,
                                          const std::vector<SampleSeries>& source);

}  // namespace fedfilter
