#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "fedfilter/device_node.hpp"
#include "fedfilter/lms.hpp"
#include "fedfilter/matrix.hpp"

namespace fedfilter {

struct FogConfig {
  std::size_t n_devices = 1;
  std::size_t tap_len = 4;
  // Fraction K of devices drawn for each averaging round.
  double fraction_k = 0.8;
  std::uint64_t seed = 1;
  // Trailing reconstructed rows used to estimate E||Delta||_F.
  std::size_t window_rows = 256;
  // Rescale the n_k/n weights so the selected ones sum to 1.
  bool renormalize_weights = true;
  // Budget and the filter parameter currently installed on all devices.
  double tol_f = 0.0;
  double delta = 0.0;
  // Timestamp of the first stream row; earlier messages only register models.
  std::int64_t first_tick = 0;

  bool operator==(const FogConfig&) const = default;
};

struct DeviceSlot {
  bool registered = false;
  FilterModel model;
  std::size_t sample_count = 0;
  std::vector<double> recon_window;
  // Synchronised reconstruction of this device, one value per stream row.
  std::vector<double> recon_column;
  std::int64_t last_timestamp = 0;
  bool received_this_tick = false;

  bool operator==(const DeviceSlot&) const = default;
};

struct FogState {
  FogConfig config;
  std::vector<DeviceSlot> devices;
  FilterModel avg_model;
  std::vector<std::size_t> last_selection;
  std::mt19937_64 rng;
  // Stream row where the current perturbation window starts.
  std::size_t window_start = 0;
  // Devices summoned by the last rebalance that have not uploaded yet.
  std::vector<bool> awaiting;
  std::size_t rebalance_count = 0;
  double perturb_estimate = 0.0;

  bool operator==(const FogState&) const = default;
};

struct PerturbationStatus {
  double estimate = 0.0;
  bool exceeded = false;
  // Window holds window_rows rows and no summoned upload is outstanding.
  bool armed = false;
  std::size_t rows = 0;
};

struct Rebalance {
  double delta = 0.0;
  std::vector<std::uint32_t> summon;
};

// Fog-side coordinator: mirrors each device's dead-band reconstruction,
// averages the shared models and keeps the covariance perturbation within
// tol_f by lowering delta when the estimate exceeds it.
class FogServer {
 public:
  explicit FogServer(const FogConfig& config);

  // Replaces the device's model and window. A message at or after first_tick
  // also writes its real sample into the reconstruction. Throws ContractError
  // for unknown devices, shape mismatches and timestamps not after the last
  // one seen; the state is unchanged in that case.
  void handle_update(const UpdateMsg& msg);

  // Closes stream tick t: every device without an upload at t gets its
  // prediction appended and its window advanced.
  void advance(std::int64_t t);

  // Weighted average of round(K n) device models drawn without replacement,
  // re-drawn on every call. Stores and returns it.
  const FilterModel& average_models();

  // avg_model^T window_i for every device, using the current windows.
  std::vector<double> averaged_prediction() const;

  // Next prediction of each device's own synchronised model.
  std::vector<double> own_prediction() const;

  PerturbationStatus monitor_perturbation();

  // Lowers delta so that the estimate over the current window is within
  // tol_f, summons every device and restarts the window.
  Rebalance rebalance();

  // Weights applied to `selection` in average_models().
  std::vector<double> averaging_weights(const std::vector<std::size_t>& selection) const;

  Matrix recon_matrix() const;
  std::size_t rows() const;
  double delta() const { return state_.config.delta; }
  double tol_f() const { return state_.config.tol_f; }
  bool awaiting_updates() const;

  const FogState& state() const { return state_; }

 private:
  double window_trace() const;
  std::size_t window_size() const;

  FogState state_;
};

}  // namespace fedfilter
