#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fedfilter/lms.hpp"

namespace fedfilter {

struct DeviceConfig {
  std::size_t tap_len = 4;
  AlphaPolicy alpha;
  std::size_t init_epochs = 20;
  // Real samples kept on the device for retraining.
  std::size_t retrain_len = 64;
  std::size_t retrain_epochs = 5;

  bool operator==(const DeviceConfig&) const = default;
};

// Model upload. sync_samples are the last tap_len real samples, oldest first,
// ending at `timestamp`.
struct UpdateMsg {
  std::uint32_t device_id = 0;
  FilterModel model;
  std::vector<double> sync_samples;
  std::size_t sample_count = 0;
  std::int64_t timestamp = 0;

  bool operator==(const UpdateMsg&) const = default;
};

struct DeviceState {
  std::uint32_t device_id = 0;
  FilterModel model;
  double delta = 0.0;
  // What the fog holds for this device: last tap_len reconstructed values.
  std::vector<double> recon_window;
  // Last retrain_len real samples, oldest first.
  std::vector<double> history;
  // Deviation of the last sample from its prediction; 0 after an upload.
  double deviation = 0.0;
  // Stream samples processed by step() (warm-up excluded).
  std::size_t samples_seen = 0;
  // Uploads triggered by stream samples (the initial upload is excluded).
  std::size_t transmissions = 0;
  std::size_t sample_count = 0;
  std::int64_t next_timestamp = 0;
  bool update_requested = false;

  bool operator==(const DeviceState&) const = default;
};

// Local processing loop of one device. Each sample is predicted from the
// reconstructed window; a deviation beyond delta retrains the model on the
// recent real history and uploads it together with the real window.
class DeviceNode {
 public:
  // Trains a zero-initialised model on `warmup` and emits the first upload.
  // Timestamps count samples from the start of the warm-up.
  // Throws ContractError if warmup has fewer than tap_len + 1 samples.
  static std::pair<DeviceNode, UpdateMsg> init(std::uint32_t device_id,
                                               std::span<const double> warmup,
                                               const DeviceConfig& config,
                                               double delta);

  // Processes one sample. If retraining throws, the node keeps its pre-step
  // state.
  std::optional<UpdateMsg> step(double sample);

  // Installs a new filter parameter. Throws ContractError if negative or NaN.
  void apply_filter_param(double delta);

  // The next step() uploads regardless of the deviation.
  void request_update() { state_.update_requested = true; }

  // Prediction the next step() will compare against.
  double next_prediction() const;

  const DeviceState& state() const { return state_; }
  const DeviceConfig& config() const { return config_; }

  bool operator==(const DeviceNode&) const = default;

 private:
  DeviceNode(DeviceConfig config, DeviceState state)
      : config_(config), state_(std::move(state)) {}

  UpdateMsg make_message() const;

  DeviceConfig config_;
  DeviceState state_;
};

}  // namespace fedfilter
