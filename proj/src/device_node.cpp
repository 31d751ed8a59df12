#include "fedfilter/device_node.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedfilter/errors.hpp"

namespace fedfilter {

namespace {

void push_capped(std::vector<double>& buffer, double value, std::size_t cap) {
  buffer.push_back(value);
  if (buffer.size() > cap) buffer.erase(buffer.begin(), buffer.end() - static_cast<long>(cap));
}

void shift_in(std::vector<double>& window, double value) {
  std::shift_left(window.begin(), window.end(), 1);
  window.back() = value;
}

}  // namespace

std::pair<DeviceNode, UpdateMsg> DeviceNode::init(std::uint32_t device_id,
                                                  std::span<const double> warmup,
                                                  const DeviceConfig& config, double delta) {
  const std::size_t taps = config.tap_len;
  if (taps == 0) throw ContractError("device: tap_len must be >= 1");
  if (warmup.size() < taps + 1) {
    throw ContractError("device " + std::to_string(device_id) + ": warm-up has " +
                        std::to_string(warmup.size()) + " samples, need at least tap_len + 1");
  }
  if (config.retrain_len < taps + 1) {
    throw ContractError("device: retrain_len must be at least tap_len + 1");
  }
  if (!(delta >= 0.0)) throw ContractError("device: delta must be >= 0");

  const double alpha = choose_step_size(warmup, taps, config.alpha);
  TrainResult trained = train(warmup, FilterModel::zeros(taps, alpha), config.init_epochs);

  DeviceState state;
  state.device_id = device_id;
  state.model = std::move(trained.model);
  state.delta = delta;
  state.recon_window.assign(warmup.end() - static_cast<long>(taps), warmup.end());
  const std::size_t keep = std::min(config.retrain_len, warmup.size());
  state.history.assign(warmup.end() - static_cast<long>(keep), warmup.end());
  state.sample_count = warmup.size();
  state.next_timestamp = static_cast<std::int64_t>(warmup.size());

  DeviceNode node(config, std::move(state));
  UpdateMsg msg = node.make_message();
  msg.timestamp = node.state_.next_timestamp - 1;
  return {std::move(node), std::move(msg)};
}

double DeviceNode::next_prediction() const { return predict(state_.model, state_.recon_window); }

std::optional<UpdateMsg> DeviceNode::step(double sample) {
  if (!std::isfinite(sample)) {
    throw ContractError("device " + std::to_string(state_.device_id) + ": non-finite sample");
  }
  const double predicted = next_prediction();
  const double deviation = sample - predicted;
  // An overflowing free-run (unstable learned recursion) must resync too.
  const bool upload = !std::isfinite(deviation) || std::abs(deviation) > state_.delta ||
                      state_.update_requested;

  if (!upload) {
    push_capped(state_.history, sample, config_.retrain_len);
    shift_in(state_.recon_window, predicted);
    state_.deviation = deviation;
    ++state_.samples_seen;
    ++state_.next_timestamp;
    return std::nullopt;
  }

  // Retrain on copies so a divergence leaves the node untouched.
  std::vector<double> history = state_.history;
  push_capped(history, sample, config_.retrain_len);
  FilterModel start = state_.model;
  // The step-size bound is taken over the data this training run sees.
  if (std::any_of(history.begin(), history.end(), [](double v) { return v != 0.0; })) {
    start.step_size = choose_step_size(history, config_.tap_len, config_.alpha);
  }
  TrainResult retrained = train(history, start, config_.retrain_epochs);

  const std::size_t taps = config_.tap_len;
  state_.model = std::move(retrained.model);
  state_.recon_window.assign(history.end() - static_cast<long>(taps), history.end());
  state_.history = std::move(history);
  state_.sample_count = state_.history.size();
  state_.deviation = 0.0;
  state_.update_requested = false;
  ++state_.samples_seen;
  ++state_.transmissions;

  UpdateMsg msg = make_message();
  msg.timestamp = state_.next_timestamp++;
  return msg;
}

void DeviceNode::apply_filter_param(double delta) {
  if (!(delta >= 0.0)) throw ContractError("device: delta must be >= 0");
  state_.delta = delta;
}

UpdateMsg DeviceNode::make_message() const {
  UpdateMsg msg;
  msg.device_id = state_.device_id;
  msg.model = state_.model;
  msg.sync_samples = state_.recon_window;
  msg.sample_count = state_.sample_count;
  return msg;
}

}  // namespace fedfilter
