#include "fedfilter/fog_server.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedfilter/errors.hpp"
#include "fedfilter/perturbation.hpp"
#include "fedfilter/rng.hpp"

namespace fedfilter {

FogServer::FogServer(const FogConfig& config) {
  if (config.n_devices == 0) throw ContractError("fog: need at least one device");
  if (config.tap_len == 0) throw ContractError("fog: tap_len must be >= 1");
  if (!(config.fraction_k > 0.0 && config.fraction_k <= 1.0)) {
    throw ContractError("fog: fraction K must lie in (0, 1]");
  }
  if (config.window_rows == 0) throw ContractError("fog: window_rows must be >= 1");
  if (!(config.tol_f >= 0.0) || !(config.delta >= 0.0)) {
    throw ContractError("fog: tol_f and delta must be >= 0");
  }
  state_.config = config;
  state_.devices.resize(config.n_devices);
  state_.rng.seed(config.seed);
  state_.awaiting.assign(config.n_devices, false);
}

void FogServer::handle_update(const UpdateMsg& msg) {
  const auto& cfg = state_.config;
  if (msg.device_id >= cfg.n_devices) {
    throw ContractError("fog: unknown device id " + std::to_string(msg.device_id));
  }
  if (msg.model.tap_len() != cfg.tap_len || msg.sync_samples.size() != cfg.tap_len) {
    throw ContractError("fog: update from device " + std::to_string(msg.device_id) +
                        " has the wrong tap length");
  }
  for (double v : msg.sync_samples) {
    if (!std::isfinite(v)) throw ContractError("fog: non-finite sync sample");
  }
  DeviceSlot& slot = state_.devices[msg.device_id];
  if (slot.registered && msg.timestamp <= slot.last_timestamp) {
    throw ContractError("fog: stale update from device " + std::to_string(msg.device_id) +
                        " at t=" + std::to_string(msg.timestamp) +
                        " (last seen t=" + std::to_string(slot.last_timestamp) + ")");
  }
  const bool in_stream = msg.timestamp >= cfg.first_tick;
  const auto row = static_cast<std::size_t>(in_stream ? msg.timestamp - cfg.first_tick : 0);
  if (in_stream && row != slot.recon_column.size()) {
    throw ContractError("fog: update from device " + std::to_string(msg.device_id) +
                        " at t=" + std::to_string(msg.timestamp) +
                        " does not follow the last reconstructed row");
  }

  slot.registered = true;
  slot.model = msg.model;
  slot.sample_count = msg.sample_count;
  slot.recon_window = msg.sync_samples;
  slot.last_timestamp = msg.timestamp;
  if (in_stream) {
    slot.recon_column.push_back(msg.sync_samples.back());
    slot.received_this_tick = true;
  }

  if (state_.awaiting[msg.device_id]) {
    state_.awaiting[msg.device_id] = false;
    if (!awaiting_updates()) state_.window_start = row;
  }
}

void FogServer::advance(std::int64_t t) {
  const auto& cfg = state_.config;
  if (t < cfg.first_tick) throw ContractError("fog: tick before the first stream row");
  const auto row = static_cast<std::size_t>(t - cfg.first_tick);
  for (std::size_t i = 0; i < state_.devices.size(); ++i) {
    DeviceSlot& slot = state_.devices[i];
    if (!slot.registered) {
      throw ContractError("fog: device " + std::to_string(i) + " never registered");
    }
    if (slot.received_this_tick && slot.recon_column.size() == row + 1) continue;
    if (slot.recon_column.size() != row) {
      throw ContractError("fog: tick " + std::to_string(t) + " out of order for device " +
                          std::to_string(i));
    }
    const double predicted = predict(slot.model, slot.recon_window);
    slot.recon_column.push_back(predicted);
    std::shift_left(slot.recon_window.begin(), slot.recon_window.end(), 1);
    slot.recon_window.back() = predicted;
  }
  for (DeviceSlot& slot : state_.devices) slot.received_this_tick = false;
}

std::vector<double> FogServer::averaging_weights(
    const std::vector<std::size_t>& selection) const {
  double total = 0.0;
  if (state_.config.renormalize_weights) {
    for (std::size_t i : selection) total += static_cast<double>(state_.devices[i].sample_count);
  } else {
    for (const auto& slot : state_.devices) total += static_cast<double>(slot.sample_count);
  }
  if (total <= 0.0) throw ContractError("fog: devices reported no training samples");
  std::vector<double> weights;
  weights.reserve(selection.size());
  for (std::size_t i : selection) {
    weights.push_back(static_cast<double>(state_.devices[i].sample_count) / total);
  }
  return weights;
}

const FilterModel& FogServer::average_models() {
  const auto& cfg = state_.config;
  for (std::size_t i = 0; i < state_.devices.size(); ++i) {
    if (!state_.devices[i].registered) {
      throw ContractError("fog: cannot average before device " + std::to_string(i) +
                          " registers");
    }
    if (state_.devices[i].model.tap_len() != cfg.tap_len) {
      throw ContractError("fog: tap-length mismatch between device models");
    }
  }
  const std::size_t n = cfg.n_devices;
  const auto wanted = static_cast<std::size_t>(
      std::llround(cfg.fraction_k * static_cast<double>(n)));
  const std::size_t count = std::clamp<std::size_t>(wanted, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(state_.rng, n - i));
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());

  const std::vector<double> weights = averaging_weights(order);
  FilterModel avg = FilterModel::zeros(cfg.tap_len, 0.0);
  for (std::size_t s = 0; s < order.size(); ++s) {
    const FilterModel& model = state_.devices[order[s]].model;
    for (std::size_t k = 0; k < cfg.tap_len; ++k) avg.weights[k] += weights[s] * model.weights[k];
    avg.step_size += weights[s] * model.step_size;
  }
  state_.avg_model = std::move(avg);
  state_.last_selection = std::move(order);
  return state_.avg_model;
}

std::vector<double> FogServer::averaged_prediction() const {
  if (state_.avg_model.tap_len() != state_.config.tap_len) {
    throw ContractError("fog: no averaged model yet");
  }
  std::vector<double> out;
  out.reserve(state_.devices.size());
  for (const auto& slot : state_.devices) out.push_back(predict(state_.avg_model, slot.recon_window));
  return out;
}

std::vector<double> FogServer::own_prediction() const {
  std::vector<double> out;
  out.reserve(state_.devices.size());
  for (const auto& slot : state_.devices) out.push_back(predict(slot.model, slot.recon_window));
  return out;
}

std::size_t FogServer::rows() const {
  std::size_t rows = state_.devices.front().recon_column.size();
  for (const auto& slot : state_.devices) rows = std::min(rows, slot.recon_column.size());
  return rows;
}

std::size_t FogServer::window_size() const {
  const std::size_t total = rows();
  const std::size_t available = total > state_.window_start ? total - state_.window_start : 0;
  return std::min(available, state_.config.window_rows);
}

double FogServer::window_trace() const {
  const std::size_t total = rows();
  const std::size_t k = window_size();
  double sum = 0.0;
  for (const auto& slot : state_.devices)
    for (std::size_t r = total - k; r < total; ++r) sum += slot.recon_column[r] * slot.recon_column[r];
  return sum;
}

bool FogServer::awaiting_updates() const {
  return std::any_of(state_.awaiting.begin(), state_.awaiting.end(), [](bool b) { return b; });
}

PerturbationStatus FogServer::monitor_perturbation() {
  PerturbationStatus status;
  status.rows = window_size();
  if (status.rows == 0) {
    state_.perturb_estimate = 0.0;
    return status;
  }
  const auto& cfg = state_.config;
  status.estimate = tol_f_uniform(window_trace(), cfg.delta, status.rows, cfg.n_devices);
  status.armed = status.rows == cfg.window_rows && !awaiting_updates();
  status.exceeded = status.armed && status.estimate > cfg.tol_f;
  state_.perturb_estimate = status.estimate;
  return status;
}

Rebalance FogServer::rebalance() {
  auto& cfg = state_.config;
  const std::size_t k = window_size();
  if (k == 0) throw ContractError("fog: rebalance needs reconstructed rows");
  const double trace = window_trace();
  double delta = solve_delta(trace, k, cfg.n_devices, cfg.tol_f);
  // Round down until the closed form lands inside the budget.
  while (delta > 0.0 && tol_f_uniform(trace, delta, k, cfg.n_devices) > cfg.tol_f) {
    delta = std::nextafter(delta, 0.0);
  }
  delta = std::min(delta, cfg.delta);
  cfg.delta = delta;

  Rebalance out{delta, {}};
  out.summon.reserve(cfg.n_devices);
  for (std::size_t i = 0; i < cfg.n_devices; ++i) out.summon.push_back(static_cast<std::uint32_t>(i));
  state_.awaiting.assign(cfg.n_devices, true);
  state_.window_start = rows();
  ++state_.rebalance_count;
  return out;
}

Matrix FogServer::recon_matrix() const {
  const std::size_t m = rows();
  Matrix out(m, state_.devices.size());
  for (std::size_t c = 0; c < state_.devices.size(); ++c)
    for (std::size_t r = 0; r < m; ++r) out(r, c) = state_.devices[c].recon_column[r];
  return out;
}

}  // namespace fedfilter
