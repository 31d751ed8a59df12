#include "fedfilter/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedfilter/dataset.hpp"
#include "fedfilter/errors.hpp"
#include "fedfilter/fog_server.hpp"

namespace fedfilter {

namespace {

double rms_eigenvalue(const EigenSpectrum& spectrum) {
  double sum_sq = 0.0;
  for (double l : spectrum.values) sum_sq += l * l;
  return std::sqrt(sum_sq / static_cast<double>(spectrum.size()));
}

double normalized_or_limit(double tol, const EigenSpectrum& spectrum) {
  if (rms_eigenvalue(spectrum) > 0.0) return normalized_tol(tol, spectrum);
  return tol == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

Matrix column_block(const std::vector<SampleSeries>& partition, std::size_t first,
                    std::size_t count) {
  Matrix m(count, partition.size());
  for (std::size_t c = 0; c < partition.size(); ++c)
    for (std::size_t r = 0; r < count; ++r) m(r, c) = partition[c].values[first + r];
  return m;
}

}  // namespace

Calibration calibrate_for_delta(const Matrix& warmup, std::size_t window_rows, double delta) {
  SimConfig config;
  config.delta = delta;
  return calibrate(warmup, window_rows, config);
}

Calibration calibrate(const Matrix& warmup, std::size_t window_rows, const SimConfig& config) {
  if (warmup.rows() == 0 || warmup.cols() == 0) throw ConfigError("calibration: empty warm-up");
  Calibration cal;
  cal.m = window_rows;
  cal.n = warmup.cols();
  cal.trace_ref = trace_gram(warmup) * static_cast<double>(window_rows) /
                  static_cast<double>(warmup.rows());
  cal.spectrum = sym_eigenvalues(covariance(warmup));
  if (config.delta) {
    cal.delta = *config.delta;
    cal.tol_f = tol_f_uniform(cal.trace_ref, cal.delta, cal.m, cal.n);
    cal.normalized_tol = normalized_or_limit(cal.tol_f, cal.spectrum);
  } else {
    const double rms = rms_eigenvalue(cal.spectrum);
    if (rms == 0.0) throw ConfigError("calibration: warm-up data is all zero, --tol is undefined");
    cal.normalized_tol = *config.normalized_tol;
    cal.tol_f = cal.normalized_tol * rms;
    cal.delta = solve_delta(cal.trace_ref, cal.m, cal.n, cal.tol_f);
  }
  return cal;
}

void validate_config(const SimConfig& c) {
  if (c.n_devices == 0) throw ConfigError("need at least one device");
  if (c.tap_len == 0) throw ConfigError("tap length must be >= 1");
  if (c.delta.has_value() == c.normalized_tol.has_value()) {
    throw ConfigError("set exactly one of delta and tol");
  }
  if (c.delta && !(*c.delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (c.normalized_tol && !(*c.normalized_tol >= 0.0 && std::isfinite(*c.normalized_tol))) {
    throw ConfigError("tol must be finite and >= 0");
  }
  if (!(c.fraction_k > 0.0 && c.fraction_k <= 1.0)) throw ConfigError("fraction K must lie in (0, 1]");
  if (!(c.alpha.fraction > 0.0 && c.alpha.fraction <= 1.0)) {
    throw ConfigError("step-size fraction must lie in (0, 1]");
  }
  if (c.warmup_len < c.tap_len + 1) throw ConfigError("warm-up must be at least tap length + 1");
  if (c.retrain_len < c.tap_len + 1) throw ConfigError("retrain length must be at least tap length + 1");
  if (c.window_rows == 0) throw ConfigError("perturbation window must be >= 1 row");
  if (!(c.energy_per_packet > 0.0)) throw ConfigError("energy per packet must be > 0");
  if (!(c.tti > 0.0)) throw ConfigError("TTI must be > 0");
  if (!c.source.path && c.source.synthetic_samples == 0) {
    throw ConfigError("synthetic sample count must be > 0");
  }
}

std::vector<SampleSeries> load_source(const DatasetSource& source, std::uint64_t seed) {
  if (source.path) return load_dataset(*source.path, source.columns);
  SampleSeries s;
  s.values = synthetic_ar1(source.synthetic_samples, source.synthetic_phi, 1.0, 0.0, seed);
  return {std::move(s)};
}

std::vector<SampleSeries> prepare_partition(const SimConfig& config) {
  validate_config(config);
  return partition_devices(load_source(config.source, config.seed), config.n_devices,
                           config.warmup_len + 1);
}

RunResult run(const SimConfig& config) { return run(config, prepare_partition(config)); }

RunResult run(const SimConfig& config, const std::vector<SampleSeries>& partition) {
  validate_config(config);
  const std::size_t n = config.n_devices;
  if (partition.size() != n) {
    throw ConfigError("partition has " + std::to_string(partition.size()) + " series for " +
                      std::to_string(n) + " devices");
  }
  const std::size_t length = partition.front().values.size();
  for (const auto& s : partition) {
    if (s.values.size() != length) throw ConfigError("device series differ in length");
  }
  if (length < config.warmup_len + 1) {
    throw ConfigError("each device needs more than warm-up length samples");
  }
  const std::size_t warmup = config.warmup_len;
  const std::size_t stream = length - warmup;

  RunResult result;
  result.real = column_block(partition, warmup, stream);
  const Calibration cal = calibrate(column_block(partition, 0, warmup), config.window_rows, config);

  DeviceConfig device_config;
  device_config.tap_len = config.tap_len;
  device_config.alpha = config.alpha;
  device_config.init_epochs = config.init_epochs;
  device_config.retrain_len = config.retrain_len;
  device_config.retrain_epochs = config.retrain_epochs;

  FogConfig fog_config;
  fog_config.n_devices = n;
  fog_config.tap_len = config.tap_len;
  fog_config.fraction_k = config.fraction_k;
  fog_config.seed = config.seed;
  fog_config.window_rows = config.window_rows;
  fog_config.renormalize_weights = config.renormalize_weights;
  fog_config.tol_f = cal.tol_f;
  fog_config.delta = cal.delta;
  fog_config.first_tick = static_cast<std::int64_t>(warmup);
  FogServer fog(fog_config);

  std::vector<DeviceNode> devices;
  devices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [node, msg] = DeviceNode::init(
        static_cast<std::uint32_t>(i),
        std::span<const double>(partition[i].values).first(warmup), device_config, cal.delta);
    fog.handle_update(msg);
    devices.push_back(std::move(node));
  }

  RunMetrics& metrics = result.metrics;
  metrics.perturb_trace.reserve(stream);
  result.averaged = Matrix(stream, n);
  std::vector<double> delta_in_force(stream);

  for (std::size_t r = 0; r < stream; ++r) {
    const auto t = static_cast<std::int64_t>(warmup + r);
    try {
      fog.average_models();
      const std::vector<double> averaged = fog.averaged_prediction();
      std::copy(averaged.begin(), averaged.end(), result.averaged.row(r).begin());

      delta_in_force[r] = fog.delta();
      for (std::size_t i = 0; i < n; ++i) {
        if (auto msg = devices[i].step(result.real(r, i))) fog.handle_update(*msg);
      }
      fog.advance(t);

      const PerturbationStatus status = fog.monitor_perturbation();
      metrics.perturb_trace.push_back(status.estimate);
      if (status.exceeded) {
        if (config.budget == BudgetPolicy::kEnforce) {
          const Rebalance rb = fog.rebalance();
          for (std::uint32_t id : rb.summon) {
            devices[id].apply_filter_param(rb.delta);
            devices[id].request_update();
          }
        } else {
          ++metrics.budget_overruns;
        }
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError("tick " + std::to_string(t) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("tick " + std::to_string(t) + ": " + e.what());
    }
  }

  result.recon = fog.recon_matrix();
  for (std::size_t r = 0; r < stream; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double err = std::abs(result.real(r, i) - result.recon(r, i));
      metrics.max_abs_recon_error = std::max(metrics.max_abs_recon_error, err);
      if (err > delta_in_force[r]) ++metrics.deadband_violations;
    }
  }

  metrics.n_devices = n;
  metrics.tap_len = config.tap_len;
  metrics.rows = stream;
  metrics.samples_total = stream * n;
  metrics.device_transmissions.reserve(n);
  for (const auto& d : devices) {
    metrics.device_transmissions.push_back(d.state().transmissions);
    metrics.transmissions_total += d.state().transmissions;
  }
  metrics.suppressed_total = metrics.samples_total - metrics.transmissions_total;
  metrics.initial_uploads = n;
  metrics.messages_total = metrics.transmissions_total + metrics.initial_uploads;
  metrics.suppression_ratio = 1.0 - static_cast<double>(metrics.transmissions_total) /
                                        static_cast<double>(metrics.samples_total);
  metrics.payload_bytes = payload_bytes(config.tap_len, config.header_bytes);
  metrics.bytes_sent = metrics.transmissions_total * metrics.payload_bytes;

  const std::vector<double> volume(n, static_cast<double>(stream));
  const std::vector<double> energy(n, config.energy_per_packet);
  std::vector<double> packets;
  packets.reserve(n);
  for (std::size_t tx : metrics.device_transmissions) packets.push_back(static_cast<double>(tx));
  metrics.energy_efficiency = energy_efficiency(volume, energy, packets, config.tti);

  metrics.delta_initial = cal.delta;
  metrics.delta_final = fog.delta();
  metrics.tol_f = cal.tol_f;
  metrics.normalized_tol = cal.normalized_tol;
  metrics.rebalance_count = fog.state().rebalance_count;
  return result;
}

std::size_t payload_bytes(std::size_t tap_len, std::size_t header_bytes) {
  return header_bytes + 2 * tap_len * sizeof(double);
}

double energy_efficiency(std::span<const double> data_volume,
                         std::span<const double> energy_per_packet,
                         std::span<const double> packets, double tti) {
  if (data_volume.size() != energy_per_packet.size() || data_volume.size() != packets.size()) {
    throw ContractError("energy_efficiency: inputs differ in length");
  }
  if (!(tti > 0.0)) throw ContractError("energy_efficiency: TTI must be > 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < data_volume.size(); ++i) {
    if (!(energy_per_packet[i] > 0.0)) {
      throw ContractError("energy_efficiency: energy per packet must be > 0");
    }
    if (!(data_volume[i] >= 0.0)) throw ContractError("energy_efficiency: negative data volume");
    const double r = std::max(packets[i], 1.0);
    sum += data_volume[i] / (energy_per_packet[i] * r * tti);
  }
  return sum;
}

std::vector<DeltaSweepRow> sweep_delta(const SimConfig& config, std::span<const double> deltas) {
  if (deltas.size() < 2) throw ConfigError("delta sweep needs at least two values");
  SimConfig probe = config;
  if (!probe.delta && !probe.normalized_tol) probe.delta = deltas.front();
  return sweep_delta(config, deltas, prepare_partition(probe));
}

std::vector<DeltaSweepRow> sweep_delta(const SimConfig& config, std::span<const double> deltas,
                                       const std::vector<SampleSeries>& partition) {
  if (deltas.size() < 2) throw ConfigError("delta sweep needs at least two values");
  std::vector<DeltaSweepRow> rows;
  rows.reserve(deltas.size());
  for (double delta : deltas) {
    SimConfig cfg = config;
    cfg.delta = delta;
    cfg.normalized_tol.reset();
    cfg.budget = BudgetPolicy::kObserve;
    const RunResult r = run(cfg, partition);
    rows.push_back({delta, r.metrics.normalized_tol, r.metrics.suppression_ratio,
                    r.metrics.transmissions_total, r.metrics.max_abs_recon_error});
  }
  return rows;
}

std::vector<DeviceSweepRow> sweep_devices(const SimConfig& config,
                                          std::span<const std::size_t> device_counts) {
  SimConfig probe = config;
  if (!probe.delta && !probe.normalized_tol) probe.delta = 0.0;
  validate_config(probe);
  return sweep_devices(config, device_counts, load_source(config.source, config.seed));
}

std::vector<DeviceSweepRow> sweep_devices(const SimConfig& config,
                                          std::span<const std::size_t> device_counts,
                                          const std::vector<SampleSeries>& source) {
  std::vector<std::size_t> counts(device_counts.begin(), device_counts.end());
  if (std::find(counts.begin(), counts.end(), std::size_t{1}) == counts.end()) counts.push_back(1);
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  if (counts.front() == 0) throw ConfigError("device counts must be >= 1");

  SampleSeries pooled;
  for (const auto& s : source) pooled.values.insert(pooled.values.end(), s.values.begin(), s.values.end());
  const std::size_t largest = counts.back();
  const std::size_t per_device = pooled.values.size() / largest;
  if (per_device < config.warmup_len + 1) {
    throw ConfigError("not enough data for " + std::to_string(largest) + " devices: " +
                      std::to_string(per_device) + " samples each, need more than " +
                      std::to_string(config.warmup_len));
  }

  std::vector<DeviceSweepRow> rows;
  rows.reserve(counts.size());
  for (std::size_t n : counts) {
    SimConfig cfg = config;
    cfg.n_devices = n;
    cfg.budget = BudgetPolicy::kObserve;
    SampleSeries slice;
    slice.values.assign(pooled.values.begin(),
                        pooled.values.begin() + static_cast<long>(n * per_device));
    const RunResult r = run(cfg, partition_devices({slice}, n, config.warmup_len + 1));
    rows.push_back({n, r.metrics.energy_efficiency, r.metrics.transmissions_total});
  }
  return rows;
}

}  // namespace fedfilter
