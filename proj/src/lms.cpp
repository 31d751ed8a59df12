#include "fedfilter/lms.hpp"

#include <cmath>
#include <string>

#include "fedfilter/errors.hpp"

namespace fedfilter {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ContractError(std::string(what) + ": non-finite value");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// In-place Widrow-Hoff update; returns the pre-update error.
double update(FilterModel& model, std::span<const double> window, double target) {
  const double error = target - dot(model.weights, window);
  if (error == 0.0) return error;
  const double gain = model.step_size * error;
  for (std::size_t k = 0; k < window.size(); ++k) model.weights[k] += gain * window[k];
  for (double w : model.weights) {
    if (!std::isfinite(w)) {
      throw DivergenceError("lms: non-finite weights, step size " +
                            std::to_string(model.step_size) + " is too large");
    }
  }
  return error;
}

void check_training_input(std::span<const double> series, const FilterModel& model) {
  if (model.tap_len() == 0) throw ContractError("train: tap_len must be >= 1");
  if (series.size() < model.tap_len() + 1) {
    throw ContractError("train: series needs at least tap_len + 1 samples");
  }
  if (!(model.step_size >= 0.0) || !std::isfinite(model.step_size)) {
    throw ContractError("train: step size must be finite and >= 0");
  }
  require_finite(series, "train");
  require_finite(model.weights, "train");
}

}  // namespace

FilterModel FilterModel::zeros(std::size_t tap_len, double step_size) {
  return FilterModel{std::vector<double>(tap_len, 0.0), step_size};
}

double predict(const FilterModel& model, std::span<const double> window) {
  if (window.size() != model.tap_len()) {
    throw ContractError("predict: window length " + std::to_string(window.size()) +
                        " != tap_len " + std::to_string(model.tap_len()));
  }
  require_finite(window, "predict");
  return dot(model.weights, window);
}

StepResult lms_step(const FilterModel& model, std::span<const double> window, double target) {
  if (!std::isfinite(target)) throw ContractError("lms_step: non-finite target");
  if (window.size() != model.tap_len()) {
    throw ContractError("lms_step: window length does not match tap_len");
  }
  require_finite(window, "lms_step");
  StepResult result{model, 0.0};
  result.error = update(result.model, window, target);
  return result;
}

double evaluate_mse(std::span<const double> series, const FilterModel& model) {
  check_training_input(series, model);
  const std::size_t taps = model.tap_len();
  double sum = 0.0;
  for (std::size_t t = taps; t < series.size(); ++t) {
    const double e = series[t] - dot(model.weights, series.subspan(t - taps, taps));
    sum += 0.5 * e * e;
  }
  return sum / static_cast<double>(series.size() - taps);
}

TrainResult train(std::span<const double> series, const FilterModel& initial,
                  std::size_t epochs) {
  check_training_input(series, initial);
  const std::size_t taps = initial.tap_len();
  const auto pairs = static_cast<double>(series.size() - taps);

  TrainResult result{initial, {}};
  result.report.epochs = epochs;
  result.report.epoch_mse.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    double sum = 0.0;
    for (std::size_t t = taps; t < series.size(); ++t) {
      double e = 0.0;
      try {
        e = update(result.model, series.subspan(t - taps, taps), series[t]);
      } catch (const DivergenceError& ex) {
        throw DivergenceError(std::string(ex.what()) + " (epoch " + std::to_string(epoch) +
                              ", sample " + std::to_string(t) + ")");
      }
      sum += 0.5 * e * e;
    }
    result.report.epoch_mse.push_back(sum / pairs);
  }
  result.report.final_mse = evaluate_mse(series, result.model);
  return result;
}

TrainResult train(const SampleSeries& series, const FilterModel& initial, std::size_t epochs) {
  return train(std::span<const double>(series.values), initial, epochs);
}

double alpha_max(std::span<const double> series, std::size_t m, std::size_t tap_len) {
  if (m == 0 || m > series.size()) {
    throw ContractError("alpha_max: need 1 <= M <= series length");
  }
  if (tap_len == 0) throw ContractError("alpha_max: tap_len must be >= 1");
  require_finite(series.first(m), "alpha_max");
  double power = 0.0;
  for (std::size_t j = 0; j < m; ++j) power += series[j] * series[j];
  power /= static_cast<double>(m);
  if (power == 0.0) throw ContractError("alpha_max: zero signal power, step size unbounded");
  return 1.0 / (static_cast<double>(tap_len) * power);
}

double choose_step_size(std::span<const double> series, std::size_t tap_len,
                        const AlphaPolicy& policy) {
  if (!(policy.fraction >= 0.0 && policy.fraction <= 1.0)) {
    throw ContractError("alpha policy fraction must lie in [0, 1]");
  }
  return policy.fraction * alpha_max(series, series.size(), tap_len);
}

}  // namespace fedfilter
