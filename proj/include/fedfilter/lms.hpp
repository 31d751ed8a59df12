#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedfilter {

// Tap-weight vector of a linear predictor plus the step size it trains with.
// Weights are aligned with prediction windows ordered oldest sample first.
struct FilterModel {
  std::vector<double> weights;
  double step_size = 0.0;

  std::size_t tap_len() const { return weights.size(); }

  static FilterModel zeros(std::size_t tap_len, double step_size);

  bool operator==(const FilterModel&) const = default;
};

// One device's scalar time series, sampled every period_s seconds.
struct SampleSeries {
  std::uint32_t device_id = 0;
  std::vector<double> values;
  double period_s = 30.0;

  bool operator==(const SampleSeries&) const = default;
};

struct TrainReport {
  // Mean of e^2/2 over all window/target pairs for the returned model.
  double final_mse = 0.0;
  // Mean of e^2/2 seen during each pass, taken before each update.
  std::vector<double> epoch_mse;
  std::size_t epochs = 0;
};

struct StepResult {
  FilterModel model;
  double error = 0.0;
};

struct TrainResult {
  FilterModel model;
  TrainReport report;
};

// theta^T window. Throws ContractError on length mismatch or non-finite input.
double predict(const FilterModel& model, std::span<const double> window);

// One Widrow-Hoff step: e = target - predict(model, window),
// theta += step_size * e * window. The model is returned untouched when e == 0.
// Throws DivergenceError if the update is not finite.
StepResult lms_step(const FilterModel& model, std::span<const double> window, double target);

// Runs `epochs` sequential passes over every (L previous samples, next sample)
// pair in `series`, starting from `initial`.
TrainResult train(std::span<const double> series, const FilterModel& initial, std::size_t epochs);
TrainResult train(const SampleSeries& series, const FilterModel& initial, std::size_t epochs);

// Mean of e^2/2 of `model` over the series' window/target pairs, no updates.
double evaluate_mse(std::span<const double> series, const FilterModel& model);

// Upper step-size bound 1/P_Y, where P_Y is the mean squared norm of the
// regressor over the first m samples. A tap_len-long regressor of a sequence
// with mean power p has squared norm tap_len * p, so for tap_len == 1 this is
// 1 / ((1/m) * sum y_j^2).
double alpha_max(std::span<const double> series, std::size_t m, std::size_t tap_len = 1);

// Step size chosen as a fraction of alpha_max over the whole training series.
struct AlphaPolicy {
  double fraction = 0.5;

  bool operator==(const AlphaPolicy&) const = default;
};

double choose_step_size(std::span<const double> series, std::size_t tap_len,
                        const AlphaPolicy& policy);

}  // namespace fedfilter
