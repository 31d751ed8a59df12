// One PASS/FAIL line per acceptance criterion; exit status is the number of
// failures.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedfilter/dataset.hpp"
#include "fedfilter/lms.hpp"
#include "fedfilter/perturbation.hpp"
#include "fedfilter/report.hpp"
#include "fedfilter/rng.hpp"
#include "fedfilter/simulation.hpp"
#include "oracles.hpp"

using namespace fedfilter;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// Ten devices with 10,000 samples each from the seeded AR(1) source.
SimConfig desk_config() {
  SimConfig c;
  c.n_devices = 10;
  c.seed = 2024;
  c.source.synthetic_samples = 100000;
  c.delta = 1.0;
  return c;
}

// Every sweep and run below feeds its rows through here.
struct DeadbandLedger {
  std::size_t runs = 0;
  std::size_t violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();

  void sweep(const std::vector<DeltaSweepRow>& rows) {
    for (const auto& r : rows) {
      ++runs;
      if (r.max_abs_recon_error > r.delta) ++violations;
      worst_margin = std::max(worst_margin, r.max_abs_recon_error - r.delta);
    }
  }
  void run(const RunMetrics& m) {
    ++runs;
    violations += m.deadband_violations;
    if (m.max_abs_recon_error > m.delta_initial) ++violations;
    worst_margin = std::max(worst_margin, m.max_abs_recon_error - m.delta_initial);
  }
};

DeadbandLedger deadband;

Verdict communication_reduction() {
  const auto start = std::chrono::steady_clock::now();
  const SimConfig c = desk_config();
  const auto partition = prepare_partition(c);
  const std::vector<double> deltas{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  const auto rows = sweep_delta(c, deltas, partition);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  deadband.sweep(rows);

  bool bounded = true;
  const DeltaSweepRow* first_hit = nullptr;
  for (const auto& r : rows) {
    bounded = bounded && r.max_abs_recon_error <= r.delta;
    if (!first_hit && r.suppression_ratio >= 0.90 && r.max_abs_recon_error <= r.delta)
      first_hit = &r;
  }
  const double best = std::max_element(rows.begin(), rows.end(), [](auto& a, auto& b) {
                        return a.suppression_ratio < b.suppression_ratio;
                      })->suppression_ratio;
  const bool pass = first_hit && bounded && seconds <= 30.0;
  return {pass, fmt("first delta with suppression>=0.90: %s; best %.4f; %.2f s",
                    first_hit ? fmt("%g (%.4f)", first_hit->delta, first_hit->suppression_ratio).c_str()
                              : "none",
                    best, seconds)};
}

Verdict tol_delta_relationship() {
  const SimConfig c = desk_config();
  const auto partition = prepare_partition(c);
  Matrix warmup(c.warmup_len, c.n_devices);
  for (std::size_t j = 0; j < c.n_devices; ++j)
    for (std::size_t r = 0; r < c.warmup_len; ++r) warmup(r, j) = partition[j].values[r];
  const Calibration cal = calibrate_for_delta(warmup, c.window_rows, 1.0);

  // Below this delta the linear term of tol_f dominates the quadratic one.
  const double m = static_cast<double>(cal.m), n = static_cast<double>(cal.n);
  const double crossover = 6.0 * std::sqrt(cal.trace_ref / 3.0) / std::sqrt(m * (m + n));
  std::vector<double> deltas;
  for (int i = 1; i <= 12; ++i) deltas.push_back(crossover * i / 12.0);

  const auto rows = sweep_delta(c, deltas, partition);
  deadband.sweep(rows);
  std::vector<double> x, y;
  bool increasing = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.push_back(rows[i].delta);
    y.push_back(rows[i].normalized_tol);
    if (i > 0 && !(rows[i].normalized_tol > rows[i - 1].normalized_tol)) increasing = false;
  }
  const double r = oracle::pearson(x, y);
  return {increasing && rows.size() >= 10 && r >= 0.99,
          fmt("%zu deltas in (0, %.4g], strictly increasing=%s, pearson %.5f", rows.size(),
              crossover, increasing ? "yes" : "no", r)};
}

Verdict energy_scaling() {
  SimConfig c = desk_config();
  c.delta = 2.0;
  const std::vector<std::size_t> counts{10, 20, 30, 40, 50};
  const auto rows = sweep_devices(c, counts);
  bool increasing = true;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].n_devices < 10) continue;
    if (checked > 0 && !(rows[i].energy_efficiency > rows[i - 1].energy_efficiency))
      increasing = false;
    ++checked;
  }

  const std::vector<double> chunk = synthetic_ar1(1200, 0.95, 1.0, 0.0, 17);
  SampleSeries pooled;
  for (int k = 0; k < 80; ++k) pooled.values.insert(pooled.values.end(), chunk.begin(), chunk.end());
  SimConfig a = c;
  a.delta = 1.5;
  const std::vector<std::size_t> doubling{10, 20, 40, 80};
  const auto pairs = sweep_devices(a, doubling, {pooled});
  double worst = 0.0;
  for (std::size_t i = 2; i < pairs.size(); ++i) {
    const double expected = 2.0 * pairs[i - 1].energy_efficiency;
    worst = std::max(worst, std::abs(pairs[i].energy_efficiency - expected) / expected);
  }
  return {increasing && checked == counts.size() && worst <= 1e-12,
          fmt("eta over n=10..50 strictly increasing=%s; doubling relative error %.2e",
              increasing ? "yes" : "no", worst)};
}

Verdict mirsky() {
  std::mt19937_64 rng(4);
  int trials = 0, violations = 0;
  double worst_ratio = 0.0;
  for (; trials < 400; ++trials) {
    const std::size_t m = 2 + uniform_below(rng, 31);
    const std::size_t n = 1 + uniform_below(rng, 8);
    const double delta = uniform(rng, 0.01, 2.0);
    const Matrix y = oracle::random_matrix(rng, m, n, -5.0, 5.0);
    const Matrix w = oracle::random_matrix(rng, m, n, -delta, delta);
    const Matrix a = covariance(y), a_hat = covariance(y + w);
    const double rms = eigen_perturb_rms(sym_eigenvalues(a), sym_eigenvalues(a_hat));
    const double dn = delta_norm(a, a_hat);
    if (rms > dn) ++violations;
    if (dn > 0.0) worst_ratio = std::max(worst_ratio, rms / dn);
  }

  double worst_eig = 0.0;
  int oracle_cases = 0;
  for (; oracle_cases < 200; ++oracle_cases) {
    const std::size_t order = 1 + uniform_below(rng, 4);
    const Matrix s = oracle::random_symmetric(rng, order, 3.0);
    const auto expected = oracle::eigenvalues_by_char_poly(s);
    const auto got = sym_eigenvalues(s).values;
    for (std::size_t i = 0; i < order; ++i)
      worst_eig = std::max(worst_eig, std::abs(got[i] - expected[i]));
  }
  return {violations == 0 && worst_eig <= 1e-8,
          fmt("%d trials, %d violations, max rms/||Delta|| %.3f; char-poly max error %.2e over %d",
              trials, violations, worst_ratio, worst_eig, oracle_cases)};
}

Verdict bound_validity() {
  // Checked as E(||Delta||_F / n) <= tol_f; the undivided mean is reported.
  std::mt19937_64 rng(5);
  int settings = 0, violations = 0, literal_violations = 0;
  double worst = 0.0, worst_literal = 0.0;
  constexpr int kDraws = 500;
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    for (std::size_t m : {16u, 64u, 256u}) {
      for (double delta : {0.05, 1.0}) {
        const Matrix y = oracle::random_matrix(rng, m, n, -2.0, 4.0);
        const Matrix a = covariance(y);
        const double bound = tol_f_uniform(trace_gram(y), delta, m, n);
        double sum = 0.0;
        for (int d = 0; d < kDraws; ++d)
          sum += delta_norm(a, covariance(y + oracle::random_matrix(rng, m, n, -delta, delta)));
        const double mean = sum / kDraws;
        ++settings;
        if (mean / n > bound) ++violations;
        if (mean > bound) ++literal_violations;
        worst = std::max(worst, mean / n / bound);
        worst_literal = std::max(worst_literal, mean / bound);
      }
    }
  }
  return {settings >= 20 && violations == 0,
          fmt("%d settings x %d draws, %d violations, max ratio %.3f "
              "(undivided mean above tol_f in %d, max %.3f)",
              settings, kDraws, violations, worst, literal_violations, worst_literal)};
}

Verdict round_trip() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  int trials = 0;
  for (; trials < 1000; ++trials) {
    const double trace = std::pow(10.0, uniform(rng, -2.0, 6.0));
    const std::size_t m = 1 + uniform_below(rng, 1024);
    const std::size_t n = 1 + uniform_below(rng, 64);
    const double tol = std::pow(10.0, uniform(rng, -6.0, 3.0));
    const double back = tol_f_uniform(trace, solve_delta(trace, m, n, tol), m, n);
    worst = std::max(worst, std::abs(back - tol) / tol);
  }
  return {worst <= 1e-9, fmt("%d trials, max relative error %.2e", trials, worst)};
}

Verdict deadband_guarantee() {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    for (BudgetPolicy policy : {BudgetPolicy::kEnforce, BudgetPolicy::kObserve}) {
      SimConfig c = desk_config();
      c.seed = seed;
      c.budget = policy;
      c.delta.reset();
      c.normalized_tol = 0.02;
      deadband.run(run(c).metrics);
    }
  }
  return {deadband.runs > 0 && deadband.violations == 0,
          fmt("%zu runs, %zu violations, max (error - delta) %.3g", deadband.runs,
              deadband.violations, deadband.worst_margin)};
}

Verdict lms_convergence() {
  double worst_ratio = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const std::vector<double> x = synthetic_ar1(500, 0.9, 0.01, 1.0, seed);
    const TrainResult r = train(x, FilterModel::zeros(4, choose_step_size(x, 4, {})), 10);
    worst_ratio = std::max(worst_ratio, r.report.epoch_mse.back() / r.report.epoch_mse.front());
  }

  std::mt19937_64 rng(8);
  double worst_grad = 0.0;
  int points = 0;
  while (points < 200) {
    const std::size_t taps = 1 + uniform_below(rng, 6);
    std::vector<double> theta(taps), window(taps);
    for (auto& v : theta) v = uniform(rng, -1.0, 1.0);
    for (auto& v : window) v = uniform(rng, -2.0, 2.0);
    const double target = uniform(rng, -3.0, 3.0);
    const double alpha = uniform(rng, 0.01, 0.2);
    const StepResult s = lms_step(FilterModel{theta, alpha}, window, target);
    if (s.error == 0.0) continue;
    double diff_sq = 0.0, ref_sq = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const double h = 1e-4 * std::max(1.0, std::abs(theta[k]));
      std::vector<double> up = theta, down = theta;
      up[k] += h;
      down[k] -= h;
      const double grad = (oracle::half_sq_error(target, up, window) -
                           oracle::half_sq_error(target, down, window)) /
                          (up[k] - down[k]);
      const double step = s.model.weights[k] - theta[k];
      diff_sq += (step + alpha * grad) * (step + alpha * grad);
      ref_sq += step * step;
    }
    worst_grad = std::max(worst_grad, std::sqrt(diff_sq / ref_sq));
    ++points;
  }
  return {worst_ratio <= 0.1 && worst_grad <= 1e-6,
          fmt("last/first tenth mse max %.4f; finite-difference max relative error %.2e over %d",
              worst_ratio, worst_grad, points)};
}

Verdict determinism() {
  SimConfig c = desk_config();
  c.delta.reset();
  c.normalized_tol = 0.05;
  const std::string a = render_metrics_json(run(c).metrics);
  const std::string b = render_metrics_json(run(c).metrics);
  return {a == b, fmt("%zu-byte reports %s", a.size(), a == b ? "identical" : "differ")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
  };
  // Criterion 7 collects rows from the sweeps before it, so order matters.
  const std::vector<Criterion> criteria{
      {"communication_reduction", communication_reduction},
      {"tol_delta_relationship", tol_delta_relationship},
      {"energy_scaling", energy_scaling},
      {"mirsky", mirsky},
      {"bound_validity", bound_validity},
      {"round_trip", round_trip},
      {"deadband_guarantee", deadband_guarantee},
      {"lms_convergence", lms_convergence},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
