#include "fedfilter/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fedfilter/perturbation.hpp"
#include "fedfilter/rng.hpp"
#include "fedfilter/simulation.hpp"

namespace fedfilter {

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo,
                     double hi) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = uniform(rng, lo, hi);
  return m;
}

std::string describe(std::size_t failures, std::size_t trials, double worst, const char* what) {
  std::ostringstream os;
  os << failures << "/" << trials << " violations, worst " << what << " " << worst;
  return os.str();
}

CheckResult check_mirsky(std::mt19937_64& rng) {
  constexpr std::size_t kTrials = 200;
  std::size_t failures = 0;
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    const std::size_t m = 2 + uniform_below(rng, 31);
    const std::size_t n = 1 + uniform_below(rng, 8);
    const double delta = uniform(rng, 0.01, 1.0);
    const Matrix y = random_matrix(rng, m, n, -3.0, 3.0);
    const Matrix y_hat = y + random_matrix(rng, m, n, -delta, delta);
    const Matrix a = covariance(y);
    const Matrix a_hat = covariance(y_hat);
    const double rhs = delta_norm(a, a_hat);
    // Classical (undivided) Mirsky: sqrt(sum (lambda_hat - lambda)^2) <= ||Delta||_F.
    const double lhs = std::sqrt(static_cast<double>(n)) *
                       eigen_perturb_rms(sym_eigenvalues(a), sym_eigenvalues(a_hat));
    const double slack = 1e-9 * std::max(1.0, frobenius_norm(a));
    worst = std::max(worst, lhs - rhs);
    if (lhs > rhs + slack) ++failures;
  }
  return {"mirsky", failures == 0, describe(failures, kTrials, worst, "excess")};
}

CheckResult check_round_trip(std::mt19937_64& rng) {
  constexpr std::size_t kTrials = 200;
  std::size_t failures = 0;
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    const std::size_t m = 1 + uniform_below(rng, 5000);
    const std::size_t n = 1 + uniform_below(rng, 64);
    const double trace = std::pow(10.0, uniform(rng, -3.0, 6.0));
    const double tol = std::pow(10.0, uniform(rng, -4.0, 3.0));
    const double back = tol_f_uniform(trace, solve_delta(trace, m, n, tol), m, n);
    const double rel = std::abs(back - tol) / tol;
    worst = std::max(worst, rel);
    if (rel > 1e-9) ++failures;
  }
  return {"delta_tol_round_trip", failures == 0, describe(failures, kTrials, worst, "relative error")};
}

CheckResult check_eigen_trace(std::mt19937_64& rng) {
  constexpr std::size_t kTrials = 100;
  std::size_t failures = 0;
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 1 + uniform_below(rng, 16);
    const Matrix b = random_matrix(rng, n, n, -1.0, 1.0);
    const Matrix a = 0.5 * (b + b.transpose());
    const EigenSpectrum spec = sym_eigenvalues(a);
    double sum = 0.0;
    for (double l : spec.values) sum += l;
    const double scale = std::max(std::abs(a.trace()), frobenius_norm(a));
    const double rel = std::abs(sum - a.trace()) / scale;
    const bool sorted = std::is_sorted(spec.values.rbegin(), spec.values.rend());
    worst = std::max(worst, rel);
    if (rel > 1e-9 || !sorted) ++failures;
  }
  return {"eigen_trace", failures == 0, describe(failures, kTrials, worst, "relative error")};
}

CheckResult check_tol_monotone(std::mt19937_64& rng) {
  constexpr std::size_t kTrials = 200;
  std::size_t failures = 0;
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    const std::size_t m = 1 + uniform_below(rng, 1000);
    const std::size_t n = 1 + uniform_below(rng, 50);
    const double trace = uniform(rng, 0.1, 1e4);
    const double d1 = uniform(rng, 0.0, 5.0);
    const double d2 = d1 + uniform(rng, 1e-3, 1.0);
    if (!(tol_f_uniform(trace, d1, m, n) < tol_f_uniform(trace, d2, m, n))) ++failures;
    const double t1 = uniform(rng, 0.0, 10.0);
    const double t2 = t1 + uniform(rng, 1e-3, 1.0);
    if (!(solve_delta(trace, m, n, t1) < solve_delta(trace, m, n, t2))) ++failures;
  }
  std::ostringstream os;
  os << failures << "/" << 2 * kTrials << " pairs out of order";
  return {"tol_monotone", failures == 0, os.str()};
}

CheckResult check_deadband(std::uint64_t seed) {
  SimConfig config;
  config.n_devices = 4;
  config.delta = 1.0;
  config.seed = seed;
  config.source.synthetic_samples = 8000;
  const RunResult r = run(config);
  std::ostringstream os;
  os << "max |Y - Y_sync| = " << r.metrics.max_abs_recon_error << " at delta "
     << *config.delta << ", " << r.metrics.deadband_violations << " violations";
  const bool ok = r.metrics.deadband_violations == 0 &&
                  r.metrics.max_abs_recon_error <= *config.delta;
  return {"deadband", ok, os.str()};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> results;
  results.push_back(check_mirsky(rng));
  results.push_back(check_round_trip(rng));
  results.push_back(check_eigen_trace(rng));
  results.push_back(check_tol_monotone(rng));
  results.push_back(check_deadband(seed));
  return results;
}

}  // namespace fedfilter
