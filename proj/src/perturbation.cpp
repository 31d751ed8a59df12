#include "fedfilter/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "fedfilter/errors.hpp"

namespace fedfilter {

namespace {

void require_nonnegative(double value, const char* what) {
  if (!(value >= 0.0)) throw ContractError(std::string(what) + " must be >= 0");
}

void require_dims(std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw ContractError("m and n must be >= 1");
}

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace

Matrix covariance(const Matrix& y) {
  if (y.rows() == 0) throw ContractError("covariance: need at least one row");
  if (!y.all_finite()) throw ContractError("covariance: non-finite data");
  const std::size_t n = y.cols();
  const double scale = 1.0 / static_cast<double>(y.rows());
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t r = 0; r < y.rows(); ++r) sum += y(r, i) * y(r, j);
      a(i, j) = a(j, i) = scale * sum;
    }
  }
  return a;
}

double trace_gram(const Matrix& y) {
  double sum = 0.0;
  for (double v : y.values()) sum += v * v;
  return sum;
}

EigenSpectrum sym_eigenvalues(const Matrix& input, const JacobiOptions& options) {
  if (input.rows() != input.cols()) throw ContractError("sym_eigenvalues: matrix not square");
  if (!input.all_finite()) throw ContractError("sym_eigenvalues: non-finite entries");
  const std::size_t n = input.rows();
  const double norm = frobenius_norm(input);
  const double sym_tol = 1e-9 * std::max(1.0, norm);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > sym_tol) {
        throw ContractError("sym_eigenvalues: matrix is not symmetric");
      }

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));

  const double target = options.relative_tolerance * norm;
  int sweep = 0;
  while (off_diagonal_norm(a) > target) {
    if (sweep++ == options.max_sweeps) {
      throw std::runtime_error("sym_eigenvalues: Jacobi did not converge in " +
                               std::to_string(options.max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }

  EigenSpectrum spectrum;
  spectrum.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) spectrum.values.push_back(a(i, i));
  std::sort(spectrum.values.begin(), spectrum.values.end(), std::greater<>());
  return spectrum;
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (double v : m.values()) sum += v * v;
  return std::sqrt(sum);
}

double delta_norm(const Matrix& a, const Matrix& a_hat) {
  if (a.rows() != a_hat.rows() || a.cols() != a_hat.cols()) {
    throw ContractError("delta_norm: dimension mismatch");
  }
  return frobenius_norm(a - a_hat);
}

double tol_f(double trace_yty, std::span<const double> sigma_sq, std::size_t m,
             std::size_t n) {
  require_dims(m, n);
  require_nonnegative(trace_yty, "tol_f: Tr(Y^T Y)");
  if (sigma_sq.size() != n) throw ContractError("tol_f: need one variance per device");
  double sum_var = 0.0;
  double sum_var_sq = 0.0;
  for (double s : sigma_sq) {
    require_nonnegative(s, "tol_f: sigma^2");
    sum_var += s;
    sum_var_sq += s * s;
  }
  if (std::isinf(sum_var)) return std::numeric_limits<double>::infinity();
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double cross = 2.0 * std::sqrt(trace_yty * sum_var / (md * md * nd));
  const double quadratic = std::sqrt((1.0 / md + 1.0 / nd) * sum_var_sq);
  return cross + quadratic;
}

double tol_f_uniform(double trace_yty, double delta, std::size_t m, std::size_t n) {
  require_nonnegative(delta, "tol_f: delta");
  const std::vector<double> sigma_sq(n, uniform_variance(delta));
  return tol_f(trace_yty, sigma_sq, m, n);
}

double solve_delta(double trace_yty, std::size_t m, std::size_t n, double tol) {
  require_dims(m, n);
  require_nonnegative(trace_yty, "solve_delta: Tr(Y^T Y)");
  require_nonnegative(tol, "solve_delta: tolerance");
  if (tol == 0.0) return 0.0;
  if (std::isinf(tol)) return std::numeric_limits<double>::infinity();
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double base = 3.0 * trace_yty / md;
  const double lift = 3.0 * tol * std::sqrt(nd * md + md * md);
  // sqrt(base + lift) - sqrt(base) == lift / (sqrt(base + lift) + sqrt(base))
  return lift / ((std::sqrt(base + lift) + std::sqrt(base)) * std::sqrt(md + nd));
}

double normalized_tol(double tol, const EigenSpectrum& spectrum) {
  require_nonnegative(tol, "normalized_tol: tolerance");
  if (spectrum.values.empty()) throw ContractError("normalized_tol: empty spectrum");
  double sum_sq = 0.0;
  for (double l : spectrum.values) sum_sq += l * l;
  if (sum_sq == 0.0) throw ContractError("normalized_tol: all eigenvalues are zero");
  return tol / std::sqrt(sum_sq / static_cast<double>(spectrum.size()));
}

double eigen_perturb_rms(const EigenSpectrum& real_spec, const EigenSpectrum& pert_spec) {
  if (real_spec.size() != pert_spec.size() || real_spec.values.empty()) {
    throw ContractError("eigen_perturb_rms: spectra must be non-empty and equally long");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < real_spec.size(); ++i) {
    const double d = pert_spec.values[i] - real_spec.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(real_spec.size()));
}

PerturbationBound PerturbationBound::compute(double trace_yty, std::vector<double> sigma_sq,
                                             std::size_t m, std::size_t n) {
  const double value = fedfilter::tol_f(trace_yty, sigma_sq, m, n);
  return PerturbationBound{value, trace_yty, std::move(sigma_sq), m, n};
}

PerturbationBound PerturbationBound::uniform(double trace_yty, double delta, std::size_t m,
                                             std::size_t n) {
  require_nonnegative(delta, "PerturbationBound: delta");
  return compute(trace_yty, std::vector<double>(n, uniform_variance(delta)), m, n);
}

}  // namespace fedfilter
