#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedfilter/matrix.hpp"

namespace fedfilter {

// Eigenvalues of a symmetric matrix, sorted descending.
struct EigenSpectrum {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const EigenSpectrum&) const = default;
};

struct JacobiOptions {
  // Stop once the off-diagonal Frobenius mass is below this times ||A||_F.
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
};

// (1/m) Y^T Y for an m x n data matrix.
Matrix covariance(const Matrix& y);

// Tr(Y^T Y), i.e. the sum of squared entries of Y.
double trace_gram(const Matrix& y);

// Cyclic Jacobi rotations. Throws ContractError unless `a` is square and
// symmetric within 1e-9 (scaled by max(1, ||A||_F)).
EigenSpectrum sym_eigenvalues(const Matrix& a, const JacobiOptions& options = {});

double frobenius_norm(const Matrix& m);

// ||A - A_hat||_F.
double delta_norm(const Matrix& a, const Matrix& a_hat);

// Variance of Uniform[-delta, delta].
constexpr double uniform_variance(double delta) { return delta * delta / 3.0; }

// Upper bound on E||Delta||_F:
//   2 sqrt(Tr(Y^T Y) * sum(sigma_i^2) / (m^2 n)) + sqrt((1/m + 1/n) * sum((sigma_i^2)^2))
// sigma_sq holds one variance per device, so sigma_sq.size() must equal n.
double tol_f(double trace_yty, std::span<const double> sigma_sq, std::size_t m, std::size_t n);

// tol_f with every device filtering at the same delta (sigma_i^2 = delta^2 / 3).
double tol_f_uniform(double trace_yty, double delta, std::size_t m, std::size_t n);

// Inverse of tol_f_uniform in delta:
//   delta = (sqrt(3 Tr/m + 3 T sqrt(nm + m^2)) - sqrt(3 Tr/m)) / sqrt(m + n)
// evaluated in the rationalized form, which avoids cancellation when T << Tr.
double solve_delta(double trace_yty, std::size_t m, std::size_t n, double tol);

// Budget scaled by the RMS eigenvalue: tol / sqrt(sum(lambda_i^2) / n).
double normalized_tol(double tol, const EigenSpectrum& spectrum);

// sqrt((1/n) sum (lambda_hat_i - lambda_i)^2) over equally sorted spectra.
double eigen_perturb_rms(const EigenSpectrum& real_spec, const EigenSpectrum& pert_spec);

// Inputs and value of one tol_f evaluation.
struct PerturbationBound {
  double tol_f = 0.0;
  double trace_yty = 0.0;
  std::vector<double> sigma_sq;
  std::size_t m = 0;
  std::size_t n = 0;

  static PerturbationBound compute(double trace_yty, std::vector<double> sigma_sq,
                                   std::size_t m, std::size_t n);
  static PerturbationBound uniform(double trace_yty, double delta, std::size_t m,
                                   std::size_t n);
};

}  // namespace fedfilter
