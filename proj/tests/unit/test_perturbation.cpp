#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "fedfilter/errors.hpp"
#include "fedfilter/matrix.hpp"
#include "fedfilter/perturbation.hpp"
#include "fedfilter/rng.hpp"
#include "oracles.hpp"

using namespace fedfilter;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("covariance: examples") {
  CHECK(covariance(Matrix::from_rows({{1.0}, {1.0}})) == Matrix::from_rows({{1.0}}));
  CHECK(covariance(Matrix(3, 2)) == Matrix(2, 2));
  CHECK(covariance(Matrix::identity(2)) == 0.5 * Matrix::identity(2));
  CHECK_THROWS_AS(covariance(Matrix(0, 2)), ContractError);
}

TEST_CASE("covariance and trace_gram agree with explicit loops") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix y = oracle::random_matrix(rng, 1 + uniform_below(rng, 40),
                                           1 + uniform_below(rng, 6), -3.0, 3.0);
    const Matrix a = covariance(y);
    const Matrix ref = oracle::gram_over_m(y);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) {
        REQUIRE(a(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-12));
        REQUIRE(a(i, j) == a(j, i));
      }
    REQUIRE(trace_gram(y) == doctest::Approx(oracle::sum_squares(y)).epsilon(1e-12));
  }
}

TEST_CASE("sym_eigenvalues: examples") {
  CHECK(sym_eigenvalues(Matrix::from_rows({{3.0, 0.0}, {0.0, 1.0}})).values ==
        std::vector<double>{3.0, 1.0});
  const EigenSpectrum s = sym_eigenvalues(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
  REQUIRE(s.size() == 2);
  CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.values[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(sym_eigenvalues(Matrix::identity(4)).values == std::vector<double>(4, 1.0));
  CHECK(sym_eigenvalues(Matrix(3, 3)).values == std::vector<double>(3, 0.0));
}

TEST_CASE("sym_eigenvalues: input checks") {
  CHECK_THROWS_AS(sym_eigenvalues(Matrix(2, 3)), ContractError);
  CHECK_THROWS_AS(sym_eigenvalues(Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})), ContractError);
  Matrix nan = Matrix::identity(2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sym_eigenvalues(nan), ContractError);
  // Rounding-level asymmetry is accepted.
  CHECK_NOTHROW(sym_eigenvalues(Matrix::from_rows({{1.0, 0.5}, {0.5 + 1e-13, 2.0}})));
}

TEST_CASE("sym_eigenvalues matches characteristic-polynomial roots") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t order = 2 + uniform_below(rng, 3);
    const Matrix a = oracle::random_symmetric(rng, order, 2.0);
    const std::vector<double> ref = oracle::eigenvalues_by_char_poly(a);
    const EigenSpectrum got = sym_eigenvalues(a);
    REQUIRE(ref.size() == order);
    for (std::size_t i = 0; i < order; ++i) REQUIRE(std::abs(got.values[i] - ref[i]) <= 1e-8);
  }
}

TEST_CASE("sym_eigenvalues: sorted, trace preserving") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t order = 1 + uniform_below(rng, 8);
    const Matrix a = covariance(oracle::random_matrix(rng, 4 + uniform_below(rng, 40), order));
    const EigenSpectrum s = sym_eigenvalues(a);
    REQUIRE(s.size() == order);
    for (std::size_t i = 1; i < order; ++i) REQUIRE(s.values[i - 1] >= s.values[i]);
    const double sum = std::accumulate(s.values.begin(), s.values.end(), 0.0);
    REQUIRE(rel_err(sum, a.trace()) <= 1e-9);
  }
}

TEST_CASE("frobenius_norm and delta_norm: examples") {
  CHECK(frobenius_norm(Matrix(2, 2)) == 0.0);
  CHECK(frobenius_norm(Matrix::from_rows({{3.0, 4.0}})) == 5.0);
  CHECK(frobenius_norm(Matrix::identity(4)) == 2.0);

  const Matrix a = Matrix::from_rows({{2.0}});
  CHECK(delta_norm(a, a) == 0.0);
  CHECK(delta_norm(a, Matrix::from_rows({{1.0}})) == 1.0);
  CHECK_THROWS_AS(delta_norm(Matrix(2, 2), Matrix(3, 3)), ContractError);

  std::mt19937_64 rng(24);
  const Matrix x = oracle::random_symmetric(rng, 3);
  const Matrix y = oracle::random_symmetric(rng, 3);
  CHECK(delta_norm(x, y) == frobenius_norm(x - y));
  CHECK(frobenius_norm(x) == doctest::Approx(oracle::frobenius(x)).epsilon(1e-14));
}

TEST_CASE("uniform_variance matches a large uniform sample") {
  std::mt19937_64 rng(25);
  const double delta = 1.7;
  double sum_sq = 0.0;
  constexpr int kDraws = 1000000;
  for (int i = 0; i < kDraws; ++i) {
    const double w = uniform(rng, -delta, delta);
    sum_sq += w * w;
  }
  CHECK(rel_err(sum_sq / kDraws, uniform_variance(delta)) <= 5e-3);
  static_assert(uniform_variance(3.0) == 3.0);
}

TEST_CASE("tol_f: examples") {
  CHECK(tol_f(5.0, std::vector<double>{0.0, 0.0}, 10, 2) == 0.0);
  CHECK(tol_f(1.0, std::vector<double>{1.0}, 1, 1) ==
        doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-15));
  CHECK(tol_f_uniform(1.0, std::sqrt(3.0), 1, 1) ==
        doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("tol_f: errors") {
  CHECK_THROWS_AS(tol_f(-1.0, std::vector<double>{1.0}, 1, 1), ContractError);
  CHECK_THROWS_AS(tol_f(1.0, std::vector<double>{-1.0}, 1, 1), ContractError);
  CHECK_THROWS_AS(tol_f(1.0, std::vector<double>{1.0}, 0, 1), ContractError);
  CHECK_THROWS_AS(tol_f(1.0, std::vector<double>{1.0, 1.0}, 4, 3), ContractError);
  CHECK_THROWS_AS(tol_f_uniform(1.0, -0.5, 4, 3), ContractError);
}

TEST_CASE("tol_f reproduces the reference formula") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + uniform_below(rng, 500);
    const std::size_t n = 1 + uniform_below(rng, 50);
    const double tr = uniform(rng, 0.0, 1e4);
    std::vector<double> sig(n);
    for (double& s : sig) s = uniform(rng, 0.0, 5.0);
    const double ref = oracle::tol_f_reference(tr, sig, static_cast<double>(m),
                                               static_cast<double>(n));
    REQUIRE(rel_err(tol_f(tr, sig, m, n), ref) <= 1e-12);
    const PerturbationBound b = PerturbationBound::compute(tr, sig, m, n);
    REQUIRE(rel_err(b.tol_f, ref) <= 1e-12);
    REQUIRE(rel_err(tol_f(b.trace_yty, b.sigma_sq, b.m, b.n), b.tol_f) <= 1e-12);
  }
  const PerturbationBound u = PerturbationBound::uniform(50.0, 0.4, 64, 5);
  CHECK(u.sigma_sq == std::vector<double>(5, uniform_variance(0.4)));
  CHECK(u.tol_f == tol_f_uniform(50.0, 0.4, 64, 5));
}

TEST_CASE("tol_f: zero trace keeps only the noise-noise term") {
  const std::vector<double> sig{0.5, 0.25};
  CHECK(tol_f(0.0, sig, 8, 2) ==
        doctest::Approx(std::sqrt((1.0 / 8 + 1.0 / 2) * (0.25 + 0.0625))).epsilon(1e-15));
  const double t = tol_f_uniform(0.0, 0.9, 30, 4);
  CHECK(rel_err(tol_f_uniform(0.0, solve_delta(0.0, 30, 4, t), 30, 4), t) <= 1e-12);
  CHECK(solve_delta(0.0, 30, 4, t) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("tol_f is strictly increasing in every variance") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_below(rng, 8);
    const std::size_t m = 1 + uniform_below(rng, 100);
    const double tr = uniform(rng, 0.1, 100.0);
    std::vector<double> sig(n);
    for (double& s : sig) s = uniform(rng, 0.0, 2.0);
    const double base = tol_f(tr, sig, m, n);
    const std::size_t k = uniform_below(rng, n);
    sig[k] += uniform(rng, 1e-3, 1.0);
    REQUIRE(tol_f(tr, sig, m, n) > base);
  }
}

TEST_CASE("solve_delta: examples") {
  CHECK(solve_delta(100.0, 100, 10, 0.0) == 0.0);
  CHECK(std::isinf(solve_delta(100.0, 100, 10, std::numeric_limits<double>::infinity())));
  CHECK_THROWS_AS(solve_delta(100.0, 100, 10, -1.0), ContractError);
  CHECK_THROWS_AS(solve_delta(-1.0, 100, 10, 1.0), ContractError);

  const double d = solve_delta(100.0, 100, 10, 1.0);
  CHECK(rel_err(d, oracle::delta_closed_form(100.0, 100.0, 10.0, 1.0)) <= 1e-12);
  CHECK(rel_err(d, oracle::delta_by_bisection(100.0, 100, 10, 1.0)) <= 1e-12);
}

TEST_CASE("solve_delta inverts tol_f") {
  std::mt19937_64 rng(28);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + uniform_below(rng, 2000);
    const std::size_t n = 1 + uniform_below(rng, 100);
    const double tr = std::pow(10.0, uniform(rng, -3.0, 6.0));
    const double t = std::pow(10.0, uniform(rng, -6.0, 3.0));
    const double d = solve_delta(tr, m, n, t);
    worst = std::max(worst, rel_err(tol_f_uniform(tr, d, m, n), t));
    REQUIRE(rel_err(d, oracle::delta_by_bisection(tr, m, n, t)) <= 1e-9);
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("solve_delta is strictly increasing in the tolerance") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + uniform_below(rng, 500);
    const std::size_t n = 1 + uniform_below(rng, 50);
    const double tr = uniform(rng, 0.0, 1e3);
    const double t = uniform(rng, 1e-4, 10.0);
    REQUIRE(solve_delta(tr, m, n, t * 1.01) > solve_delta(tr, m, n, t));
  }
}

TEST_CASE("normalized_tol: examples") {
  CHECK(normalized_tol(0.0, EigenSpectrum{{1.0, 2.0}}) == 0.0);
  CHECK(normalized_tol(2.0, EigenSpectrum{{2.0, 2.0}}) == 1.0);
  CHECK(normalized_tol(3.0, EigenSpectrum{{3.0}}) == 1.0);
  CHECK_THROWS_AS(normalized_tol(1.0, EigenSpectrum{{0.0, 0.0}}), ContractError);
  CHECK_THROWS_AS(normalized_tol(1.0, EigenSpectrum{}), ContractError);
}

TEST_CASE("eigen_perturb_rms: examples") {
  const EigenSpectrum s{{4.0, 1.0, -2.0}};
  CHECK(eigen_perturb_rms(s, s) == 0.0);
  CHECK(eigen_perturb_rms(EigenSpectrum{{2.0, 0.0}}, EigenSpectrum{{0.0, 0.0}}) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(eigen_perturb_rms(s, EigenSpectrum{{1.0}}), ContractError);
}

TEST_CASE("Mirsky: eigenvalue shift bounded by the covariance perturbation") {
  std::mt19937_64 rng(30);
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + uniform_below(rng, 31);
    const std::size_t n = 1 + uniform_below(rng, 8);
    const double delta = uniform(rng, 0.01, 2.0);
    const Matrix y = oracle::random_matrix(rng, m, n, -5.0, 5.0);
    const Matrix w = oracle::random_matrix(rng, m, n, -delta, delta);
    const Matrix a = covariance(y);
    const Matrix a_hat = covariance(y + w);
    const double rms = eigen_perturb_rms(sym_eigenvalues(a), sym_eigenvalues(a_hat));
    const double dn = delta_norm(a, a_hat);
    const double slack = 1e-9 * std::max(1.0, frobenius_norm(a));
    // The undivided inequality sum (lambda_hat - lambda)^2 <= ||Delta||_F^2.
    if (std::sqrt(static_cast<double>(n)) * rms > dn + slack) ++violations;
    if (rms > dn + slack) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("triangle chain: ||Y'W + W'Y + W'W|| bounded term by term") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + uniform_below(rng, 40);
    const std::size_t n = 1 + uniform_below(rng, 8);
    const double delta = uniform(rng, 0.01, 2.0);
    const Matrix y = oracle::random_matrix(rng, m, n, -5.0, 5.0);
    const Matrix w = oracle::random_matrix(rng, m, n, -delta, delta);
    const Matrix yt = y.transpose(), wt = w.transpose();
    const Matrix ytw = yt * w, wty = wt * y, wtw = wt * w;
    // m * (A_hat - A) is exactly the three-term sum.
    const double lhs = static_cast<double>(m) * delta_norm(covariance(y + w), covariance(y));
    const double rhs = frobenius_norm(ytw) + frobenius_norm(wty) + frobenius_norm(wtw);
    REQUIRE(lhs <= rhs * (1.0 + 1e-9));
    REQUIRE(frobenius_norm(ytw + wty + wtw) <= rhs * (1.0 + 1e-9));
  }
}

TEST_CASE("bound validity: Monte Carlo mean perturbation per device within tol_f") {
  // The bound holds for E(||Delta||_F / n), the form in the eigenvalue chain;
  // for a single device the two forms coincide.
  std::mt19937_64 rng(32);
  int settings = 0, violations = 0, single_violations = 0;
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    for (std::size_t m : {16u, 64u, 256u}) {
      for (double delta : {0.05, 1.0}) {
        const Matrix y = oracle::random_matrix(rng, m, n, -2.0, 4.0);
        const Matrix a = covariance(y);
        const double bound = tol_f_uniform(trace_gram(y), delta, m, n);
        double sum = 0.0;
        constexpr int kDraws = 500;
        for (int d = 0; d < kDraws; ++d) {
          const Matrix w = oracle::random_matrix(rng, m, n, -delta, delta);
          sum += delta_norm(a, covariance(y + w));
        }
        const double mean = sum / kDraws;
        ++settings;
        if (mean / static_cast<double>(n) > bound) ++violations;
        if (n == 1 && mean > bound) ++single_violations;
      }
    }
  }
  CHECK(settings >= 20);
  CHECK(violations == 0);
  CHECK(single_violations == 0);
}
