#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "cveval/error.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/linalg.hpp"
#include "cveval/prob/numeric.hpp"
#include "cveval/prob/rng.hpp"
#include "cveval/prob/samplers.hpp"
#include "cveval/prob/special.hpp"
#include "support/gof.hpp"
#include "support/oracles.hpp"

using namespace cveval;
using namespace cveval::prob;

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * M_PI);
}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("identical ids give identical sequences, distinct ids differ") {
    RngStream a(42, 7), b(42, 7), c(42, 8);
    bool any_diff = false;
    for (int i = 0; i < 100; ++i) {
      const auto x = a();
      CHECK(x == b());
      any_diff |= (x != c());
    }
    CHECK(any_diff);
  }

  TEST_CASE("split does not depend on parent consumption") {
    RngStream a(1, 2);
    RngStream child1 = a.split(5);
    for (int i = 0; i < 10; ++i) a();
    RngStream child2 = a.split(5);
    for (int i = 0; i < 10; ++i) CHECK(child1() == child2());
  }

  TEST_CASE("substreams are uncorrelated") {
    RngStream a(3, 0), b(3, 1);
    const int n = 100000;
    double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
      const double x = a.uniform(), y = b.uniform();
      sab += x * y; sa += x; sb += y; saa += x * x; sbb += y * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
    CHECK(std::fabs(corr) < 4.0 / std::sqrt(n));
  }
}

TEST_SUITE("log_sum_exp") {
  TEST_CASE("trivial cases") {
    const std::vector<double> one{0.0};
    CHECK(log_sum_exp(one) == 0.0);
    const std::vector<double> two{0.0, 0.0};
    CHECK(log_sum_exp(two) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const std::vector<double> neg{kNegInf, kNegInf};
    CHECK(log_sum_exp(neg) == kNegInf);
    const std::vector<double> mixed{kNegInf, 3.0};
    CHECK(log_sum_exp(mixed) == 3.0);
    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), ArgumentError);
  }

  TEST_CASE("matches extended-precision direct sum") {
    RngStream rng(11);
    std::vector<double> xs(1000);
    for (double& x : xs) x = -700.0 + 1400.0 * rng.uniform();
    long double direct = 0.0L;
    for (double x : xs) direct += std::exp(static_cast<long double>(x));
    const double expected = static_cast<double>(std::log(direct));
    CHECK(std::fabs(log_sum_exp(xs) - expected) <= 1e-12 * std::fabs(expected));
  }

  TEST_CASE("shift equivariance and dominance of the maximum") {
    RngStream rng(12);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> xs(1 + rep % 17);
      for (double& x : xs) x = -50.0 + 100.0 * rng.uniform();
      const double c = -20.0 + 40.0 * rng.uniform();
      std::vector<double> shifted(xs);
      for (double& x : shifted) x += c;
      CHECK(log_sum_exp(shifted) == doctest::Approx(log_sum_exp(xs) + c).epsilon(1e-13));
      CHECK(log_sum_exp(xs) >= *std::max_element(xs.begin(), xs.end()));
    }
  }
}

TEST_SUITE("sample_variance") {
  TEST_CASE("hand values") {
    CHECK(sample_variance(std::vector<double>{3.5, 3.5, 3.5}) == 0.0);
    CHECK(sample_variance(std::vector<double>{0.0, 2.0}) == 2.0);
    CHECK_THROWS_AS(sample_variance(std::vector<double>{1.0}), ArgumentError);
  }

  TEST_CASE("two-pass extended precision oracle") {
    RngStream rng(5);
    std::vector<double> xs(10000);
    for (double& x : xs) x = 1e3 + rng.normal() * 3.0;
    long double m = 0.0L;
    for (double x : xs) m += x;
    m /= xs.size();
    long double ss = 0.0L;
    for (double x : xs) ss += (x - m) * (x - m);
    const double expected = static_cast<double>(ss / (xs.size() - 1));
    CHECK(std::fabs(sample_variance(xs) - expected) <= 1e-12 * expected);
  }

  TEST_CASE("weighted variance reduces to the unweighted one") {
    RngStream rng(6);
    std::vector<double> xs(50), lw(50, -3.0);
    for (double& x : xs) x = rng.normal();
    CHECK(weighted_variance(xs, lw) == doctest::Approx(sample_variance(xs)).epsilon(1e-12));
    CHECK(weighted_mean(xs, lw) == doctest::Approx(mean(xs)).epsilon(1e-12));
  }
}

TEST_SUITE("densities") {
  TEST_CASE("normal mode") {
    CHECK(normal_logpdf(1.3, 1.3, 1.0) == doctest::Approx(-kLogSqrt2Pi).epsilon(1e-15));
    CHECK_THROWS_AS(normal_logpdf(0.0, 0.0, 0.0), ArgumentError);
  }

  TEST_CASE("binomial normalization") {
    double total = 0.0;
    for (int r = 0; r <= 2; ++r) total += std::exp(binomial_logpmf(r, 2, 0.5));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(binomial_logpmf(0, 5, 0.0) == 0.0);
    CHECK(binomial_logpmf(5, 5, 1.0) == 0.0);
    CHECK_THROWS_AS(binomial_logpmf(1, 5, 1.5), ArgumentError);
  }

  TEST_CASE("poisson normalization and errors") {
    double total = 0.0;
    for (int k = 0; k < 200; ++k) total += std::exp(poisson_logpmf(k, 12.5));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(poisson_logpmf(1, -1.0), ArgumentError);
  }

  TEST_CASE("inverse-gamma and dirichlet") {
    const double integral = oracle::adaptive_simpson(
        [](double x) { return std::exp(inverse_gamma_logpdf(x, 3.0, 2.0)); }, 1e-9, 400.0, 1e-12);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    const std::vector<double> alpha{1.0, 1.0, 1.0};
    const std::vector<double> x{0.2, 0.3, 0.5};
    CHECK(dirichlet_logpdf(x, alpha) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("MVN against the dense-formula oracle") {
    RngStream rng(21);
    const auto cov = oracle::random_spd(5, rng);
    std::vector<double> x(5), mu(5);
    for (int i = 0; i < 5; ++i) {
      x[i] = rng.normal();
      mu[i] = rng.normal();
    }
    const double expected = oracle::dense_mvn_logpdf(x, mu, cov.to_dense());
    CHECK(std::fabs(mvn_logpdf_cov(x, mu, cov) - expected) < 1e-10);
    const auto prec = SymMatrix::from_dense(oracle::dense_inverse(cov.to_dense()), 1e-9);
    CHECK(std::fabs(mvn_logpdf_prec(x, mu, prec) - expected) < 1e-10);
  }

  TEST_CASE("non-SPD covariance is a decomposition error") {
    SymMatrix bad(2);
    bad.at(0, 0) = 1.0;
    bad.at(1, 1) = 1.0;
    bad.at(1, 0) = 2.0;
    const std::vector<double> x{0, 0};
    CHECK_THROWS_AS(mvn_logpdf_cov(x, x, bad), DecompositionError);
  }
}

TEST_SUITE("linalg") {
  TEST_CASE("cholesky trivial cases") {
    const auto l = cholesky(SymMatrix::identity(3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(l(i, j) == (i == j ? 1.0 : 0.0));
    const std::vector<double> d{4.0, 9.0};
    const auto l2 = cholesky(SymMatrix::diagonal(d));
    CHECK(l2(0, 0) == 2.0);
    CHECK(l2(1, 1) == 3.0);
    CHECK(l2(1, 0) == 0.0);
  }

  TEST_CASE("cholesky names the failing pivot") {
    SymMatrix a = SymMatrix::identity(3);
    a.at(2, 2) = -1.0;
    try {
      cholesky(a);
      FAIL("expected a decomposition error");
    } catch (const DecompositionError& e) {
      CHECK(e.pivot() == 2);
    }
  }

  TEST_CASE("cholesky reconstruction on random SPD matrices") {
    RngStream rng(31);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t n = 1 + rep % 56;
      const auto a = oracle::random_spd(n, rng);
      const auto l = cholesky(a);
      const Matrix diff = l * l.transpose() - a.to_dense();
      worst = std::max(worst, diff.frobenius_norm() / a.to_dense().frobenius_norm());
    }
    CHECK(worst < 1e-10);
  }

  TEST_CASE("eigenvalue closed forms") {
    const std::vector<double> d{3.0, 1.0, 2.0};
    const auto e1 = sym_eigenvalues(SymMatrix::diagonal(d));
    CHECK(e1 == std::vector<double>{1.0, 2.0, 3.0});

    SymMatrix swap(2);
    swap.at(1, 0) = 1.0;
    const auto e2 = sym_eigenvalues(swap);
    CHECK(e2[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(e2[1] == doctest::Approx(1.0).epsilon(1e-14));

    SymMatrix path(3);
    path.at(1, 0) = 1.0;
    path.at(2, 1) = 1.0;
    const auto e3 = sym_eigenvalues(path);
    CHECK(std::fabs(e3[0] + std::sqrt(2.0)) < 1e-14);
    CHECK(std::fabs(e3[1]) < 1e-14);
    CHECK(std::fabs(e3[2] - std::sqrt(2.0)) < 1e-14);
  }

  TEST_CASE("eigenvalues: trace and determinant identities") {
    RngStream rng(41);
    for (std::size_t n : {2u, 5u, 13u, 30u, 56u}) {
      const auto a = oracle::random_symmetric(n, rng);
      const auto eig = sym_eigenvalues(a);
      CHECK(std::is_sorted(eig.begin(), eig.end()));
      const double sum = std::accumulate(eig.begin(), eig.end(), 0.0);
      CHECK(std::fabs(sum - a.trace()) < 1e-8);
      double log_abs = 0.0;
      int sign = 1;
      for (double l : eig) {
        log_abs += std::log(std::fabs(l));
        if (l < 0) sign = -sign;
      }
      const auto [lu_log, lu_sign] = oracle::lu_log_determinant(a.to_dense());
      CHECK(sign == lu_sign);
      // relative error of det = |exp(diff) - 1|
      CHECK(std::fabs(std::expm1(log_abs - lu_log)) < 1e-6);
    }
  }
}

TEST_SUITE("special") {
  TEST_CASE("student t closed forms") {
    for (double df : {0.5, 1.0, 3.0, 30.0}) CHECK(student_t_cdf(0.0, df) == 0.5);
    CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-13));
    CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), ArgumentError);
  }

  TEST_CASE("student t against quadrature") {
    const double df = 7.0;
    const double c = std::exp(log_gamma(0.5 * (df + 1)) - log_gamma(0.5 * df)) /
                     std::sqrt(df * M_PI);
    auto pdf = [&](double x) { return c * std::pow(1.0 + x * x / df, -0.5 * (df + 1)); };
    const double expected = 0.5 + oracle::adaptive_simpson(pdf, 0.0, 2.5, 1e-14);
    CHECK(std::fabs(student_t_cdf(2.5, df) - expected) < 1e-8);
    CHECK(std::fabs(student_t_cdf(-2.5, df) - (1.0 - expected)) < 1e-8);
  }

  TEST_CASE("student t is monotone and bounded") {
    double prev = 0.0;
    for (double t = -30.0; t <= 30.0; t += 0.25) {
      const double v = student_t_cdf(t, 4.5);
      CHECK(v >= prev);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      prev = v;
    }
  }

  TEST_CASE("binomial mid-p hand values") {
    CHECK(binomial_midp_tail(0, 1, 0.5) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(binomial_midp_tail(1, 2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(binomial_midp_tail(3, 2, 0.5), ArgumentError);
    CHECK_THROWS_AS(binomial_midp_tail(-1, 2, 0.5), ArgumentError);
  }

  TEST_CASE("binomial mid-p against exhaustive pmf sum") {
    const int n = 17;
    const long double p = 0.3L;
    auto choose = [](int nn, int k) {
      long double c = 1.0L;
      for (int j = 1; j <= k; ++j) c = c * (nn - k + j) / j;
      return c;
    };
    long double expected = 0.0L;
    for (int k = 7; k <= n; ++k) expected += choose(n, k) * std::pow(p, k) * std::pow(1 - p, n - k);
    expected += 0.5L * choose(n, 6) * std::pow(p, 6) * std::pow(1 - p, n - 6);
    CHECK(std::fabs(binomial_midp_tail(6, n, 0.3) - static_cast<double>(expected)) < 1e-12);
  }

  TEST_CASE("mid-p tails are complementary") {
    RngStream rng(8);
    for (int rep = 0; rep < 300; ++rep) {
      const int n = 1 + rep % 80;
      const int r = static_cast<int>(rng() % (n + 1));
      const double p = rng.uniform();
      CHECK(std::fabs(binomial_midp_tail(r, n, p) + binomial_midp_lower(r, n, p) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("poisson mid-p agrees with direct summation") {
    for (double lambda : {0.3, 4.0, 35.0}) {
      for (int y : {0, 3, 40}) {
        double upper = 0.0;
        for (int k = y + 1; k < 400; ++k) upper += std::exp(poisson_logpmf(k, lambda));
        const double expected = upper + 0.5 * std::exp(poisson_logpmf(y, lambda));
        CHECK(std::fabs(poisson_midp_tail(y, lambda) - expected) < 1e-12);
      }
    }
  }

  TEST_CASE("incomplete gamma complement and chi-square") {
    CHECK(gamma_p(2.5, 1.7) + gamma_q(2.5, 1.7) == doctest::Approx(1.0).epsilon(1e-14));
    // chi-square with 2 df has survival exp(-x/2)
    CHECK(chi_square_sf(3.0, 2.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-13));
  }

  TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-10, 0.001, 0.2, 0.5, 0.77, 0.999, 1 - 1e-9}) {
      CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
  }

  TEST_CASE("KS p-value for a perfect grid is one, for a clump is tiny") {
    std::vector<double> grid(100), clump(100, 0.01);
    for (int i = 0; i < 100; ++i) grid[i] = (i + 0.5) / 100.0;
    CHECK(ks_uniform_pvalue(grid) > 0.99);
    CHECK(ks_uniform_pvalue(clump) < 1e-10);
  }
}

// ---------------------------------------------------------------------------
// Sampler goodness of fit: 1e5 draws, binned against the density suite,
// Pearson chi-square at alpha = 0.001.

TEST_SUITE("sampler goodness of fit") {
  TEST_CASE("every sampler matches its density") {
    for (const auto& [name, p] : oracle::sampler_gof_pvalues()) {
      INFO(name << " p = " << p);
      CHECK(p > oracle::kAlpha);
    }
  }

  TEST_CASE("degenerate categorical") {
    RngStream rng(108);
    const std::vector<double> degenerate{1.0, 0.0, 0.0};
    for (int i = 0; i < 1000; ++i) CHECK(draw_categorical(rng, degenerate) == 0);
  }

  TEST_CASE("dirichlet draws lie on the simplex") {
    RngStream rng(112);
    const std::vector<double> alpha{0.05, 1.0, 30.0, 2.0};
    for (int i = 0; i < 1000; ++i) {
      const auto x = draw_dirichlet(rng, alpha);
      CHECK(std::fabs(std::accumulate(x.begin(), x.end(), 0.0) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("inverse gamma moment oracle") {
    RngStream rng(113);
    const int n = 1000000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += draw_inverse_gamma(rng, 3.0, 2.0);
    // mean 1, variance 1 for IG(3, 2)
    CHECK(std::fabs(acc / n - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
  }

  TEST_CASE("invalid parameters") {
    RngStream rng(1);
    CHECK_THROWS_AS(draw_inverse_gamma(rng, -1.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(draw_categorical(rng, std::vector<double>{0.0, 0.0}), ArgumentError);
    CHECK_THROWS_AS(draw_dirichlet(rng, std::vector<double>{1.0, 0.0}), ArgumentError);
  }
}
