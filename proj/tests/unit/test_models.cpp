#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>

#include "cveval/error.hpp"
#include "cveval/io/datasets.hpp"
#include "cveval/mcmc/chain.hpp"
#include "cveval/models/car.hpp"
#include "cveval/models/mixture.hpp"
#include "cveval/models/seeds.hpp"
#include "cveval/models/toy.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/linalg.hpp"
#include "cveval/prob/numeric.hpp"
#include "cveval/prob/samplers.hpp"
#include "support/car_oracle.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace cveval;
using models::CarParams;
using models::CarStructure;
using models::CarVariant;
using oracle::dense_c;
using oracle::dense_covariance;
using oracle::schur_conditional;
using prob::Matrix;
using prob::RngStream;

namespace {

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

models::LipCancerData five_sites() {
  models::LipCancerData d;
  d.y = {1, 3, 2, 6, 0};
  d.expected = {0.5, 1.2, 2.0, 3.1, 0.8};
  d.covariate = {0.1, 0.5, -0.3, 1.0, 0.0};
  d.neighbors = {{1, 2}, {0, 2}, {0, 1, 3}, {2, 4}, {3}};
  return d;
}

models::LipCancerData scotland() {
  return io::load_lipcancer(CVEVAL_DATA_DIR "/lipcancer.csv",
                            CVEVAL_DATA_DIR "/lipcancer_adjacency.txt");
}

models::SeedsData small_design() {
  models::SeedsData d;
  d.n = {10, 15, 20, 12, 8, 25, 14, 30};
  d.r = {4, 9, 12, 2, 5, 11, 7, 20};
  d.x1 = {0, 0, 1, 1, 0, 0, 1, 1};
  d.x2 = {0, 1, 0, 1, 0, 1, 0, 1};
  return d;
}

std::vector<double> car_row(const models::CarModel& model, const CarParams& p,
                            const std::vector<double>& s) {
  std::vector<double> row{p.alpha};
  if (models::has_covariate(model.variant())) row.push_back(p.beta);
  row.push_back(p.tau2);
  if (models::is_spatial(model.variant())) row.push_back(p.phi);
  row.insert(row.end(), s.begin(), s.end());
  return row;
}

std::vector<double> mixture_row(const std::vector<double>& mu, const std::vector<double>& sigma2,
                                const std::vector<double>& p, const std::vector<double>& z) {
  std::vector<double> row(mu);
  row.insert(row.end(), sigma2.begin(), sigma2.end());
  row.insert(row.end(), p.begin(), p.end());
  row.insert(row.end(), z.begin(), z.end());
  return row;
}

// One-sweep invariance: draw (theta, b) from the prior, y given them, run one
// sweep from that state and compare statistics before and after. Both are
// draws from the prior when every conditional update preserves the posterior.
struct JointDraw {
  std::unique_ptr<models::LatentModel> model;
  std::vector<double> row;
};

void check_sweep_preserves_prior(const std::function<JointDraw(RngStream&)>& draw,
                                 const std::function<std::vector<double>(models::Row)>& stats,
                                 std::optional<std::size_t> holdout, std::uint64_t seed,
                                 std::size_t reps = 10000) {
  RngStream rng(seed);
  std::vector<std::vector<double>> diffs;
  for (std::size_t r = 0; r < reps; ++r) {
    JointDraw jd = draw(rng);
    auto kernel = jd.model->make_kernel(holdout, rng);
    kernel->load_draw(jd.row);
    kernel->sweep(rng);
    std::vector<double> after(jd.row.size());
    kernel->write_draw(after);
    const auto s0 = stats(jd.row);
    const auto s1 = stats(after);
    if (diffs.empty()) diffs.resize(s0.size());
    for (std::size_t k = 0; k < s0.size(); ++k) diffs[k].push_back(s1[k] - s0[k]);
  }
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    INFO("statistic " << k);
    CHECK(std::fabs(mc::mean(diffs[k])) <= 4.0 * mc::iid_se(diffs[k]) + 1e-12);
  }
}

}  // namespace

// ---------------------------------------------------------------- mixture

TEST_CASE("mixture nonint density is the assigned normal") {
  const std::vector<double> mu{1.5, -2.0, 4.0};
  const std::vector<double> s2{1.0, 0.3, 2.5};
  CHECK(models::mixture_nonint_logpred(1.5, mu, s2, 0) == doctest::Approx(-kLogSqrt2Pi).epsilon(1e-15));

  RngStream rng(11);
  for (int t = 0; t < 200; ++t) {
    const double y = 10.0 * rng.uniform() - 5.0;
    const std::size_t z = rng() % 3;
    CHECK(models::mixture_nonint_logpred(y, mu, s2, z) ==
          prob::normal_logpdf(y, mu[z], std::sqrt(s2[z])));
  }
  std::vector<double> mu2(mu), s22(s2);
  mu2[2] = -40.0;
  s22[2] = 9.0;
  CHECK(models::mixture_nonint_logpred(0.7, mu, s2, 1) == models::mixture_nonint_logpred(0.7, mu2, s22, 1));
}

TEST_CASE("mixture integrated density") {
  SUBCASE("single component equals the nonint density") {
    const std::vector<double> mu{2.0}, s2{0.7}, p{1.0};
    for (double y : {-1.0, 2.0, 5.5})
      CHECK(models::mixture_int_logpred(y, mu, s2, p) ==
            doctest::Approx(models::mixture_nonint_logpred(y, mu, s2, 0)).epsilon(1e-15));
  }
  SUBCASE("symmetric pair at zero") {
    const std::vector<double> mu{-1.7, 1.7}, s2{0.8, 0.8}, p{0.5, 0.5};
    CHECK(models::mixture_int_logpred(0.0, mu, s2, p) ==
          doctest::Approx(prob::normal_logpdf(0.0, 1.7, std::sqrt(0.8))).epsilon(1e-14));
  }
  SUBCASE("three components against Monte Carlo over labels") {
    RngStream rng(12);
    const std::vector<double> mu{-1.0, 0.5, 2.0}, s2{0.5, 1.5, 0.3};
    const auto p = prob::draw_dirichlet(rng, std::vector<double>{2.0, 2.0, 2.0});
    const double y = 0.8;
    std::vector<double> dens(1000000);
    for (auto& d : dens) d = std::exp(models::mixture_nonint_logpred(y, mu, s2, prob::draw_categorical(rng, p)));
    const double exact = std::exp(models::mixture_int_logpred(y, mu, s2, p));
    CHECK(std::fabs(mc::mean(dens) - exact) <= 4.0 * mc::iid_se(dens));
  }
}

TEST_CASE("mixture label conditional matches hand normalization") {
  const models::MixtureParams params{{-1.0, 1.5}, {0.5, 2.0}, {0.3, 0.7}};
  for (double y : {-1.0, 0.3, 2.0}) {
    double w[2];
    for (int k = 0; k < 2; ++k) {
      const double d = y - params.mu[k];
      w[k] = params.p[k] * std::exp(-d * d / (2.0 * params.sigma2[k])) /
             std::sqrt(2.0 * std::numbers::pi * params.sigma2[k]);
    }
    const auto probs = models::mixture_label_probs(y, params);
    CHECK(probs[0] == doctest::Approx(w[0] / (w[0] + w[1])).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(w[1] / (w[0] + w[1])).epsilon(1e-12));
  }
}

TEST_CASE("mixture simulation") {
  RngStream a(5), b(5);
  CHECK(models::mixture_simulate(200, a).size() == 200);
  RngStream c(5);
  CHECK(models::mixture_simulate(200, b) == models::mixture_simulate(200, c));

  RngStream rng(6);
  const auto x = models::mixture_simulate(1000000, rng);
  CHECK(std::fabs(mc::mean(x) + 0.25) <= 4.0 * mc::iid_se(x));
}

TEST_CASE("mixture model construction and regeneration") {
  CHECK_THROWS_AS(models::MixtureModel({1.0, 2.0}, 3), ConfigurationError);

  const std::vector<double> y{0.1, 0.4, 2.0, 2.5};
  const models::MixtureModel model(y, 2);
  CHECK(model.theta_names() == std::vector<std::string>{"mu1", "mu2", "sigma2_1", "sigma2_2", "p1", "p2"});

  const auto row = mixture_row({0.0, 2.0}, {1.0, 1.0}, {1.0, 0.0}, {0, 0, 1, 1});
  RngStream rng(3);
  for (int t = 0; t < 1000; ++t) CHECK(model.regen_latent(1, row, rng) == 0.0);

  const auto row2 = mixture_row({0.0, 2.0}, {1.0, 1.0}, {0.3, 0.7}, {0, 0, 1, 1});
  std::vector<double> hits(100000);
  for (auto& h : hits) h = model.regen_latent(0, row2, rng) == 1.0 ? 1.0 : 0.0;
  CHECK(std::fabs(mc::mean(hits) - 0.7) <= 4.0 * std::sqrt(0.21 / 1e5));

  const auto prior = models::MixturePrior::from_data(y);
  CHECK(prior.mean == doctest::Approx(prob::mean(y)));
  CHECK(prior.scale == doctest::Approx(0.01 * prob::sample_variance(y)));
}

TEST_CASE("mixture integrated density is the average over regenerated labels") {
  const std::vector<double> y{-1.0, 0.2, 1.4, 3.0};
  const models::MixtureModel model(y, 3);
  const auto row = mixture_row({-1.0, 0.5, 2.5}, {0.4, 1.0, 0.7}, {0.2, 0.5, 0.3}, {0, 1, 1, 2});
  RngStream rng(21);
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::vector<double> dens(100000);
    for (auto& d : dens) d = std::exp(model.unit_logpred(i, row, model.regen_latent(i, row, rng)));
    const double exact = std::exp(model.int_logpred(i, row, rng));
    CHECK(std::fabs(mc::mean(dens) - exact) <= 3.0 * mc::iid_se(dens));
  }
}

TEST_CASE("mixture with one component matches the conjugate mean") {
  RngStream data_rng(31);
  std::vector<double> y(20);
  for (auto& v : y) v = prob::draw_normal(data_rng, 3.0, 1.5);
  const models::MixtureModel model(y, 1);
  mcmc::ChainConfig cfg;
  cfg.n_adapt = 100;
  cfg.n_burn = 500;
  cfg.n_sample = 20000;
  cfg.thin = 1;
  cfg.seed = 4;
  const auto store = mcmc::run_chains(model, cfg);
  const auto& prior = model.prior();
  double sum_y = 0.0;
  for (double v : y) sum_y += v;
  // mu_s is drawn given the sigma2 retained one step earlier.
  std::vector<double> diff;
  for (std::size_t s = 1; s < store.size(); ++s) {
    const double s2 = store.theta(s - 1, 1);
    const double prec = 1.0 / prior.variance + static_cast<double>(y.size()) / s2;
    diff.push_back(store.theta(s, 0) - (prior.mean / prior.variance + sum_y / s2) / prec);
    CHECK(store.theta(s, 2) == 1.0);
  }
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(store.latent(store.size() - 1, i) == 0.0);
  CHECK(std::fabs(mc::mean(diff)) <= 4.0 * mc::batch_se(diff));
}

TEST_CASE("mixture chain agrees with a ten times longer chain") {
  RngStream data_rng(41);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = prob::draw_normal(data_rng, i % 2 ? 3.0 : -3.0, 1.0);
  const models::MixtureModel model(y, 2);
  auto smaller_mean = [&](std::size_t n_sample, std::uint64_t seed) {
    mcmc::ChainConfig cfg;
    cfg.n_adapt = 0;
    cfg.n_burn = 1000;
    cfg.n_sample = n_sample;
    cfg.thin = 1;
    cfg.seed = seed;
    const auto store = mcmc::run_chains(model, cfg);
    std::vector<double> v(store.size());
    for (std::size_t s = 0; s < v.size(); ++s) v[s] = std::min(store.theta(s, 0), store.theta(s, 1));
    return std::pair{mc::mean(v), mc::batch_se(v)};
  };
  const auto [short_mean, short_se] = smaller_mean(20000, 8);
  const auto [long_mean, long_se] = smaller_mean(200000, 9);
  CHECK(std::fabs(short_mean - long_mean) <= 4.0 * std::hypot(short_se, long_se));
}

TEST_CASE("mixture sweep preserves the occupancy-restricted prior") {
  const models::MixturePrior prior{0.0, 4.0, 6.0, 5.0};
  const std::size_t n = 6;
  // Only labels of units that carry a likelihood count towards occupancy.
  auto draw_skipping = [&](std::optional<std::size_t> skip) {
    return [&prior, skip](RngStream& rng) {
      std::vector<double> p, z(n);
      for (;;) {
        p = prob::draw_dirichlet(rng, std::vector<double>{1.0, 1.0});
        std::size_t used[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
          z[i] = static_cast<double>(prob::draw_categorical(rng, p));
          if (skip != i) ++used[static_cast<std::size_t>(z[i])];
        }
        if (used[0] && used[1]) break;
      }
      std::vector<double> mu(2), s2(2);
      for (int k = 0; k < 2; ++k) {
        mu[k] = prob::draw_normal(rng, prior.mean, std::sqrt(prior.variance));
        s2[k] = prob::draw_inverse_gamma(rng, prior.shape, prior.scale);
      }
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(z[i]);
        y[i] = prob::draw_normal(rng, mu[k], std::sqrt(s2[k]));
      }
      return JointDraw{std::make_unique<models::MixtureModel>(y, 2, prior), mixture_row(mu, s2, p, z)};
    };
  };
  auto stats = [](models::Row r) {
    return std::vector<double>{r[0], r[1], std::log(r[2]), r[4], r[6] == 0.0 ? 1.0 : 0.0,
                               r[8] == 0.0 ? 1.0 : 0.0};
  };
  check_sweep_preserves_prior(draw_skipping(std::nullopt), stats, std::nullopt, 51);
  check_sweep_preserves_prior(draw_skipping(2), stats, 2, 52);
}

// ---------------------------------------------------------------- CAR

TEST_CASE("car conditional at phi = 0 and for an isolated site") {
  auto d = five_sites();
  const auto st = CarStructure::build(d);
  const std::vector<double> s{0.3, -0.2, 0.5, 0.1, 0.9};
  CarParams p{0.2, 0.4, 0.6, 0.0};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto c = models::car_conditional(i, s, p, st);
    CHECK(c.mean == doctest::Approx(0.2 + 0.4 * d.covariate[i]).epsilon(1e-15));
    CHECK(c.variance == doctest::Approx(0.6 / d.expected[i]).epsilon(1e-15));
    const auto flat = models::car_conditional(i, s, p, st, false);
    CHECK(flat.mean == c.mean);
    CHECK(flat.variance == doctest::Approx(0.6));
  }
  d.neighbors = {{1}, {0}, {3}, {2}, {}};
  const auto st2 = CarStructure::build(d);
  p.phi = 0.7;
  const auto iso = models::car_conditional(4, s, p, st2);
  CHECK(iso.mean == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(iso.variance == doctest::Approx(0.6 / 0.8).epsilon(1e-15));
}

TEST_CASE("car conditional matches Gaussian conditioning of the joint") {
  SUBCASE("five sites") {
    const auto d = five_sites();
    const auto st = CarStructure::build(d);
    const auto [lo, hi] = models::phi_support(st);
    RngStream rng(61);
    for (double phi : {0.8 * lo, 0.3 * hi, 0.95 * hi}) {
      const CarParams p{0.3, -0.5, 0.7, phi};
      const Matrix cov = dense_covariance(d, phi, p.tau2);
      std::vector<double> mean(5), s(5);
      for (std::size_t i = 0; i < 5; ++i) {
        mean[i] = p.alpha + p.beta * d.covariate[i];
        s[i] = rng.normal();
      }
      for (std::size_t i = 0; i < 5; ++i) {
        const auto [m, v] = schur_conditional(cov, mean, s, i);
        const auto c = models::car_conditional(i, s, p, st);
        CHECK(std::fabs(c.mean - m) < 1e-8);
        CHECK(std::fabs(c.variance - v) < 1e-8);
      }
    }
  }
  SUBCASE("all 56 districts") {
    const auto d = scotland();
    const auto st = CarStructure::build(d);
    const auto [lo, hi] = models::phi_support(st);
    const double phi = 0.6 * hi;
    const CarParams p{-0.3, 0.04, 0.5, phi};
    const Matrix cov = dense_covariance(d, phi, p.tau2);
    RngStream rng(62);
    std::vector<double> mean(d.size()), s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      mean[i] = p.alpha + p.beta * d.covariate[i];
      s[i] = mean[i] + 0.5 * rng.normal();
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto [m, v] = schur_conditional(cov, mean, s, i);
      const auto c = models::car_conditional(i, s, p, st);
      worst = std::max({worst, std::fabs(c.mean - m), std::fabs(c.variance - v)});
    }
    CHECK(worst < 1e-8);
    (void)lo;
  }
}

TEST_CASE("car joint prior") {
  const auto d = five_sites();
  const auto st = CarStructure::build(d);
  const std::vector<double> s{0.3, -0.2, 0.5, 0.1, 0.9};
  SUBCASE("independent limit") {
    const CarParams p{0.1, 0.2, 0.4, 0.0};
    double expect = 0.0, flat = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const double m = p.alpha + p.beta * d.covariate[i];
      expect += prob::normal_logpdf(s[i], m, std::sqrt(p.tau2 / d.expected[i]));
      flat += prob::normal_logpdf(s[i], m, std::sqrt(p.tau2));
    }
    CHECK(models::car_log_joint_prior(s, p, st) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(models::car_log_joint_prior(s, p, st, false) == doctest::Approx(flat).epsilon(1e-12));
  }
  SUBCASE("dense oracle") {
    const auto [lo, hi] = models::phi_support(st);
    for (double phi : {0.9 * lo, 0.5 * hi, 0.99 * hi}) {
      const CarParams p{0.1, 0.2, 0.4, phi};
      std::vector<double> mean(5);
      for (std::size_t i = 0; i < 5; ++i) mean[i] = p.alpha + p.beta * d.covariate[i];
      const double expect = oracle::dense_mvn_logpdf(s, mean, dense_covariance(d, phi, p.tau2));
      CHECK(std::fabs(models::car_log_joint_prior(s, p, st) - expect) < 1e-8);
    }
  }
  SUBCASE("phi outside the support") {
    const auto [lo, hi] = models::phi_support(st);
    CHECK_THROWS_AS(models::car_log_joint_prior(s, CarParams{0, 0, 1, hi * 1.01}, st), ArgumentError);
    CHECK_THROWS_AS(models::car_log_joint_prior(s, CarParams{0, 0, 1, lo * 1.01}, st), ArgumentError);
  }
}

TEST_CASE("car spectrum and support") {
  auto path = [](std::size_t n) {
    models::LipCancerData d;
    d.expected.assign(n, 1.0);
    d.covariate.assign(n, 0.0);
    d.neighbors.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      d.neighbors[i].push_back(i + 1);
      d.neighbors[i + 1].push_back(i);
    }
    return CarStructure::build(d);
  };
  const auto p2 = models::phi_support(path(2));
  CHECK(p2.first == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(p2.second == doctest::Approx(1.0).epsilon(1e-14));
  const auto p3 = models::phi_support(path(3));
  CHECK(p3.first == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(p3.second == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  const auto none = models::phi_support(path(1));
  CHECK(none.first == -1e6);
  CHECK(none.second == 1e6);

  models::LipCancerData pair;
  pair.expected = {4.0, 1.0};
  pair.covariate = {0.0, 0.0};
  pair.neighbors = {{1}, {0}};
  CHECK(CarStructure::build(pair).weights[0][0] == 0.5);
  pair.neighbors = {{1}, {}};
  CHECK_THROWS_AS(CarStructure::build(pair), ArgumentError);
}

TEST_CASE("car structure on the 56-district graph") {
  const auto d = scotland();
  const auto st = CarStructure::build(d);
  const auto [lo, hi] = models::phi_support(st);
  CHECK(lo < 0.0);
  CHECK(hi > 0.0);

  SUBCASE("positive definiteness probe") {
    CarParams p{0.0, 0.0, 1.0, 0.5 * (lo + hi)};
    CHECK_NOTHROW(prob::cholesky(models::car_precision(p, st)));
    p.phi = 0.999 * hi;
    CHECK_NOTHROW(prob::cholesky(models::car_precision(p, st)));
    p.phi = 1.01 * hi;
    CHECK_THROWS_AS(prob::cholesky(models::car_precision(p, st)), DecompositionError);
    p.phi = 1.01 * lo;
    CHECK_THROWS_AS(prob::cholesky(models::car_precision(p, st)), DecompositionError);
  }
  SUBCASE("log-determinant from the spectrum") {
    const Matrix c = dense_c(d);
    for (double phi : {0.9 * lo, 0.3 * hi, 0.99 * hi}) {
      Matrix a = Matrix::identity(d.size());
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) a(i, j) -= phi * c(i, j);
      const auto [logdet, sign] = oracle::lu_log_determinant(a);
      double spectral = 0.0;
      for (double l : st.adjacency_eigenvalues) spectral += std::log1p(-phi * l);
      CHECK(sign == 1);
      CHECK(std::fabs(logdet - spectral) < 1e-10);
    }
  }
  SUBCASE("C shares the adjacency spectrum") {
    const Matrix c = dense_c(d);
    const auto& eig = st.adjacency_eigenvalues;
    // det(t I - C) = prod (t - lambda_k) away from the spectrum.
    for (double t : {-4.3, -0.77, 0.51, 2.2, 6.0}) {
      Matrix a(d.size(), d.size());
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) a(i, j) = (i == j ? t : 0.0) - c(i, j);
      const auto [logdet, sign] = oracle::lu_log_determinant(a);
      double log_prod = 0.0;
      int prod_sign = 1;
      for (double l : eig) {
        log_prod += std::log(std::fabs(t - l));
        if (t - l < 0.0) prod_sign = -prod_sign;
      }
      CHECK(sign == prod_sign);
      CHECK(std::fabs(logdet - log_prod) < 1e-8);
    }
    // At each eigenvalue the characteristic polynomial of C vanishes.
    for (std::size_t k = 0; k < eig.size(); k += 7) {
      Matrix a(d.size(), d.size());
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) a(i, j) = (i == j ? eig[k] : 0.0) - c(i, j);
      double scale = 1.0;
      for (double l : eig)
        if (std::fabs(l - eig[k]) > 1e-6) scale *= std::fabs(eig[k] - l);
      CHECK(std::fabs(oracle::lu_determinant(a)) / scale < 1e-8);
    }
  }
}

TEST_CASE("car regeneration matches the conditional moments") {
  const auto d = scotland();
  const models::CarModel model(d, CarVariant::SpatialLinear);
  const auto [lo, hi] = model.support();
  RngStream rng(71);
  std::vector<double> s(d.size());
  for (auto& v : s) v = 0.4 * rng.normal();
  const auto row = car_row(model, CarParams{0.1, 0.03, 0.4, 0.7 * hi}, s);
  for (std::size_t i : {0u, 5u, 30u}) {
    const auto cond = model.conditional(i, row);
    std::vector<double> x(100000);
    for (auto& v : x) v = model.regen_latent(i, row, rng);
    CHECK(std::fabs(mc::mean(x) - cond.mean) <= 4.0 * std::sqrt(cond.variance / 1e5));
    CHECK(std::fabs(mc::variance(x) - cond.variance) <= 4.0 * cond.variance * std::sqrt(2.0 / 1e5));
  }
  (void)lo;
}

TEST_CASE("car integrated density") {
  const auto d = five_sites();
  const models::CarModel model(d, CarVariant::SpatialLinear);
  const auto [lo, hi] = model.support();
  const std::vector<double> s{0.3, -0.2, 0.5, 0.1, 0.9};
  SUBCASE("against Gauss-Hermite quadrature") {
    const auto row = car_row(model, CarParams{0.2, 0.3, 0.5, 0.6 * hi}, s);
    const RngStream base(81);
    for (std::size_t i = 0; i < 5; ++i) {
      const auto cond = model.conditional(i, row);
      auto f = [&](double x) { return std::exp(model.unit_logpred(i, row, x)); };
      auto f2 = [&](double x) { return f(x) * f(x); };
      const double m1 = oracle::normal_expectation(f, cond.mean, std::sqrt(cond.variance));
      const double m2 = oracle::normal_expectation(f2, cond.mean, std::sqrt(cond.variance));
      RngStream rng = base.split(i);
      const double est = std::exp(model.int_logpred(i, row, rng));
      CHECK(std::fabs(est - m1) <= 3.0 * std::sqrt((m2 - m1 * m1) / 200.0));
    }
  }
  SUBCASE("degenerate conditional") {
    const auto row = car_row(model, CarParams{0.2, 0.3, 1e-14, 0.6 * hi}, s);
    RngStream rng(82);
    for (std::size_t i = 0; i < 5; ++i) {
      const auto cond = model.conditional(i, row);
      CHECK(model.int_logpred(i, row, rng) == doctest::Approx(model.unit_logpred(i, row, cond.mean)).epsilon(1e-6));
    }
  }
  CHECK(model.integration_draws() == 200);
  (void)lo;
}

TEST_CASE("car exchangeable intercept matches its conjugate conditional") {
  const auto d = scotland();
  const models::CarModel model(d, CarVariant::Exchangeable);
  mcmc::ChainConfig cfg;
  cfg.n_adapt = 1000;
  cfg.n_burn = 1000;
  cfg.n_sample = 10000;
  cfg.thin = 1;
  cfg.seed = 12;
  const auto store = mcmc::run_chains(model, cfg);
  const double v0 = model.prior().coef_variance;
  const double n = static_cast<double>(d.size());
  std::vector<double> diff;
  // alpha_s is drawn from sites s and the tau2 retained one step earlier.
  for (std::size_t k = 1; k < store.size(); ++k) {
    const double tau2 = store.theta(k - 1, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) sum += store.latent(k, i);
    diff.push_back(store.theta(k, 0) - (sum / tau2) / (n / tau2 + 1.0 / v0));
  }
  CHECK(std::fabs(mc::mean(diff)) <= 4.0 * mc::batch_se(diff));
}

TEST_CASE("car adapted acceptance rates on the lip-cancer data") {
  const models::CarModel model(scotland(), CarVariant::SpatialLinear);
  mcmc::ChainConfig cfg;
  cfg.n_adapt = 2000;
  cfg.n_burn = 500;
  cfg.n_sample = 4000;
  cfg.seed = 13;
  mcmc::ChainReport report;
  mcmc::run_chains(model, cfg, &report);
  REQUIRE(report.acceptance.size() == 1);
  for (const auto& [name, rate] : report.acceptance[0]) {
    INFO(name);
    CHECK(rate >= 0.15);
    CHECK(rate <= 0.6);
  }
}

TEST_CASE("car sweep preserves the prior") {
  const models::CarPrior prior{0.25, 8.0, 3.5};
  for (CarVariant variant : {CarVariant::SpatialLinear, CarVariant::Exchangeable}) {
    INFO(models::to_string(variant));
    auto draw = [&](RngStream& rng) {
      auto d = five_sites();
      const auto st = CarStructure::build(d);
      const auto [lo, hi] = models::phi_support(st);
      const bool spatial = models::is_spatial(variant);
      CarParams p;
      p.alpha = prob::draw_normal(rng, 0.0, 0.5);
      p.beta = models::has_covariate(variant) ? prob::draw_normal(rng, 0.0, 0.5) : 0.0;
      p.tau2 = prob::draw_inverse_gamma(rng, prior.tau_shape, prior.tau_scale);
      p.phi = spatial ? prob::draw_uniform(rng, lo, hi) : 0.0;
      Matrix cov = spatial ? dense_covariance(d, p.phi, p.tau2) : Matrix::identity(5);
      if (!spatial)
        for (std::size_t i = 0; i < 5; ++i) cov(i, i) = p.tau2;
      const Matrix l = prob::cholesky(prob::SymMatrix::from_dense(cov, 1e-9));
      std::vector<double> z(5), s(5);
      for (auto& v : z) v = rng.normal();
      for (std::size_t i = 0; i < 5; ++i) {
        s[i] = p.alpha + p.beta * d.covariate[i];
        for (std::size_t j = 0; j <= i; ++j) s[i] += l(i, j) * z[j];
        d.y[i] = prob::draw_poisson(rng, d.expected[i] * std::exp(s[i]));
      }
      auto model = std::make_unique<models::CarModel>(d, variant, 200, prior);
      auto row = car_row(*model, p, s);
      return JointDraw{std::move(model), row};
    };
    const std::size_t k = models::has_covariate(variant) ? 2 : 1;
    auto stats = [&](models::Row r) {
      std::vector<double> out{r[0], r[k], std::log(r[k])};
      if (models::is_spatial(variant)) out.push_back(r[k + 1]);
      const std::size_t s0 = models::is_spatial(variant) ? k + 2 : k + 1;
      out.push_back(r[s0]);
      out.push_back(r[s0 + 3]);
      return out;
    };
    check_sweep_preserves_prior(draw, stats, std::nullopt, 91);
    check_sweep_preserves_prior(draw, stats, 2, 92);
  }
}

// ---------------------------------------------------------------- seeds

TEST_CASE("seeds sigma2 conditional") {
  std::vector<double> b(21);
  double ss = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = 0.05 * static_cast<double>(i) - 0.4;
    ss += b[i] * b[i];
  }
  const auto [shape, scale] = models::seeds_sigma2_conditional(b, models::SeedsPrior{});
  CHECK(std::fabs(shape - (0.001 + 21.0 / 2.0)) < 1e-12);
  CHECK(std::fabs(scale - (0.001 + ss / 2.0)) < 1e-12);
}

TEST_CASE("seeds integrated density") {
  const auto data = io::load_seeds(CVEVAL_DATA_DIR "/seeds.csv");
  const models::SeedsModel model(data);
  CHECK(model.integration_draws() == 30);
  std::vector<double> row{-0.55, 0.08, 1.35, -0.82, 0.09};
  row.resize(row.size() + data.size(), 0.0);
  SUBCASE("against Gauss-Hermite quadrature") {
    const RngStream base(101);
    for (std::size_t i = 0; i < data.size(); i += 4) {
      auto f = [&](double b) { return std::exp(model.unit_logpred(i, row, b)); };
      auto f2 = [&](double b) { return f(b) * f(b); };
      const double m1 = oracle::normal_expectation(f, 0.0, std::sqrt(row[4]));
      const double m2 = oracle::normal_expectation(f2, 0.0, std::sqrt(row[4]));
      RngStream rng = base.split(i);
      const double est = std::exp(model.int_logpred(i, row, rng));
      CHECK(std::fabs(est - m1) <= 3.0 * std::sqrt((m2 - m1 * m1) / 30.0));
    }
  }
  SUBCASE("degenerate random effect") {
    row[4] = 1e-16;
    RngStream rng(102);
    for (std::size_t i = 0; i < data.size(); ++i)
      CHECK(model.int_logpred(i, row, rng) == doctest::Approx(model.unit_logpred(i, row, 0.0)).epsilon(1e-6));
  }
}

TEST_CASE("seeds regeneration is normal with variance sigma2") {
  const models::SeedsModel model(small_design());
  std::vector<double> row{0.0, 0.0, 0.0, 0.0, 0.3};
  row.resize(row.size() + 8, 5.0);
  RngStream rng(111);
  const std::size_t n = 200000;
  std::vector<double> x(n);
  for (auto& v : x) v = model.regen_latent(2, row, rng);
  const double m = mc::mean(x);
  const double var = mc::variance(x);
  double m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    m3 += std::pow(v - m, 3);
    m4 += std::pow(v - m, 4);
  }
  const double skew = m3 / static_cast<double>(n) / std::pow(var, 1.5);
  const double kurt = m4 / static_cast<double>(n) / (var * var) - 3.0;
  CHECK(std::fabs(m) <= 4.0 * std::sqrt(0.3 / n));
  CHECK(std::fabs(var - 0.3) <= 4.0 * 0.3 * std::sqrt(2.0 / n));
  CHECK(std::fabs(skew) <= 4.0 * std::sqrt(6.0 / n));
  CHECK(std::fabs(kurt) <= 4.0 * std::sqrt(24.0 / n));
}

TEST_CASE("seeds intercept is centred on balanced data with the effects pinned") {
  models::SeedsData d = small_design();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.n[i] = 2 * (i + 5);
    d.r[i] = d.n[i] / 2;
  }
  // The logistic fit of r = n/2 everywhere is all coefficients zero, and the
  // posterior is symmetric about it.
  const models::SeedsModel model(d, 30, models::SeedsPrior{1e6, 1e4, 1e-4});
  mcmc::ChainConfig cfg;
  cfg.n_adapt = 2000;
  cfg.n_burn = 1000;
  cfg.n_sample = 20000;
  cfg.thin = 1;
  cfg.seed = 14;
  const auto store = mcmc::run_chains(model, cfg);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto col = store.column(k);
    CHECK(std::fabs(mc::mean(col)) <= 4.0 * mc::batch_se(col));
  }
  CHECK(mc::mean(store.column(4)) < 1e-6);
}

TEST_CASE("seeds sweep preserves the prior") {
  const models::SeedsPrior prior{0.5, 6.0, 0.5};
  auto draw = [&](RngStream& rng) {
    models::SeedsData d = small_design();
    std::vector<double> row(5 + d.size());
    for (int k = 0; k < 4; ++k) row[k] = prob::draw_normal(rng, 0.0, std::sqrt(prior.coef_variance));
    row[4] = prob::draw_inverse_gamma(rng, prior.sigma_shape, prior.sigma_scale);
    for (std::size_t i = 0; i < d.size(); ++i) {
      row[5 + i] = prob::draw_normal(rng, 0.0, std::sqrt(row[4]));
      const double eta = row[0] + row[1] * d.x1[i] + row[2] * d.x2[i] + row[3] * d.x1[i] * d.x2[i] + row[5 + i];
      d.r[i] = prob::draw_binomial(rng, d.n[i], 1.0 / (1.0 + std::exp(-eta)));
    }
    return JointDraw{std::make_unique<models::SeedsModel>(d, 30, prior), row};
  };
  auto stats = [](models::Row r) {
    return std::vector<double>{r[0], r[1], r[2], r[3], std::log(r[4]), r[5], r[9]};
  };
  check_sweep_preserves_prior(draw, stats, std::nullopt, 121);
  check_sweep_preserves_prior(draw, stats, 3, 122);
}

// ---------------------------------------------------------------- toys

TEST_CASE("toy sweeps preserve the prior") {
  SUBCASE("normal") {
    const double tau2 = 0.5, v0 = 4.0;
    auto draw = [&](RngStream& rng) {
      std::vector<double> row(5), y(4);
      row[0] = prob::draw_normal(rng, 0.0, std::sqrt(v0));
      for (std::size_t i = 0; i < 4; ++i) {
        row[1 + i] = prob::draw_normal(rng, row[0], std::sqrt(tau2));
        y[i] = prob::draw_normal(rng, row[1 + i], 1.0);
      }
      return JointDraw{std::make_unique<models::NormalToyModel>(y, tau2, v0), row};
    };
    auto stats = [](models::Row r) { return std::vector<double>{r[0], r[1], r[2] * r[2]}; };
    check_sweep_preserves_prior(draw, stats, std::nullopt, 131);
    check_sweep_preserves_prior(draw, stats, 0, 132);
  }
  SUBCASE("discrete") {
    const auto atoms = models::DiscreteToyModel::standard().atoms();
    auto draw = [&](RngStream& rng) {
      std::vector<double> prior{atoms[0].prior, atoms[1].prior, atoms[2].prior};
      const std::size_t a = prob::draw_categorical(rng, prior);
      std::vector<double> row{static_cast<double>(a)};
      std::vector<std::int64_t> y(4);
      for (std::size_t i = 0; i < 4; ++i) {
        const int b = rng.uniform() < atoms[a].q ? 1 : 0;
        row.push_back(b);
        y[i] = prob::draw_poisson(rng, atoms[a].rate[b]);
      }
      return JointDraw{std::make_unique<models::DiscreteToyModel>(y, atoms), row};
    };
    auto stats = [](models::Row r) {
      return std::vector<double>{r[0] == 0.0 ? 1.0 : 0.0, r[0] == 1.0 ? 1.0 : 0.0, r[1], r[4]};
    };
    check_sweep_preserves_prior(draw, stats, std::nullopt, 141);
    check_sweep_preserves_prior(draw, stats, 1, 142);
  }
}

// ---------------------------------------------------------------- shared invariants

TEST_CASE("predictive densities are normalized over the outcome") {
  SUBCASE("mixture") {
    const std::vector<double> mu{-1.0, 2.0}, s2{0.3, 1.7}, p{0.4, 0.6};
    for (std::size_t z = 0; z < 2; ++z) {
      const double sd = std::sqrt(s2[z]);
      const double total = oracle::adaptive_simpson(
          [&](double y) { return std::exp(models::mixture_nonint_logpred(y, mu, s2, z)); },
          mu[z] - 12.0 * sd, mu[z] + 12.0 * sd, 1e-10);
      CHECK(std::fabs(total - 1.0) < 1e-6);
    }
    const double total = oracle::adaptive_simpson(
        [&](double y) { return std::exp(models::mixture_int_logpred(y, mu, s2, p)); }, -20.0, 20.0, 1e-10);
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
  SUBCASE("seeds") {
    const auto base = small_design();
    std::vector<double> row{0.2, -0.4, 0.9, 0.1, 0.2};
    row.resize(row.size() + base.size(), 0.0);
    for (std::size_t i : {0u, 3u, 7u}) {
      double total = 0.0;
      for (std::int64_t r = 0; r <= base.n[i]; ++r) {
        auto d = base;
        d.r[i] = r;
        total += std::exp(models::SeedsModel(d).unit_logpred(i, row, 0.35));
      }
      CHECK(std::fabs(total - 1.0) < 1e-6);
    }
  }
  SUBCASE("car") {
    const auto base = five_sites();
    const models::CarModel probe(base, CarVariant::Spatial);
    const auto row = car_row(probe, CarParams{0.0, 0.0, 1.0, 0.1}, {0.3, -0.2, 0.5, 0.1, 0.9});
    for (std::size_t i = 0; i < 5; ++i) {
      const double lambda = base.expected[i] * std::exp(0.7);
      const auto cap = static_cast<std::int64_t>(std::ceil(lambda + 12.0 * std::sqrt(lambda)));
      double total = 0.0;
      for (std::int64_t y = 0; y <= cap; ++y) {
        auto d = base;
        d.y[i] = y;
        total += std::exp(models::CarModel(d, CarVariant::Spatial).unit_logpred(i, row, 0.7));
      }
      CHECK(std::fabs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("regeneration never reads the unit's own outcome") {
  RngStream a(151), b(151);
  {
    const models::MixtureModel m1({0.1, 0.5, 3.0}, 2), m2({0.1, 99.0, 3.0}, 2);
    const auto row = mixture_row({0.0, 3.0}, {1.0, 1.0}, {0.4, 0.6}, {0, 0, 1});
    for (int t = 0; t < 100; ++t) CHECK(m1.regen_latent(1, row, a) == m2.regen_latent(1, row, b));
  }
  {
    auto d1 = five_sites(), d2 = five_sites();
    d2.y[2] = 500;
    const models::CarModel m1(d1, CarVariant::SpatialLinear), m2(d2, CarVariant::SpatialLinear);
    const auto row = car_row(m1, CarParams{0.1, 0.2, 0.5, 0.3}, {0.3, -0.2, 0.5, 0.1, 0.9});
    for (int t = 0; t < 100; ++t) CHECK(m1.regen_latent(2, row, a) == m2.regen_latent(2, row, b));
  }
  {
    auto d1 = small_design(), d2 = small_design();
    d2.r[4] = 0;
    const models::SeedsModel m1(d1), m2(d2);
    std::vector<double> row{0.1, 0.2, 0.3, 0.4, 0.5};
    row.resize(row.size() + 8, 0.0);
    for (int t = 0; t < 100; ++t) CHECK(m1.regen_latent(4, row, a) == m2.regen_latent(4, row, b));
  }
}

TEST_CASE("seeded chains are reproducible") {
  mcmc::ChainConfig cfg;
  cfg.n_adapt = 100;
  cfg.n_burn = 100;
  cfg.n_sample = 400;
  cfg.seed = 99;
  const models::CarModel car(five_sites(), CarVariant::SpatialLinear);
  CHECK(mcmc::run_chains(car, cfg) == mcmc::run_chains(car, cfg));
  const models::SeedsModel seeds(small_design());
  CHECK(mcmc::run_chains(seeds, cfg) == mcmc::run_chains(seeds, cfg));
  const models::MixtureModel mix({0.1, 0.5, 3.0, 3.3, -2.0}, 2);
  CHECK(mcmc::run_chains(mix, cfg) == mcmc::run_chains(mix, cfg));
}

TEST_CASE("mixture hold-out chain keeps every component occupied by observed points") {
  const std::vector<double> y{-4.0, -3.5, 0.0, 0.3, 5.0, 5.2};
  const models::MixtureModel model(y, 3, models::MixturePrior{0.0, 25.0, 2.0, 1.0});
  mcmc::ChainConfig cfg;
  cfg.n_adapt = 0;
  cfg.n_burn = 100;
  cfg.n_sample = 20000;
  cfg.thin = 1;
  cfg.seed = 17;
  for (std::size_t held = 0; held < y.size(); ++held) {
    const auto store = mcmc::run_holdout(model, held, cfg);
    std::size_t bad = 0;
    for (std::size_t s = 0; s < store.size(); ++s) {
      std::size_t used[3] = {0, 0, 0};
      for (std::size_t i = 0; i < y.size(); ++i)
        if (i != held) ++used[static_cast<std::size_t>(store.latent(s, i))];
      if (!used[0] || !used[1] || !used[2]) ++bad;
    }
    CHECK(bad == 0);
  }
}
