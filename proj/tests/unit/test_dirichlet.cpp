#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "puq/dirichlet/dirichlet.hpp"
#include "puq/dirichlet/special_functions.hpp"
#include "puq/error.hpp"

using namespace puq;

namespace {

constexpr double kEuler = 0.57721566490153286061;

std::vector<double> random_alpha(std::mt19937_64& gen, std::size_t k, double lo, double hi) {
  // log-uniform so small and large concentrations are both exercised
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> a(k);
  for (double& v : a) v = std::exp(u(gen));
  return a;
}

double brute_kl(const std::vector<double>& a, const std::vector<double>& b) {
  // Closed form written out with std::lgamma and the oracle digamma.
  double a0 = 0.0, b0 = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    a0 += a[c];
    b0 += b[c];
  }
  double kl = std::lgamma(a0) - std::lgamma(b0);
  for (std::size_t c = 0; c < a.size(); ++c)
    kl += std::lgamma(b[c]) - std::lgamma(a[c]) +
          (a[c] - b[c]) * (oracle::digamma(a[c]) - oracle::digamma(a0));
  return kl;
}

}  // namespace

TEST_CASE("log_gamma reference values") {
  CHECK(std::abs(log_gamma(1.0)) <= 1e-12);
  CHECK(std::abs(log_gamma(2.0)) <= 1e-12);
  CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-12));
  CHECK(std::abs(log_gamma(0.5) - 0.5723649429247001) <= 1e-10);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-4.0, 6.0);
  for (int i = 0; i < 500; ++i) {
    const double x = std::pow(10.0, u(gen));
    const double want = std::lgamma(x);
    CHECK(std::abs(log_gamma(x) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("digamma reference values") {
  CHECK(std::abs(digamma(2.0) - digamma(1.0) - 1.0) <= 1e-12);
  CHECK(std::abs(digamma(1.0) + kEuler) <= 1e-10);
  CHECK(std::abs(digamma(0.5) - (-kEuler - 2.0 * std::numbers::ln2)) <= 1e-10);
  CHECK(std::abs(digamma(0.5) + 1.9635100260214235) <= 1e-10);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-2.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    const double x = std::pow(10.0, u(gen));
    const double want = oracle::digamma(x);
    CHECK(std::abs(digamma(x) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("trigamma reference values") {
  const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
  CHECK(std::abs(trigamma(1.0) - pi2_6) <= 1e-10);
  CHECK(std::abs(trigamma(2.0) - (pi2_6 - 1.0)) <= 1e-10);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    const double x = std::pow(10.0, u(gen));
    const double want = oracle::trigamma(x);
    CHECK(std::abs(trigamma(x) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("digamma recurrence on a log grid") {
  double worst = 0.0;
  for (int i = 0; i <= 600; ++i) {
    const double x = std::pow(10.0, -2.0 + 6.0 * i / 600.0);
    worst = std::max(worst, std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x));
  }
  CHECK(worst <= 1e-11);
}

TEST_CASE("special functions reject non-positive input") {
  for (double x : {0.0, -1.0, std::nan("")}) {
    CHECK_THROWS_AS(log_gamma(x), DomainError);
    CHECK_THROWS_AS(digamma(x), DomainError);
    CHECK_THROWS_AS(trigamma(x), DomainError);
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(DirichletParams({1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(DirichletParams({1.0, -2.0}), DomainError);
  CHECK_THROWS_AS(DirichletParams({1.0, std::numeric_limits<double>::infinity()}), Error);
  CHECK_THROWS_AS(PriorParams({0.0, 1.0}), DomainError);
  ElboConfig cfg;
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("expected log-likelihood examples") {
  CHECK(std::abs(expected_log_likelihood(DirichletParams({1, 1}), 0) + 1.0) <= 1e-12);
  CHECK(std::abs(expected_log_likelihood(DirichletParams({2, 2}), 0) + (0.5 + 1.0 / 3.0)) <=
        1e-12);
  CHECK_THROWS_AS(expected_log_likelihood(DirichletParams({2, 2}), 2), InputError);

  const std::vector<double> alpha = {3, 1, 2};
  const auto draws = oracle::dirichlet_draws(alpha, 200000, 17);
  std::vector<double> logs;
  for (const auto& pi : draws) logs.push_back(std::log(pi[1]));
  const auto est = oracle::estimate_mean(logs);
  CHECK(std::abs(expected_log_likelihood(DirichletParams(alpha), 1) - est.mean) <=
        3.0 * est.stderr_);
}

TEST_CASE("KL examples") {
  CHECK(std::abs(kl_dirichlet(DirichletParams({2, 3, 4}), PriorParams({2, 3, 4}))) <= 1e-12);
  const double kl = kl_dirichlet(DirichletParams({2, 2}), PriorParams({1, 1}));
  CHECK(std::abs(kl - (std::log(6.0) - 2.0 * (1.0 / 2.0 + 1.0 / 3.0))) <= 1e-12);
  CHECK(kl == doctest::Approx(0.125093).epsilon(1e-5));
  const double rev = kl_dirichlet(DirichletParams({1, 1}), PriorParams({2, 2}));
  CHECK(rev > 0.0);
  CHECK(std::abs(rev - kl) > 1e-3);
  CHECK_THROWS_AS(kl_dirichlet(DirichletParams({1, 1}), PriorParams({1, 1, 1})), InputError);
}

TEST_CASE("KL matches a Monte-Carlo estimate of E_p[log p - log q]") {
  const DirichletParams p({2, 2});
  const DirichletParams q({1, 1});
  const auto draws = oracle::dirichlet_draws(p.alpha(), 200000, 5);
  std::vector<double> diffs;
  for (const auto& pi : draws) diffs.push_back(log_density(p, pi) - log_density(q, pi));
  const auto est = oracle::estimate_mean(diffs);
  CHECK(std::abs(kl_dirichlet(p, PriorParams({1, 1})) - est.mean) <= 3.0 * est.stderr_);
}

TEST_CASE("KL agrees with an independent closed form and is non-negative") {
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<std::size_t> kd(2, 10);
  double worst_neg = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = kd(gen);
    const auto a = random_alpha(gen, k, 0.1, 50.0);
    const auto b = random_alpha(gen, k, 0.1, 50.0);
    const double kl = kl_dirichlet(DirichletParams(a), PriorParams(b));
    worst_neg = std::min(worst_neg, kl);
    CHECK(kl == doctest::Approx(brute_kl(a, b)).epsilon(1e-9));
  }
  CHECK(worst_neg >= -1e-12);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_alpha(gen, kd(gen), 0.1, 50.0);
    CHECK(kl_dirichlet(DirichletParams(a), PriorParams(a)) <= 1e-12);
  }
}

TEST_CASE("ELBO loss examples") {
  const std::vector<std::size_t> y0 = {0};
  for (double lambda : {0.0, 0.1, 5.0}) {
    ElboConfig cfg;
    cfg.lambda = lambda;
    const auto r = elbo_loss_and_grad(Matrix::from_rows({{0, 0}}), y0, cfg);
    CHECK(std::abs(r.loss - 1.0) <= 1e-12);
  }
  ElboConfig cfg;
  cfg.lambda = 0.1;
  const double l2 = std::log(2.0);
  const auto r = elbo_loss_and_grad(Matrix::from_rows({{l2, l2}}), y0, cfg);
  CHECK(r.loss == doctest::Approx(0.845843).epsilon(1e-6));
  CHECK(std::abs(r.loss - (0.5 + 1.0 / 3.0 + 0.1 * (std::log(6.0) - 5.0 / 3.0))) <= 1e-12);
}

TEST_CASE("ELBO gradient matches central differences") {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> nd(0.0, 1.5);
  std::uniform_int_distribution<std::size_t> kd(2, 6);
  std::uniform_real_distribution<double> ld(0.0, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = kd(gen);
    const std::size_t n = 1 + t % 5;
    Matrix la(n, k);
    for (double& v : la.data()) v = nd(gen);
    std::vector<std::size_t> labels(n);
    for (auto& y : labels) y = std::uniform_int_distribution<std::size_t>(0, k - 1)(gen);
    ElboConfig cfg;
    cfg.lambda = ld(gen);
    if (t % 3 == 0) cfg.prior = random_alpha(gen, k, 0.5, 3.0);
    const auto r = elbo_loss_and_grad(la, labels, cfg);
    const auto fd = oracle::central_difference(
        la.data(), [&] { return elbo_loss_and_grad(la, labels, cfg).loss; }, 1e-4);
    worst = std::max(worst, oracle::max_relative_error(r.grad.data(), fd));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("ELBO rejects non-finite alpha and names the sample") {
  const std::vector<std::size_t> labels = {0, 1};
  const Matrix la = Matrix::from_rows({{0, 0}, {std::nan(""), 0}});
  try {
    elbo_loss_and_grad(la, labels, ElboConfig{});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("predictive mean") {
  const auto m = predictive_mean(DirichletParams({2, 1, 1}));
  CHECK(m[0] == 0.5);
  CHECK(m[1] == 0.25);
  CHECK(m[2] == 0.25);
  for (double v : predictive_mean(DirichletParams({7, 7, 7, 7}))) CHECK(v == 0.25);

  const std::vector<double> alpha = {3, 1, 2};
  const auto draws = oracle::dirichlet_draws(alpha, 200000, 21);
  const auto pm = predictive_mean(DirichletParams(alpha));
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> xs;
    for (const auto& pi : draws) xs.push_back(pi[c]);
    const auto est = oracle::estimate_mean(xs);
    CHECK(std::abs(pm[c] - est.mean) <= 3.0 * est.stderr_);
  }
}

TEST_CASE("differential entropy examples") {
  CHECK(std::abs(differential_entropy(DirichletParams({1, 1}))) <= 1e-12);
  CHECK(std::abs(differential_entropy(DirichletParams({1, 1, 1})) + std::log(2.0)) <= 1e-12);
}

TEST_CASE("expected categorical entropy examples") {
  CHECK(std::abs(expected_categorical_entropy(DirichletParams({1, 1})) - 0.5) <= 1e-12);
  const double big = expected_categorical_entropy(DirichletParams({1e4, 1e4}));
  CHECK(big < std::log(2.0));
  CHECK(std::abs(big - std::log(2.0)) <= 1e-3);

  const std::vector<double> alpha = {3, 1, 2};
  const auto draws = oracle::dirichlet_draws(alpha, 200000, 33);
  std::vector<double> hs;
  for (const auto& pi : draws) hs.push_back(oracle::shannon(pi));
  const auto est = oracle::estimate_mean(hs);
  CHECK(std::abs(expected_categorical_entropy(DirichletParams(alpha)) - est.mean) <=
        3.0 * est.stderr_);
}

TEST_CASE("entropy bounds on random parameters") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::size_t> kd(2, 12);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = kd(gen);
    const DirichletParams p(random_alpha(gen, k, 0.05, 100.0));
    const double eh = expected_categorical_entropy(p);
    const double h = oracle::shannon(predictive_mean(p));
    CHECK(eh >= -1e-9);
    CHECK(eh <= h + 1e-9);
    CHECK(h <= std::log(static_cast<double>(k)) + 1e-9);
  }
}

TEST_CASE("sample_dirichlet moments") {
  const std::size_t n = 100000;
  for (const auto& alpha : {std::vector<double>{1, 1}, std::vector<double>{9, 1}}) {
    const DirichletParams p(alpha);
    const Matrix s = sample_dirichlet(p, n, 4);
    CHECK(s.rows() == n);
    std::vector<double> first;
    for (std::size_t r = 0; r < n; ++r) {
      CHECK(s(r, 0) + s(r, 1) == doctest::Approx(1.0).epsilon(1e-12));
      first.push_back(s(r, 0));
    }
    const auto est = oracle::estimate_mean(first);
    CHECK(std::abs(est.mean - alpha[0] / (alpha[0] + alpha[1])) <= 3.0 * est.stderr_);
  }
  CHECK(sample_dirichlet(DirichletParams({2, 3}), 10, 1) ==
        sample_dirichlet(DirichletParams({2, 3}), 10, 1));
}
