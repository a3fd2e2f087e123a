#include "puq/dirichlet/dirichlet.hpp"

#include <cmath>
#include <random>
#include <string>

#include "puq/dirichlet/special_functions.hpp"
#include "puq/error.hpp"
#include "puq/numkernel/loss.hpp"
#include "puq/rng.hpp"

namespace puq {
namespace {

double checked_sum(std::span<const double> values, const char* what) {
  if (values.empty()) throw InputError(std::string(what) + ": empty concentration vector");
  double sum = 0.0;
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (!(values[c] > 0.0) || !std::isfinite(values[c])) {
      throw DomainError(std::string(what) + ": entry " + std::to_string(c) +
                        " must be finite and > 0, got " + std::to_string(values[c]));
    }
    sum += values[c];
  }
  if (!std::isfinite(sum)) throw DomainError(std::string(what) + ": precision is not finite");
  return sum;
}

}  // namespace

DirichletParams::DirichletParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  precision_ = checked_sum(alpha_, "DirichletParams");
}

DirichletParams DirichletParams::from_log_alpha(std::span<const double> log_alpha) {
  std::vector<double> alpha(log_alpha.size());
  for (std::size_t c = 0; c < alpha.size(); ++c) alpha[c] = std::exp(log_alpha[c]);
  return DirichletParams(std::move(alpha));
}

PriorParams::PriorParams(std::vector<double> beta) : beta_(std::move(beta)) {
  precision_ = checked_sum(beta_, "PriorParams");
}

PriorParams PriorParams::uniform(std::size_t k, double value) {
  return PriorParams(std::vector<double>(k, value));
}

PriorParams ElboConfig::prior_for(std::size_t k) const {
  if (prior.empty()) return PriorParams::uniform(k, beta);
  if (prior.size() != k) {
    throw InputError("ElboConfig: prior has " + std::to_string(prior.size()) +
                     " entries for " + std::to_string(k) + " classes");
  }
  return PriorParams(prior);
}

void ElboConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be finite and > 0");
  for (double b : prior) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("prior entries must be finite and > 0");
  }
}

double expected_log_likelihood(const DirichletParams& params, std::size_t y) {
  if (y >= params.size()) {
    throw InputError("expected_log_likelihood: class " + std::to_string(y) +
                     " out of range for K=" + std::to_string(params.size()));
  }
  return digamma(params[y]) - digamma(params.precision());
}

double kl_dirichlet(const DirichletParams& p, const PriorParams& q) {
  if (p.size() != q.size()) {
    throw InputError("kl_dirichlet: lengths differ (" + std::to_string(p.size()) + " vs " +
                     std::to_string(q.size()) + ")");
  }
  const double a0 = p.precision();
  const double psi_a0 = digamma(a0);
  double kl = log_gamma(a0) - log_gamma(q.precision());
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double a = p[c];
    const double b = q.beta()[c];
    kl += log_gamma(b) - log_gamma(a) + (a - b) * (digamma(a) - psi_a0);
  }
  return kl;
}

ElboResult elbo_loss_and_grad(const Matrix& log_alpha, std::span<const std::size_t> labels,
                              const ElboConfig& cfg) {
  if (labels.size() != log_alpha.rows()) {
    throw ShapeError("elbo_loss_and_grad: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(log_alpha.rows()) + " rows");
  }
  const std::size_t k = log_alpha.cols();
  const PriorParams prior = cfg.prior_for(k);
  const double n = static_cast<double>(log_alpha.rows());
  ElboResult out;
  out.grad = Matrix(log_alpha.rows(), k);
  std::vector<double> alpha(k);
  double total = 0.0;
  for (std::size_t i = 0; i < log_alpha.rows(); ++i) {
    const auto row = log_alpha.row(i);
    double a0 = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      alpha[c] = std::exp(row[c]);
      if (!std::isfinite(alpha[c]) || !(alpha[c] > 0.0)) {
        throw NumericError("elbo_loss_and_grad: non-finite concentration at sample " +
                           std::to_string(i) + ", class " + std::to_string(c));
      }
      a0 += alpha[c];
    }
    const std::size_t y = labels[i];
    if (y >= k) {
      throw InputError("elbo_loss_and_grad: label " + std::to_string(y) + " out of range at sample " +
                       std::to_string(i));
    }
    const DirichletParams params(alpha);
    total += -expected_log_likelihood(params, y) + cfg.lambda * kl_dirichlet(params, prior);

    const double tri_a0 = trigamma(a0);
    const double b0 = prior.precision();
    auto g = out.grad.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double tri_c = trigamma(alpha[c]);
      const double d_lik = -((c == y ? tri_c : 0.0) - tri_a0);
      const double d_kl = (alpha[c] - prior.beta()[c]) * tri_c - (a0 - b0) * tri_a0;
      g[c] = (d_lik + cfg.lambda * d_kl) * alpha[c] / n;
    }
  }
  out.loss = log_alpha.rows() == 0 ? 0.0 : total / n;
  return out;
}

std::vector<double> predictive_mean(const DirichletParams& params) {
  std::vector<double> p(params.alpha().begin(), params.alpha().end());
  for (double& v : p) v /= params.precision();
  return p;
}

double differential_entropy(const DirichletParams& params) {
  const double a0 = params.precision();
  const double k = static_cast<double>(params.size());
  double h = -log_gamma(a0) + (a0 - k) * digamma(a0);
  for (double a : params.alpha()) h += log_gamma(a) - (a - 1.0) * digamma(a);
  return h;
}

double expected_categorical_entropy(const DirichletParams& params) {
  const double a0 = params.precision();
  const double psi_a0 = digamma(a0 + 1.0);
  double h = 0.0;
  for (double a : params.alpha()) h -= (a / a0) * (digamma(a + 1.0) - psi_a0);
  return h;
}

double log_density(const DirichletParams& params, std::span<const double> pi) {
  if (pi.size() != params.size()) throw ShapeError("log_density: dimension mismatch");
  double v = log_gamma(params.precision());
  for (std::size_t c = 0; c < pi.size(); ++c) {
    v += (params[c] - 1.0) * std::log(pi[c]) - log_gamma(params[c]);
  }
  return v;
}

Matrix sample_dirichlet(const DirichletParams& params, std::size_t n, std::uint64_t seed) {
  const std::size_t k = params.size();
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::gamma_distribution<double>> gammas;
  gammas.reserve(k);
  for (double a : params.alpha()) gammas.emplace_back(a < 1.0 ? a + 1.0 : a, 1.0);

  Matrix out(n, k);
  std::vector<double> log_g(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const double a = params[c];
      // Gamma(a) = Gamma(a + 1) * U^(1/a) keeps small shapes away from underflow.
      double lg = std::log(gammas[c](rng));
      if (a < 1.0) {
        double u = unit(rng);
        while (u == 0.0) u = unit(rng);
        lg += std::log(u) / a;
      }
      log_g[c] = lg;
    }
    const double lse = log_sum_exp(log_g);
    auto row = out.row(i);
    for (std::size_t c = 0; c < k; ++c) row[c] = std::exp(log_g[c] - lse);
  }
  return out;
}

}  // namespace puq
