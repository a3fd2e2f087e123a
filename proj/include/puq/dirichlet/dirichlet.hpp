#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "puq/numkernel/matrix.hpp"

namespace puq {

// Concentration vector of a Dirichlet over K classes. Every entry is
// strictly positive and the precision (sum) is finite.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> alpha);
  static DirichletParams from_log_alpha(std::span<const double> log_alpha);

  std::span<const double> alpha() const { return alpha_; }
  double operator[](std::size_t c) const { return alpha_[c]; }
  std::size_t size() const { return alpha_.size(); }
  double precision() const { return precision_; }

 private:
  std::vector<double> alpha_;
  double precision_ = 0.0;
};

// Prior concentration beta. Defaults to all-ones.
class PriorParams {
 public:
  explicit PriorParams(std::vector<double> beta);
  static PriorParams uniform(std::size_t k, double value = 1.0);

  std::span<const double> beta() const { return beta_; }
  std::size_t size() const { return beta_.size(); }
  double precision() const { return precision_; }

 private:
  std::vector<double> beta_;
  double precision_ = 0.0;
};

struct ElboConfig {
  double lambda = 0.1;
  // Per-class prior value used when `prior` is empty.
  double beta = 1.0;
  std::vector<double> prior;

  PriorParams prior_for(std::size_t k) const;
  void validate() const;
};

// E_{Dir(alpha)}[log pi_y] = psi(alpha_y) - psi(alpha_0).
double expected_log_likelihood(const DirichletParams& params, std::size_t y);

// KL(Dir(alpha) || Dir(beta)).
double kl_dirichlet(const DirichletParams& p, const PriorParams& q);

struct ElboResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d log alpha, already divided by the batch size
};

// Negated ELBO averaged over the batch:
//   loss_i = -(psi(alpha_y) - psi(alpha_0)) + lambda * KL(Dir(alpha) || Dir(beta)).
ElboResult elbo_loss_and_grad(const Matrix& log_alpha, std::span<const std::size_t> labels,
                              const ElboConfig& cfg);

// alpha_c / alpha_0.
std::vector<double> predictive_mean(const DirichletParams& params);

double differential_entropy(const DirichletParams& params);

// E_{pi ~ Dir(alpha)}[H(Cat(pi))].
double expected_categorical_entropy(const DirichletParams& params);

// Log of the Dirichlet density at pi (interior of the simplex).
double log_density(const DirichletParams& params, std::span<const double> pi);

// n draws from Dir(alpha), one per row, via normalised Gamma variates.
// Intended for Monte-Carlo checks.
Matrix sample_dirichlet(const DirichletParams& params, std::size_t n, std::uint64_t seed);

}  // namespace puq
