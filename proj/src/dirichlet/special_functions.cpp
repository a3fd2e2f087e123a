#include "puq/dirichlet/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "puq/error.hpp"

namespace puq {
namespace {

constexpr double kShiftThreshold = 6.0;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0)) {
    throw DomainError(std::string(fn) + ": argument must be > 0, got " + std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (std::isinf(x)) return x;
  double shift_product = 1.0;
  while (x < kShiftThreshold) {
    shift_product *= x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2k / (2k (2k-1) x^(2k-1)), k = 1..8.
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0 +
                                                             inv2 * (-3617.0 / 122400.0))))))));
  const double stirling =
      (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
  return stirling - std::log(shift_product);
}

double digamma(double x) {
  require_positive(x, "digamma");
  if (std::isinf(x)) return x;
  double shift_sum = 0.0;
  while (x < kShiftThreshold) {
    shift_sum += 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B_2k / (2k x^2k), k = 1..7.
  const double series =
      inv2 * (1.0 / 12.0 +
              inv2 * (-1.0 / 120.0 +
                      inv2 * (1.0 / 252.0 +
                              inv2 * (-1.0 / 240.0 +
                                      inv2 * (1.0 / 132.0 +
                                              inv2 * (-691.0 / 32760.0 +
                                                      inv2 * (1.0 / 12.0)))))));
  return std::log(x) - 0.5 * inv - series - shift_sum;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  if (std::isinf(x)) return 0.0;
  double shift_sum = 0.0;
  while (x < kShiftThreshold) {
    shift_sum += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B_2k / x^(2k+1), k = 1..7.
  const double series =
      inv * inv2 *
      (1.0 / 6.0 +
       inv2 * (-1.0 / 30.0 +
               inv2 * (1.0 / 42.0 +
                       inv2 * (-1.0 / 30.0 +
                               inv2 * (5.0 / 66.0 +
                                       inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))))));
  return inv + 0.5 * inv2 + series + shift_sum;
}

}  // namespace puq
