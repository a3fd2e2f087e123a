#pragma once

namespace puq {

// Gamma-family special functions for x > 0. Each shifts the argument upward
// by the unit recurrence until x >= 6 and then sums the Stirling/Bernoulli
// asymptotic series. Non-positive or NaN input throws DomainError.
double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

}  // namespace puq
