#pragma once

#include "devtox/random.hpp"

namespace devtox {

// Exact draw from PG(1, c) by the alternating-series rejection sampler
// (truncated-exponential / truncated-inverse-Gaussian proposal mixture).
double sample_pg1(double c, Rng& rng);

// PG(b, c) for integer b >= 1, as a sum of b independent PG(1, c) draws.
// Throws std::domain_error for b <= 0 or non-integer b.
double sample_polya_gamma(double b, double c, Rng& rng);

// Analytic mean b * tanh(c/2) / (2c), with the c -> 0 limit b/4.
double polya_gamma_mean(double b, double c);

}  // namespace devtox
