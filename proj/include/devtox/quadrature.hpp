#pragma once

#include <vector>

namespace devtox {

// Gauss-Hermite rule, physicists' convention: integrates f(t) exp(-t^2).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

inline constexpr int kDefaultHermiteOrder = 30;

// Golub-Welsch construction. Throws std::domain_error for order < 1.
QuadratureRule gauss_hermite(int order);

// Shared order-30 rule used by every logit-normal integral in the library.
const QuadratureRule& default_rule();

}  // namespace devtox
