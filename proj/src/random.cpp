#include "devtox/random.hpp"

#include <cmath>
#include <stdexcept>

namespace devtox {

double Rng::uniform() {
    // 53 random bits, shifted off zero.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::domain_error("gamma: shape and rate must be positive");
    }
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
}

double Rng::beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    const double s = x + y;
    if (s <= 0.0) {
        // Both gammas underflowed (tiny shapes); fall back on the mean.
        return a / (a + b);
    }
    return x / s;
}

int Rng::poisson(double mean) {
    if (!(mean >= 0.0)) throw std::domain_error("poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    std::poisson_distribution<int> dist(mean);
    return dist(engine_);
}

int Rng::binomial(int n, double p) {
    if (n < 0) throw std::domain_error("binomial: negative trial count");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<int> dist(n, p);
    return dist(engine_);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace devtox
