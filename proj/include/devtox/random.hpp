#pragma once

// Random stream used by every sampler in the library.
//
// One Rng is one stream. Streams are never shared between threads; parallel
// chains get their own stream through derive_seed().

#include <cstdint>
#include <random>

namespace devtox {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1).
    double uniform();
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double exponential() { return exponential_(engine_); }
    // Gamma with shape and *rate*.
    double gamma(double shape, double rate);
    double beta(double a, double b);
    int poisson(double mean);
    int binomial(int n, double p);

    std::mt19937_64& engine() { return engine_; }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
};

// Splitmix64 finalizer applied to master + stream; stream k of a run always
// gets the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace devtox
