#include "devtox/polya_gamma.hpp"

#include "devtox/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace devtox {

namespace {

constexpr double kPi = std::numbers::pi;
// Switch point between the two series representations of the J* density.
constexpr double kTrunc = 0.64;

// n-th term of the alternating series for the J*(1, 0) density at x.
double series_coef(int n, double x) {
    const double k = (n + 0.5) * kPi;
    if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
    if (x <= 0.0) return 0.0;
    const double expnt = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k)
                         - 2.0 * (n + 0.5) * (n + 0.5) / x;
    return std::exp(expnt);
}

// Probability of proposing from the truncated exponential piece.
double mass_texpon(double z) {
    const double t = kTrunc;
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
    const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
    const double x0 = std::log(fz) + fz * t;
    const double xb = x0 - z + log_normal_cdf(b);
    const double xa = x0 + z + log_normal_cdf(a);
    const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
    return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
double sample_truncated_ig(double z, Rng& rng) {
    const double t = kTrunc;
    double x = t + 1.0;
    if (1.0 / t > z) {
        // mu > t: chi-square proposal, accept with the exponential tilt.
        double alpha = 0.0;
        while (rng.uniform() > alpha) {
            double e1 = rng.exponential();
            double e2 = rng.exponential();
            while (e1 * e1 > 2.0 * e2 / t) {
                e1 = rng.exponential();
                e2 = rng.exponential();
            }
            x = 1.0 + e1 * t;
            x = t / (x * x);
            alpha = std::exp(-0.5 * z * z * x);
        }
    } else {
        const double mu = 1.0 / z;
        while (x > t) {
            double y = rng.normal();
            y *= y;
            const double half_mu = 0.5 * mu;
            const double mu_y = mu * y;
            x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
            if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
        }
    }
    return x;
}

// Proposal constants shared by every draw with the same tilt.
struct Tilt {
    explicit Tilt(double c)
        : z(0.5 * std::fabs(c)),
          fz(0.125 * kPi * kPi + 0.5 * z * z),
          p_expon(mass_texpon(z)) {}
    double z;
    double fz;
    double p_expon;
};

// One J*(1, z) draw, scaled to PG(1, c) = J*(1, |c|/2) / 4.
double draw_pg1(const Tilt& tilt, Rng& rng) {
    const double z = tilt.z;
    const double fz = tilt.fz;
    const double p_expon = tilt.p_expon;
    for (;;) {
        double x;
        if (rng.uniform() < p_expon) {
            x = kTrunc + rng.exponential() / fz;
        } else {
            x = sample_truncated_ig(z, rng);
        }
        double s = series_coef(0, x);
        const double y = rng.uniform() * s;
        for (int n = 1;; ++n) {
            if (n % 2 == 1) {
                s -= series_coef(n, x);
                if (y <= s) return 0.25 * x;
            } else {
                s += series_coef(n, x);
                if (y > s) break;
            }
        }
    }
}

}  // namespace

double sample_pg1(double c, Rng& rng) { return draw_pg1(Tilt(c), rng); }

double sample_polya_gamma(double b, double c, Rng& rng) {
    if (!(b > 0.0)) throw std::domain_error("sample_polya_gamma: shape b must be positive");
    const double rounded = std::round(b);
    if (rounded != b) {
        throw std::domain_error("sample_polya_gamma: only integer shape is supported");
    }
    const long count = static_cast<long>(rounded);
    const Tilt tilt(c);
    double sum = 0.0;
    for (long i = 0; i < count; ++i) sum += draw_pg1(tilt, rng);
    return sum;
}

double polya_gamma_mean(double b, double c) {
    if (std::fabs(c) < 1e-8) return 0.25 * b;
    return b * std::tanh(0.5 * c) / (2.0 * c);
}

}  // namespace devtox
