#include "devtox/mcmc.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace devtox {

namespace {

// Marginal prior of a single atom after integrating the normal-inverse-
// Wishart layer, matched on the first two moments.
Mat2 marginal_beta_cov(const Hyperparameters& h, int j) {
    const double denom = std::max(h.nu0[j] - 3.0, 1.0);
    return (1.0 + 1.0 / h.kappa0[j]) * h.Lambda0[j] / denom;
}

double stage_log_lik(const Vec2& beta, double lambda, int stage, const Problem& problem) {
    double out = 0.0;
    for (const auto& d : problem.dams()) {
        const int n = d.trials[stage];
        if (n == 0) continue;
        out += bb_log_pmf(d.successes[stage], n, d.x.dot(beta), lambda);
    }
    return out;
}

double stage_log_prior(const Vec2& beta, double log_lambda, int stage, const Hyperparameters& h) {
    const Mat2 cov = marginal_beta_cov(h, stage);
    const Vec2 dev = beta - h.mu0[stage];
    const double quad = dev.dot(cov.ldlt().solve(dev));
    // Gamma(a, b) on lambda plus the log-Jacobian of lambda = exp(log_lambda).
    const double lam = std::exp(log_lambda);
    return -0.5 * quad + h.a_lambda * log_lambda - h.b_lambda * lam;
}

double stage_log_target(const CrbbState& s, int stage, const Problem& problem) {
    const double lam = std::exp(s.log_lambda[stage]);
    if (!(lam > 0.0) || !std::isfinite(lam)) return -std::numeric_limits<double>::infinity();
    return stage_log_lik(s.beta[stage], lam, stage, problem) +
           stage_log_prior(s.beta[stage], s.log_lambda[stage], stage, problem.hyper());
}

double& coordinate(CrbbState& s, int c) {
    if (c < 4) return s.beta[c / 2](c % 2);
    return s.log_lambda[c - 4];
}

int stage_of(int c) { return c < 4 ? c / 2 : c - 4; }

}  // namespace

double crbb_log_target(const CrbbState& s, const Problem& problem) {
    return stage_log_target(s, 0, problem) + stage_log_target(s, 1, problem);
}

void step_mh_crbb(CrbbState& state, const Problem& problem, Rng& rng, CrbbSampler& sampler) {
    std::array<double, 2> current{stage_log_target(state, 0, problem),
                                  stage_log_target(state, 1, problem)};
    for (int c = 0; c < 6; ++c) {
        const int stage = stage_of(c);
        double& x = coordinate(state, c);
        const double old = x;
        x = old + sampler.scales[c] * rng.normal();
        const double proposed = stage_log_target(state, stage, problem);
        ++sampler.proposed[c];
        if (std::log(rng.uniform()) < proposed - current[stage]) {
            current[stage] = proposed;
            ++sampler.accepted[c];
        } else {
            x = old;
        }
    }
}

}  // namespace devtox
