#pragma once

// Mass functions, logit-normal integrals and random variates used by the
// samplers and the risk functionals.
//
// Notation: logistic(x) = exp(x) / (1 + exp(x)). The "logit-normal
// integral" is E[logistic(psi)] for psi ~ N(theta, sigma2); all such
// integrals are evaluated with a Gauss-Hermite rule.

#include "devtox/quadrature.hpp"
#include "devtox/random.hpp"

#include <Eigen/Core>

namespace devtox {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Overflow-safe; NaN in, NaN out.
double logistic(double x);
// log(logistic(x)) and log(1 - logistic(x)) without cancellation.
double log_logistic(double x);
double log1m_logistic(double x);

double log_normal_cdf(double x);
double normal_cdf(double x);
double log_choose(int n, int k);

// E[logistic(psi)], psi ~ N(theta, sigma2).
double logit_normal_integral(double theta, double sigma2,
                             const QuadratureRule& rule = default_rule());
// E[logistic(psi)^2], psi ~ N(theta, sigma2).
double logit_normal_square_integral(double theta, double sigma2,
                                    const QuadratureRule& rule = default_rule());

double binomial_log_pmf(int y, int m, double p);
double binomial_pmf(int y, int m, double p);
// Binomial mass with success probability logistic(theta), in log space.
double binomial_logit_log_pmf(int y, int m, double theta);

// Beta-Binomial with mean logistic(theta) and dispersion lambda:
// integral of Bin(y | m, p) Beta(p | lambda*phi, lambda*(1-phi)).
double bb_log_pmf(int y, int m, double theta, double lambda);
double bb_pmf(int y, int m, double theta, double lambda);

// Logistic-Normal-Binomial: integral of Bin(y | m, logistic(psi)) N(psi | theta, sigma2).
double lnb_pmf(int y, int m, double theta, double sigma2,
               const QuadratureRule& rule = default_rule());

struct TaylorMoments {
    double approx_mean;
    double approx_corr;
};

// Second-order Taylor approximations of the LNB implant-level mean and
// pairwise correlation.
TaylorMoments taylor_lnb_moments(double theta, double sigma2);

// Exact (quadrature) pairwise correlation of two implants under LNB.
double lnb_exact_corr(double theta, double sigma2,
                      const QuadratureRule& rule = default_rule());

// ---- standard families -------------------------------------------------

double sample_inverse_gamma(double shape, double scale, Rng& rng);
// 1 + Poisson(rate): support starts at one.
int sample_shifted_poisson(double rate, Rng& rng);
// Draw from N(mean, cov). Throws std::domain_error if cov is not PD.
Vec2 sample_mvn(const Vec2& mean, const Mat2& cov, Rng& rng);
// Canonical form: N(precision^{-1} linear, precision^{-1}).
Vec2 sample_mvn_canonical(const Vec2& linear, const Mat2& precision, Rng& rng);
// Wishart(df, scale) by Bartlett decomposition; E[W] = df * scale.
Mat2 sample_wishart(double df, const Mat2& scale, Rng& rng);
// Sigma with Sigma^{-1} ~ Wishart(df, scale^{-1}), so E[Sigma] = scale / (df - 3).
Mat2 sample_inverse_wishart(double df, const Mat2& scale, Rng& rng);

}  // namespace devtox
