#include "devtox/distributions.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace devtox {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869480794515607725858;

void check_counts(int y, int m, const char* who) {
    if (m < 0 || y < 0 || y > m) {
        throw std::domain_error(std::string(who) + ": require 0 <= y <= m");
    }
}

}  // namespace

double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_logistic(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double log1m_logistic(double x) { return log_logistic(-x); }

double log_normal_cdf(double x) {
    if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    // Asymptotic series of the Mills ratio.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double logit_normal_integral(double theta, double sigma2, const QuadratureRule& rule) {
    if (sigma2 < 0.0) throw std::domain_error("logit_normal_integral: sigma2 < 0");
    if (sigma2 == 0.0) return logistic(theta);
    const double scale = std::sqrt(2.0 * sigma2);
    double acc = 0.0;
    for (int i = 0; i < rule.order; ++i) {
        acc += rule.weights[i] * logistic(theta + scale * rule.nodes[i]);
    }
    return acc * kInvSqrtPi;
}

double logit_normal_square_integral(double theta, double sigma2, const QuadratureRule& rule) {
    if (sigma2 < 0.0) throw std::domain_error("logit_normal_square_integral: sigma2 < 0");
    if (sigma2 == 0.0) {
        const double p = logistic(theta);
        return p * p;
    }
    const double scale = std::sqrt(2.0 * sigma2);
    double acc = 0.0;
    for (int i = 0; i < rule.order; ++i) {
        const double p = logistic(theta + scale * rule.nodes[i]);
        acc += rule.weights[i] * p * p;
    }
    return acc * kInvSqrtPi;
}

double binomial_log_pmf(int y, int m, double p) {
    check_counts(y, m, "binomial_log_pmf");
    if (p <= 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return y == m ? 0.0 : -std::numeric_limits<double>::infinity();
    return log_choose(m, y) + y * std::log(p) + (m - y) * std::log1p(-p);
}

double binomial_pmf(int y, int m, double p) { return std::exp(binomial_log_pmf(y, m, p)); }

double binomial_logit_log_pmf(int y, int m, double theta) {
    check_counts(y, m, "binomial_logit_log_pmf");
    double out = log_choose(m, y);
    if (y > 0) out += y * log_logistic(theta);
    if (m - y > 0) out += (m - y) * log1m_logistic(theta);
    return out;
}

double bb_log_pmf(int y, int m, double theta, double lambda) {
    check_counts(y, m, "bb_pmf");
    if (!(lambda > 0.0)) throw std::domain_error("bb_pmf: lambda must be positive");
    constexpr double tiny = 1e-300;
    const double a = std::max(lambda * logistic(theta), tiny);
    const double b = std::max(lambda * logistic(-theta), tiny);
    auto lbeta = [](double u, double v) {
        return std::lgamma(u) + std::lgamma(v) - std::lgamma(u + v);
    };
    return log_choose(m, y) + lbeta(y + a, m - y + b) - lbeta(a, b);
}

double bb_pmf(int y, int m, double theta, double lambda) {
    return std::exp(bb_log_pmf(y, m, theta, lambda));
}

double lnb_pmf(int y, int m, double theta, double sigma2, const QuadratureRule& rule) {
    check_counts(y, m, "lnb_pmf");
    if (sigma2 < 0.0) throw std::domain_error("lnb_pmf: sigma2 < 0");
    if (sigma2 == 0.0) return std::exp(binomial_logit_log_pmf(y, m, theta));
    const double scale = std::sqrt(2.0 * sigma2);
    const double lc = log_choose(m, y);
    double acc = 0.0;
    for (int i = 0; i < rule.order; ++i) {
        const double psi = theta + scale * rule.nodes[i];
        double lp = lc;
        if (y > 0) lp += y * log_logistic(psi);
        if (m - y > 0) lp += (m - y) * log1m_logistic(psi);
        acc += rule.weights[i] * std::exp(lp);
    }
    return acc * kInvSqrtPi;
}

TaylorMoments taylor_lnb_moments(double theta, double sigma2) {
    if (sigma2 < 0.0) throw std::domain_error("taylor_lnb_moments: sigma2 < 0");
    const double p = logistic(theta);
    const double d1 = p * (1.0 - p);
    const double c = 1.0 - 2.0 * p;
    const double d2 = d1 * c;
    TaylorMoments out{};
    out.approx_mean = p + 0.5 * sigma2 * d2;
    const double num = sigma2 * d1 * (4.0 - sigma2 * c * c);
    const double den = 4.0 + sigma2 * c * (2.0 - 4.0 * p - sigma2 * d2);
    out.approx_corr = num / den;
    return out;
}

double lnb_exact_corr(double theta, double sigma2, const QuadratureRule& rule) {
    const double e1 = logit_normal_integral(theta, sigma2, rule);
    const double e2 = logit_normal_square_integral(theta, sigma2, rule);
    return (e2 - e1 * e1) / (e1 - e1 * e1);
}

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
    return 1.0 / rng.gamma(shape, scale);
}

int sample_shifted_poisson(double rate, Rng& rng) { return 1 + rng.poisson(rate); }

Vec2 sample_mvn(const Vec2& mean, const Mat2& cov, Rng& rng) {
    Eigen::LLT<Mat2> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("sample_mvn: covariance is not positive definite");
    }
    const Vec2 z(rng.normal(), rng.normal());
    return mean + llt.matrixL() * z;
}

Vec2 sample_mvn_canonical(const Vec2& linear, const Mat2& precision, Rng& rng) {
    Eigen::LLT<Mat2> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("sample_mvn_canonical: precision is not positive definite");
    }
    const Vec2 mean = llt.solve(linear);
    const Vec2 z(rng.normal(), rng.normal());
    // x = mean + L^{-T} z has covariance (L L^T)^{-1}.
    return mean + llt.matrixU().solve(z);
}

Mat2 sample_wishart(double df, const Mat2& scale, Rng& rng) {
    if (!(df > 1.0)) throw std::domain_error("sample_wishart: df must exceed dimension - 1");
    Eigen::LLT<Mat2> llt(scale);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("sample_wishart: scale is not positive definite");
    }
    // Bartlett: A lower triangular, A_ii^2 ~ chi2(df - i), A_21 ~ N(0,1).
    Mat2 a = Mat2::Zero();
    a(0, 0) = std::sqrt(2.0 * rng.gamma(0.5 * df, 1.0));
    a(1, 1) = std::sqrt(2.0 * rng.gamma(0.5 * (df - 1.0), 1.0));
    a(1, 0) = rng.normal();
    const Mat2 la = llt.matrixL() * a;
    return la * la.transpose();
}

Mat2 sample_inverse_wishart(double df, const Mat2& scale, Rng& rng) {
    Eigen::LLT<Mat2> llt(scale);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("sample_inverse_wishart: scale is not positive definite");
    }
    const Mat2 inv_scale = llt.solve(Mat2::Identity());
    const Mat2 w = sample_wishart(df, 0.5 * (inv_scale + inv_scale.transpose()), rng);
    Mat2 sigma = w.inverse();
    return 0.5 * (sigma + sigma.transpose());
}

}  // namespace devtox
