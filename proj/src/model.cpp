#include "devtox/model.hpp"

#include "devtox/inference.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace devtox {

void validate_record(const DamRecord& rec) {
    if (!std::isfinite(rec.dose) || rec.dose < 0.0) {
        throw std::invalid_argument("dose must be a finite nonnegative number");
    }
    if (rec.m < 1) throw std::invalid_argument("implant count m must be >= 1");
    if (rec.R < 0 || rec.y < 0) throw std::invalid_argument("counts must be nonnegative");
    if (rec.R + rec.y > rec.m) throw std::invalid_argument("R + y exceeds m");
}

Dataset::Dataset(std::vector<DamRecord> records) : records_(std::move(records)) {
    for (const auto& r : records_) validate_record(r);
    dose_levels_.reserve(records_.size());
    for (const auto& r : records_) dose_levels_.push_back(r.dose);
    std::sort(dose_levels_.begin(), dose_levels_.end());
    dose_levels_.erase(std::unique(dose_levels_.begin(), dose_levels_.end()), dose_levels_.end());
    group_sizes_.assign(dose_levels_.size(), 0);
    dose_index_.reserve(records_.size());
    for (const auto& r : records_) {
        const auto it = std::lower_bound(dose_levels_.begin(), dose_levels_.end(), r.dose);
        const int d = static_cast<int>(it - dose_levels_.begin());
        dose_index_.push_back(d);
        ++group_sizes_[d];
    }
}

// ---- model specification -----------------------------------------------

std::string_view to_string(Kernel k) {
    switch (k) {
        case Kernel::Binomial: return "Binomial";
        case Kernel::LNB: return "LNB";
        case Kernel::BB: return "BB";
    }
    return "?";
}

std::string_view to_string(WeightStructure w) {
    switch (w) {
        case WeightStructure::Single: return "Single";
        case WeightStructure::CommonWeights: return "CommonWeights";
        case WeightStructure::DoseDependent: return "DoseDependent";
    }
    return "?";
}

void ModelSpec::validate() const {
    if (truncation < 1) throw std::invalid_argument("truncation L must be >= 1");
    if (weights == WeightStructure::Single && truncation != 1) {
        throw std::invalid_argument("single-component models require L = 1");
    }
    if (weights != WeightStructure::Single && truncation < 2) {
        throw std::invalid_argument("mixture models require L >= 2");
    }
    if (kernel == Kernel::BB && weights != WeightStructure::Single) {
        throw std::invalid_argument("the BB kernel is only available as the parametric CR-BB model");
    }
}

std::string ModelSpec::name() const {
    switch (weights) {
        case WeightStructure::Single:
            switch (kernel) {
                case Kernel::Binomial: return "CR-logits";
                case Kernel::LNB: return "CR-LNB";
                case Kernel::BB: return "CR-BB";
            }
            break;
        case WeightStructure::CommonWeights:
            return kernel == Kernel::LNB ? "CW-LNB" : "CW-Bin";
        case WeightStructure::DoseDependent:
            return kernel == Kernel::LNB ? "Gen-LNB" : "Gen-Bin";
    }
    return "?";
}

ModelSpec ModelSpec::from_name(std::string_view name, int truncation) {
    if (name == "CR-logits") return {Kernel::Binomial, WeightStructure::Single, 1};
    if (name == "CR-BB") return {Kernel::BB, WeightStructure::Single, 1};
    if (name == "CR-LNB") return {Kernel::LNB, WeightStructure::Single, 1};
    if (name == "CW-Bin") return {Kernel::Binomial, WeightStructure::CommonWeights, truncation};
    if (name == "Gen-Bin") return {Kernel::Binomial, WeightStructure::DoseDependent, truncation};
    if (name == "CW-LNB") return {Kernel::LNB, WeightStructure::CommonWeights, truncation};
    if (name == "Gen-LNB") return {Kernel::LNB, WeightStructure::DoseDependent, truncation};
    throw std::invalid_argument("unknown model name: " + std::string(name));
}

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"CR-logits", "CR-BB",   "CR-LNB", "CW-Bin",
                                                "Gen-Bin",   "CW-LNB", "Gen-LNB"};
    return names;
}

namespace {

bool is_pd(const Mat2& a) {
    return a(0, 0) > 0.0 && a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) > 0.0 &&
           std::abs(a(0, 1) - a(1, 0)) <= 1e-12 * (std::abs(a(0, 1)) + 1.0);
}

}  // namespace

void Hyperparameters::validate() const {
    if (!is_pd(Gamma0)) throw std::invalid_argument("Gamma0 must be positive definite");
    for (int j = 0; j < 2; ++j) {
        if (!is_pd(Lambda0[j])) throw std::invalid_argument("Lambda0 must be positive definite");
        if (!(kappa0[j] > 0.0)) throw std::invalid_argument("kappa0 must be positive");
        if (!(nu0[j] >= 2.0)) throw std::invalid_argument("nu0 must be >= 2");
    }
    for (double v : {a_sigma, b_sigma, a_alpha, b_alpha, a_lambda, b_lambda}) {
        if (!(v > 0.0)) throw std::invalid_argument("scalar hyperparameters must be positive");
    }
}

Hyperparameters default_hyperparameters(double max_dose) {
    if (!(max_dose > 0.0)) throw std::invalid_argument("default_hyperparameters: max_dose must be positive");
    Hyperparameters h;
    const double intercept = std::log(0.05 / 0.95);
    const double slope = -intercept / max_dose;  // logit 0.5 = 0 at max_dose
    const double slope_sd = 2.0 / max_dose;
    for (int j = 0; j < 2; ++j) {
        h.mu0[j] = Vec2(intercept, slope);
        h.kappa0[j] = 1.0;
        h.nu0[j] = 4.0;
        h.Lambda0[j] = Mat2::Zero();
        h.Lambda0[j](0, 0) = 1.0;
        h.Lambda0[j](1, 1) = slope_sd * slope_sd;
    }
    h.gamma0 = Vec2::Zero();
    h.Gamma0 = Mat2::Zero();
    h.Gamma0(0, 0) = 4.0;
    h.Gamma0(1, 1) = 4.0 / (max_dose * max_dose);
    return h;
}

// ---- weights ---------------------------------------------------------------

std::vector<double> lsbp_weights(const Vec2& x, std::span<const Vec2> gammas) {
    const std::size_t L = gammas.size() + 1;
    std::vector<double> w(L);
    double remaining = 1.0;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        const double v = logistic(x.dot(gammas[l]));
        w[l] = v * remaining;
        remaining *= 1.0 - v;
    }
    w[L - 1] = remaining;
    return w;
}

std::vector<double> dp_weights(std::span<const double> sticks) {
    const std::size_t L = sticks.size() + 1;
    std::vector<double> w(L);
    double remaining = 1.0;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        w[l] = sticks[l] * remaining;
        remaining *= 1.0 - sticks[l];
    }
    w[L - 1] = remaining;
    return w;
}

std::vector<double> MixtureParams::weights_at(double dose) const {
    struct Visitor {
        double dose;
        std::vector<double> operator()(const std::monostate&) const { return {1.0}; }
        std::vector<double> operator()(const StickWeights& s) const { return dp_weights(s.sticks); }
        std::vector<double> operator()(const LsbpWeights& g) const {
            return lsbp_weights(covariate(dose), g.gammas);
        }
    };
    return std::visit(Visitor{dose}, weight_state);
}

// ---- kernels ---------------------------------------------------------------

KernelDispersion dispersion_of(const MixtureParams& params) {
    KernelDispersion d;
    if (params.sigma2) d.sigma2 = *params.sigma2;
    if (params.bb_lambda) d.lambda = *params.bb_lambda;
    return d;
}

double stage_pmf(int count, int trials, double theta, int stage, Kernel kernel,
                 const KernelDispersion& disp, const QuadratureRule& rule) {
    if (trials == 0) return count == 0 ? 1.0 : 0.0;
    switch (kernel) {
        case Kernel::Binomial: return std::exp(binomial_logit_log_pmf(count, trials, theta));
        case Kernel::LNB: return lnb_pmf(count, trials, theta, disp.sigma2[stage], rule);
        case Kernel::BB: return bb_pmf(count, trials, theta, disp.lambda[stage]);
    }
    return 0.0;
}

double kernel_pmf(int R, int y, int m, double theta1, double theta2, Kernel kernel,
                  const KernelDispersion& disp, const QuadratureRule& rule) {
    if (R < 0 || y < 0 || R + y > m) throw std::domain_error("kernel_pmf: require R + y <= m");
    return stage_pmf(R, m, theta1, 0, kernel, disp, rule) *
           stage_pmf(y, m - R, theta2, 1, kernel, disp, rule);
}

double mixture_pmf(int R, int y, int m, double dose, const MixtureParams& params,
                   const ModelSpec& spec, const QuadratureRule& rule) {
    if (R < 0 || y < 0 || R + y > m) throw std::domain_error("mixture_pmf: require R + y <= m");
    const auto w = params.weights_at(dose);
    const auto disp = dispersion_of(params);
    double total = 0.0;
    for (int l = 0; l < params.components(); ++l) {
        if (w[l] == 0.0) continue;
        total += w[l] * kernel_pmf(R, y, m, params.theta(0, l, dose), params.theta(1, l, dose),
                                   spec.kernel, disp, rule);
    }
    return total;
}

// ---- elicitation -----------------------------------------------------------

InverseGammaPrior elicit_sigma2_prior(double extra_variance, double shape) {
    if (!(extra_variance > 0.0 && extra_variance < 1.0)) {
        throw std::domain_error("elicit_sigma2_prior: target extra variance must lie in (0,1)");
    }
    if (!(shape > 1.0)) throw std::domain_error("elicit_sigma2_prior: shape must exceed 1");
    return {shape, 4.0 * extra_variance * (shape - 1.0)};
}

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    return {num / (g == 0 ? 1 : g), den / (g == 0 ? 1 : g)};
}

RationalInverseGamma elicit_sigma2_prior(Rational v, Rational shape) {
    const Rational vv = make_rational(v.num, v.den);
    const Rational aa = make_rational(shape.num, shape.den);
    if (!(vv.num > 0 && vv.num < vv.den)) {
        throw std::domain_error("elicit_sigma2_prior: target extra variance must lie in (0,1)");
    }
    if (!(aa.num > aa.den)) throw std::domain_error("elicit_sigma2_prior: shape must exceed 1");
    // 4 v (a - 1) = 4 * vn/vd * (an - ad)/ad
    return {aa, make_rational(4 * vv.num * (aa.num - aa.den), vv.den * aa.den)};
}

// ---- prior simulation --------------------------------------------------------

PriorDraw sample_prior(const Hyperparameters& hyper, const ModelSpec& spec, Rng& rng) {
    spec.validate();
    PriorDraw out;
    const int L = spec.truncation;
    for (int j = 0; j < 2; ++j) {
        out.Sigma[j] = sample_inverse_wishart(hyper.nu0[j], hyper.Lambda0[j], rng);
        out.mu[j] = sample_mvn(hyper.mu0[j], out.Sigma[j] / hyper.kappa0[j], rng);
        out.params.betas[j].resize(L);
        for (int l = 0; l < L; ++l) out.params.betas[j][l] = sample_mvn(out.mu[j], out.Sigma[j], rng);
    }
    switch (spec.weights) {
        case WeightStructure::Single: out.params.weight_state = std::monostate{}; break;
        case WeightStructure::CommonWeights: {
            StickWeights s;
            s.alpha = rng.gamma(hyper.a_alpha, hyper.b_alpha);
            s.sticks.resize(L - 1);
            for (auto& v : s.sticks) v = rng.beta(1.0, s.alpha);
            out.params.weight_state = std::move(s);
            break;
        }
        case WeightStructure::DoseDependent: {
            LsbpWeights g;
            g.gammas.resize(L - 1);
            for (auto& gm : g.gammas) gm = sample_mvn(hyper.gamma0, hyper.Gamma0, rng);
            out.params.weight_state = std::move(g);
            break;
        }
    }
    if (spec.kernel == Kernel::LNB) {
        out.params.sigma2 = std::array<double, 2>{
            sample_inverse_gamma(hyper.a_sigma, hyper.b_sigma, rng),
            sample_inverse_gamma(hyper.a_sigma, hyper.b_sigma, rng)};
    }
    if (spec.kernel == Kernel::BB) {
        out.params.bb_lambda = std::array<double, 2>{rng.gamma(hyper.a_lambda, hyper.b_lambda),
                                                     rng.gamma(hyper.a_lambda, hyper.b_lambda)};
    }
    return out;
}

PriorCurveCheck prior_doseresponse_check(const Hyperparameters& hyper, const ModelSpec& spec,
                                         std::span<const double> grid, int n_draws, Rng& rng) {
    if (n_draws < 1) throw std::invalid_argument("prior_doseresponse_check: n_draws must be >= 1");
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw std::invalid_argument("prior_doseresponse_check: grid must be sorted");
    }
    const std::size_t G = grid.size();
    PriorCurveCheck out;
    out.grid.assign(grid.begin(), grid.end());
    std::array<std::vector<double>, 3> sum, sumsq;
    std::array<std::vector<int>, 3> count;
    for (int e = 0; e < 3; ++e) {
        sum[e].assign(G, 0.0);
        sumsq[e].assign(G, 0.0);
        count[e].assign(G, 0);
    }
    for (int s = 0; s < n_draws; ++s) {
        const PriorDraw draw = sample_prior(hyper, spec, rng);
        for (std::size_t g = 0; g < G; ++g) {
            const DoseResponse dr = dose_response_draw(draw.params, spec, grid[g]);
            const double vals[3] = {dr.D, dr.M, dr.r};
            for (int e = 0; e < 3; ++e) {
                if (e == 1 && !dr.M_defined) continue;
                sum[e][g] += vals[e];
                sumsq[e][g] += vals[e] * vals[e];
                ++count[e][g];
            }
        }
    }
    for (int e = 0; e < 3; ++e) {
        out.mean[e].resize(G);
        out.std_error[e].resize(G);
        for (std::size_t g = 0; g < G; ++g) {
            const double n = count[e][g];
            const double mean = n > 0 ? sum[e][g] / n : std::nan("");
            const double var = n > 1 ? (sumsq[e][g] - n * mean * mean) / (n - 1.0) : 0.0;
            out.mean[e][g] = mean;
            out.std_error[e][g] = n > 0 ? std::sqrt(std::max(var, 0.0) / n) : std::nan("");
        }
    }
    return out;
}

}  // namespace devtox
