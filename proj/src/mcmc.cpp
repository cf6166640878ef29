#include "devtox/mcmc.hpp"

#include "devtox/polya_gamma.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace devtox {

void McmcConfig::validate() const {
    if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
    if (burn_in < 0 || burn_in >= n_iter) throw std::invalid_argument("burn_in must lie in [0, n_iter)");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    if (n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
}

int McmcConfig::retained() const { return (n_iter - burn_in) / thin; }

bool McmcConfig::keeps(int iteration) const {
    return iteration > burn_in && (iteration - burn_in) % thin == 0;
}

NumericalFailure::NumericalFailure(const std::string& what, int component, int iteration)
    : std::runtime_error(iteration < 0 ? what + " (component " + std::to_string(component + 1) + ")"
                                       : what + " (component " + std::to_string(component + 1) +
                                             ", iteration " + std::to_string(iteration) + ")"),
      base_(what),
      component_(component),
      iteration_(iteration) {}

NumericalFailure NumericalFailure::at_iteration(int iteration) const {
    return NumericalFailure(base_, component_, iteration);
}

Problem::Problem(Dataset data, Hyperparameters hyper, ModelSpec spec, bool use_likelihood)
    : data_(std::move(data)), hyper_(hyper), spec_(spec), use_likelihood_(use_likelihood) {
    spec_.validate();
    hyper_.validate();
    if (data_.empty()) throw std::invalid_argument("cannot fit an empty dataset");
    dams_.reserve(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const auto& r = data_.records()[i];
        Dam d{covariate(r.dose), data_.dose_index()[i], {0, 0}, {0, 0}};
        if (use_likelihood_) {
            d.trials[0] = r.m;
            d.trials[1] = r.m - r.R;
            d.successes[0] = r.R;
            d.successes[1] = r.y;
        }
        dams_.push_back(d);
    }
}

void Problem::set_response(std::size_t i, int R, int y) {
    const int m = data_.records()[i].m;
    if (R < 0 || y < 0 || R + y > m) throw std::invalid_argument("set_response: require R + y <= m");
    auto& d = dams_[i];
    if (!use_likelihood_) return;
    d.trials[1] = m - R;
    d.successes[0] = R;
    d.successes[1] = y;
}

namespace {

Mat2 inverse_pd(const Mat2& a, int component, const char* who) {
    Eigen::LLT<Mat2> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalFailure(std::string(who) + ": matrix not PD", component);
    Mat2 inv = llt.solve(Mat2::Identity());
    return 0.5 * (inv + inv.transpose());
}

Vec2 draw_canonical(const Vec2& linear, const Mat2& precision, Rng& rng, int component) {
    try {
        return sample_mvn_canonical(linear, precision, rng);
    } catch (const std::domain_error&) {
        throw NumericalFailure("posterior precision not positive definite", component);
    }
}

Vec2 draw_mvn(const Vec2& mean, const Mat2& cov, Rng& rng, int component) {
    try {
        return sample_mvn(mean, cov, rng);
    } catch (const std::domain_error&) {
        throw NumericalFailure("covariance not positive definite", component);
    }
}

// log weights per dose level, [dose][component].
std::vector<std::vector<double>> log_weights_by_dose(const MixtureParams& params, const Dataset& data) {
    const int L = params.components();
    std::vector<std::vector<double>> out;
    out.reserve(data.dose_levels().size());
    for (double dose : data.dose_levels()) {
        std::vector<double> lw(L, 0.0);
        if (const auto* g = std::get_if<LsbpWeights>(&params.weight_state)) {
            const Vec2 x = covariate(dose);
            double rest = 0.0;
            for (int l = 0; l + 1 < L; ++l) {
                const double eta = x.dot(g->gammas[l]);
                lw[l] = rest + log_logistic(eta);
                rest += log1m_logistic(eta);
            }
            lw[L - 1] = rest;
        } else if (const auto* s = std::get_if<StickWeights>(&params.weight_state)) {
            double rest = 0.0;
            for (int l = 0; l + 1 < L; ++l) {
                const double v = s->sticks[l];
                lw[l] = rest + std::log(v);
                rest += std::log1p(-v);
            }
            lw[L - 1] = rest;
        }
        out.push_back(std::move(lw));
    }
    return out;
}

Mat2 prior_mean_covariance(const Hyperparameters& h, int j) {
    return h.nu0[j] > 3.0 ? Mat2(h.Lambda0[j] / (h.nu0[j] - 3.0)) : h.Lambda0[j];
}

}  // namespace

GibbsState initial_state(const Problem& problem, Rng& rng) {
    const auto& spec = problem.spec();
    const auto& h = problem.hyper();
    const int L = spec.truncation;
    const std::size_t n = problem.dams().size();
    GibbsState s;
    for (int j = 0; j < 2; ++j) {
        s.mu[j] = h.mu0[j];
        s.Sigma[j] = prior_mean_covariance(h, j);
        s.params.betas[j].resize(L);
        for (int l = 0; l < L; ++l) s.params.betas[j][l] = draw_mvn(s.mu[j], s.Sigma[j], rng, l);
    }
    switch (spec.weights) {
        case WeightStructure::Single: s.params.weight_state = std::monostate{}; break;
        case WeightStructure::CommonWeights: {
            StickWeights w;
            w.alpha = h.a_alpha / h.b_alpha;
            w.sticks.assign(L - 1, 1.0 / (1.0 + w.alpha));
            s.params.weight_state = std::move(w);
            break;
        }
        case WeightStructure::DoseDependent:
            s.params.weight_state = LsbpWeights{std::vector<Vec2>(L - 1, h.gamma0)};
            break;
    }
    if (spec.kernel == Kernel::LNB) {
        const double m = h.a_sigma > 1.0 ? h.b_sigma / (h.a_sigma - 1.0) : h.b_sigma;
        s.params.sigma2 = std::array<double, 2>{m, m};
    }
    s.labels.resize(n);
    for (auto& lab : s.labels) {
        lab = L == 1 ? 0 : std::min(L - 1, static_cast<int>(rng.uniform() * L));
    }
    s.psi.assign(n, {0.0, 0.0});
    s.zeta.assign(n, {0.0, 0.0});
    s.xi.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = problem.dams()[i];
        for (int j = 0; j < 2; ++j) {
            const double eta = d.x.dot(s.params.betas[j][s.labels[i]]);
            s.psi[i][j] = eta;
            s.zeta[i][j] = d.trials[j] > 0 ? polya_gamma_mean(d.trials[j], eta) : 0.0;
        }
        if (const auto* g = std::get_if<LsbpWeights>(&s.params.weight_state)) {
            const int upto = std::min(s.labels[i] + 1, L - 1);
            for (int l = 0; l < upto; ++l) s.xi[i].push_back(polya_gamma_mean(1.0, d.x.dot(g->gammas[l])));
        }
    }
    return s;
}

void step_update_atoms(GibbsState& state, const Problem& problem, Rng& rng) {
    const auto& dams = problem.dams();
    const int L = state.params.components();
    const bool lnb = problem.spec().kernel == Kernel::LNB;
    const std::size_t n = dams.size();

    std::vector<Mat2> prec(L);
    std::vector<Vec2> lin(L);
    std::vector<int> occupied(L);
    for (int j = 0; j < 2; ++j) {
        auto& betas = state.params.betas[j];
        const double s2 = lnb ? (*state.params.sigma2)[j] : 0.0;
        std::fill(prec.begin(), prec.end(), Mat2::Zero());
        std::fill(lin.begin(), lin.end(), Vec2::Zero());
        std::fill(occupied.begin(), occupied.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& d = dams[i];
            const int l = state.labels[i];
            const int trials = d.trials[j];
            const double eta = d.x.dot(betas[l]);
            if (lnb) {
                double& psi = state.psi[i][j];
                double& zeta = state.zeta[i][j];
                if (trials == 0) {
                    psi = rng.normal(eta, std::sqrt(s2));
                    zeta = 0.0;
                    continue;
                }
                const double kappa = d.successes[j] - 0.5 * trials;
                const double q = 1.0 + s2 * zeta;
                psi = rng.normal((eta + s2 * kappa) / q, std::sqrt(s2 / q));
                zeta = sample_polya_gamma(trials, psi, rng);
                prec[l] += d.x * d.x.transpose() / s2;
                lin[l] += d.x * (psi / s2);
            } else {
                double& zeta = state.zeta[i][j];
                if (trials == 0) {
                    zeta = 0.0;
                    continue;
                }
                zeta = sample_polya_gamma(trials, eta, rng);
                prec[l] += zeta * d.x * d.x.transpose();
                lin[l] += d.x * (d.successes[j] - 0.5 * trials);
            }
            ++occupied[l];
        }
        const Mat2 sigma_inv = inverse_pd(state.Sigma[j], 0, "atom prior covariance");
        const Vec2 prior_lin = sigma_inv * state.mu[j];
        for (int l = 0; l < L; ++l) {
            if (occupied[l] == 0) {
                betas[l] = draw_mvn(state.mu[j], state.Sigma[j], rng, l);
            } else {
                betas[l] = draw_canonical(prior_lin + lin[l], sigma_inv + prec[l], rng, l);
            }
        }
    }
}

void step_update_weights(GibbsState& state, const Problem& problem, Rng& rng) {
    auto* g = std::get_if<LsbpWeights>(&state.params.weight_state);
    if (g == nullptr) throw std::logic_error("step_update_weights requires dose-dependent weights");
    const auto& dams = problem.dams();
    const auto& h = problem.hyper();
    const int L = state.params.components();
    const Mat2 prior_prec = inverse_pd(h.Gamma0, 0, "Gamma0");
    const Vec2 prior_lin = prior_prec * h.gamma0;

    for (std::size_t i = 0; i < dams.size(); ++i) state.xi[i].clear();
    for (int l = 0; l + 1 < L; ++l) {
        Mat2 prec = prior_prec;
        Vec2 lin = prior_lin;
        const Vec2& gamma = g->gammas[l];
        for (std::size_t i = 0; i < dams.size(); ++i) {
            const int lab = state.labels[i];
            if (lab < l) continue;
            const Vec2& x = dams[i].x;
            const double xi = sample_pg1(x.dot(gamma), rng);
            state.xi[i].push_back(xi);
            prec += xi * x * x.transpose();
            lin += x * ((lab == l ? 1.0 : 0.0) - 0.5);
        }
        g->gammas[l] = draw_canonical(lin, prec, rng, l);
    }
}

void step_update_weights_cw(GibbsState& state, const Problem& problem, Rng& rng) {
    auto* s = std::get_if<StickWeights>(&state.params.weight_state);
    if (s == nullptr) throw std::logic_error("step_update_weights_cw requires common weights");
    const auto& h = problem.hyper();
    const int L = state.params.components();
    std::vector<int> counts(L, 0);
    for (int lab : state.labels) ++counts[lab];
    int above = static_cast<int>(state.labels.size());
    double sum_log1m = 0.0;
    for (int l = 0; l + 1 < L; ++l) {
        above -= counts[l];
        // Beta via two gammas, keeping log(1 - V) accurate when V is near 1.
        const double a = rng.gamma(1.0 + counts[l], 1.0);
        const double b = std::max(rng.gamma(s->alpha + above, 1.0), std::numeric_limits<double>::min());
        const double v = a / (a + b);
        s->sticks[l] = std::clamp(v, std::numeric_limits<double>::min(), 1.0);
        sum_log1m += std::log(b) - std::log(a + b);
    }
    const double rate = h.b_alpha - sum_log1m;
    s->alpha = std::max(rng.gamma(h.a_alpha + L - 1, rate), std::numeric_limits<double>::min());
}

void step_update_config(GibbsState& state, const Problem& problem, Rng& rng) {
    const int L = state.params.components();
    if (L == 1) {
        std::fill(state.labels.begin(), state.labels.end(), 0);
        return;
    }
    const auto& dams = problem.dams();
    const auto& levels = problem.data().dose_levels();
    const bool lnb = problem.spec().kernel == Kernel::LNB;
    const auto log_w = log_weights_by_dose(state.params, problem.data());

    // theta[d][j][l]
    std::vector<std::array<std::vector<double>, 2>> theta(levels.size());
    for (std::size_t d = 0; d < levels.size(); ++d) {
        const Vec2 x = covariate(levels[d]);
        for (int j = 0; j < 2; ++j) {
            theta[d][j].resize(L);
            for (int l = 0; l < L; ++l) theta[d][j][l] = x.dot(state.params.betas[j][l]);
        }
    }
    std::array<double, 2> inv_s2{0.0, 0.0};
    if (lnb) {
        for (int j = 0; j < 2; ++j) inv_s2[j] = 1.0 / (*state.params.sigma2)[j];
    }
    std::vector<double> lp(L);
    for (std::size_t i = 0; i < dams.size(); ++i) {
        const auto& d = dams[i];
        const auto& lw = log_w[d.dose_index];
        double top = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < L; ++l) {
            double v = lw[l];
            for (int j = 0; j < 2; ++j) {
                if (d.trials[j] == 0) continue;
                const double t = theta[d.dose_index][j][l];
                if (lnb) {
                    const double dev = state.psi[i][j] - t;
                    v -= 0.5 * dev * dev * inv_s2[j];
                } else {
                    const int k = d.successes[j];
                    const int f = d.trials[j] - k;
                    if (k > 0) v += k * log_logistic(t);
                    if (f > 0) v += f * log1m_logistic(t);
                }
            }
            lp[l] = v;
            top = std::max(top, v);
        }
        if (!(top > -std::numeric_limits<double>::infinity())) {
            throw NumericalFailure("all component masses vanish in label update", 0);
        }
        double total = 0.0;
        for (int l = 0; l < L; ++l) {
            lp[l] = std::exp(lp[l] - top);
            total += lp[l];
        }
        double u = rng.uniform() * total;
        int pick = L - 1;
        for (int l = 0; l < L; ++l) {
            u -= lp[l];
            if (u <= 0.0) {
                pick = l;
                break;
            }
        }
        // Guard against landing on a zero-mass tail through rounding.
        while (lp[pick] == 0.0 && pick > 0) --pick;
        state.labels[i] = pick;
    }
}

void step_update_sigma2(GibbsState& state, const Problem& problem, Rng& rng) {
    if (problem.spec().kernel != Kernel::LNB) throw std::logic_error("step_update_sigma2 requires the LNB kernel");
    const auto& dams = problem.dams();
    const auto& h = problem.hyper();
    auto& s2 = *state.params.sigma2;
    for (int j = 0; j < 2; ++j) {
        int count = 0;
        double ss = 0.0;
        for (std::size_t i = 0; i < dams.size(); ++i) {
            if (dams[i].trials[j] == 0) continue;
            const double dev = state.psi[i][j] - dams[i].x.dot(state.params.betas[j][state.labels[i]]);
            ss += dev * dev;
            ++count;
        }
        s2[j] = sample_inverse_gamma(h.a_sigma + 0.5 * count, h.b_sigma + 0.5 * ss, rng);
    }
}

void step_update_hyper(GibbsState& state, const Problem& problem, Rng& rng) {
    const auto& h = problem.hyper();
    const int L = state.params.components();
    std::vector<char> used(L, 0);
    for (int lab : state.labels) used[lab] = 1;
    for (int j = 0; j < 2; ++j) {
        const auto& betas = state.params.betas[j];
        int n_star = 0;
        Vec2 mean = Vec2::Zero();
        for (int l = 0; l < L; ++l) {
            if (!used[l]) continue;
            mean += betas[l];
            ++n_star;
        }
        Mat2 lambda = h.Lambda0[j];
        Vec2 mu_star = h.mu0[j];
        const double kappa = h.kappa0[j] + n_star;
        const double nu = h.nu0[j] + n_star;
        if (n_star > 0) {
            mean /= n_star;
            Mat2 scatter = Mat2::Zero();
            for (int l = 0; l < L; ++l) {
                if (!used[l]) continue;
                const Vec2 dev = betas[l] - mean;
                scatter += dev * dev.transpose();
            }
            const Vec2 shift = mean - h.mu0[j];
            lambda += scatter + (n_star * h.kappa0[j] / (n_star + h.kappa0[j])) * shift * shift.transpose();
            mu_star = (h.kappa0[j] * h.mu0[j] + n_star * mean) / kappa;
        }
        try {
            state.Sigma[j] = sample_inverse_wishart(nu, lambda, rng);
        } catch (const std::domain_error&) {
            throw NumericalFailure("normal-inverse-Wishart scale not positive definite", j);
        }
        state.mu[j] = draw_mvn(mu_star, state.Sigma[j] / kappa, rng, j);
    }
}

void refresh_unobserved(GibbsState& state, const Problem& problem, Rng& rng) {
    const int L = state.params.components();
    std::vector<char> used(L, 0);
    for (int lab : state.labels) used[lab] = 1;
    for (int j = 0; j < 2; ++j) {
        for (int l = 0; l < L; ++l) {
            if (!used[l]) state.params.betas[j][l] = draw_mvn(state.mu[j], state.Sigma[j], rng, l);
        }
    }
    if (problem.spec().kernel != Kernel::LNB) return;
    const auto& dams = problem.dams();
    for (std::size_t i = 0; i < dams.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            if (dams[i].trials[j] != 0) continue;
            const double eta = dams[i].x.dot(state.params.betas[j][state.labels[i]]);
            state.psi[i][j] = rng.normal(eta, std::sqrt((*state.params.sigma2)[j]));
        }
    }
}

void redraw_augmentation(GibbsState& state, const Problem& problem, Rng& rng) {
    const bool lnb = problem.spec().kernel == Kernel::LNB;
    const auto& dams = problem.dams();
    for (std::size_t i = 0; i < dams.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            const int trials = dams[i].trials[j];
            const double tilt = lnb ? state.psi[i][j]
                                    : dams[i].x.dot(state.params.betas[j][state.labels[i]]);
            state.zeta[i][j] = trials > 0 ? sample_polya_gamma(trials, tilt, rng) : 0.0;
        }
    }
}

void gibbs_sweep(GibbsState& state, const Problem& problem, Rng& rng) {
    const auto& spec = problem.spec();
    step_update_atoms(state, problem, rng);
    if (spec.weights == WeightStructure::DoseDependent) step_update_weights(state, problem, rng);
    if (spec.weights == WeightStructure::CommonWeights) step_update_weights_cw(state, problem, rng);
    step_update_config(state, problem, rng);
    if (spec.kernel == Kernel::LNB) step_update_sigma2(state, problem, rng);
    step_update_hyper(state, problem, rng);
    refresh_unobserved(state, problem, rng);
}

Draw make_draw(const GibbsState& state, const Problem& problem, int iteration) {
    Draw d;
    d.iteration = iteration;
    d.params = state.params;
    d.mu = state.mu;
    d.Sigma = state.Sigma;
    const std::size_t n = state.labels.size();
    std::vector<char> used(state.params.components(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        used[state.labels[i]] = 1;
        for (int j = 0; j < 2; ++j) d.beta_avg[j] += state.params.betas[j][state.labels[i]];
    }
    for (int j = 0; j < 2; ++j) d.beta_avg[j] /= static_cast<double>(n);
    d.occupied = static_cast<int>(std::count(used.begin(), used.end(), 1));
    (void)problem;
    return d;
}

namespace {

Chain fit_crbb(const Problem& problem, const McmcConfig& config, Rng& rng) {
    CrbbState state;
    const auto& h = problem.hyper();
    const auto& data = problem.data();
    // Start at the pooled empirical logits with no dose trend.
    long n1 = 0, k1 = 0, n2 = 0, k2 = 0;
    for (const auto& d : problem.dams()) {
        n1 += d.trials[0];
        k1 += d.successes[0];
        n2 += d.trials[1];
        k2 += d.successes[1];
    }
    auto start = [](long k, long n, double fallback) {
        if (n == 0) return fallback;
        const double p = std::clamp((k + 0.5) / (n + 1.0), 1e-3, 1.0 - 1e-3);
        return std::log(p / (1.0 - p));
    };
    state.beta[0] = Vec2(start(k1, n1, h.mu0[0](0)), 0.0);
    state.beta[1] = Vec2(start(k2, n2, h.mu0[1](0)), 0.0);
    state.log_lambda = {std::log(h.a_lambda / h.b_lambda), std::log(h.a_lambda / h.b_lambda)};

    const double span = data.max_dose() > 0.0 ? data.max_dose() : 1.0;
    CrbbSampler sampler;
    sampler.scales = {0.2, 0.2 / span, 0.2, 0.2 / span, 0.3, 0.3};

    Chain chain;
    chain.spec = problem.spec();
    chain.config = config;
    chain.draws.reserve(config.retained());
    constexpr int kAdaptEvery = 50;
    for (int t = 1; t <= config.n_iter; ++t) {
        step_mh_crbb(state, problem, rng, sampler);
        if (t <= config.burn_in && t % kAdaptEvery == 0) {
            for (int c = 0; c < 6; ++c) {
                const double rate = static_cast<double>(sampler.accepted[c]) / sampler.proposed[c];
                if (rate < 0.25) sampler.scales[c] *= 0.8;
                if (rate > 0.40) sampler.scales[c] *= 1.25;
                sampler.accepted[c] = 0;
                sampler.proposed[c] = 0;
            }
        }
        if (t == config.burn_in) {
            sampler.accepted.fill(0);
            sampler.proposed.fill(0);
        }
        if (config.keeps(t)) {
            Draw d;
            d.iteration = t;
            for (int j = 0; j < 2; ++j) {
                d.params.betas[j] = {state.beta[j]};
                d.beta_avg[j] = state.beta[j];
            }
            d.params.weight_state = std::monostate{};
            d.params.bb_lambda = std::array<double, 2>{std::exp(state.log_lambda[0]),
                                                       std::exp(state.log_lambda[1])};
            chain.draws.push_back(std::move(d));
        }
    }
    AcceptanceStats stats;
    for (int c = 0; c < 6; ++c) {
        stats.rates.push_back(sampler.proposed[c] > 0
                                  ? static_cast<double>(sampler.accepted[c]) / sampler.proposed[c]
                                  : 0.0);
        stats.final_scales.push_back(sampler.scales[c]);
    }
    chain.acceptance = std::move(stats);
    return chain;
}

}  // namespace

Chain fit(const ModelSpec& spec, const Dataset& data, const Hyperparameters& hyper,
          const McmcConfig& config, Rng& rng) {
    config.validate();
    const Problem problem(data, hyper, spec);
    if (spec.kernel == Kernel::BB) return fit_crbb(problem, config, rng);

    Chain chain;
    chain.spec = spec;
    chain.config = config;
    chain.draws.reserve(config.retained());
    GibbsState state = initial_state(problem, rng);
    for (int t = 1; t <= config.n_iter; ++t) {
        try {
            gibbs_sweep(state, problem, rng);
        } catch (const NumericalFailure& e) {
            throw e.at_iteration(t);
        }
        if (config.keeps(t)) chain.draws.push_back(make_draw(state, problem, t));
    }
    return chain;
}

std::vector<Chain> fit_chains(const ModelSpec& spec, const Dataset& data,
                              const Hyperparameters& hyper, const McmcConfig& config) {
    config.validate();
    std::vector<Chain> chains(config.n_chains);
    std::vector<std::exception_ptr> errors(config.n_chains);
    auto run = [&](int c) {
        try {
            const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(c));
            Rng rng(seed);
            chains[c] = fit(spec, data, hyper, config, rng);
            chains[c].chain_index = c;
            chains[c].seed = seed;
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    if (config.n_chains == 1) {
        run(0);
    } else {
        std::vector<std::thread> workers;
        for (int c = 0; c < config.n_chains; ++c) workers.emplace_back(run, c);
        for (auto& w : workers) w.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return chains;
}

}  // namespace devtox
