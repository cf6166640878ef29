#include "devtox/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace devtox {

std::string_view to_string(Endpoint e) {
    switch (e) {
        case Endpoint::Embryolethality: return "D";
        case Endpoint::Malformation: return "M";
        case Endpoint::Combined: return "r";
    }
    return "?";
}

Endpoint endpoint_from_string(std::string_view s) {
    if (s == "D" || s == "embryolethality") return Endpoint::Embryolethality;
    if (s == "M" || s == "malformation") return Endpoint::Malformation;
    if (s == "r" || s == "combined") return Endpoint::Combined;
    throw std::invalid_argument("unknown endpoint: " + std::string(s));
}

double DoseResponse::get(Endpoint e) const {
    switch (e) {
        case Endpoint::Embryolethality: return D;
        case Endpoint::Malformation: return M;
        case Endpoint::Combined: return r;
    }
    return std::nan("");
}

namespace {

// Components whose weight is below this contribute nothing measurable.
constexpr double kNegligibleWeight = 1e-16;

struct StageMoments {
    double mean;    // E p
    double square;  // E p^2
};

StageMoments stage_moments(double theta, int stage, Kernel kernel, const KernelDispersion& disp,
                           const QuadratureRule& rule, bool need_square) {
    switch (kernel) {
        case Kernel::Binomial: {
            const double p = logistic(theta);
            return {p, p * p};
        }
        case Kernel::LNB: {
            const double s2 = disp.sigma2[stage];
            return {logit_normal_integral(theta, s2, rule),
                    need_square ? logit_normal_square_integral(theta, s2, rule) : 0.0};
        }
        case Kernel::BB: {
            const double p = logistic(theta);
            const double lam = disp.lambda[stage];
            return {p, p * (lam * p + 1.0) / (lam + 1.0)};
        }
    }
    return {0.0, 0.0};
}

}  // namespace

DoseResponse dose_response_draw(const MixtureParams& params, const ModelSpec& spec, double dose,
                                const QuadratureRule& rule) {
    if (!(dose >= 0.0)) throw std::domain_error("dose_response_draw: dose must be nonnegative");
    const auto w = params.weights_at(dose);
    const auto disp = dispersion_of(params);
    double d_sum = 0.0, survive = 0.0, survive_malformed = 0.0, normal = 0.0;
    for (int l = 0; l < params.components(); ++l) {
        if (w[l] < kNegligibleWeight) continue;
        const double p1 = stage_moments(params.theta(0, l, dose), 0, spec.kernel, disp, rule, false).mean;
        const double p2 = stage_moments(params.theta(1, l, dose), 1, spec.kernel, disp, rule, false).mean;
        d_sum += w[l] * p1;
        survive += w[l] * (1.0 - p1);
        survive_malformed += w[l] * (1.0 - p1) * p2;
        normal += w[l] * (1.0 - p1) * (1.0 - p2);
    }
    DoseResponse out;
    out.D = d_sum;
    out.r = 1.0 - normal;
    if (survive > 0.0) {
        out.M = survive_malformed / survive;
    } else {
        out.M = std::nan("");
        out.M_defined = false;
    }
    return out;
}

std::optional<double> intracluster_corr_draw(const MixtureParams& params, const ModelSpec& spec,
                                             double dose, int category, const QuadratureRule& rule) {
    if (category < 1 || category > 3) throw std::invalid_argument("category must be 1, 2 or 3");
    const auto w = params.weights_at(dose);
    const auto disp = dispersion_of(params);
    std::vector<double> as, bs, ws;
    double a_sum = 0.0;
    for (int l = 0; l < params.components(); ++l) {
        if (w[l] < kNegligibleWeight) continue;
        // A = E[pi], B = E[pi^2] for the category probability pi of this component.
        double a = 1.0, b = 1.0;
        for (int stage = 0; stage < 2 && stage < category; ++stage) {
            const auto mo = stage_moments(params.theta(stage, l, dose), stage, spec.kernel, disp, rule, true);
            const bool last = stage == category - 1;
            if (last) {
                a *= mo.mean;
                b *= mo.square;
            } else {
                a *= 1.0 - mo.mean;
                b *= 1.0 - 2.0 * mo.mean + mo.square;
            }
        }
        a_sum += w[l] * a;
        as.push_back(a);
        bs.push_back(b);
        ws.push_back(w[l]);
    }
    const double var = a_sum * (1.0 - a_sum);
    if (!(var > 0.0)) return std::nullopt;
    // sum w B - (sum w A)^2 split into within- and between-component parts,
    // each nonnegative, so rounding cannot flip the sign.
    double within = 0.0, between = 0.0;
    for (std::size_t k = 0; k < ws.size(); ++k) {
        within += ws[k] * std::max(0.0, bs[k] - as[k] * as[k]);
        between += ws[k] * (as[k] - a_sum) * (as[k] - a_sum);
    }
    return (within + between) / var;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
    if (points < 1) throw std::invalid_argument("linear_grid: need at least one point");
    if (points == 1) return {lo};
    std::vector<double> g(points);
    for (int k = 0; k < points; ++k) g[k] = lo + (hi - lo) * k / (points - 1);
    g.back() = hi;
    return g;
}

CurveDraws curve_draws(const Chain& chain, std::span<const double> grid) {
    CurveDraws out;
    out.grid.assign(grid.begin(), grid.end());
    out.values.reserve(chain.draws.size());
    for (const auto& d : chain.draws) {
        std::vector<DoseResponse> row;
        row.reserve(grid.size());
        for (double x : grid) row.push_back(dose_response_draw(d.params, chain.spec, x));
        out.values.push_back(std::move(row));
    }
    return out;
}

CurveBand curve_band(const CurveDraws& curves, Endpoint e, double level) {
    CurveBand band;
    const double tail = 0.5 * (1.0 - level);
    for (std::size_t g = 0; g < curves.grid.size(); ++g) {
        std::vector<double> v;
        v.reserve(curves.values.size());
        for (const auto& row : curves.values) {
            const double x = row[g].get(e);
            if (std::isfinite(x)) v.push_back(x);
        }
        band.used.push_back(static_cast<int>(v.size()));
        if (v.empty()) {
            band.mean.push_back(std::nan(""));
            band.lower.push_back(std::nan(""));
            band.upper.push_back(std::nan(""));
            continue;
        }
        double s = 0.0;
        for (double x : v) s += x;
        band.mean.push_back(s / v.size());
        band.lower.push_back(quantile_type7(v, tail));
        band.upper.push_back(quantile_type7(std::move(v), 1.0 - tail));
    }
    return band;
}

// ---- effective dose ------------------------------------------------------

namespace {

// Search on precomputed scan values; curve is only called inside the
// bracketing cell.
std::optional<EdSolution> solve_ed(const std::function<double(double)>& curve, double bmr,
                                   const std::vector<double>& xs, const std::vector<double>& ps) {
    const double p0 = ps[0];
    if (!std::isfinite(p0) || !(p0 < 1.0)) return std::nullopt;
    const double target = bmr * (1.0 - p0);
    auto excess = [&](double p) { return (p - p0) - target; };
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (!std::isfinite(ps[k])) return std::nullopt;
        if (excess(ps[k]) < 0.0) continue;
        double lo = xs[k - 1], hi = xs[k];
        double g_hi = excess(ps[k]);
        double g_lo = excess(ps[k - 1]);
        for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double g = excess(curve(mid));
            if (!std::isfinite(g)) return std::nullopt;
            if (g >= 0.0) {
                hi = mid;
                g_hi = g;
            } else {
                lo = mid;
                g_lo = g;
            }
            if (std::abs(g) < 1e-12) break;
        }
        if (std::abs(g_lo) < std::abs(g_hi)) return EdSolution{lo, std::abs(g_lo)};
        return EdSolution{hi, std::abs(g_hi)};
    }
    return std::nullopt;
}

}  // namespace

std::optional<EdSolution> effective_dose(const std::function<double(double)>& curve, double bmr,
                                         double search_max, int scan_intervals) {
    if (!(bmr > 0.0 && bmr < 1.0)) throw std::invalid_argument("effective_dose: bmr must lie in (0,1)");
    if (!(search_max > 0.0)) throw std::invalid_argument("effective_dose: search_max must be positive");
    if (scan_intervals < 1) throw std::invalid_argument("effective_dose: scan_intervals must be >= 1");
    const auto xs = linear_grid(0.0, search_max, scan_intervals + 1);
    std::vector<double> ps;
    ps.reserve(xs.size());
    for (double x : xs) ps.push_back(curve(x));
    return solve_ed(curve, bmr, xs, ps);
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

double bmd(std::span<const double> ed_samples, double level) {
    if (ed_samples.empty()) throw std::invalid_argument("bmd: no effective-dose samples");
    if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("bmd: level must lie in [0,1]");
    return quantile_type7(std::vector<double>(ed_samples.begin(), ed_samples.end()), 0.5 * (1.0 - level));
}

RiskSummary compute_risk(const Chain& chain, const RiskOptions& options) {
    if (chain.draws.empty()) throw std::invalid_argument("compute_risk: empty chain");
    for (double b : options.bmrs) {
        if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("BMR values must lie in (0,1)");
    }
    if (!(options.search_max > 0.0)) throw std::invalid_argument("compute_risk: search_max must be positive");

    RiskSummary out;
    out.curves = curve_draws(chain, options.grid);
    for (Endpoint e : kEndpoints) {
        for (double b : options.bmrs) {
            EdSummary s;
            s.endpoint = e;
            s.bmr = b;
            out.ed.push_back(std::move(s));
        }
    }
    const auto xs = linear_grid(0.0, options.search_max, options.scan_intervals + 1);
    std::array<std::vector<double>, 3> scan;
    for (const auto& d : chain.draws) {
        for (auto& v : scan) v.clear();
        for (double x : xs) {
            const auto dr = dose_response_draw(d.params, chain.spec, x);
            for (int e = 0; e < 3; ++e) scan[e].push_back(dr.get(kEndpoints[e]));
        }
        std::size_t slot = 0;
        for (int e = 0; e < 3; ++e) {
            const Endpoint ep = kEndpoints[e];
            auto curve = [&](double x) { return dose_response_draw(d.params, chain.spec, x).get(ep); };
            for (double b : options.bmrs) {
                auto& s = out.ed[slot++];
                ++s.total;
                const auto sol = solve_ed(curve, b, xs, scan[e]);
                if (!sol) {
                    ++s.censored;
                    continue;
                }
                s.samples.push_back(sol->dose);
                s.residuals.push_back(sol->residual);
            }
        }
    }
    for (auto& s : out.ed) {
        if (!s.samples.empty()) s.bmd = bmd(s.samples, options.level);
        s.unreliable = s.censored_fraction() > 0.05 || s.samples.empty();
    }
    return out;
}

CorrelationDraws correlation_draws(const Chain& chain, std::span<const double> doses) {
    CorrelationDraws out;
    out.doses.assign(doses.begin(), doses.end());
    for (int c = 0; c < 3; ++c) {
        out.values[c].assign(doses.size(), {});
        for (std::size_t k = 0; k < doses.size(); ++k) {
            auto& v = out.values[c][k];
            v.reserve(chain.draws.size());
            for (const auto& d : chain.draws) {
                const auto rho = intracluster_corr_draw(d.params, chain.spec, doses[k], c + 1);
                if (!rho) ++out.undefined[c];
                v.push_back(rho ? *rho : std::nan(""));
            }
        }
    }
    return out;
}

// ---- predictive ------------------------------------------------------------

ImplantModel fit_implant_model(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("fit_implant_model: empty dataset");
    double total = 0.0;
    for (const auto& r : data.records()) total += r.m;
    ImplantModel out;
    out.rate = total / data.size() - 1.0;
    if (out.rate < 1e-6) {
        out.rate = 1e-6;
        out.floored = true;
    }
    return out;
}

namespace {

int sample_stage(int trials, double theta, int stage, Kernel kernel, const KernelDispersion& disp, Rng& rng) {
    if (trials == 0) return 0;
    double p = 0.0;
    switch (kernel) {
        case Kernel::Binomial: p = logistic(theta); break;
        case Kernel::LNB: p = logistic(rng.normal(theta, std::sqrt(disp.sigma2[stage]))); break;
        case Kernel::BB: {
            const double mean = logistic(theta);
            const double lam = disp.lambda[stage];
            p = rng.beta(lam * mean, lam * (1.0 - mean));
            break;
        }
    }
    return rng.binomial(trials, p);
}

int sample_component(const std::vector<double>& w, Rng& rng) {
    double u = rng.uniform();
    for (std::size_t l = 0; l < w.size(); ++l) {
        u -= w[l];
        if (u <= 0.0) return static_cast<int>(l);
    }
    // Rounding left a sliver; fall back to the last positive weight.
    for (std::size_t l = w.size(); l-- > 0;) {
        if (w[l] > 0.0) return static_cast<int>(l);
    }
    return 0;
}

}  // namespace

PredictiveSample sample_response(const MixtureParams& params, const ModelSpec& spec, int component,
                                 double dose, int m, Rng& rng) {
    const auto disp = dispersion_of(params);
    PredictiveSample s;
    s.m = m;
    s.R = sample_stage(m, params.theta(0, component, dose), 0, spec.kernel, disp, rng);
    s.y = sample_stage(m - s.R, params.theta(1, component, dose), 1, spec.kernel, disp, rng);
    return s;
}

PredictiveDraws posterior_predictive(const Chain& chain, std::span<const double> doses,
                                     const ImplantModel& implant, Rng& rng) {
    if (chain.draws.empty()) throw std::invalid_argument("posterior_predictive: empty chain");
    PredictiveDraws out;
    out.doses.assign(doses.begin(), doses.end());
    out.samples.assign(doses.size(), {});
    for (auto& v : out.samples) v.reserve(chain.draws.size());
    for (const auto& d : chain.draws) {
        for (std::size_t k = 0; k < doses.size(); ++k) {
            const int m = sample_shifted_poisson(implant.rate, rng);
            const int comp = sample_component(d.params.weights_at(doses[k]), rng);
            out.samples[k].push_back(sample_response(d.params, chain.spec, comp, doses[k], m, rng));
        }
    }
    return out;
}

std::vector<double> pmf_R_given_m(const MixtureParams& params, const ModelSpec& spec, double dose, int m,
                                  const QuadratureRule& rule) {
    const auto w = params.weights_at(dose);
    const auto disp = dispersion_of(params);
    std::vector<double> out(m + 1, 0.0);
    for (int l = 0; l < params.components(); ++l) {
        if (w[l] == 0.0) continue;
        const double t = params.theta(0, l, dose);
        for (int R = 0; R <= m; ++R) out[R] += w[l] * stage_pmf(R, m, t, 0, spec.kernel, disp, rule);
    }
    return out;
}

std::optional<std::vector<double>> pmf_y_given_R(const MixtureParams& params, const ModelSpec& spec,
                                                 double dose, int m, int R_cond,
                                                 const QuadratureRule& rule) {
    if (R_cond < 0 || R_cond > m) throw std::invalid_argument("conditional pmf requires 0 <= R <= m");
    const auto w = params.weights_at(dose);
    const auto disp = dispersion_of(params);
    const int live = m - R_cond;
    std::vector<double> out(live + 1, 0.0);
    double total = 0.0;
    for (int l = 0; l < params.components(); ++l) {
        if (w[l] == 0.0) continue;
        const double wl = w[l] * stage_pmf(R_cond, m, params.theta(0, l, dose), 0, spec.kernel, disp, rule);
        if (wl == 0.0) continue;
        total += wl;
        const double t = params.theta(1, l, dose);
        for (int y = 0; y <= live; ++y) out[y] += wl * stage_pmf(y, live, t, 1, spec.kernel, disp, rule);
    }
    if (!(total > 0.0)) return std::nullopt;
    for (auto& v : out) v /= total;
    return out;
}

ConditionalPmfs conditional_pmfs(const Chain& chain, double dose, int m, int R_cond,
                                 const QuadratureRule& rule) {
    if (m < 1) throw std::invalid_argument("conditional_pmfs: m must be >= 1");
    if (R_cond < 0 || R_cond > m) throw std::invalid_argument("conditional_pmfs: require 0 <= R <= m");
    ConditionalPmfs out;
    out.dose = dose;
    out.m = m;
    out.R_cond = R_cond;
    for (const auto& d : chain.draws) {
        out.pr_R.push_back(pmf_R_given_m(d.params, chain.spec, dose, m, rule));
        auto y = pmf_y_given_R(d.params, chain.spec, dose, m, R_cond, rule);
        if (!y) {
            ++out.failed;
            continue;
        }
        out.pr_y.push_back(std::move(*y));
    }
    return out;
}

}  // namespace devtox
