#pragma once

// Posterior functionals: dose-response curves, intracluster correlations,
// effective doses, predictive draws and conditional mass functions.

#include "devtox/mcmc.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace devtox {

enum class Endpoint { Embryolethality, Malformation, Combined };
inline constexpr std::array<Endpoint, 3> kEndpoints{Endpoint::Embryolethality, Endpoint::Malformation,
                                                    Endpoint::Combined};
// "D", "M", "r".
std::string_view to_string(Endpoint e);
Endpoint endpoint_from_string(std::string_view s);

struct DoseResponse {
    double D = 0.0;  // Pr(non-viable)
    double M = 0.0;  // Pr(malformed | viable); NaN when undefined
    double r = 0.0;  // Pr(non-viable or malformed)
    bool M_defined = true;

    double get(Endpoint e) const;
};

DoseResponse dose_response_draw(const MixtureParams& params, const ModelSpec& spec, double dose,
                                const QuadratureRule& rule = default_rule());

// Correlation between the category indicators of two implants of one dam,
// category 1 (non-viable), 2 (malformed) or 3 (normal). nullopt when the
// category has zero variance at this dose.
std::optional<double> intracluster_corr_draw(const MixtureParams& params, const ModelSpec& spec,
                                             double dose, int category,
                                             const QuadratureRule& rule = default_rule());

std::vector<double> linear_grid(double lo, double hi, int points);

struct CurveDraws {
    std::vector<double> grid;
    std::vector<std::vector<DoseResponse>> values;  // [draw][grid point]
};

CurveDraws curve_draws(const Chain& chain, std::span<const double> grid);

struct CurveBand {
    std::vector<double> mean, lower, upper;  // per grid point
    std::vector<int> used;                   // draws with a defined value
};

// Pointwise posterior mean and central interval at the given level.
CurveBand curve_band(const CurveDraws& curves, Endpoint e, double level = 0.95);

// ---- effective dose ------------------------------------------------------

struct EdSolution {
    double dose = 0.0;
    // |(P(ED) - P(0)) - bmr (1 - P(0))|
    double residual = 0.0;
};

// Smallest dose in [0, search_max] at which the extra risk over control
// reaches bmr. The bracket is found on a uniform scan of scan_intervals
// cells and refined by bisection. nullopt means the target is never reached
// (censored at search_max).
std::optional<EdSolution> effective_dose(const std::function<double(double)>& curve, double bmr,
                                         double search_max, int scan_intervals = 100);

// Type-7 (linear interpolation) sample quantile. Throws on empty input.
double quantile_type7(std::vector<double> values, double p);

// Lower end of the central credible interval at `level`, i.e. the
// (1 - level)/2 quantile. level = 1 gives the minimum, level = 0 the median.
double bmd(std::span<const double> ed_samples, double level = 0.95);

struct EdSummary {
    Endpoint endpoint = Endpoint::Combined;
    double bmr = 0.05;
    std::vector<double> samples;  // uncensored draws only
    std::vector<double> residuals;
    int censored = 0;
    int total = 0;
    double bmd = std::nan("");
    // More than 5% of draws censored.
    bool unreliable = false;

    double censored_fraction() const { return total > 0 ? static_cast<double>(censored) / total : 0.0; }
};

struct RiskOptions {
    std::vector<double> grid;
    std::vector<double> bmrs{0.05, 0.10};
    double search_max = 0.0;  // usually 1.5 x the largest observed dose
    int scan_intervals = 100;
    double level = 0.95;
};

struct RiskSummary {
    CurveDraws curves;
    std::vector<EdSummary> ed;  // endpoint-major, then BMR
};

RiskSummary compute_risk(const Chain& chain, const RiskOptions& options);

// ---- intracluster correlation draws ----------------------------------------

struct CorrelationDraws {
    std::vector<double> doses;
    // [category 0..2][dose][draw]; NaN for draws where the correlation is undefined.
    std::array<std::vector<std::vector<double>>, 3> values;
    std::array<int, 3> undefined{0, 0, 0};
};

CorrelationDraws correlation_draws(const Chain& chain, std::span<const double> doses);

// ---- predictive ------------------------------------------------------------

struct ImplantModel {
    double rate = 1.0;  // m - 1 ~ Poisson(rate)
    bool floored = false;
};

// Pooled maximum likelihood, mean(m) - 1, floored at 1e-6.
ImplantModel fit_implant_model(const Dataset& data);

struct PredictiveSample {
    int m = 1;
    int R = 0;
    int y = 0;
};

struct PredictiveDraws {
    std::vector<double> doses;
    std::vector<std::vector<PredictiveSample>> samples;  // [dose][draw]
};

// One (m*, R*, y*) per retained draw at each dose.
PredictiveDraws posterior_predictive(const Chain& chain, std::span<const double> doses,
                                     const ImplantModel& implant, Rng& rng);

// Draw (R, y) for m implants from component `component` of params.
PredictiveSample sample_response(const MixtureParams& params, const ModelSpec& spec, int component,
                                 double dose, int m, Rng& rng);

struct ConditionalPmfs {
    double dose = 0.0;
    int m = 0;
    int R_cond = 0;
    std::vector<std::vector<double>> pr_R;  // [draw][R = 0..m]
    std::vector<std::vector<double>> pr_y;  // [draw][y = 0..m - R_cond]
    int failed = 0;                         // draws with zero mass at R_cond
};

ConditionalPmfs conditional_pmfs(const Chain& chain, double dose, int m, int R_cond,
                                 const QuadratureRule& rule = default_rule());

// Per-draw versions used by conditional_pmfs.
std::vector<double> pmf_R_given_m(const MixtureParams& params, const ModelSpec& spec, double dose, int m,
                                  const QuadratureRule& rule = default_rule());
std::optional<std::vector<double>> pmf_y_given_R(const MixtureParams& params, const ModelSpec& spec,
                                                 double dose, int m, int R_cond,
                                                 const QuadratureRule& rule = default_rule());

}  // namespace devtox
