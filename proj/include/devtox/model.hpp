#pragma once

// Data and model structure for clustered trinomial dose-response data.
//
// A dam at dose x carries m implants. R of them are non-viable; of the m - R
// live pups, y are malformed. Every model factorizes the response as
// p(R | m) p(y | R, m) (continuation-ratio logits) and mixes over
// components l = 1..L with atoms theta_jl(x) = (1, x)' beta_jl, j = 1, 2.

#include "devtox/distributions.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace devtox {

struct DamRecord {
    double dose = 0.0;  // g/kg
    int m = 1;          // implants
    int R = 0;          // non-viable
    int y = 0;          // malformed among the m - R live pups

    bool operator==(const DamRecord&) const = default;
};

// Throws std::invalid_argument describing the violated invariant.
void validate_record(const DamRecord& rec);

class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<DamRecord> records);

    const std::vector<DamRecord>& records() const { return records_; }
    // Sorted distinct doses.
    const std::vector<double>& dose_levels() const { return dose_levels_; }
    const std::vector<int>& group_sizes() const { return group_sizes_; }
    // Index into dose_levels() of each record.
    const std::vector<int>& dose_index() const { return dose_index_; }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    double max_dose() const { return dose_levels_.empty() ? 0.0 : dose_levels_.back(); }

private:
    std::vector<DamRecord> records_;
    std::vector<double> dose_levels_;
    std::vector<int> group_sizes_;
    std::vector<int> dose_index_;
};

inline Vec2 covariate(double dose) { return Vec2(1.0, dose); }

// ---- model specification -----------------------------------------------

enum class Kernel { Binomial, LNB, BB };
enum class WeightStructure { Single, CommonWeights, DoseDependent };

std::string_view to_string(Kernel k);
std::string_view to_string(WeightStructure w);

struct ModelSpec {
    Kernel kernel = Kernel::Binomial;
    WeightStructure weights = WeightStructure::Single;
    int truncation = 1;

    // Throws std::invalid_argument on an unsupported combination.
    void validate() const;
    // One of CR-logits, CR-BB, CR-LNB, CW-Bin, Gen-Bin, CW-LNB, Gen-LNB.
    std::string name() const;
    // Inverse of name(). Mixture models take the given truncation; the
    // parametric ones always have L = 1.
    static ModelSpec from_name(std::string_view name, int truncation = 50);

    bool operator==(const ModelSpec&) const = default;
};

const std::vector<std::string>& model_names();

struct Hyperparameters {
    // LSBP stick coefficients gamma_l ~ N(gamma0, Gamma0).
    Vec2 gamma0 = Vec2::Zero();
    Mat2 Gamma0 = Mat2::Identity();
    // beta_jl ~ N(mu_j, Sigma_j); mu_j | Sigma_j ~ N(mu0_j, Sigma_j / kappa0_j);
    // Sigma_j^{-1} ~ Wishart(nu0_j, Lambda0_j^{-1}).
    std::array<Vec2, 2> mu0{Vec2::Zero(), Vec2::Zero()};
    std::array<double, 2> kappa0{1.0, 1.0};
    std::array<double, 2> nu0{4.0, 4.0};
    std::array<Mat2, 2> Lambda0{Mat2::Identity(), Mat2::Identity()};
    // sigma_j^2 ~ IG(a_sigma, b_sigma).
    double a_sigma = 3.0;
    double b_sigma = 1.2;
    // DP concentration alpha ~ Gamma(a_alpha, rate b_alpha).
    double a_alpha = 2.0;
    double b_alpha = 2.0;
    // CR-BB dispersion lambda_j ~ Gamma(a_lambda, rate b_lambda).
    double a_lambda = 1.0;
    double b_lambda = 0.1;

    void validate() const;
};

// Monotone-trend defaults scaled to the largest observed dose: the prior
// curve for each stage rises from about 0.05 at dose 0 towards 0.5 at
// max_dose.
Hyperparameters default_hyperparameters(double max_dose);

// ---- mixture parameters --------------------------------------------------

struct StickWeights {
    std::vector<double> sticks;  // V_1..V_{L-1}
    double alpha = 1.0;
};

struct LsbpWeights {
    std::vector<Vec2> gammas;  // gamma_1..gamma_{L-1}
};

// monostate for a single component.
using WeightState = std::variant<std::monostate, StickWeights, LsbpWeights>;

struct MixtureParams {
    std::array<std::vector<Vec2>, 2> betas;  // [stage][component]
    WeightState weight_state;
    std::optional<std::array<double, 2>> sigma2;     // LNB kernel only
    std::optional<std::array<double, 2>> bb_lambda;  // BB kernel only

    int components() const { return static_cast<int>(betas[0].size()); }
    double theta(int stage, int component, double dose) const {
        return covariate(dose).dot(betas[stage][component]);
    }
    std::vector<double> weights_at(double dose) const;
};

std::vector<double> lsbp_weights(const Vec2& x, std::span<const Vec2> gammas);
std::vector<double> dp_weights(std::span<const double> sticks);

// Dispersion of the kernel that is shared across components.
struct KernelDispersion {
    std::array<double, 2> sigma2{0.0, 0.0};
    std::array<double, 2> lambda{0.0, 0.0};
};

KernelDispersion dispersion_of(const MixtureParams& params);

// First-stage mass of R among m implants for one component.
double stage_pmf(int count, int trials, double theta, int stage, Kernel kernel,
                 const KernelDispersion& disp, const QuadratureRule& rule = default_rule());

// p(R | m) p(y | R, m) for one component.
double kernel_pmf(int R, int y, int m, double theta1, double theta2, Kernel kernel,
                  const KernelDispersion& disp, const QuadratureRule& rule = default_rule());

double mixture_pmf(int R, int y, int m, double dose, const MixtureParams& params,
                   const ModelSpec& spec, const QuadratureRule& rule = default_rule());

// ---- prior elicitation -----------------------------------------------------

struct InverseGammaPrior {
    double shape = 0.0;
    double scale = 0.0;
};

// Prior mean of sigma^2 is 4v, so the implant-level correlation is about v
// a priori. Throws std::domain_error unless v in (0,1) and shape > 1.
InverseGammaPrior elicit_sigma2_prior(double extra_variance, double shape);

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool operator==(const Rational&) const = default;
};
Rational make_rational(std::int64_t num, std::int64_t den);

struct RationalInverseGamma {
    Rational shape;
    Rational scale;
};
RationalInverseGamma elicit_sigma2_prior(Rational extra_variance, Rational shape);

// ---- prior simulation --------------------------------------------------------

struct PriorDraw {
    MixtureParams params;
    std::array<Vec2, 2> mu;
    std::array<Mat2, 2> Sigma;
};

PriorDraw sample_prior(const Hyperparameters& hyper, const ModelSpec& spec, Rng& rng);

struct PriorCurveCheck {
    std::vector<double> grid;
    // [endpoint D, M, r][grid point]
    std::array<std::vector<double>, 3> mean;
    std::array<std::vector<double>, 3> std_error;
};

// Monte Carlo prior expectation of the D, M, r curves. Throws
// std::invalid_argument for n_draws < 1 or an unsorted grid.
PriorCurveCheck prior_doseresponse_check(const Hyperparameters& hyper, const ModelSpec& spec,
                                         std::span<const double> grid, int n_draws, Rng& rng);

}  // namespace devtox
