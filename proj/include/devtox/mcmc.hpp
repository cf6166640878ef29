#pragma once

// Blocked Gibbs sampler for the truncated mixture models, random-walk
// Metropolis for CR-BB, and chain bookkeeping.

#include "devtox/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace devtox {

struct McmcConfig {
    int n_iter = 30000;
    int burn_in = 20000;
    int thin = 2;
    std::uint64_t seed = 1;
    int n_chains = 1;

    // Throws std::invalid_argument.
    void validate() const;
    // floor((n_iter - burn_in) / thin)
    int retained() const;
    // Iteration t (1-based) is kept iff t > burn_in and (t - burn_in) % thin == 0.
    bool keeps(int iteration) const;
};

// Carries the iteration at which a conjugate update broke down.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, int component, int iteration = -1);
    int component() const { return component_; }
    int iteration() const { return iteration_; }
    NumericalFailure at_iteration(int iteration) const;

private:
    std::string base_;
    int component_;
    int iteration_;
};

struct Draw {
    int iteration = 0;
    MixtureParams params;
    // Present for the mixture models (normal-inverse-Wishart layer).
    std::optional<std::array<Vec2, 2>> mu;
    std::optional<std::array<Mat2, 2>> Sigma;
    // Average of beta_{j, L_di} over dams; invariant to relabeling.
    std::array<Vec2, 2> beta_avg{Vec2::Zero(), Vec2::Zero()};
    int occupied = 1;
};

struct AcceptanceStats {
    // Per coordinate: beta1 (2), beta2 (2), log lambda1, log lambda2.
    std::vector<double> rates;         // post-burn-in acceptance rates
    std::vector<double> final_scales;  // proposal sd after adaptation
};

struct Chain {
    ModelSpec spec;
    McmcConfig config;
    int chain_index = 0;
    std::uint64_t seed = 0;
    std::vector<Draw> draws;
    std::optional<AcceptanceStats> acceptance;
};

// Data as the sampler sees it. With use_likelihood = false every dam
// contributes zero trials, so the sampler targets the prior.
class Problem {
public:
    Problem(Dataset data, Hyperparameters hyper, ModelSpec spec, bool use_likelihood = true);

    struct Dam {
        Vec2 x;
        int dose_index;
        int trials[2];  // m and m - R (0 when the likelihood is off)
        int successes[2];  // R and y
    };

    const Dataset& data() const { return data_; }
    const Hyperparameters& hyper() const { return hyper_; }
    const ModelSpec& spec() const { return spec_; }
    bool use_likelihood() const { return use_likelihood_; }
    const std::vector<Dam>& dams() const { return dams_; }

    // Swap the responses of dam i, keeping dose and implant count.
    void set_response(std::size_t i, int R, int y);

private:
    Dataset data_;
    Hyperparameters hyper_;
    ModelSpec spec_;
    bool use_likelihood_;
    std::vector<Dam> dams_;
};

struct GibbsState {
    MixtureParams params;
    std::array<Vec2, 2> mu{Vec2::Zero(), Vec2::Zero()};
    std::array<Mat2, 2> Sigma{Mat2::Identity(), Mat2::Identity()};
    std::vector<int> labels;                 // 0-based component per dam
    std::vector<std::array<double, 2>> psi;  // LNB only
    std::vector<std::array<double, 2>> zeta;
    std::vector<std::vector<double>> xi;     // [dam][l], l < min(label + 1, L - 1)
};

GibbsState initial_state(const Problem& problem, Rng& rng);

// Individual sweeps of the sampler.
void step_update_atoms(GibbsState& state, const Problem& problem, Rng& rng);
void step_update_weights(GibbsState& state, const Problem& problem, Rng& rng);
void step_update_weights_cw(GibbsState& state, const Problem& problem, Rng& rng);
void step_update_config(GibbsState& state, const Problem& problem, Rng& rng);
void step_update_sigma2(GibbsState& state, const Problem& problem, Rng& rng);
void step_update_hyper(GibbsState& state, const Problem& problem, Rng& rng);
// Redraw the parts of the state no likelihood touches: atoms of empty
// components and second-stage logits of dams without live pups.
void refresh_unobserved(GibbsState& state, const Problem& problem, Rng& rng);
// Redraw the Polya-Gamma variables given the current logits, e.g. after the
// responses changed.
void redraw_augmentation(GibbsState& state, const Problem& problem, Rng& rng);
// One full Gibbs transition in the order atoms, weights, labels, sigma2, hyper.
void gibbs_sweep(GibbsState& state, const Problem& problem, Rng& rng);

// CR-BB random-walk Metropolis.
struct CrbbState {
    std::array<Vec2, 2> beta{Vec2::Zero(), Vec2::Zero()};
    std::array<double, 2> log_lambda{0.0, 0.0};
};

struct CrbbSampler {
    // Proposal sd per coordinate (beta1 x2, beta2 x2, log lambda x2).
    std::array<double, 6> scales{};
    std::array<long, 6> accepted{};
    std::array<long, 6> proposed{};
};

double crbb_log_target(const CrbbState& s, const Problem& problem);
// One Metropolis sweep over the six coordinates.
void step_mh_crbb(CrbbState& state, const Problem& problem, Rng& rng, CrbbSampler& sampler);

Draw make_draw(const GibbsState& state, const Problem& problem, int iteration);

Chain fit(const ModelSpec& spec, const Dataset& data, const Hyperparameters& hyper,
          const McmcConfig& config, Rng& rng);
// n_chains independent chains with seeds derive_seed(config.seed, c), run
// concurrently.
std::vector<Chain> fit_chains(const ModelSpec& spec, const Dataset& data,
                              const Hyperparameters& hyper, const McmcConfig& config);

}  // namespace devtox
