#pragma once

// Label-invariant traces and convergence statistics for fitted chains.

#include "devtox/mcmc.hpp"

#include <string>

namespace devtox {

struct TraceSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double ess = 0.0;   // summed over chains
    double rhat = 1.0;  // split-chain scale reduction
    // Constant trace: rhat is reported as 1 and ess as the draw count.
    bool degenerate = false;
};

struct Diagnostics {
    double dose = 0.0;
    std::vector<std::string> names;
    std::vector<std::vector<std::vector<double>>> traces;  // [trace][chain][draw]
    std::vector<TraceSummary> summaries;
};

// Traces of mu_j and Sigma_j entries (mixtures), sigma2 (LNB), lambda (BB),
// the four largest weights at `dose`, the dam-averaged betas and the
// dose-response probabilities at `dose`. All chains must share a spec.
Diagnostics diagnostics(std::span<const Chain> chains, double dose);

// Geyer initial-monotone-sequence estimate.
double effective_sample_size(std::span<const double> x);
// Each chain is split in half before computing the potential scale reduction.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Largest k entries in decreasing order, zero padded.
std::vector<double> top_weights(std::vector<double> w, int k = 4);

}  // namespace devtox
