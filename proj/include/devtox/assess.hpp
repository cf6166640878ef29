#pragma once

// Cross-validated model comparison: posterior predictive loss (G + P) and
// the interval score.

#include "devtox/inference.hpp"

#include <iosfwd>

namespace devtox {

struct CvSplit {
    Dataset train;
    Dataset test;
    double fraction = 0.2;
};

// Stratified by dose: round(fraction * n_d) test dams per dose, at least one.
// Every dose group needs >= 2 dams; otherwise std::invalid_argument names the dose.
CvSplit cv_split(const Dataset& data, double fraction, Rng& rng);

// Observed or predicted ratio for an endpoint. nullopt for the malformation
// ratio when no pup is alive.
std::optional<double> endpoint_ratio(int m, int R, int y, Endpoint e);

struct PplResult {
    double G = 0.0;  // sum of squared deviations from the predictive mean
    double P = 0.0;  // sum over test doses of n'_d Var(ratio*)
    int skipped_test = 0;
    int skipped_draws = 0;
};

// Test dams are matched to predictive draws by dose.
PplResult ppl(const Dataset& test, const PredictiveDraws& predictive, Endpoint e);

struct IntervalScoreResult {
    double S = 0.0;
    int skipped_test = 0;
};

IntervalScoreResult interval_score(const Dataset& test, const PredictiveDraws& predictive, Endpoint e,
                                   double alpha = 0.05);

struct ComparisonRow {
    std::string model;
    Endpoint endpoint = Endpoint::Combined;
    double G = 0.0;
    double P = 0.0;
    double S = 0.0;
    int skipped = 0;
};

struct ComparisonReport {
    double fraction = 0.2;
    int n_train = 0;
    int n_test = 0;
    std::vector<ComparisonRow> rows;
};

// All three endpoints for one fitted model.
std::vector<ComparisonRow> compare_endpoints(const std::string& model, const Dataset& test,
                                             const PredictiveDraws& predictive);

// CSV: model,endpoint,G,P,G_plus_P,S,skipped_test_dams
void write_comparison(std::ostream& out, const ComparisonReport& report);

}  // namespace devtox
