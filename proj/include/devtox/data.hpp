#pragma once

// Dataset CSV ingestion and the two synthetic-data generators.

#include "devtox/chain_io.hpp"
#include "devtox/model.hpp"

#include <iosfwd>
#include <string>

namespace devtox {

// Header `dose,m,R,y`, one dam per row. Throws std::runtime_error with the
// offending line number.
Dataset parse_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);
// Shortest round-trip decimal for doses, so write-then-parse is the identity.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

std::string format_double(double x);

// True curves (and, for the second design, category correlations).
struct TruthCurves {
    std::vector<double> grid;
    std::vector<double> D, M, r;
    std::vector<double> corr_doses;
    std::array<std::vector<double>, 3> corr;  // [category][corr_doses index]
};

// Long format: quantity,dose,value.
void write_truth_csv(std::ostream& out, const TruthCurves& truth);

// Three-component CR-LNB mixture with probit stick weights
// w = (p1, (1 - p1) p2, (1 - p1)(1 - p2)), p_j(x) = Phi(a_j0 + a_j1 x),
// atoms theta_jk(x) = b_jk0 + b_jk1 x and sigma_j^2(x) = c_j0 + c_j1 x.
struct Sim1Config {
    std::vector<double> doses{0.0, 0.625, 1.25, 2.5, 5.0};
    int n_dams = 100;
    double implant_mean = 20.0;
    std::array<std::array<Vec2, 3>, 2> b{{{Vec2(-2.5, 0.1), Vec2(-2.2, 0.2), Vec2(-2.0, 0.35)},
                                          {Vec2(-1.0, 0.0), Vec2(-3.0, 0.1), Vec2(-1.5, 0.5)}}};
    std::array<Vec2, 2> a{Vec2(1.5, -1.5), Vec2(2.5, -1.0)};
    std::array<Vec2, 2> c{Vec2(0.3, 0.05), Vec2(0.3, 0.05)};

    // Throws std::invalid_argument.
    void validate() const;
    std::array<double, 3> weights(double x) const;
    double sigma2(int stage, double x) const { return c[stage](0) + c[stage](1) * x; }
    double theta(int stage, int k, double x) const { return b[stage][k](0) + b[stage][k](1) * x; }
};

// Product of Beta-Binomials with theta_j(x) = b_j0 + b_j1 x and
// lambda_j(x) = c_j0 + c_j1 x.
struct Sim2Config {
    std::vector<double> doses{0.0, 0.625, 1.25, 2.5, 3.75, 5.0};
    int n_dams = 150;
    double implant_mean = 20.0;
    std::array<Vec2, 2> b{Vec2(-2.5, 0.35), Vec2(-2.0, 0.4)};
    std::array<Vec2, 2> c{Vec2(8.0, -1.0), Vec2(8.0, -1.0)};

    void validate() const;
    double lambda(int stage, double x) const { return c[stage](0) + c[stage](1) * x; }
    double theta(int stage, double x) const { return b[stage](0) + b[stage](1) * x; }
};

struct SimulationResult {
    Dataset data;
    TruthCurves truth;
    std::vector<int> labels;  // generating component per dam (first design only)
};

TruthCurves sim1_truth(const Sim1Config& cfg, std::span<const double> grid);
TruthCurves sim2_truth(const Sim2Config& cfg, std::span<const double> grid);

// Implants are 1 + Poisson(implant_mean - 1), so their mean is implant_mean.
SimulationResult simulate_sim1(const Sim1Config& cfg, Rng& rng, std::span<const double> grid);
SimulationResult simulate_sim2(const Sim2Config& cfg, Rng& rng, std::span<const double> grid);

// Sim2 category correlations by enumerating two implants of one dam.
double sim2_true_corr(const Sim2Config& cfg, double dose, int category);

Json to_json(const Sim1Config& cfg);
Json to_json(const Sim2Config& cfg);
// Missing keys keep the defaults.
Sim1Config sim1_from_json(const Json& j);
Sim2Config sim2_from_json(const Json& j);

}  // namespace devtox
