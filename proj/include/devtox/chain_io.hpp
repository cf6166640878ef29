#pragma once

// Chain files (one JSON object per retained draw) and run manifests.

#include "devtox/mcmc.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace devtox {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

struct RunManifest {
    std::string version = kVersion;
    ModelSpec spec;
    Hyperparameters hyper;
    McmcConfig config;
    std::vector<std::uint64_t> chain_seeds;
    std::string data_path;
    std::vector<double> dose_levels;
    double max_dose = 0.0;
    int n_dams = 0;
    int retained_draws = 0;  // per chain
    double wall_time_seconds = 0.0;
    // How the sigma^2 prior was set: "direct" or "elicited".
    std::string sigma2_prior_source = "direct";
    std::optional<double> elicited_extra_variance;
};

Json hyper_to_json(const Hyperparameters& h);
// Fields present in j override those of base.
Hyperparameters hyper_from_json(const Json& j, Hyperparameters base);

Json config_to_json(const McmcConfig& c);
McmcConfig config_from_json(const Json& j, McmcConfig base);

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

// Field order: iteration, chain, betas [stage][component][2], weight_state,
// sigma2, bb_lambda, mu, Sigma, beta_avg, occupied.
Json draw_to_json(const Draw& d, int chain_index);
Draw draw_from_json(const Json& j);

void write_chains_jsonl(std::ostream& out, std::span<const Chain> chains);
// Splits records by their chain field; spec and config come from the manifest.
std::vector<Chain> read_chains_jsonl(std::istream& in, const RunManifest& manifest);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);
std::vector<Chain> read_chains(const std::string& path, const RunManifest& manifest);

}  // namespace devtox
