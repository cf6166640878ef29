#include "devtox/chain_io.hpp"
#include "devtox/diagnostics.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace devtox;

namespace {

Dataset small_data() {
    return Dataset({{0.0, 6, 1, 0}, {0.0, 5, 0, 1}, {1.0, 7, 2, 2}, {1.0, 4, 4, 0}, {2.0, 8, 3, 3}, {2.0, 6, 2, 1}});
}

RunManifest manifest_for(const ModelSpec& spec, const McmcConfig& cfg) {
    RunManifest m;
    m.spec = spec;
    m.config = cfg;
    m.hyper = default_hyperparameters(2.0);
    m.dose_levels = {0.0, 1.0, 2.0};
    m.max_dose = 2.0;
    m.n_dams = 6;
    m.retained_draws = cfg.retained();
    return m;
}

}  // namespace

TEST_CASE("chain files round trip exactly") {
    for (const char* name : {"Gen-LNB", "CW-Bin", "CR-BB"}) {
        const auto spec = ModelSpec::from_name(name, 5);
        const McmcConfig cfg{200, 100, 5, 4, 2};
        const auto chains = fit_chains(spec, small_data(), default_hyperparameters(2.0), cfg);
        std::ostringstream os;
        write_chains_jsonl(os, chains);
        const auto manifest = manifest_from_json(manifest_to_json(manifest_for(spec, cfg)));
        std::istringstream in(os.str());
        const auto back = read_chains_jsonl(in, manifest);
        REQUIRE(back.size() == 2u);
        CHECK(back[1].chain_index == 1);
        std::ostringstream again;
        write_chains_jsonl(again, back);
        CHECK(again.str() == os.str());
        for (std::size_t c = 0; c < 2; ++c) {
            REQUIRE(back[c].draws.size() == chains[c].draws.size());
            const auto& a = chains[c].draws.back().params;
            const auto& b = back[c].draws.back().params;
            CHECK(a.betas[1] == b.betas[1]);
            CHECK(a.weights_at(1.3) == b.weights_at(1.3));
            CHECK(a.sigma2 == b.sigma2);
            CHECK(a.bb_lambda == b.bb_lambda);
        }
    }
    std::istringstream junk("{\"iteration\": 1}\n");
    CHECK_THROWS(read_chains_jsonl(junk, manifest_for(ModelSpec{}, McmcConfig{})));
}

TEST_CASE("manifest and hyperparameter overrides") {
    auto m = manifest_for(ModelSpec::from_name("CW-LNB", 12), McmcConfig{500, 100, 4, 99, 3});
    m.chain_seeds = {1, 2, 3};
    m.sigma2_prior_source = "elicited";
    m.elicited_extra_variance = 0.15;
    const auto j = manifest_to_json(m);
    const auto back = manifest_from_json(j);
    CHECK(manifest_to_json(back) == j);
    CHECK(back.spec == m.spec);
    CHECK(back.config.seed == 99u);
    CHECK(back.elicited_extra_variance == 0.15);
    CHECK(j["version"] == kVersion);

    const auto h = hyper_from_json(Json{{"a_sigma", 2.0}, {"kappa0", {3.0, 4.0}}}, Hyperparameters{});
    CHECK(h.a_sigma == 2.0);
    CHECK(h.kappa0[1] == 4.0);
    CHECK(h.b_sigma == Hyperparameters{}.b_sigma);
    CHECK_THROWS(hyper_from_json(Json{{"a_sigma", -1.0}}, Hyperparameters{}));
    const auto c = config_from_json(Json{{"thin", 3}}, McmcConfig{});
    CHECK(c.thin == 3);
    CHECK(c.n_iter == 30000);
}

TEST_CASE("effective sample size and scale reduction") {
    Rng rng(1);
    std::vector<double> iid(20000), ar(20000);
    double prev = 0.0;
    const double rho = 0.8;
    for (std::size_t i = 0; i < iid.size(); ++i) {
        iid[i] = rng.normal();
        prev = rho * prev + std::sqrt(1 - rho * rho) * rng.normal();
        ar[i] = prev;
    }
    const double e_iid = effective_sample_size(iid);
    CHECK(e_iid > 0.8 * 20000);
    const double e_ar = effective_sample_size(ar);
    const double target = 20000 * (1 - rho) / (1 + rho);
    CHECK(std::abs(e_ar - target) < 0.25 * target);

    std::vector<std::vector<double>> same{std::vector<double>(iid.begin(), iid.begin() + 5000),
                                          std::vector<double>(iid.begin() + 5000, iid.begin() + 10000)};
    CHECK(std::abs(split_rhat(same) - 1.0) < 0.01);
    auto shifted = same;
    for (auto& v : shifted[1]) v += 2.0;
    CHECK(split_rhat(shifted) > 1.5);

    CHECK(top_weights({0.1, 0.5, 0.05, 0.3, 0.05}) == std::vector<double>{0.5, 0.3, 0.1, 0.05});
    CHECK(top_weights({0.7, 0.3}) == std::vector<double>{0.7, 0.3, 0.0, 0.0});
}

TEST_CASE("diagnostics over fitted chains") {
    const auto spec = ModelSpec::from_name("Gen-LNB", 4);
    const auto chains = fit_chains(spec, small_data(), default_hyperparameters(2.0), McmcConfig{400, 200, 2, 3, 2});
    const auto d = diagnostics(chains, 1.0);
    REQUIRE(d.names.size() == d.traces.size());
    REQUIRE(d.names.size() == d.summaries.size());
    for (const auto& t : d.traces) {
        CHECK(t.size() == 2u);
        CHECK(t[0].size() == 100u);
    }
    // Weight traces are the sorted top four of each draw.
    int seen = 0;
    for (std::size_t k = 0; k < d.names.size(); ++k) {
        if (d.names[k] != "weight_top1") continue;
        ++seen;
        const auto w = top_weights(chains[1].draws[7].params.weights_at(1.0));
        CHECK(d.traces[k][1][7] == w[0]);
        CHECK(d.names[k + 3] == "weight_top4");
        CHECK(d.traces[k + 3][1][7] == w[3]);
    }
    CHECK(seen == 1);

    // Constant chain.
    Chain flat;
    flat.spec = ModelSpec{};
    for (int i = 0; i < 20; ++i) {
        Draw dr;
        dr.params.betas[0] = {Vec2(-1, 0.1)};
        dr.params.betas[1] = {Vec2(-2, 0.1)};
        flat.draws.push_back(dr);
    }
    const std::vector<Chain> one{flat};
    const auto fd = diagnostics(one, 1.0);
    for (const auto& s : fd.summaries) {
        CHECK(s.degenerate);
        CHECK(s.rhat == 1.0);
        CHECK(s.ess == 20.0);
    }
}
