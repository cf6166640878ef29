#include "devtox/chain_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace devtox {

namespace {

Json vec_json(const Vec2& v) { return Json::array({v(0), v(1)}); }

Vec2 vec_from(const Json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

Json mat_json(const Mat2& m) {
    return Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
}

Mat2 mat_from(const Json& j) {
    Mat2 m;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

template <typename T>
void maybe(const Json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

Json hyper_to_json(const Hyperparameters& h) {
    Json j;
    j["gamma0"] = vec_json(h.gamma0);
    j["Gamma0"] = mat_json(h.Gamma0);
    j["mu0"] = Json::array({vec_json(h.mu0[0]), vec_json(h.mu0[1])});
    j["kappa0"] = h.kappa0;
    j["nu0"] = h.nu0;
    j["Lambda0"] = Json::array({mat_json(h.Lambda0[0]), mat_json(h.Lambda0[1])});
    j["a_sigma"] = h.a_sigma;
    j["b_sigma"] = h.b_sigma;
    j["a_alpha"] = h.a_alpha;
    j["b_alpha"] = h.b_alpha;
    j["a_lambda"] = h.a_lambda;
    j["b_lambda"] = h.b_lambda;
    return j;
}

Hyperparameters hyper_from_json(const Json& j, Hyperparameters h) {
    if (j.contains("gamma0")) h.gamma0 = vec_from(j["gamma0"]);
    if (j.contains("Gamma0")) h.Gamma0 = mat_from(j["Gamma0"]);
    for (int s = 0; s < 2; ++s) {
        if (j.contains("mu0")) h.mu0[s] = vec_from(j["mu0"].at(s));
        if (j.contains("Lambda0")) h.Lambda0[s] = mat_from(j["Lambda0"].at(s));
        if (j.contains("kappa0")) h.kappa0[s] = j["kappa0"].at(s).get<double>();
        if (j.contains("nu0")) h.nu0[s] = j["nu0"].at(s).get<double>();
    }
    maybe(j, "a_sigma", h.a_sigma);
    maybe(j, "b_sigma", h.b_sigma);
    maybe(j, "a_alpha", h.a_alpha);
    maybe(j, "b_alpha", h.b_alpha);
    maybe(j, "a_lambda", h.a_lambda);
    maybe(j, "b_lambda", h.b_lambda);
    h.validate();
    return h;
}

Json config_to_json(const McmcConfig& c) {
    Json j;
    j["n_iter"] = c.n_iter;
    j["burn_in"] = c.burn_in;
    j["thin"] = c.thin;
    j["seed"] = c.seed;
    j["n_chains"] = c.n_chains;
    return j;
}

McmcConfig config_from_json(const Json& j, McmcConfig c) {
    maybe(j, "n_iter", c.n_iter);
    maybe(j, "burn_in", c.burn_in);
    maybe(j, "thin", c.thin);
    maybe(j, "seed", c.seed);
    maybe(j, "n_chains", c.n_chains);
    return c;
}

Json manifest_to_json(const RunManifest& m) {
    Json j;
    j["version"] = m.version;
    j["model"] = m.spec.name();
    j["kernel"] = std::string(to_string(m.spec.kernel));
    j["weights"] = std::string(to_string(m.spec.weights));
    j["truncation"] = m.spec.truncation;
    j["hyperparameters"] = hyper_to_json(m.hyper);
    j["sigma2_prior_source"] = m.sigma2_prior_source;
    if (m.elicited_extra_variance) j["elicited_extra_variance"] = *m.elicited_extra_variance;
    j["mcmc"] = config_to_json(m.config);
    j["chain_seeds"] = m.chain_seeds;
    j["retained_draws_per_chain"] = m.retained_draws;
    j["data"] = {{"path", m.data_path}, {"n_dams", m.n_dams}, {"dose_levels", m.dose_levels},
                 {"max_dose", m.max_dose}};
    j["wall_time_seconds"] = m.wall_time_seconds;
    return j;
}

RunManifest manifest_from_json(const Json& j) {
    RunManifest m;
    m.version = j.value("version", std::string(kVersion));
    m.spec = ModelSpec::from_name(j.at("model").get<std::string>(), j.at("truncation").get<int>());
    m.hyper = hyper_from_json(j.at("hyperparameters"), Hyperparameters{});
    m.sigma2_prior_source = j.value("sigma2_prior_source", std::string("direct"));
    if (j.contains("elicited_extra_variance")) m.elicited_extra_variance = j["elicited_extra_variance"].get<double>();
    m.config = config_from_json(j.at("mcmc"), McmcConfig{});
    m.chain_seeds = j.value("chain_seeds", std::vector<std::uint64_t>{});
    m.retained_draws = j.value("retained_draws_per_chain", 0);
    if (j.contains("data")) {
        const auto& d = j["data"];
        m.data_path = d.value("path", std::string());
        m.n_dams = d.value("n_dams", 0);
        m.dose_levels = d.value("dose_levels", std::vector<double>{});
        m.max_dose = d.value("max_dose", 0.0);
    }
    m.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    return m;
}

Json draw_to_json(const Draw& d, int chain_index) {
    Json j;
    j["iteration"] = d.iteration;
    j["chain"] = chain_index;
    Json betas = Json::array();
    for (int s = 0; s < 2; ++s) {
        Json stage = Json::array();
        for (const auto& b : d.params.betas[s]) stage.push_back(vec_json(b));
        betas.push_back(std::move(stage));
    }
    j["betas"] = std::move(betas);
    Json ws;
    if (const auto* g = std::get_if<LsbpWeights>(&d.params.weight_state)) {
        ws["type"] = "lsbp";
        Json gs = Json::array();
        for (const auto& v : g->gammas) gs.push_back(vec_json(v));
        ws["gammas"] = std::move(gs);
    } else if (const auto* s = std::get_if<StickWeights>(&d.params.weight_state)) {
        ws["type"] = "stick";
        ws["sticks"] = s->sticks;
        ws["alpha"] = s->alpha;
    } else {
        ws["type"] = "single";
    }
    j["weight_state"] = std::move(ws);
    j["sigma2"] = d.params.sigma2 ? Json(*d.params.sigma2) : Json(nullptr);
    j["bb_lambda"] = d.params.bb_lambda ? Json(*d.params.bb_lambda) : Json(nullptr);
    j["mu"] = d.mu ? Json::array({vec_json((*d.mu)[0]), vec_json((*d.mu)[1])}) : Json(nullptr);
    j["Sigma"] = d.Sigma ? Json::array({mat_json((*d.Sigma)[0]), mat_json((*d.Sigma)[1])}) : Json(nullptr);
    j["beta_avg"] = Json::array({vec_json(d.beta_avg[0]), vec_json(d.beta_avg[1])});
    j["occupied"] = d.occupied;
    return j;
}

Draw draw_from_json(const Json& j) {
    Draw d;
    d.iteration = j.at("iteration").get<int>();
    for (int s = 0; s < 2; ++s) {
        for (const auto& b : j.at("betas").at(s)) d.params.betas[s].push_back(vec_from(b));
    }
    if (d.params.betas[0].size() != d.params.betas[1].size() || d.params.betas[0].empty()) {
        throw std::runtime_error("chain record has inconsistent component counts");
    }
    const auto& ws = j.at("weight_state");
    const std::string type = ws.at("type").get<std::string>();
    if (type == "lsbp") {
        LsbpWeights g;
        for (const auto& v : ws.at("gammas")) g.gammas.push_back(vec_from(v));
        d.params.weight_state = std::move(g);
    } else if (type == "stick") {
        StickWeights s;
        s.sticks = ws.at("sticks").get<std::vector<double>>();
        s.alpha = ws.at("alpha").get<double>();
        d.params.weight_state = std::move(s);
    } else if (type == "single") {
        d.params.weight_state = std::monostate{};
    } else {
        throw std::runtime_error("unknown weight_state type: " + type);
    }
    if (!j.at("sigma2").is_null()) d.params.sigma2 = j["sigma2"].get<std::array<double, 2>>();
    if (!j.at("bb_lambda").is_null()) d.params.bb_lambda = j["bb_lambda"].get<std::array<double, 2>>();
    if (!j.at("mu").is_null()) d.mu = std::array<Vec2, 2>{vec_from(j["mu"][0]), vec_from(j["mu"][1])};
    if (!j.at("Sigma").is_null()) d.Sigma = std::array<Mat2, 2>{mat_from(j["Sigma"][0]), mat_from(j["Sigma"][1])};
    d.beta_avg = {vec_from(j.at("beta_avg")[0]), vec_from(j.at("beta_avg")[1])};
    d.occupied = j.value("occupied", 1);
    return d;
}

void write_chains_jsonl(std::ostream& out, std::span<const Chain> chains) {
    for (const auto& c : chains) {
        for (const auto& d : c.draws) out << draw_to_json(d, c.chain_index).dump() << '\n';
    }
}

std::vector<Chain> read_chains_jsonl(std::istream& in, const RunManifest& manifest) {
    std::vector<Chain> chains;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw std::runtime_error("chain file line " + std::to_string(line_no) + ": " + e.what());
        }
        const int c = j.value("chain", 0);
        if (c < 0) throw std::runtime_error("chain file line " + std::to_string(line_no) + ": bad chain index");
        if (static_cast<int>(chains.size()) <= c) chains.resize(c + 1);
        chains[c].draws.push_back(draw_from_json(j));
    }
    for (std::size_t c = 0; c < chains.size(); ++c) {
        chains[c].spec = manifest.spec;
        chains[c].config = manifest.config;
        chains[c].chain_index = static_cast<int>(c);
        if (c < manifest.chain_seeds.size()) chains[c].seed = manifest.chain_seeds[c];
        for (const auto& d : chains[c].draws) {
            if (d.params.components() != manifest.spec.truncation) {
                throw std::runtime_error("chain file does not match the manifest's truncation level");
            }
        }
    }
    if (chains.empty()) throw std::runtime_error("chain file contains no draws");
    return chains;
}

void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << manifest_to_json(m).dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest " + path);
    try {
        return manifest_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw std::runtime_error("manifest " + path + ": " + e.what());
    }
}

std::vector<Chain> read_chains(const std::string& path, const RunManifest& manifest) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read chain file " + path);
    return read_chains_jsonl(in, manifest);
}

}  // namespace devtox
