#include "devtox/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace devtox {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(std::string_view field, int line, const char* column) {
    T value{};
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (field.empty() || res.ec != std::errc() || res.ptr != end) {
        fail(line, std::string("malformed ") + column + " value '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
    std::string line;
    int line_no = 0;
    bool have_header = false;
    std::vector<DamRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto fields = split_commas(view);
        if (!have_header) {
            const std::vector<std::string_view> expected{"dose", "m", "R", "y"};
            if (fields != expected) fail(line_no, "expected header 'dose,m,R,y'");
            have_header = true;
            continue;
        }
        if (fields.size() != 4) {
            fail(line_no, "expected 4 columns, found " + std::to_string(fields.size()));
        }
        DamRecord r;
        r.dose = parse_number<double>(fields[0], line_no, "dose");
        r.m = parse_number<int>(fields[1], line_no, "m");
        r.R = parse_number<int>(fields[2], line_no, "R");
        r.y = parse_number<int>(fields[3], line_no, "y");
        try {
            validate_record(r);
        } catch (const std::invalid_argument& e) {
            fail(line_no, e.what());
        }
        records.push_back(r);
    }
    if (!have_header) throw std::runtime_error("empty dataset: no header row");
    if (records.empty()) throw std::runtime_error("dataset has a header but no rows");
    return Dataset(std::move(records));
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path);
    try {
        return parse_dataset(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "dose,m,R,y\n";
    for (const auto& r : data.records()) {
        out << format_double(r.dose) << ',' << r.m << ',' << r.R << ',' << r.y << '\n';
    }
}

void write_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_dataset(out, data);
}

void write_truth_csv(std::ostream& out, const TruthCurves& truth) {
    out << "quantity,dose,value\n";
    const std::array<std::pair<const char*, const std::vector<double>*>, 3> curves{
        {{"D", &truth.D}, {"M", &truth.M}, {"r", &truth.r}}};
    for (const auto& [name, v] : curves) {
        for (std::size_t g = 0; g < truth.grid.size(); ++g) {
            out << name << ',' << format_double(truth.grid[g]) << ',' << format_double((*v)[g]) << '\n';
        }
    }
    for (int c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < truth.corr_doses.size() && k < truth.corr[c].size(); ++k) {
            out << "corr" << c + 1 << ',' << format_double(truth.corr_doses[k]) << ','
                << format_double(truth.corr[c][k]) << '\n';
        }
    }
}

// ---- first design --------------------------------------------------------------

namespace {

void check_design(const std::vector<double>& doses, int n_dams, double implant_mean) {
    if (doses.empty()) throw std::invalid_argument("simulation needs at least one dose level");
    for (double d : doses) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("dose levels must be nonnegative");
    }
    if (n_dams < 1) throw std::invalid_argument("n_dams must be >= 1");
    if (!(implant_mean >= 1.0)) throw std::invalid_argument("implant_mean must be >= 1");
}

}  // namespace

void Sim1Config::validate() const {
    check_design(doses, n_dams, implant_mean);
    for (double d : doses) {
        for (int j = 0; j < 2; ++j) {
            if (!(sigma2(j, d) > 0.0)) {
                throw std::invalid_argument("sigma^2(x) must be positive at every design dose");
            }
        }
    }
}

std::array<double, 3> Sim1Config::weights(double x) const {
    const double p1 = normal_cdf(a[0](0) + a[0](1) * x);
    const double p2 = normal_cdf(a[1](0) + a[1](1) * x);
    return {p1, (1.0 - p1) * p2, (1.0 - p1) * (1.0 - p2)};
}

TruthCurves sim1_truth(const Sim1Config& cfg, std::span<const double> grid) {
    TruthCurves t;
    t.grid.assign(grid.begin(), grid.end());
    for (double x : grid) {
        const auto w = cfg.weights(x);
        double d = 0.0, surv = 0.0, surv_mal = 0.0, normal = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double e1 = logit_normal_integral(cfg.theta(0, k, x), std::max(cfg.sigma2(0, x), 0.0));
            const double e2 = logit_normal_integral(cfg.theta(1, k, x), std::max(cfg.sigma2(1, x), 0.0));
            d += w[k] * e1;
            surv += w[k] * (1.0 - e1);
            surv_mal += w[k] * (1.0 - e1) * e2;
            normal += w[k] * (1.0 - e1) * (1.0 - e2);
        }
        t.D.push_back(d);
        t.M.push_back(surv_mal / surv);
        t.r.push_back(1.0 - normal);
    }
    return t;
}

SimulationResult simulate_sim1(const Sim1Config& cfg, Rng& rng, std::span<const double> grid) {
    cfg.validate();
    SimulationResult out;
    std::vector<DamRecord> records;
    const int levels = static_cast<int>(cfg.doses.size());
    for (int i = 0; i < cfg.n_dams; ++i) {
        // Even split in contiguous dose blocks.
        const double x = cfg.doses[static_cast<std::size_t>(i) * levels / cfg.n_dams];
        const auto w = cfg.weights(x);
        const double u = rng.uniform();
        const int k = u < w[0] ? 0 : (u < w[0] + w[1] ? 1 : 2);
        DamRecord r;
        r.dose = x;
        r.m = sample_shifted_poisson(cfg.implant_mean - 1.0, rng);
        const double psi1 = rng.normal(cfg.theta(0, k, x), std::sqrt(cfg.sigma2(0, x)));
        r.R = rng.binomial(r.m, logistic(psi1));
        const double psi2 = rng.normal(cfg.theta(1, k, x), std::sqrt(cfg.sigma2(1, x)));
        r.y = rng.binomial(r.m - r.R, logistic(psi2));
        records.push_back(r);
        out.labels.push_back(k);
    }
    out.data = Dataset(std::move(records));
    out.truth = sim1_truth(cfg, grid);
    return out;
}

// ---- second design -------------------------------------------------------------

void Sim2Config::validate() const {
    check_design(doses, n_dams, implant_mean);
    for (double d : doses) {
        for (int j = 0; j < 2; ++j) {
            if (!(lambda(j, d) > 0.0)) throw std::invalid_argument("lambda(x) must be positive at every design dose");
        }
    }
}

double sim2_true_corr(const Sim2Config& cfg, double dose, int category) {
    if (category < 1 || category > 3) throw std::invalid_argument("category must be 1, 2 or 3");
    const double t1 = cfg.theta(0, dose), t2 = cfg.theta(1, dose);
    const double l1 = cfg.lambda(0, dose), l2 = cfg.lambda(1, dose);
    // Probability that one implant (m = 1), and both implants of a pair
    // (m = 2), fall in the category.
    double single = 0.0, pair = 0.0;
    switch (category) {
        case 1:
            single = bb_pmf(1, 1, t1, l1);
            pair = bb_pmf(2, 2, t1, l1);
            break;
        case 2:
            single = bb_pmf(0, 1, t1, l1) * bb_pmf(1, 1, t2, l2);
            pair = bb_pmf(0, 2, t1, l1) * bb_pmf(2, 2, t2, l2);
            break;
        case 3:
            single = bb_pmf(0, 1, t1, l1) * bb_pmf(0, 1, t2, l2);
            pair = bb_pmf(0, 2, t1, l1) * bb_pmf(0, 2, t2, l2);
            break;
    }
    return (pair - single * single) / (single - single * single);
}

TruthCurves sim2_truth(const Sim2Config& cfg, std::span<const double> grid) {
    TruthCurves t;
    t.grid.assign(grid.begin(), grid.end());
    for (double x : grid) {
        const double d = logistic(cfg.theta(0, x));
        const double m = logistic(cfg.theta(1, x));
        t.D.push_back(d);
        t.M.push_back(m);
        t.r.push_back(1.0 - (1.0 - d) * (1.0 - m));
    }
    t.corr_doses = cfg.doses;
    for (int c = 0; c < 3; ++c) {
        for (double x : cfg.doses) t.corr[c].push_back(sim2_true_corr(cfg, x, c + 1));
    }
    return t;
}

SimulationResult simulate_sim2(const Sim2Config& cfg, Rng& rng, std::span<const double> grid) {
    cfg.validate();
    SimulationResult out;
    std::vector<DamRecord> records;
    const int levels = static_cast<int>(cfg.doses.size());
    for (int i = 0; i < cfg.n_dams; ++i) {
        const double x = cfg.doses[std::min(levels - 1, static_cast<int>(rng.uniform() * levels))];
        DamRecord r;
        r.dose = x;
        r.m = sample_shifted_poisson(cfg.implant_mean - 1.0, rng);
        const double mean1 = logistic(cfg.theta(0, x));
        const double mean2 = logistic(cfg.theta(1, x));
        const double l1 = cfg.lambda(0, x), l2 = cfg.lambda(1, x);
        r.R = rng.binomial(r.m, rng.beta(l1 * mean1, l1 * (1.0 - mean1)));
        r.y = rng.binomial(r.m - r.R, rng.beta(l2 * mean2, l2 * (1.0 - mean2)));
        records.push_back(r);
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const DamRecord& p, const DamRecord& q) { return p.dose < q.dose; });
    out.data = Dataset(std::move(records));
    out.truth = sim2_truth(cfg, grid);
    return out;
}

// ---- configs ---------------------------------------------------------------------

namespace {

Json v2(const Vec2& v) { return Json::array({v(0), v(1)}); }
Vec2 v2_from(const Json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

}  // namespace

Json to_json(const Sim1Config& cfg) {
    Json j;
    j["design"] = "sim1";
    j["doses"] = cfg.doses;
    j["n_dams"] = cfg.n_dams;
    j["implant_mean"] = cfg.implant_mean;
    Json b = Json::array();
    for (int s = 0; s < 2; ++s) {
        Json stage = Json::array();
        for (int k = 0; k < 3; ++k) stage.push_back(v2(cfg.b[s][k]));
        b.push_back(std::move(stage));
    }
    j["b"] = std::move(b);
    j["a"] = Json::array({v2(cfg.a[0]), v2(cfg.a[1])});
    j["c"] = Json::array({v2(cfg.c[0]), v2(cfg.c[1])});
    return j;
}

Json to_json(const Sim2Config& cfg) {
    Json j;
    j["design"] = "sim2";
    j["doses"] = cfg.doses;
    j["n_dams"] = cfg.n_dams;
    j["implant_mean"] = cfg.implant_mean;
    j["b"] = Json::array({v2(cfg.b[0]), v2(cfg.b[1])});
    j["c"] = Json::array({v2(cfg.c[0]), v2(cfg.c[1])});
    return j;
}

Sim1Config sim1_from_json(const Json& j) {
    Sim1Config cfg;
    if (j.contains("doses")) cfg.doses = j["doses"].get<std::vector<double>>();
    if (j.contains("n_dams")) cfg.n_dams = j["n_dams"].get<int>();
    if (j.contains("implant_mean")) cfg.implant_mean = j["implant_mean"].get<double>();
    for (int s = 0; s < 2; ++s) {
        if (j.contains("b")) {
            for (int k = 0; k < 3; ++k) cfg.b[s][k] = v2_from(j["b"].at(s).at(k));
        }
        if (j.contains("a")) cfg.a[s] = v2_from(j["a"].at(s));
        if (j.contains("c")) cfg.c[s] = v2_from(j["c"].at(s));
    }
    cfg.validate();
    return cfg;
}

Sim2Config sim2_from_json(const Json& j) {
    Sim2Config cfg;
    if (j.contains("doses")) cfg.doses = j["doses"].get<std::vector<double>>();
    if (j.contains("n_dams")) cfg.n_dams = j["n_dams"].get<int>();
    if (j.contains("implant_mean")) cfg.implant_mean = j["implant_mean"].get<double>();
    for (int s = 0; s < 2; ++s) {
        if (j.contains("b")) cfg.b[s] = v2_from(j["b"].at(s));
        if (j.contains("c")) cfg.c[s] = v2_from(j["c"].at(s));
    }
    cfg.validate();
    return cfg;
}

}  // namespace devtox
