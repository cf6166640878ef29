#include "devtox/cli.hpp"

#include "devtox/assess.hpp"
#include "devtox/chain_io.hpp"
#include "devtox/data.hpp"
#include "devtox/diagnostics.hpp"
#include "devtox/inference.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace devtox {

namespace fs = std::filesystem;

namespace {

struct FitOptions {
    std::string model = "Gen-LNB";
    int truncation = 50;
    McmcConfig mcmc;
    std::string hyper_file;
    double a_sigma = 0.0;  // 0 = keep default
    double b_sigma = 0.0;
    double sigma2_v = 0.0;  // elicitation target, 0 = unused
    double sigma2_a = 3.0;
};

struct Options {
    std::string out_dir = ".";
    // simulate
    std::string design = "sim1";
    std::string sim_config;
    std::uint64_t seed = 1;
    int grid_points = 26;
    // fit / compare
    std::string data_path;
    FitOptions fit;
    std::vector<std::string> models{"CW-Bin", "Gen-Bin", "CW-LNB", "Gen-LNB"};
    double cv_fraction = 0.2;
    // consumers of a fit
    std::string fit_dir = ".";
    std::vector<double> bmrs{0.05, 0.10};
    double search_max = 0.0;
    std::vector<double> doses;
    std::vector<double> new_doses{3.75};
    int pmf_m = 12;
    int pmf_R = 2;
    double dose = -1.0;
};

void add_fit_options(CLI::App* sub, FitOptions& f) {
    sub->add_option("--model", f.model, "CR-logits, CR-BB, CR-LNB, CW-Bin, Gen-Bin, CW-LNB or Gen-LNB")
        ->capture_default_str();
    sub->add_option("--truncation,-L", f.truncation, "truncation level of the mixture models")
        ->capture_default_str();
    sub->add_option("--n-iter", f.mcmc.n_iter)->capture_default_str();
    sub->add_option("--burn-in", f.mcmc.burn_in)->capture_default_str();
    sub->add_option("--thin", f.mcmc.thin)->capture_default_str();
    sub->add_option("--chains", f.mcmc.n_chains)->capture_default_str();
    sub->add_option("--hyper", f.hyper_file, "JSON file overriding default hyperparameters");
    sub->add_option("--a-sigma", f.a_sigma, "inverse-Gamma shape of sigma^2");
    sub->add_option("--b-sigma", f.b_sigma, "inverse-Gamma scale of sigma^2");
    sub->add_option("--sigma2-extra-variance", f.sigma2_v,
                    "elicit the sigma^2 prior from a target extra variance in (0,1)");
    sub->add_option("--sigma2-shape", f.sigma2_a, "shape used with --sigma2-extra-variance")
        ->capture_default_str();
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_run_record(const Options& opt, const std::string& command, const std::vector<std::string>& args) {
    Json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["arguments"] = args;
    j["seed"] = opt.seed;
    std::ofstream out(fs::path(opt.out_dir) / ("run_" + command + ".json"));
    out << j.dump(2) << '\n';
}

std::ofstream open_out(const Options& opt, const std::string& name) {
    std::ofstream out(fs::path(opt.out_dir) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(opt.out_dir) / name).string());
    return out;
}

struct ResolvedFit {
    ModelSpec spec;
    Hyperparameters hyper;
    RunManifest manifest;
};

ResolvedFit resolve_fit(const FitOptions& f, const Dataset& data, std::uint64_t seed) {
    ResolvedFit r;
    r.spec = ModelSpec::from_name(f.model, f.truncation);
    r.spec.validate();
    r.hyper = default_hyperparameters(data.max_dose() > 0.0 ? data.max_dose() : 1.0);
    if (!f.hyper_file.empty()) r.hyper = hyper_from_json(read_json_file(f.hyper_file), r.hyper);
    r.manifest.sigma2_prior_source = f.hyper_file.empty() ? "default" : "file";
    if (f.sigma2_v > 0.0) {
        const auto ig = elicit_sigma2_prior(f.sigma2_v, f.sigma2_a);
        r.hyper.a_sigma = ig.shape;
        r.hyper.b_sigma = ig.scale;
        r.manifest.sigma2_prior_source = "elicited";
        r.manifest.elicited_extra_variance = f.sigma2_v;
    }
    if (f.a_sigma > 0.0) r.hyper.a_sigma = f.a_sigma;
    if (f.b_sigma > 0.0) {
        r.hyper.b_sigma = f.b_sigma;
        r.manifest.sigma2_prior_source = "direct";
    }
    r.hyper.validate();
    McmcConfig cfg = f.mcmc;
    cfg.seed = seed;
    cfg.validate();
    r.manifest.spec = r.spec;
    r.manifest.hyper = r.hyper;
    r.manifest.config = cfg;
    r.manifest.dose_levels = data.dose_levels();
    r.manifest.max_dose = data.max_dose();
    r.manifest.n_dams = static_cast<int>(data.size());
    r.manifest.retained_draws = cfg.retained();
    return r;
}

std::vector<Chain> run_fit(ResolvedFit& r, const Dataset& data) {
    const auto start = std::chrono::steady_clock::now();
    auto chains = fit_chains(r.spec, data, r.hyper, r.manifest.config);
    r.manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.manifest.chain_seeds.clear();
    for (const auto& c : chains) r.manifest.chain_seeds.push_back(c.seed);
    return chains;
}

struct LoadedFit {
    RunManifest manifest;
    std::vector<Chain> chains;
    Chain pooled;  // all chains concatenated
};

LoadedFit load_fit(const Options& opt) {
    LoadedFit f;
    const fs::path dir(opt.fit_dir);
    f.manifest = read_manifest((dir / "manifest.json").string());
    f.chains = read_chains((dir / "chain.jsonl").string(), f.manifest);
    f.pooled.spec = f.manifest.spec;
    f.pooled.config = f.manifest.config;
    for (const auto& c : f.chains) f.pooled.draws.insert(f.pooled.draws.end(), c.draws.begin(), c.draws.end());
    return f;
}

double default_search_max(const Options& opt, const RunManifest& m) {
    if (opt.search_max > 0.0) return opt.search_max;
    return 1.5 * (m.max_dose > 0.0 ? m.max_dose : 1.0);
}

// ---- subcommands -------------------------------------------------------------

int cmd_simulate(const Options& opt, std::ostream& out) {
    Rng rng(opt.seed);
    SimulationResult sim;
    Json cfg_json;
    if (opt.design == "sim1") {
        const Sim1Config cfg = opt.sim_config.empty() ? Sim1Config{} : sim1_from_json(read_json_file(opt.sim_config));
        const double hi = *std::max_element(cfg.doses.begin(), cfg.doses.end());
        sim = simulate_sim1(cfg, rng, linear_grid(0.0, hi, opt.grid_points));
        cfg_json = to_json(cfg);
    } else if (opt.design == "sim2") {
        const Sim2Config cfg = opt.sim_config.empty() ? Sim2Config{} : sim2_from_json(read_json_file(opt.sim_config));
        const double hi = *std::max_element(cfg.doses.begin(), cfg.doses.end());
        sim = simulate_sim2(cfg, rng, linear_grid(0.0, hi, opt.grid_points));
        cfg_json = to_json(cfg);
    } else {
        throw std::invalid_argument("--design must be sim1 or sim2");
    }
    {
        auto f = open_out(opt, "data.csv");
        write_dataset(f, sim.data);
    }
    {
        auto f = open_out(opt, "truth.csv");
        write_truth_csv(f, sim.truth);
    }
    {
        auto f = open_out(opt, "sim_config.json");
        f << cfg_json.dump(2) << '\n';
    }
    out << "simulated " << sim.data.size() << " dams (" << opt.design << ") into " << opt.out_dir << '\n';
    return 0;
}

int cmd_fit(const Options& opt, std::ostream& out) {
    const Dataset data = read_dataset(opt.data_path);
    ResolvedFit r = resolve_fit(opt.fit, data, opt.seed);
    r.manifest.data_path = opt.data_path;
    const auto chains = run_fit(r, data);
    {
        auto f = open_out(opt, "chain.jsonl");
        write_chains_jsonl(f, chains);
    }
    write_manifest((fs::path(opt.out_dir) / "manifest.json").string(), r.manifest);
    out << r.spec.name() << ": " << chains.size() << " chain(s) x " << r.manifest.retained_draws
        << " retained draws in " << r.manifest.wall_time_seconds << " s\n";
    if (chains.front().acceptance) {
        out << "acceptance rates:";
        for (double a : chains.front().acceptance->rates) out << ' ' << format_double(a);
        out << '\n';
    }
    return 0;
}

int cmd_risk(const Options& opt, std::ostream& out) {
    const LoadedFit f = load_fit(opt);
    RiskOptions ro;
    ro.bmrs = opt.bmrs;
    ro.search_max = default_search_max(opt, f.manifest);
    ro.grid = linear_grid(0.0, f.manifest.max_dose, opt.grid_points);
    const RiskSummary risk = compute_risk(f.pooled, ro);
    {
        auto c = open_out(opt, "curves.csv");
        c << "draw,dose,D,M,r\n";
        for (std::size_t d = 0; d < risk.curves.values.size(); ++d) {
            for (std::size_t g = 0; g < risk.curves.grid.size(); ++g) {
                const auto& v = risk.curves.values[d][g];
                c << d << ',' << format_double(risk.curves.grid[g]) << ',' << format_double(v.D) << ','
                  << (v.M_defined ? format_double(v.M) : std::string("NA")) << ',' << format_double(v.r) << '\n';
            }
        }
    }
    {
        auto c = open_out(opt, "curve_bands.csv");
        c << "endpoint,dose,mean,lower,upper\n";
        for (Endpoint e : kEndpoints) {
            const auto band = curve_band(risk.curves, e);
            for (std::size_t g = 0; g < risk.curves.grid.size(); ++g) {
                c << to_string(e) << ',' << format_double(risk.curves.grid[g]) << ',' << format_double(band.mean[g])
                  << ',' << format_double(band.lower[g]) << ',' << format_double(band.upper[g]) << '\n';
            }
        }
    }
    {
        auto c = open_out(opt, "ed_samples.csv");
        c << "endpoint,bmr,index,ed,residual\n";
        for (const auto& s : risk.ed) {
            for (std::size_t k = 0; k < s.samples.size(); ++k) {
                c << to_string(s.endpoint) << ',' << format_double(s.bmr) << ',' << k << ','
                  << format_double(s.samples[k]) << ',' << format_double(s.residuals[k]) << '\n';
            }
        }
    }
    auto c = open_out(opt, "bmd.csv");
    c << "model,endpoint,bmr,bmd,ed_median,censored,total,censored_fraction,unreliable\n";
    out << "model      endpoint  BMR    BMD\n";
    for (const auto& s : risk.ed) {
        const std::string med = s.samples.empty() ? "NA" : format_double(quantile_type7(s.samples, 0.5));
        c << f.manifest.spec.name() << ',' << to_string(s.endpoint) << ',' << format_double(s.bmr) << ','
          << (s.samples.empty() ? std::string("NA") : format_double(s.bmd)) << ',' << med << ',' << s.censored
          << ',' << s.total << ',' << format_double(s.censored_fraction()) << ',' << (s.unreliable ? 1 : 0)
          << '\n';
        out << f.manifest.spec.name() << "  " << to_string(s.endpoint) << "  " << s.bmr << "  "
            << (s.samples.empty() ? std::string("NA") : format_double(s.bmd)) << (s.unreliable ? " (unreliable)" : "")
            << '\n';
    }
    return 0;
}

int cmd_corr(const Options& opt, std::ostream& out) {
    const LoadedFit f = load_fit(opt);
    const std::vector<double> doses = opt.doses.empty() ? f.manifest.dose_levels : opt.doses;
    const auto cd = correlation_draws(f.pooled, doses);
    auto draws = open_out(opt, "corr_draws.csv");
    auto summary = open_out(opt, "corr_summary.csv");
    draws << "category,dose,draw,corr\n";
    summary << "category,dose,mean,lower,upper,undefined\n";
    for (int c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < doses.size(); ++k) {
            std::vector<double> ok;
            const auto& v = cd.values[c][k];
            for (std::size_t d = 0; d < v.size(); ++d) {
                draws << c + 1 << ',' << format_double(doses[k]) << ',' << d << ','
                      << (std::isfinite(v[d]) ? format_double(v[d]) : std::string("NA")) << '\n';
                if (std::isfinite(v[d])) ok.push_back(v[d]);
            }
            summary << c + 1 << ',' << format_double(doses[k]) << ',';
            if (ok.empty()) {
                summary << "NA,NA,NA,";
            } else {
                double s = 0.0;
                for (double x : ok) s += x;
                summary << format_double(s / ok.size()) << ',' << format_double(quantile_type7(ok, 0.025)) << ','
                        << format_double(quantile_type7(ok, 0.975)) << ',';
            }
            summary << v.size() - ok.size() << '\n';
        }
    }
    out << "correlations for " << doses.size() << " dose(s) written to " << opt.out_dir << '\n';
    return 0;
}

void write_pmf_summary(std::ostream& out, const std::vector<std::vector<double>>& draws) {
    out << "k,mean,lower,upper\n";
    if (draws.empty()) return;
    for (std::size_t k = 0; k < draws.front().size(); ++k) {
        std::vector<double> v;
        double s = 0.0;
        for (const auto& d : draws) {
            v.push_back(d[k]);
            s += d[k];
        }
        out << k << ',' << format_double(s / v.size()) << ',' << format_double(quantile_type7(v, 0.025)) << ','
            << format_double(quantile_type7(v, 0.975)) << '\n';
    }
}

int cmd_predict(const Options& opt, std::ostream& out) {
    const LoadedFit f = load_fit(opt);
    const Dataset data = read_dataset(opt.data_path.empty() ? f.manifest.data_path : opt.data_path);
    const ImplantModel implant = fit_implant_model(data);
    if (implant.floored) out << "warning: implant rate floored at 1e-6 (all m = 1)\n";
    std::vector<double> doses = opt.doses.empty() ? data.dose_levels() : opt.doses;
    Rng rng(opt.seed);
    const auto pred = posterior_predictive(f.pooled, doses, implant, rng);
    {
        auto c = open_out(opt, "predictive.csv");
        c << "dose,draw,m,R,y\n";
        for (std::size_t k = 0; k < pred.doses.size(); ++k) {
            for (std::size_t d = 0; d < pred.samples[k].size(); ++d) {
                const auto& s = pred.samples[k][d];
                c << format_double(pred.doses[k]) << ',' << d << ',' << s.m << ',' << s.R << ',' << s.y << '\n';
            }
        }
    }
    std::vector<double> pmf_doses = opt.new_doses;
    if (pmf_doses.empty()) pmf_doses = data.dose_levels();
    auto pr = open_out(opt, "pmf_R.csv");
    auto py = open_out(opt, "pmf_y.csv");
    pr << "dose,m,R,mean,lower,upper\n";
    py << "dose,m,R,y,mean,lower,upper,failed_draws\n";
    for (double x : pmf_doses) {
        const auto pm = conditional_pmfs(f.pooled, x, opt.pmf_m, opt.pmf_R);
        std::ostringstream s1, s2;
        write_pmf_summary(s1, pm.pr_R);
        write_pmf_summary(s2, pm.pr_y);
        std::istringstream l1(s1.str()), l2(s2.str());
        std::string line;
        std::getline(l1, line);
        while (std::getline(l1, line)) pr << format_double(x) << ',' << opt.pmf_m << ',' << line << '\n';
        std::getline(l2, line);
        while (std::getline(l2, line)) {
            py << format_double(x) << ',' << opt.pmf_m << ',' << opt.pmf_R << ',' << line << ',' << pm.failed << '\n';
        }
    }
    out << "predictive draws at " << doses.size() << " dose(s); implant rate " << format_double(implant.rate) << '\n';
    return 0;
}

int cmd_compare(const Options& opt, std::ostream& out) {
    const Dataset data = read_dataset(opt.data_path);
    Rng split_rng(derive_seed(opt.seed, 1000));
    const CvSplit split = cv_split(data, opt.cv_fraction, split_rng);
    {
        auto f = open_out(opt, "split_train.csv");
        write_dataset(f, split.train);
    }
    {
        auto f = open_out(opt, "split_test.csv");
        write_dataset(f, split.test);
    }
    ComparisonReport report;
    report.fraction = opt.cv_fraction;
    report.n_train = static_cast<int>(split.train.size());
    report.n_test = static_cast<int>(split.test.size());
    const ImplantModel implant = fit_implant_model(split.train);
    for (std::size_t k = 0; k < opt.models.size(); ++k) {
        FitOptions fo = opt.fit;
        fo.model = opt.models[k];
        ResolvedFit r = resolve_fit(fo, split.train, derive_seed(opt.seed, k));
        const auto chains = run_fit(r, split.train);
        Chain pooled;
        pooled.spec = r.spec;
        for (const auto& c : chains) pooled.draws.insert(pooled.draws.end(), c.draws.begin(), c.draws.end());
        Rng rng(derive_seed(opt.seed, 2000 + k));
        const auto pred = posterior_predictive(pooled, split.train.dose_levels(), implant, rng);
        for (auto& row : compare_endpoints(r.spec.name(), split.test, pred)) report.rows.push_back(row);
        out << r.spec.name() << " fitted in " << r.manifest.wall_time_seconds << " s\n";
    }
    auto f = open_out(opt, "comparison.csv");
    write_comparison(f, report);
    write_comparison(out, report);
    return 0;
}

int cmd_diagnose(const Options& opt, std::ostream& out) {
    const LoadedFit f = load_fit(opt);
    double dose = opt.dose;
    if (dose < 0.0) {
        const auto& lv = f.manifest.dose_levels;
        dose = lv.empty() ? 0.0 : lv[lv.size() / 2];
    }
    const Diagnostics diag = diagnostics(f.chains, dose);
    {
        auto c = open_out(opt, "traces.csv");
        c << "name,chain,draw,value\n";
        for (std::size_t t = 0; t < diag.names.size(); ++t) {
            for (std::size_t ch = 0; ch < diag.traces[t].size(); ++ch) {
                const auto& v = diag.traces[t][ch];
                for (std::size_t d = 0; d < v.size(); ++d) {
                    c << diag.names[t] << ',' << ch << ',' << d << ',' << format_double(v[d]) << '\n';
                }
            }
        }
    }
    auto c = open_out(opt, "convergence.csv");
    c << "name,mean,sd,ess,rhat,degenerate\n";
    for (const auto& s : diag.summaries) {
        c << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ',' << format_double(s.ess)
          << ',' << format_double(s.rhat) << ',' << (s.degenerate ? 1 : 0) << '\n';
        out << s.name << ": ess " << s.ess << ", rhat " << s.rhat << (s.degenerate ? " (constant)" : "") << '\n';
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian nonparametric mixture models for clustered developmental toxicity data", "devtox"};
    app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;

    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset and its true curves");
    sim->add_option("--design", opt.design, "sim1 or sim2")->capture_default_str();
    sim->add_option("--sim-config", opt.sim_config, "JSON file with simulator coefficients");
    sim->add_option("--grid-points", opt.grid_points)->capture_default_str();

    auto* fit_cmd = app.add_subcommand("fit", "run the sampler and write chain.jsonl + manifest.json");
    fit_cmd->add_option("--data", opt.data_path, "dataset CSV (dose,m,R,y)")->required();
    add_fit_options(fit_cmd, opt.fit);

    auto* risk = app.add_subcommand("risk", "dose-response curves, effective doses and BMDs");
    risk->add_option("--bmr", opt.bmrs, "benchmark responses")->delimiter(',')->capture_default_str();
    risk->add_option("--grid-points", opt.grid_points)->capture_default_str();
    risk->add_option("--search-max", opt.search_max, "upper dose for effective-dose search (default 1.5 x max dose)");

    auto* corr = app.add_subcommand("corr", "intracluster correlation draws");
    corr->add_option("--doses", opt.doses, "doses (default: observed dose levels)")->delimiter(',');

    auto* pred = app.add_subcommand("predict", "posterior predictive samples and conditional pmfs");
    pred->add_option("--data", opt.data_path, "dataset for the implant model (default: the fitted data)");
    pred->add_option("--doses", opt.doses, "doses for predictive samples")->delimiter(',');
    pred->add_option("--pmf-doses", opt.new_doses, "doses for Pr(R|m) and Pr(y|m,R)")
        ->delimiter(',')
        ->capture_default_str();
    pred->add_option("--m", opt.pmf_m)->capture_default_str();
    pred->add_option("--R", opt.pmf_R)->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "hold-out comparison by posterior predictive loss and interval score");
    cmp->add_option("--data", opt.data_path)->required();
    cmp->add_option("--models", opt.models)->delimiter(',')->capture_default_str();
    cmp->add_option("--fraction", opt.cv_fraction)->capture_default_str();
    add_fit_options(cmp, opt.fit);

    auto* diag = app.add_subcommand("diagnose", "trace plots data and convergence statistics");
    diag->add_option("--dose", opt.dose, "dose for weight and curve traces (default: middle dose level)");

    for (auto* sub : {sim, fit_cmd, risk, corr, pred, cmp, diag}) {
        sub->add_option("--out-dir", opt.out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", opt.seed)->capture_default_str();
    }
    for (auto* sub : {risk, corr, pred, diag}) {
        sub->add_option("--fit-dir", opt.fit_dir, "directory holding chain.jsonl and manifest.json")
            ->capture_default_str();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        fs::create_directories(opt.out_dir);
        const std::string command = app.get_subcommands().front()->get_name();
        write_run_record(opt, command, args);
        if (command == "simulate") return cmd_simulate(opt, out);
        if (command == "fit") return cmd_fit(opt, out);
        if (command == "risk") return cmd_risk(opt, out);
        if (command == "corr") return cmd_corr(opt, out);
        if (command == "predict") return cmd_predict(opt, out);
        if (command == "compare") return cmd_compare(opt, out);
        if (command == "diagnose") return cmd_diagnose(opt, out);
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace devtox
