#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "precond/errors.hpp"
#include "precond/experiments.hpp"

namespace fs = std::filesystem;
using namespace precond;

namespace {

const char* kFooter = R"(Outputs (written to --out, default output_dir from the config):
  <experiment>_runs.csv    experiment,d,n,mu,preconditioner,chain,seed,status,median_ess,acceptance,step_size
  <experiment>_ess.csv     run_id,preconditioner,d,n,mu,dim,ess,median_flag
                           one row per dimension (median_flag 0) plus one row with dim 0
                           carrying the median over dimensions (median_flag 1)
  <experiment>_timing.csv  run_id,preconditioner,wall_time
  <experiment>_bounds.json array of {kind, inputs, values, certified, note}
  verify_bounds.csv        family,instance,d,preconditioner,check,kappa,bound,status
Failed arms (non-SPD estimate) have status=failed and no ess rows.
Exit codes: 0 success, 1 configuration or parse error, 2 assumption violation, 3 other failure.)";

struct Options {
    std::string config;
    std::string preset;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    bool paper_scale = false;
};

ExperimentConfig resolve(const Options& o, const std::string& fallback_preset) {
    ExperimentConfig cfg;
    if (!o.config.empty()) cfg = load_config(o.config);
    else if (!o.preset.empty()) cfg = preset(o.preset);
    else if (!fallback_preset.empty()) cfg = preset(fallback_preset);
    else throw ConfigError("either --config or --preset is required");
    if (!o.config.empty() && !o.preset.empty()) {
        auto p = preset(o.preset);
        p.master_seed = cfg.master_seed;
        p.output_dir = cfg.output_dir;
        p.threads = cfg.threads;
        cfg = p;
    }
    if (o.seed_set) cfg.master_seed = o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.paper_scale) cfg = paper_scale(cfg);
    validate(cfg);
    return cfg;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    return os;
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

int run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    if (cfg.experiment == "counterproductive") res = run_counterproductive(cfg);
    else if (cfg.experiment == "hyperbolic") res = run_hyperbolic(cfg);
    else if (cfg.experiment == "binomial") res = run_binomial(cfg);
    else throw ConfigError("'experiment' runs counterproductive, hyperbolic or binomial, not " + cfg.experiment);
    auto dir = prepare_dir(cfg.output_dir);
    const std::string stem = cfg.experiment;
    { auto os = open_out(dir / (stem + "_runs.csv")); write_runs_csv(os, res.rows); }
    { auto os = open_out(dir / (stem + "_ess.csv")); write_ess_csv(os, res.rows); }
    { auto os = open_out(dir / (stem + "_timing.csv")); write_timing_csv(os, res.rows); }
    { auto os = open_out(dir / (stem + "_bounds.json")); os << bounds_json(res.bound_rows) << '\n'; }
    for (const auto& n : res.notes) std::cout << n << '\n';
    std::cout << res.rows.size() << " runs written to " << dir.string() << '\n';
    return 0;
}

int run_verify(const ExperimentConfig& cfg) {
    auto res = run_verify_bounds(cfg);
    auto dir = prepare_dir(cfg.output_dir);
    { auto os = open_out(dir / "verify_bounds.csv"); write_verify_csv(os, res); }
    std::cout << res.rows.size() << " checks, " << res.violations() << " violations\n";
    return 0;
}

int run_analyze(const ExperimentConfig& cfg) {
    auto model = load_model(cfg.model_file);
    auto out = analyze(model, cfg.preconditioner, cfg.master_seed);
    std::cout << out.text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear preconditioning for MCMC: condition numbers, bounds and experiments", "precond"};
    app.footer(kFooter);
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON configuration file");
        sub->add_option("--preset", o.preset, "named preset")->check(CLI::IsMember(preset_names()));
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed = s; o.seed_set = true; },
                                                "master seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("--paper-scale", o.paper_scale, "restore full-scale settings");
    };
    auto* an = app.add_subcommand("analyze", "print condition numbers and bounds for a model file");
    auto* ex = app.add_subcommand("experiment", "run a counterproductive, hyperbolic or binomial experiment");
    auto* vb = app.add_subcommand("verify-bounds", "run the bound-verification sweep");
    for (auto* s : {an, ex, vb}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        if (an->parsed()) {
            auto cfg = resolve(o, "");
            if (cfg.experiment != "analyze") throw ConfigError("analyze needs a config with experiment \"analyze\"");
            return run_analyze(cfg);
        }
        if (ex->parsed()) return run_experiment(resolve(o, ""));
        auto cfg = resolve(o, "verify-bounds");
        if (cfg.experiment != "verify-bounds") throw ConfigError("verify-bounds needs experiment \"verify-bounds\"");
        return run_verify(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const AssumptionViolation& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return 2;
    } catch (const DefinitenessError& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
