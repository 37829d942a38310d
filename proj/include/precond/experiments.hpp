#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "precond/conditioning.hpp"
#include "precond/model_io.hpp"
#include "precond/samplers.hpp"

namespace precond {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string experiment;  // counterproductive | hyperbolic | binomial | verify-bounds | analyze
    std::vector<int> dims;
    std::vector<int> n_multipliers;
    std::vector<double> mu_list;
    int chains_per_cell = 5;
    long burn_in = 10000;
    long measure = 10000;
    long long_run = 100000;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    int instances = 100;
    std::string model_file;
    std::string preconditioner = "identity";
    unsigned threads = 0;
};

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);
// Desk presets map to their full-scale counterpart.
ExperimentConfig paper_scale(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

struct ResultRow {
    std::string experiment;
    int d = 0;
    int n = 0;
    double mu = 0;
    std::string arm;
    int chain = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";  // ok | failed
    double median_ess = 0;
    Vector ess;
    double acceptance = 0;
    double step_size = 0;
    double wall_time = 0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<BoundReport> bound_rows;
    std::vector<std::string> notes;

    std::vector<double> median_ess(const std::string& arm, int d = -1, int n = -1, double mu = -1) const;
    std::vector<double> dim_ess(const std::string& arm, int dim) const;
};

// Deterministic order: (d, n, mu, arm, chain).
void sort_rows(std::vector<ResultRow>& rows);

ExperimentResult run_counterproductive(const ExperimentConfig& cfg);
ExperimentResult run_hyperbolic(const ExperimentConfig& cfg);
ExperimentResult run_binomial(const ExperimentConfig& cfg);

struct VerifyRow {
    std::string family;
    int instance = 0;
    int d = 0;
    std::string preconditioner;
    std::string check;
    double kappa = 0;
    double bound = 0;
    std::string status;  // pass | fail | inapplicable
};
struct VerifyResult {
    std::vector<VerifyRow> rows;
    long violations() const;
    long count(const std::string& family, const std::string& check, const std::string& status) const;
};
VerifyResult run_verify_bounds(const ExperimentConfig& cfg);

struct AnalyzeOutput {
    KappaResult kappa;
    KappaResult kappa_L;
    EigenStructureParams params;
    double eps_eigenvalue = 0;
    std::vector<BoundReport> bounds;
    std::string text;
};
AnalyzeOutput analyze(const ModelSpec& model, const std::string& preconditioner_spec, std::uint64_t seed = 1);
Preconditioner resolve_preconditioner(const std::string& spec, const DifferentiableTarget& target,
                                      const ModelSpec& model);

// Long-format CSV writers and readers.
void write_runs_csv(std::ostream& os, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_runs_csv(std::istream& is);
void write_ess_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_timing_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_verify_csv(std::ostream& os, const VerifyResult& res);
std::string bounds_json(const std::vector<BoundReport>& reports);

// Runs tasks [0, n) on a pool; results are indexed, so scheduling never
// changes them.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace precond
