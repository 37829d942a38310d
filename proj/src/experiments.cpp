#include "precond/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "precond/diagnostics.hpp"
#include "precond/fixtures.hpp"

namespace precond {

using json = nlohmann::ordered_json;

namespace {

std::uint64_t seed_of(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = master;
    for (auto k : keys) s = split_seed(s, k);
    return s;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ResultRow make_row(const std::string& exp, int d, int n, double mu, const std::string& arm, int chain,
                   std::uint64_t seed) {
    ResultRow r;
    r.experiment = exp;
    r.d = d;
    r.n = n;
    r.mu = mu;
    r.arm = arm;
    r.chain = chain;
    r.seed = seed;
    return r;
}

void fill_from_trace(ResultRow& r, const Trace& tr) {
    auto rep = ess_report(tr.states);
    r.ess = rep.per_dimension;
    r.median_ess = rep.median;
    r.acceptance = acceptance_rate(tr);
    r.step_size = tr.final_step_size;
}

}  // namespace

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------- config

std::vector<std::string> preset_names() {
    return {"paper-4.1", "desk-4.1", "paper-4.2", "paper-4.2-small", "paper-4.3", "paper-4.3-small",
            "verify-bounds"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    if (name == "paper-4.1" || name == "desk-4.1") {
        c.experiment = "counterproductive";
        c.dims = {5};
        c.chains_per_cell = name == "paper-4.1" ? 100 : 20;
        c.burn_in = 0;
        c.measure = name == "paper-4.1" ? 10000 : 5000;
    } else if (name == "paper-4.2" || name == "paper-4.2-small") {
        c.experiment = "hyperbolic";
        c.dims = name == "paper-4.2" ? std::vector<int>{2, 5, 10, 20, 100} : std::vector<int>{2, 5, 10};
        c.n_multipliers = {1, 5, 20};
        c.chains_per_cell = name == "paper-4.2" ? 15 : 5;
    } else if (name == "paper-4.3" || name == "paper-4.3-small") {
        c.experiment = "binomial";
        c.dims = name == "paper-4.3" ? std::vector<int>{2, 5, 10, 20} : std::vector<int>{2, 5, 10};
        c.mu_list = name == "paper-4.3" ? std::vector<double>{0, 5, 50, 200} : std::vector<double>{0, 200};
        c.chains_per_cell = name == "paper-4.3" ? 15 : 5;
    } else if (name == "verify-bounds") {
        c.experiment = "verify-bounds";
        c.instances = 100;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

ExperimentConfig paper_scale(const ExperimentConfig& cfg) {
    ExperimentConfig full = cfg;
    ExperimentConfig ref;
    if (cfg.experiment == "counterproductive") ref = preset("paper-4.1");
    else if (cfg.experiment == "hyperbolic") ref = preset("paper-4.2");
    else if (cfg.experiment == "binomial") ref = preset("paper-4.3");
    else return full;
    full.dims = ref.dims;
    full.n_multipliers = ref.n_multipliers;
    full.mu_list = ref.mu_list;
    full.chains_per_cell = ref.chains_per_cell;
    full.burn_in = ref.burn_in;
    full.measure = ref.measure;
    full.long_run = ref.long_run;
    return full;
}

void validate(const ExperimentConfig& c) {
    static const std::vector<std::string> kinds = {"counterproductive", "hyperbolic", "binomial", "verify-bounds",
                                                   "analyze"};
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
        throw ConfigError("unknown experiment '" + c.experiment + "'");
    if (c.chains_per_cell < 1 || c.burn_in < 0 || c.measure < 1 || c.long_run < 1 || c.instances < 1)
        throw ConfigError("counts must be >= 1");
    for (int d : c.dims)
        if (d < 1) throw ConfigError("dims must be >= 1");
    for (int m : c.n_multipliers)
        if (m < 1) throw ConfigError("n_multipliers must be >= 1");
    for (double mu : c.mu_list)
        if (mu < 0) throw ConfigError("mu_list entries must be >= 0");
    if (c.experiment == "hyperbolic" && (c.dims.empty() || c.n_multipliers.empty()))
        throw ConfigError("hyperbolic needs dims and n_multipliers");
    if (c.experiment == "binomial" && (c.dims.empty() || c.mu_list.empty()))
        throw ConfigError("binomial needs dims and mu_list");
    if (c.experiment == "analyze" && c.model_file.empty()) throw ConfigError("analyze needs model_file");
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("preset")) c = preset(j["preset"].get<std::string>());
        static const std::vector<std::string> known = {
            "schema_version", "preset", "experiment", "dims", "n_multipliers", "mu_list", "chains_per_cell",
            "burn_in", "measure", "long_run", "master_seed", "output_dir", "instances", "model_file",
            "preconditioner", "threads"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw ConfigError("unknown config key '" + it.key() + "'");
        if (!j.contains("schema_version")) throw ConfigError("config needs schema_version");
        c.schema_version = j["schema_version"].get<int>();
        if (j.contains("experiment")) c.experiment = j["experiment"].get<std::string>();
        if (j.contains("dims")) c.dims = j["dims"].get<std::vector<int>>();
        if (j.contains("n_multipliers")) c.n_multipliers = j["n_multipliers"].get<std::vector<int>>();
        if (j.contains("mu_list")) c.mu_list = j["mu_list"].get<std::vector<double>>();
        if (j.contains("chains_per_cell")) c.chains_per_cell = j["chains_per_cell"].get<int>();
        if (j.contains("burn_in")) c.burn_in = j["burn_in"].get<long>();
        if (j.contains("measure")) c.measure = j["measure"].get<long>();
        if (j.contains("long_run")) c.long_run = j["long_run"].get<long>();
        if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("instances")) c.instances = j["instances"].get<int>();
        if (j.contains("model_file")) c.model_file = j["model_file"].get<std::string>();
        if (j.contains("preconditioner")) c.preconditioner = j["preconditioner"].get<std::string>();
        if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["experiment"] = c.experiment;
    j["dims"] = c.dims;
    j["n_multipliers"] = c.n_multipliers;
    j["mu_list"] = c.mu_list;
    j["chains_per_cell"] = c.chains_per_cell;
    j["burn_in"] = c.burn_in;
    j["measure"] = c.measure;
    j["long_run"] = c.long_run;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    j["instances"] = c.instances;
    if (!c.model_file.empty()) j["model_file"] = c.model_file;
    j["preconditioner"] = c.preconditioner;
    return j.dump(2);
}

// ---------------------------------------------------------------- results

std::vector<double> ExperimentResult::median_ess(const std::string& arm, int d, int n, double mu) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.arm == arm && (d < 0 || r.d == d) && (n < 0 || r.n == n) && (mu < 0 || r.mu == mu))
            out.push_back(r.status == "ok" ? r.median_ess : 0.0);
    return out;
}

std::vector<double> ExperimentResult::dim_ess(const std::string& arm, int dim) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.arm == arm) out.push_back(r.status == "ok" ? r.ess(dim) : 0.0);
    return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.d, a.n, a.mu, a.arm, a.chain) < std::tie(b.d, b.n, b.mu, b.arm, b.chain);
    });
}

// ---------------------------------------------------------------- 4.1

ExperimentResult run_counterproductive(const ExperimentConfig& cfg) {
    const SymMatrix sigma = fixtures::sigma_pi();
    const int d = 5;
    auto target = gaussian_target(Vector::Zero(d), sigma);
    const std::vector<std::pair<std::string, Preconditioner>> arms = {
        {"none", identity_preconditioner(d)},
        {"dense", dense_covariance_preconditioner(sigma)},
        {"diag", diag_covariance_preconditioner(sigma)}};
    const double step = 2.38 / std::sqrt(double(d));
    const Matrix root = linalg::sym_sqrt(sigma).matrix();
    const int runs = cfg.chains_per_cell;

    ExperimentResult res;
    res.rows.resize(arms.size() * static_cast<std::size_t>(runs));
    parallel_for(res.rows.size(), cfg.threads, [&](std::size_t k) {
        const std::size_t a = k / runs;
        const int run = static_cast<int>(k % runs);
        Rng start = make_stream(seed_of(cfg.master_seed, {41, 0}), static_cast<std::uint64_t>(run));
        Vector x0 = root * std_normal(start, d);
        ChainConfig cc;
        cc.kind = SamplerKind::RWM;
        cc.step_size = step;
        cc.preconditioner = arms[a].second;
        cc.n_steps = cfg.measure;
        cc.seed = seed_of(cfg.master_seed, {41, 1 + a, static_cast<std::uint64_t>(run)});
        auto t0 = std::chrono::steady_clock::now();
        Trace tr = rwm_chain(target, cc, x0);
        ResultRow row = make_row("counterproductive", d, 0, 0, arms[a].first, run, cc.seed);
        fill_from_trace(row, tr);
        row.wall_time = seconds_since(t0);
        res.rows[k] = std::move(row);
    });
    sort_rows(res.rows);

    auto kappa = condition_number(target);
    auto kd = kappa_after(target, arms[2].second);
    auto kn = kappa_after(target, arms[1].second);
    std::ostringstream os;
    os << std::setprecision(4) << "kappa=" << kappa.value << " kappa_L(diag)=" << kd.value
       << " kappa_L(dense)=" << kn.value;
    res.notes.push_back(os.str());
    res.bound_rows.push_back(diag_dominance_bound(sigma).report());
    return res;
}

// ---------------------------------------------------------------- 4.2

ExperimentResult run_hyperbolic(const ExperimentConfig& cfg) {
    struct Cell {
        int d, n;
        RegressionData data;
        DifferentiableTarget target;
        Vector x_ls;
        Preconditioner design;
    };
    std::vector<Cell> cells;
    for (int d : cfg.dims)
        for (int m : cfg.n_multipliers) {
            int n = m * d;
            auto data = synth_regression_data(d, n, seed_of(cfg.master_seed, {42, std::uint64_t(d), std::uint64_t(n)}));
            auto target = hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
            Vector xls = (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.Y);
            auto A = std::get<AdditiveStructure>(target.structure).A;
            auto design = additive_base_preconditioner(A);
            design.label = "design";
            cells.push_back({d, n, std::move(data), std::move(target), xls, design});
        }
    static const std::vector<std::string> arms = {"design", "covariance", "identity"};
    const int chains = cfg.chains_per_cell;
    ExperimentResult res;
    res.rows.resize(cells.size() * arms.size() * static_cast<std::size_t>(chains));
    parallel_for(res.rows.size(), cfg.threads, [&](std::size_t k) {
        const std::size_t ci = k / (arms.size() * chains);
        const std::size_t ai = (k / chains) % arms.size();
        const int ch = static_cast<int>(k % chains);
        const Cell& c = cells[ci];
        const double step = std::pow(double(c.d), -1.0 / 6.0);
        auto t0 = std::chrono::steady_clock::now();

        ChainConfig burn;
        burn.kind = SamplerKind::MALA;
        burn.step_size = step;
        burn.preconditioner = identity_preconditioner(c.d);
        burn.n_steps = cfg.burn_in;
        burn.seed = seed_of(cfg.master_seed, {42, ci, ai, std::uint64_t(ch), 1});
        burn.adapt = AdaptConfig{0.574, 0.6};
        Vector start = c.x_ls;
        Trace bt;
        if (cfg.burn_in > 0) {
            bt = mala_chain(c.target, burn, c.x_ls);
            start = bt.states.row(bt.size() - 1).transpose();
        }
        ChainConfig meas;
        meas.kind = SamplerKind::MALA;
        meas.step_size = step;
        meas.n_steps = cfg.measure;
        meas.seed = seed_of(cfg.master_seed, {42, ci, ai, std::uint64_t(ch), 2});
        ResultRow row = make_row("hyperbolic", c.d, c.n, 0, arms[ai], ch, meas.seed);
        try {
            if (arms[ai] == "design") meas.preconditioner = c.design;
            else if (arms[ai] == "identity") meas.preconditioner = identity_preconditioner(c.d);
            else {
                if (cfg.burn_in < 2) throw DefinitenessError("no burn-in samples for the covariance estimate", 0);
                meas.preconditioner = dense_covariance_preconditioner(sample_covariance(bt.states));
            }
            fill_from_trace(row, mala_chain(c.target, meas, start));
        } catch (const std::domain_error&) {
            row.status = "failed";
        }
        row.wall_time = seconds_since(t0);
        res.rows[k] = std::move(row);
    });
    sort_rows(res.rows);

    for (const auto& c : cells) {
        auto kap = condition_number(c.target);
        auto kl = kappa_after(c.target, c.design);
        double sd = linalg::lambda_min(SymMatrix::symmetrize(c.data.X.transpose() * c.data.X));
        double closed = 1.0 + c.data.lambda / sd;
        std::ostringstream os;
        os << std::setprecision(6) << "d=" << c.d << " n=" << c.n << " lambda=" << c.data.lambda << " kappa=" << kap.value
           << " kappa_L(design)=" << kl.value << " closed_form=" << closed;
        res.notes.push_back(os.str());
        auto r = bound_thm3(c.data.lambda / c.design.sigmad_sq(), std::sqrt(c.design.sigma1_sq()), c.target.envelope->m);
        r.inputs.push_back({"d", double(c.d)});
        r.inputs.push_back({"n", double(c.n)});
        res.bound_rows.push_back(r);
    }
    return res;
}

// ---------------------------------------------------------------- 4.3

namespace {

constexpr double kBinomialLambda = 0.01;

Vector binomial_mode(const DifferentiableTarget& t, const Preconditioner& design) {
    ModeOptions mo;
    mo.hessian_refresh = 1;
    return find_mode(t, design, Vector::Zero(t.dim), mo);
}

}  // namespace

ExperimentResult run_binomial(const ExperimentConfig& cfg) {
    struct Cell {
        int d, n;
        double mu;
        BinomialData data;
        DifferentiableTarget target;
        Preconditioner design, mode;
        Vector beta_star;
    };
    std::vector<Cell> cells;
    for (int d : cfg.dims)
        for (double mu : cfg.mu_list) {
            int n = 5 * d;
            auto data = synth_binomial_data(d, n, mu, seed_of(cfg.master_seed, {43, std::uint64_t(d), std::uint64_t(mu * 1000)}));
            auto target = binomial_gprior_target(data.X, data.Y, data.w, kBinomialLambda / n);
            auto design = design_preconditioner(data.X);
            Vector bs = binomial_mode(target, design);
            auto mode = hessian_at_mode_preconditioner(target, bs);
            cells.push_back({d, n, mu, std::move(data), std::move(target), design, mode, bs});
        }
    static const std::vector<std::string> arms = {"covariance", "covarianceII", "fisher", "fisherII",
                                                  "mode", "identity", "design"};
    const int chains = cfg.chains_per_cell;
    ExperimentResult res;
    res.rows.resize(cells.size() * arms.size() * static_cast<std::size_t>(chains));
    parallel_for(cells.size() * static_cast<std::size_t>(chains), cfg.threads, [&](std::size_t k) {
        const std::size_t ci = k / chains;
        const int ch = static_cast<int>(k % chains);
        const Cell& c = cells[ci];
        const double step = 2.38 / std::sqrt(double(c.d));
        auto t0 = std::chrono::steady_clock::now();
        Rng init = make_stream(seed_of(cfg.master_seed, {43, ci, std::uint64_t(ch), 0}), 0);
        Vector x0 = c.design.inverse * std_normal(init, c.d);

        ChainConfig burn;
        burn.kind = SamplerKind::RWM;
        burn.step_size = step;
        burn.preconditioner = identity_preconditioner(c.d);
        burn.n_steps = std::max(2L, cfg.burn_in);
        burn.seed = seed_of(cfg.master_seed, {43, ci, std::uint64_t(ch), 1});
        burn.adapt = AdaptConfig{0.234, 0.6};
        Trace bt = rwm_chain(c.target, burn, x0);
        Vector start = bt.states.row(bt.size() - 1).transpose();

        ChainConfig lc;
        lc.kind = SamplerKind::RWM;
        lc.step_size = step;
        lc.preconditioner = c.mode;
        lc.n_steps = cfg.long_run;
        lc.seed = seed_of(cfg.master_seed, {43, ci, std::uint64_t(ch), 2});
        Trace lt = rwm_chain(c.target, lc, start);
        double setup = seconds_since(t0);

        auto fisher_of = [&](const Trace& tr) {
            std::vector<Vector> g;
            g.reserve(static_cast<std::size_t>(tr.size()));
            for (long t = 0; t < tr.size(); ++t) g.push_back(c.target.gradient(tr.states.row(t).transpose()));
            return fisher_preconditioner(g);
        };
        for (std::size_t ai = 0; ai < arms.size(); ++ai) {
            auto t1 = std::chrono::steady_clock::now();
            ChainConfig meas;
            meas.kind = SamplerKind::RWM;
            meas.step_size = step;
            meas.n_steps = cfg.measure;
            meas.seed = seed_of(cfg.master_seed, {43, ci, std::uint64_t(ch), 10 + ai});
            ResultRow row = make_row("binomial", c.d, c.n, c.mu, arms[ai], ch, meas.seed);
            try {
                const std::string& a = arms[ai];
                if (a == "covariance") meas.preconditioner = dense_covariance_preconditioner(sample_covariance(bt.states));
                else if (a == "covarianceII") meas.preconditioner = dense_covariance_preconditioner(sample_covariance(lt.states));
                else if (a == "fisher") meas.preconditioner = fisher_of(bt);
                else if (a == "fisherII") meas.preconditioner = fisher_of(lt);
                else if (a == "mode") meas.preconditioner = c.mode;
                else if (a == "identity") meas.preconditioner = identity_preconditioner(c.d);
                else meas.preconditioner = c.design;
                fill_from_trace(row, rwm_chain(c.target, meas, start));
            } catch (const std::domain_error&) {
                row.status = "failed";
            }
            row.wall_time = seconds_since(t1) + setup / arms.size();
            res.rows[k * arms.size() + ai] = std::move(row);
        }
    });
    sort_rows(res.rows);

    for (const auto& c : cells) {
        auto kap = condition_number(c.target);
        auto kd = kappa_after(c.target, c.design);
        auto km = kappa_after(c.target, c.mode);
        const double lam = kBinomialLambda;
        const double n = c.n;
        Vector q(c.n);
        Vector z = c.data.X * c.beta_star;
        for (int i = 0; i < c.n; ++i) q(i) = logistic_var(z(i));
        double disp_design = (n / 4 + lam) / lam * c.data.w.maxCoeff() / c.data.w.minCoeff();
        double disp_mode = (n / 4 + lam) / lam * (n * q.maxCoeff() + lam) / (n * q.minCoeff() + lam);
        std::ostringstream os;
        os << std::setprecision(6) << "d=" << c.d << " mu=" << c.mu << " kappa(display)=" << kap.value
           << " kappa_L(design)=" << kd.value << " display=" << disp_design << " kappa_L(mode)=" << km.value
           << " display=" << disp_mode;
        res.notes.push_back(os.str());
        res.bound_rows.push_back(mult_kappa_bounds(c.target));
        for (auto& r : mult_dalalyan(c.target)) res.bound_rows.push_back(r);
        res.bound_rows.push_back(mult_mode_bound(c.target, c.beta_star));
    }
    return res;
}

// ---------------------------------------------------------------- verify-bounds

long VerifyResult::violations() const {
    return std::count_if(rows.begin(), rows.end(), [](const VerifyRow& r) { return r.status == "fail"; });
}

long VerifyResult::count(const std::string& family, const std::string& check, const std::string& status) const {
    return std::count_if(rows.begin(), rows.end(), [&](const VerifyRow& r) {
        return r.family == family && r.check == check && r.status == status;
    });
}

namespace {

std::string verdict(bool ok) { return ok ? "pass" : "fail"; }

void verify_hyperbolic(int i, std::uint64_t master, std::vector<VerifyRow>& out) {
    const int d = 2 + i % 9;
    const int n = ((i / 9) % 2 ? 20 : 5) * d;
    auto data = synth_regression_data(d, n, seed_of(master, {30, std::uint64_t(i)}));
    auto target = hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
    auto A = std::get<AdditiveStructure>(target.structure).A;
    Vector xls = (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.Y);
    ModeOptions mo;
    mo.hessian_refresh = 1;
    Vector xs = find_mode(target, additive_base_preconditioner(A), xls, mo);
    std::vector<Preconditioner> pres = {additive_base_preconditioner(A), hessian_at_mode_preconditioner(target, xs)};
    pres[0].label = "design";

    ChainConfig cc;
    cc.kind = SamplerKind::MALA;
    cc.step_size = std::pow(double(d), -1.0 / 6.0);
    cc.preconditioner = pres[1];
    cc.n_steps = 2000;
    cc.seed = seed_of(master, {31, std::uint64_t(i)});
    auto bulk = mala_chain(target, cc, xs).rows(500);
    Rng rng = make_stream(seed_of(master, {32, std::uint64_t(i)}), 0);
    const double m = target.envelope->m;

    for (const auto& pre : pres) {
        auto probes = default_probes(target, pre, bulk, rng);
        double k_exact = kappa_after(target, pre).value;
        double k_probe = kappa_on_points(target, pre.inverse, probes).value;
        Vector sig = pre.eigs.values.array().sqrt();
        auto row = [&](const std::string& check, double bound, const std::string& status) {
            out.push_back({"hyperbolic", i, d, pre.label, check, std::max(k_exact, k_probe), bound, status});
        };
        auto check_bound = [&](const std::string& name, double b) {
            bool ok = k_probe <= b * (1 + 1e-8) && k_exact <= b * (1 + 1e-8);
            row(name, b, verdict(ok));
        };
        double eps_eig = measure_eps_eigenvalue(target, pre, probes);
        try {
            double delta = measure_delta_eigenvector(target, pre, probes);
            check_bound("thm1", bound_thm1(eps_eig, delta, sig).value("upper"));
        } catch (const DegeneratePairingError&) {
            row("thm1", 0, "inapplicable");
        }
        double eps_norm = measure_eps_norm(target, pre, probes);
        try {
            check_bound("thm2", bound_thm2(eps_norm, pre.eigengap, sig(d - 1), sig).value("upper"));
        } catch (const BoundInapplicable&) {
            row("thm2", 0, "inapplicable");
        } catch (const EigengapError&) {
            row("thm2", 0, "inapplicable");
        }
        check_bound("thm3", bound_thm3(eps_norm, sig(0), m).value("upper"));
    }
}

void verify_binomial(int i, std::uint64_t master, std::vector<VerifyRow>& out) {
    static const double mus[] = {0, 5, 50, 200};
    const int d = 2 + i % 4;
    const double mu = mus[(i / 4) % 4];
    const int n = 5 * d;
    auto data = synth_binomial_data(d, n, mu, seed_of(master, {33, std::uint64_t(i)}));
    const double g = kBinomialLambda / n;
    auto target = binomial_gprior_target(data.X, data.Y, data.w, g);
    auto push = [&](const std::string& pre, const std::string& check, double kappa, double bound, bool ok) {
        out.push_back({"binomial", i, d, pre, check, kappa, bound, verdict(ok)});
    };
    const double tol = 1e-9;

    double k = kappa_after(target, identity_preconditioner(d)).value;
    auto p3 = mult_kappa_bounds(target);
    push("identity", "prop3_lower", k, p3.value("lower"), p3.value("lower") <= k * (1 + tol));
    push("identity", "prop3_upper", k, p3.value("upper"), k <= p3.value("upper") * (1 + tol));

    auto design = design_preconditioner(data.X);
    double kd = kappa_after(target, design).value;
    auto p5 = mult_dalalyan(target).front();
    push("design", "prop5_lower", kd, p5.value("lower"), p5.value("lower") <= kd * (1 + tol));
    push("design", "prop5_upper", kd, p5.value("upper"), kd <= p5.value("upper") * (1 + tol));

    auto twin = binomial_gprior_target(data.X, data.Y, Vector::Ones(n), g);
    double kt = kappa_after(twin, design).value;
    auto cor = mult_dalalyan(twin);
    double cc = cor.size() > 1 ? cor[1].value("value") : std::nan("");
    push("design", "prop5cor", kt, cc, std::abs(kt - cc) <= 1e-6 * cc);

    Vector bs = binomial_mode(target, design);
    double km = kappa_after(target, hessian_at_mode_preconditioner(target, bs)).value;
    auto p6 = mult_mode_bound(target, bs);
    push("mode", "prop6", km, p6.value("upper"), km <= p6.value("upper") * (1 + tol));
    push("mode", "prop6_cap", p6.value("upper"), p6.value("cap"), p6.value("upper") <= p6.value("cap") * (1 + tol));
}

void verify_cosine(int i, std::uint64_t master, std::vector<VerifyRow>& out) {
    auto target = cosine_hard_target(1.0, 4.0);
    Rng rng = make_stream(seed_of(master, {34, std::uint64_t(i)}), 0);
    Matrix L;
    do {
        L = std_normal(rng, 2, 2);
    } while (std::abs(L.determinant()) < 1e-3 ||
             linalg::spectral_condition_number(SymMatrix::symmetrize(L * L.transpose())).cond < 1 + 1e-6);
    auto pre = make_preconditioner(L, "random");
    double grid = kappa_on_points(target, pre.inverse, target.bounds->witnesses).value;
    double lower = hard_target_lower(L, 1.0, 4.0).value("lower");
    out.push_back({"cosine", i, 2, "random", "hard_lower", grid, lower, verdict(grid >= lower - 1e-6)});
}

}  // namespace

VerifyResult run_verify_bounds(const ExperimentConfig& cfg) {
    const int N = cfg.instances;
    std::vector<std::vector<VerifyRow>> parts(static_cast<std::size_t>(2 * N + 50));
    parallel_for(parts.size(), cfg.threads, [&](std::size_t k) {
        int idx = static_cast<int>(k);
        if (idx < N) verify_hyperbolic(idx, cfg.master_seed, parts[k]);
        else if (idx < 2 * N) verify_binomial(idx - N, cfg.master_seed, parts[k]);
        else verify_cosine(idx - 2 * N, cfg.master_seed, parts[k]);
    });
    VerifyResult res;
    for (auto& p : parts)
        for (auto& r : p) res.rows.push_back(std::move(r));
    return res;
}

// ---------------------------------------------------------------- analyze

Preconditioner resolve_preconditioner(const std::string& spec, const DifferentiableTarget& target,
                                      const ModelSpec& model) {
    const int d = target.dim;
    if (spec == "identity") return identity_preconditioner(d);
    if (spec == "dense" || spec == "covariance") {
        if (!target.exact_covariance) throw ConfigError("'" + spec + "' needs a target with known covariance");
        return dense_covariance_preconditioner(*target.exact_covariance);
    }
    if (spec == "diag" || spec == "diagonal") {
        if (!target.exact_covariance) throw ConfigError("'" + spec + "' needs a target with known covariance");
        return diag_covariance_preconditioner(*target.exact_covariance);
    }
    if (spec == "design") {
        auto it = model.matrices.find("X");
        if (it == model.matrices.end()) throw ConfigError("'design' needs a model with X");
        return design_preconditioner(it->second);
    }
    if (spec == "additive" || spec == "additive-base") {
        auto* add = std::get_if<AdditiveStructure>(&target.structure);
        if (!add) throw ConfigError("'" + spec + "' needs an additive-Hessian target");
        return additive_base_preconditioner(add->A);
    }
    if (spec == "mode") {
        Vector xs;
        if (target.exact_mode) xs = *target.exact_mode;
        else {
            ModeOptions mo;
            mo.hessian_refresh = 1;
            xs = find_mode(target, identity_preconditioner(d), Vector::Zero(d), mo);
        }
        return hessian_at_mode_preconditioner(target, xs);
    }
    if (spec.rfind("file:", 0) == 0) {
        std::ifstream in(spec.substr(5));
        if (!in) throw ConfigError("cannot open preconditioner file " + spec.substr(5));
        auto p = read_preconditioner_csv(in);
        if (p.dim() != d) throw ConfigError("preconditioner dimension does not match the model");
        return p;
    }
    throw ConfigError("unknown preconditioner '" + spec + "'");
}

AnalyzeOutput analyze(const ModelSpec& model, const std::string& spec, std::uint64_t seed) {
    auto target = build_target(model);
    auto pre = resolve_preconditioner(spec, target, model);
    AnalyzeOutput out{};
    out.kappa = condition_number(target);
    out.kappa_L = kappa_after(target, pre);
    Rng rng = make_stream(seed, 0);
    auto probes = default_probes(target, pre, {}, rng);
    const int d = target.dim;
    Vector sig = pre.eigs.values.array().sqrt();
    double m = target.envelope ? target.envelope->m : measure_min_eigenvalue(target, probes);
    std::ostringstream notes;

    out.eps_eigenvalue = measure_eps_eigenvalue(target, pre, probes);
    out.params.epsilon = measure_eps_norm(target, pre, probes);
    out.params.gamma = pre.eigengap;
    bool have_delta = true;
    try {
        out.params.delta = measure_delta_eigenvector(target, pre, probes);
    } catch (const DegeneratePairingError& e) {
        have_delta = false;
        notes << "  Thm1: " << e.what() << '\n';
    }
    if (have_delta) out.bounds.push_back(bound_thm1(out.eps_eigenvalue, out.params.delta, sig));
    try {
        out.bounds.push_back(bound_thm2(out.params.epsilon, out.params.gamma, sig(d - 1), sig));
    } catch (const std::domain_error& e) {
        notes << "  Thm2: " << e.what() << '\n';
    }
    out.bounds.push_back(bound_thm3(out.params.epsilon, sig(0), m));
    out.bounds.push_back(fisher_bound(out.params.epsilon, sig(0), sig(d - 1), m));
    if (target.name == "cosine")
        out.bounds.push_back(hard_target_lower(pre.L.matrix(), target.envelope->m, target.envelope->M));
    if (std::holds_alternative<MultiplicativeStructure>(target.structure)) {
        out.bounds.push_back(mult_kappa_bounds(target));
        for (auto& r : mult_dalalyan(target)) out.bounds.push_back(r);
    }
    if (target.exact_covariance) {
        auto g = ou_spectral_gap(pre.L.matrix(), *target.exact_covariance);
        out.bounds.push_back({BoundKind::OUGap, {}, {{"gap", g.gap}, {"det", g.det}}, true, {}});
        out.bounds.push_back(diag_dominance_bound(*target.exact_covariance).report());
    }
    // eps' over the probes: sup ||H(x) - H(x0)|| bounds half the pairwise spread
    double spread = 0;
    SymMatrix h0 = target.hessian(probes.front());
    for (const auto& x : probes) spread = std::max(spread, linalg::spectral_norm(target.hessian(x).matrix() - h0.matrix()));
    double eps_prime = 2 * spread / m;
    out.bounds.push_back(rwm_gap_bounds(std::max(1.0, out.kappa.value), d, 1.0, eps_prime,
                                        target.envelope ? std::optional<double>(target.envelope->M) : std::nullopt));
    out.bounds.push_back(improved_gap_threshold(eps_prime, out.params.epsilon, sig(0), m, 1.0));

    std::ostringstream os;
    os << std::setprecision(6);
    os << "target          " << target.name << " (d=" << d << ")\n";
    os << "preconditioner  " << pre.label << "\n";
    os << "kappa           " << out.kappa.value << "  [" << to_string(out.kappa.provenance) << "]\n";
    os << "kappa_L         " << out.kappa_L.value << "  [" << to_string(out.kappa_L.provenance) << "]\n";
    os << "eps (eigval)    " << out.eps_eigenvalue << "\n";
    os << "eps (norm)      " << out.params.epsilon << "\n";
    os << "delta           " << (have_delta ? std::to_string(out.params.delta) : std::string("n/a")) << "\n";
    os << "eigengap        " << out.params.gamma << "\n\n";
    os << std::left << std::setw(22) << "bound" << std::setw(12) << "certified" << "values\n";
    for (const auto& b : out.bounds) {
        os << std::setw(22) << to_string(b.kind) << std::setw(12) << (b.certified ? "yes" : "no");
        for (const auto& [k, v] : b.values) os << k << '=' << v << ' ';
        os << '\n';
    }
    if (!notes.str().empty()) os << "\nskipped:\n" << notes.str();
    out.text = os.str();
    return out;
}

// ---------------------------------------------------------------- CSV

void write_runs_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "experiment,d,n,mu,preconditioner,chain,seed,status,median_ess,acceptance,step_size\n";
    for (const auto& r : rows)
        os << r.experiment << ',' << r.d << ',' << r.n << ',' << g17(r.mu) << ',' << r.arm << ',' << r.chain << ','
           << r.seed << ',' << r.status << ',' << g17(r.median_ess) << ',' << g17(r.acceptance) << ','
           << g17(r.step_size) << '\n';
}

std::vector<ResultRow> read_runs_csv(std::istream& is) {
    std::string line;
    int lineno = 1;
    if (!std::getline(is, line)) throw ParseError("empty runs file", lineno);
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 11) throw ParseError("expected 11 fields", lineno);
        try {
            ResultRow r;
            r.experiment = f[0];
            r.d = std::stoi(f[1]);
            r.n = std::stoi(f[2]);
            r.mu = std::stod(f[3]);
            r.arm = f[4];
            r.chain = std::stoi(f[5]);
            r.seed = std::stoull(f[6]);
            r.status = f[7];
            r.median_ess = std::stod(f[8]);
            r.acceptance = std::stod(f[9]);
            r.step_size = std::stod(f[10]);
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw ParseError("bad field", lineno);
        }
    }
    return rows;
}

namespace {
std::string run_id(const ResultRow& r) {
    return "d" + std::to_string(r.d) + "-n" + std::to_string(r.n) + "-mu" + g17(r.mu) + "-" + r.arm + "-c" +
           std::to_string(r.chain);
}
}  // namespace

void write_ess_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "run_id,preconditioner,d,n,mu,dim,ess,median_flag\n";
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        std::string pre = run_id(r) + ',' + r.arm + ',' + std::to_string(r.d) + ',' + std::to_string(r.n) + ',' + g17(r.mu);
        for (Eigen::Index i = 0; i < r.ess.size(); ++i) os << pre << ',' << (i + 1) << ',' << g17(r.ess(i)) << ",0\n";
        os << pre << ",0," << g17(r.median_ess) << ",1\n";
    }
}

void write_timing_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "run_id,preconditioner,wall_time\n";
    for (const auto& r : rows) os << run_id(r) << ',' << r.arm << ',' << g17(r.wall_time) << '\n';
}

void write_verify_csv(std::ostream& os, const VerifyResult& res) {
    os << "family,instance,d,preconditioner,check,kappa,bound,status\n";
    for (const auto& r : res.rows)
        os << r.family << ',' << r.instance << ',' << r.d << ',' << r.preconditioner << ',' << r.check << ','
           << g17(r.kappa) << ',' << g17(r.bound) << ',' << r.status << '\n';
}

std::string bounds_json(const std::vector<BoundReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(json::parse(r.to_json()));
    return arr.dump(2);
}

}  // namespace precond
