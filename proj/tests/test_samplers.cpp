#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "precond/diagnostics.hpp"
#include "precond/samplers.hpp"
#include "precond/targets.hpp"

using namespace precond;

namespace {

DifferentiableTarget std_gaussian(int d) {
    return gaussian_target(Vector::Zero(d), SymMatrix::identity(d));
}

ChainConfig config(SamplerKind kind, double step, int d, long n, std::uint64_t seed) {
    ChainConfig c;
    c.kind = kind;
    c.step_size = step;
    c.preconditioner = identity_preconditioner(d);
    c.n_steps = n;
    c.seed = seed;
    return c;
}

Vector least_squares(const RegressionData& r) {
    return (r.X.transpose() * r.X).ldlt().solve(r.X.transpose() * r.Y);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E[min(1, pi(X + s Z) / pi(X))] for X, Z iid N(0, 1) by tensor Gauss-free midpoint quadrature
double rwm_acceptance_quadrature(double s) {
    const int m = 1200;
    const double lo = -8, h = 16.0 / m;
    double acc = 0;
    for (int i = 0; i < m; ++i) {
        double x = lo + (i + 0.5) * h;
        double px = std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
        for (int j = 0; j < m; ++j) {
            double z = lo + (j + 0.5) * h;
            double pz = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
            double y = x + s * z;
            acc += px * pz * std::min(1.0, std::exp(0.5 * (x * x - y * y))) * h * h;
        }
    }
    return acc;
}

}  // namespace

TEST_CASE("mh_accept") {
    long bad = 0;
    CHECK(mh_accept(0, 0, 0.999, &bad));
    CHECK(mh_accept(0, 0, 0.0, &bad));
    CHECK_FALSE(mh_accept(-std::numeric_limits<double>::infinity(), 0, 0.5, &bad));
    CHECK(bad == 0);
    CHECK_FALSE(mh_accept(std::nan(""), 0, 0.1, &bad));
    CHECK_FALSE(mh_accept(std::numeric_limits<double>::infinity(), 0, 0.1, &bad));
    CHECK(bad == 2);
    CHECK(mh_accept(std::log(0.5), 0, 0.49));
    CHECK_FALSE(mh_accept(std::log(0.5), 0, 0.51));
    CHECK(mh_accept(std::log(0.25), std::log(2.0), 0.49));
}

TEST_CASE("vanishing steps are always accepted") {
    auto t = std_gaussian(1);
    for (auto kind : {SamplerKind::RWM, SamplerKind::MALA}) {
        auto tr = run_chain(t, config(kind, 1e-4, 1, 2000, 1), Vector::Zero(1));
        CHECK(acceptance_rate(tr) > 0.999);
    }
}

TEST_CASE("RWM acceptance matches the quadrature oracle") {
    auto t = std_gaussian(1);
    for (double s : {0.5, 2.38, 6.0}) {
        Rng rng = make_stream(11, 0);
        auto tr = rwm_chain(t, config(SamplerKind::RWM, s, 1, 200000, 7), std_normal(rng, 1));
        double alpha = rwm_acceptance_quadrature(s);
        CHECK(acceptance_rate(tr) == doctest::Approx(alpha).epsilon(0.02));
    }
}

TEST_CASE("invariance smoke test") {
    auto t = std_gaussian(1);
    auto tr = rwm_chain(t, config(SamplerKind::RWM, 2.38, 1, 1000000, 3), Vector::Zero(1));
    Vector x = tr.states.col(0);
    double se = std::sqrt(1.0 / ess(x));
    CHECK(std::abs(x.mean()) < 4 * se);
    double var = (x.array() - x.mean()).square().mean();
    CHECK(var == doctest::Approx(1).epsilon(0.02));
}

TEST_CASE("two-bin occupation matches the target split") {
    auto t = std_gaussian(1);
    auto tr = rwm_chain(t, config(SamplerKind::RWM, 1.5, 1, 200000, 5), Vector::Zero(1));
    Vector ind = (tr.states.col(0).array() < 0.5).cast<double>();
    double p = normal_cdf(0.5);
    double se = std::sqrt(p * (1 - p) / ess(ind));
    CHECK(std::abs(ind.mean() - p) < 4 * se);
}

TEST_CASE("MALA proposal mean on a quadratic potential") {
    // one-step chains from x0 = 1: acceptance is ~1 so the mean of X_1 is the proposal mean x (1 - s^2 / 2)
    auto t = std_gaussian(1);
    const double s = 0.1;
    const int reps = 40000;
    double sum = 0;
    for (int r = 0; r < reps; ++r)
        sum += mala_chain(t, config(SamplerKind::MALA, s, 1, 1, split_seed(13, r)), Vector::Ones(1)).states(0, 0);
    CHECK(std::abs(sum / reps - (1 - s * s / 2)) < 4 * s / std::sqrt(reps));
}

TEST_CASE("step-size adaptation reaches its target") {
    SUBCASE("RWM on N(0, I_5) to 0.234") {
        auto t = std_gaussian(5);
        auto c = config(SamplerKind::RWM, 2.38 / std::sqrt(5.0), 5, 10000, 17);
        c.adapt = AdaptConfig{0.234};
        auto tr = rwm_chain(t, c, Vector::Zero(5));
        CHECK(std::abs(acceptance_rate(tr) - 0.234) < 0.05);
        auto frozen = config(SamplerKind::RWM, tr.final_step_size, 5, 10000, 18);
        auto tf = rwm_chain(t, frozen, tr.states.bottomRows(1).transpose());
        CHECK(std::abs(acceptance_rate(tf) - 0.234) < 0.05);
    }
    SUBCASE("MALA on a hyperbolic instance to 0.574") {
        auto data = synth_regression_data(5, 25, 19);
        auto t = hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
        auto c = config(SamplerKind::MALA, std::pow(5.0, -1.0 / 6), 5, 10000, 21);
        c.adapt = AdaptConfig{0.574};
        auto tr = mala_chain(t, c, least_squares(data));
        CHECK(std::abs(acceptance_rate(tr) - 0.574) < 0.05);
    }
    CHECK(adapt_step_size(0.7, 10, 0.234, AdaptConfig{0.234}) == 0.7);
    CHECK(adapt_step_size(0.7, 10, 0.5, AdaptConfig{0.234}) > 0.7);
    CHECK(adapt_step_size(0.7, 10, 0.1, AdaptConfig{0.234}) < 0.7);
}

TEST_CASE("find_mode") {
    Vector mu(3);
    mu << 1, -2, 0.5;
    auto g = gaussian_target(mu, SymMatrix::diag(Vector::LinSpaced(3, 0.1, 10)));
    CHECK((find_mode(g, identity_preconditioner(3), Vector::Zero(3)) - mu).norm() < 1e-7);

    auto data = synth_regression_data(4, 40, 23);
    auto h = hyperbolic_regression_target(data.X, data.Y, 1.0, 1e-9);
    Vector x = find_mode(h, design_preconditioner(data.X, true), Vector::Zero(4));
    CHECK((x - least_squares(data)).norm() < 1e-6 * (1 + least_squares(data).norm()));

    for (double m : {0.0, 50.0}) {
        auto bd = synth_binomial_data(5, 25, m, 29);
        auto b = binomial_gprior_target(bd.X, bd.Y, bd.w, 0.01 / 25);
        ModeOptions opt;
        opt.hessian_refresh = 1;
        Vector xb = find_mode(b, design_preconditioner(bd.X, true), Vector::Zero(5), opt);
        CHECK(b.gradient(xb).norm() <= 1e-8);
    }
}

TEST_CASE("chains are deterministic") {
    auto data = synth_regression_data(3, 15, 31);
    auto t = hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
    auto c = config(SamplerKind::MALA, 0.5, 3, 3000, 37);
    c.preconditioner = design_preconditioner(data.X);
    auto a = mala_chain(t, c, least_squares(data)), b = mala_chain(t, c, least_squares(data));
    CHECK(a.states == b.states);
    CHECK(a.accepted == b.accepted);
    CHECK(a.log_potentials == b.log_potentials);
}

TEST_CASE("modified proposals and pushforward give the same chain") {
    auto data = synth_regression_data(3, 15, 41);
    auto t = hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
    Rng rng = make_stream(43, 0);
    Matrix r = std_normal(rng, 3, 3);
    for (auto kind : {SamplerKind::RWM, SamplerKind::MALA}) {
        auto c = config(kind, kind == SamplerKind::RWM ? 0.8 : 0.5, 3, 5000, 47);
        c.preconditioner = make_preconditioner(r * r.transpose() + Matrix::Identity(3, 3), "random");
        auto a = run_chain(t, c, least_squares(data)), b = run_chain_pushforward(t, c, least_squares(data));
        CHECK(a.accepted == b.accepted);
        CHECK((a.states - b.states).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("step scaling: (L, s) equals (cL, cs)") {
    auto g = gaussian_target(Vector::Zero(2), SymMatrix::diag(Vector::LinSpaced(2, 1, 9)));
    auto c1 = config(SamplerKind::RWM, 0.9, 2, 5000, 53);
    auto c2 = c1;
    c2.preconditioner = scaled(c1.preconditioner, 3.0);
    c2.step_size = 2.7;
    auto a = rwm_chain(g, c1, Vector::Zero(2)), b = rwm_chain(g, c2, Vector::Zero(2));
    CHECK(a.accepted == b.accepted);
    CHECK((a.states - b.states).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("xi tuning sets step^2 = xi / (M d)") {
    auto g = gaussian_target(Vector::Zero(4), SymMatrix::diag(Vector::LinSpaced(4, 0.5, 2)));
    ChainConfig c = config(SamplerKind::RWM, 1, 4, 10, 1);
    c.xi = 0.8;
    CHECK(resolve_step_size(c, g) == doctest::Approx(std::sqrt(0.8 / (2.0 * 4))));
}

TEST_CASE("chain errors") {
    auto t = std_gaussian(2);
    Vector bad(2);
    bad << std::numeric_limits<double>::quiet_NaN(), 0;
    CHECK_THROWS(rwm_chain(t, config(SamplerKind::RWM, 1, 2, 10, 1), bad));
    CHECK_THROWS_AS(rwm_chain(t, config(SamplerKind::RWM, 1, 3, 10, 1), Vector::Zero(2)), DimensionError);
    CHECK_THROWS(rwm_chain(t, config(SamplerKind::MALA, 1, 2, 10, 1), Vector::Zero(2)));
    auto c = config(SamplerKind::RWM, 1, 2, 10, 1);
    c.adapt = AdaptConfig{1.5};
    CHECK_THROWS(rwm_chain(t, c, Vector::Zero(2)));
    CHECK_THROWS(rwm_chain(t, config(SamplerKind::RWM, -1, 2, 10, 1), Vector::Zero(2)));
}

TEST_CASE("trace invariants and CSV export") {
    auto t = std_gaussian(2);
    auto tr = rwm_chain(t, config(SamplerKind::RWM, 3, 2, 101, 59), Vector::Zero(2));
    CHECK(tr.states.allFinite());
    for (long i = 1; i < tr.size(); ++i)
        if (!tr.accepted[static_cast<std::size_t>(i)]) CHECK(tr.states.row(i) == tr.states.row(i - 1));
    std::stringstream ss;
    write_trace_csv(ss, tr, 10);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "step,accepted,x_1,x_2,logU");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == 11);
    CHECK_THROWS(write_trace_csv(ss, tr, 0));
}
