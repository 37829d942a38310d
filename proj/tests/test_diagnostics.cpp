#include <doctest.h>

#include <cmath>

#include "precond/conditioning.hpp"
#include "precond/diagnostics.hpp"
#include "precond/targets.hpp"

using namespace precond;

namespace {

Vector ar1(double rho, long n, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    std::normal_distribution<double> n01;
    Vector x(n);
    x(0) = n01(rng) / std::sqrt(1 - rho * rho);
    for (long t = 1; t < n; ++t) x(t) = rho * x(t - 1) + n01(rng);
    return x;
}

}  // namespace

TEST_CASE("ESS of iid and AR(1) series") {
    Rng rng = make_stream(1, 0);
    for (int r = 0; r < 5; ++r) {
        Vector x = std_normal(rng, 10000);
        double e = ess(x);
        CHECK(e >= 0.9 * 10000);
        CHECK(e <= 1.1 * 10000);
    }
    const long n = 100000;
    double e = ess(ar1(0.5, n, 2));
    CHECK(e == doctest::Approx(n / 3.0).epsilon(0.1));
    CHECK_THROWS(ess(Vector::Constant(1000, 2.5)));
    CHECK_THROWS(ess(Vector::Zero(50)));
}

TEST_CASE("ESS report") {
    Rng rng = make_stream(3, 0);
    Matrix m(5000, 3);
    m.col(0) = std_normal(rng, 5000);
    m.col(1) = ar1(0.5, 5000, 4);
    m.col(2) = ar1(0.9, 5000, 5);
    auto r = ess_report(m);
    CHECK(r.n == 5000);
    CHECK(r.per_dimension.size() == 3);
    CHECK(r.median == r.per_dimension(1));
    for (int i = 0; i < 3; ++i) {
        CHECK(r.per_dimension(i) > 0);
        CHECK(r.per_dimension(i) <= 5000 * 1.1);
    }
}

TEST_CASE("ESS is affine invariant and time-reversal symmetric") {
    Vector x = ar1(0.7, 20000, 6);
    double e = ess(x);
    CHECK(ess((3.5 * x.array() - 12).matrix()) == doctest::Approx(e).epsilon(1e-9));
    CHECK(ess((-0.01 * x.array() + 1e3).matrix()) == doctest::Approx(e).epsilon(1e-9));
    CHECK(ess(Vector(x.reverse())) == e);
}

TEST_CASE("lag autocorrelation") {
    Rng rng = make_stream(7, 0);
    const long n = 100000;
    Vector iid = std_normal(rng, n);
    CHECK(std::abs(lag_autocorrelation(iid, 1)) < 4 / std::sqrt(double(n)));
    Vector alt(1000);
    for (long t = 0; t < 1000; ++t) alt(t) = t % 2 ? -1 : 1;
    // biased normalization: exactly -(n - 1) / n
    CHECK(lag_autocorrelation(alt, 1) == doctest::Approx(-0.999).epsilon(1e-12));
    CHECK(lag_autocorrelation(ar1(0.8, n, 8), 1) == doctest::Approx(0.8).epsilon(0.025));
    CHECK(lag_autocorrelation(iid, 0) == doctest::Approx(1));
    CHECK_THROWS(lag_autocorrelation(iid, n / 2));
    CHECK_THROWS(lag_autocorrelation(Vector::Ones(100), 1));
}

TEST_CASE("empirical gap surrogate") {
    Rng rng = make_stream(9, 0);
    Matrix iid = std_normal(rng, 50000, 2);
    auto g = empirical_gap_upper(iid, Vector::Unit(2, 0));
    CHECK(std::abs(g.value - 1) < 4 * g.se + 1e-3);
    CHECK(g.se > 0);

    auto t = gaussian_target(Vector::Zero(1), SymMatrix::identity(1));
    ChainConfig c;
    c.step_size = 1e-3;
    c.preconditioner = identity_preconditioner(1);
    c.n_steps = 20000;
    c.seed = 10;
    auto sticky = rwm_chain(t, c, Vector::Zero(1));
    CHECK(empirical_gap_upper(sticky, Vector::Ones(1)).value < 1e-3);
    CHECK_THROWS(empirical_gap_upper(iid, Vector::Zero(2)));
}

TEST_CASE("gap surrogate on a Gaussian respects the gap bounds") {
    // Sigma with eigenvalues 1..9 so m = 1/9, M = 1, kappa = 9
    const int d = 3;
    auto sigma = SymMatrix::diag(Vector::LinSpaced(d, 1, 9));
    auto t = gaussian_target(Vector::Zero(d), sigma);
    const double kappa = 9, xi = 1;
    ChainConfig c;
    c.xi = xi;
    c.preconditioner = identity_preconditioner(d);
    c.n_steps = 400000;
    c.seed = 11;
    Rng rng = make_stream(12, 0);
    Vector x0 = linalg::sym_sqrt(sigma).matrix() * std_normal(rng, d);
    auto tr = rwm_chain(t, c, x0);
    auto est = empirical_gap_upper(tr, Vector::Unit(d, d - 1));
    auto b = rwm_gap_bounds(kappa, d, xi, 0);
    CHECK(est.value <= xi / (2 * kappa * d) + 4 * est.se);
    CHECK(b.value("lower") <= est.value + 4 * est.se);
}

TEST_CASE("acceptance rate") {
    CHECK(acceptance_rate(std::vector<char>(10, 1)) == 1);
    CHECK(acceptance_rate(std::vector<char>(10, 0)) == 0);
    CHECK(acceptance_rate(std::vector<char>{1, 0, 0, 1}) == 0.5);
    CHECK_THROWS(acceptance_rate(std::vector<char>{}));
}

TEST_CASE("median and Mann-Whitney") {
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK_THROWS(median({}));
    std::vector<double> a{10, 11, 12, 13, 14, 15, 16, 17}, b{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(mann_whitney_greater(a, b) < 0.001);
    CHECK(mann_whitney_greater(b, a) > 0.999);
    CHECK(mann_whitney_two_sided(a, b) < 0.002);
    CHECK(mann_whitney_two_sided(a, a) == doctest::Approx(1));
    // textbook value: n1 = n2 = 8, U = 64, z = (64 - 32 - 0.5) / sqrt(8 * 8 * 17 / 12)
    double z = 31.5 / std::sqrt(64.0 * 17 / 12);
    CHECK(mann_whitney_greater(a, b) == doctest::Approx(0.5 * std::erfc(z / std::sqrt(2.0))).epsilon(1e-9));
    std::vector<double> ties{1, 1, 1, 1};
    CHECK(mann_whitney_two_sided(ties, ties) == doctest::Approx(1));
}
