#include <doctest.h>

#include <cmath>

#include "precond/conditioning.hpp"
#include "precond/errors.hpp"
#include "precond/fixtures.hpp"
#include "precond/targets.hpp"

using namespace precond;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

DifferentiableTarget small_hyperbolic(std::uint64_t seed, int d = 2, int n = 10) {
    auto data = synth_regression_data(d, n, seed);
    return hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
}

DifferentiableTarget small_binomial(std::uint64_t seed, int d = 2, double mu = 0) {
    auto data = synth_binomial_data(d, 5 * d, mu, seed);
    return binomial_gprior_target(data.X, data.Y, data.w, 0.01 / (5 * d));
}

void check_envelope(const DifferentiableTarget& t, Rng& rng, double scale) {
    REQUIRE(t.envelope);
    const double tol = 1e-8 * t.envelope->M;
    for (int k = 0; k < 100; ++k) {
        Vector x = scale * std_normal(rng, t.dim);
        auto ev = linalg::sym_eigenvalues(t.hessian(x));
        CHECK(ev(t.dim - 1) >= t.envelope->m - tol);
        CHECK(ev(0) <= t.envelope->M + tol);
    }
}

}  // namespace

TEST_CASE("gaussian target") {
    auto t = gaussian_target(Vector::Zero(3), SymMatrix::identity(3));
    CHECK(t.envelope->kappa() == doctest::Approx(1));
    auto s = gaussian_target(Vector::Zero(5), fixtures::sigma_pi());
    CHECK(s.envelope->kappa() == doctest::Approx(4400).epsilon(1e-9));
    auto u = gaussian_target(Vector::Zero(2), SymMatrix::diag(vec({2, 1})));
    auto h = u.hessian(vec({0.3, -1}));
    CHECK(h(0, 0) == doctest::Approx(0.5));
    CHECK(h(1, 1) == doctest::Approx(1));
    CHECK(h(0, 1) == 0);
    CHECK_THROWS_AS(gaussian_target(Vector::Zero(5), fixtures::sigma_pi_displayed()), DefinitenessError);
    CHECK_THROWS_AS(gaussian_target(Vector::Zero(2), SymMatrix::identity(3)), DimensionError);
}

TEST_CASE("cosine hard target") {
    auto t = cosine_hard_target(1, 4);
    auto h0 = t.hessian(vec({0, 0}));
    CHECK(h0(0, 0) == doctest::Approx(4));
    CHECK(h0(1, 1) == doctest::Approx(4));
    auto hp = t.hessian(vec({M_PI, M_PI}));
    CHECK(hp(0, 0) == doctest::Approx(1));
    CHECK(hp(1, 1) == doctest::Approx(1));
    CHECK(t.envelope->kappa() == doctest::Approx(4));
    CHECK_THROWS(cosine_hard_target(2, 1));
}

TEST_CASE("hyperbolic target structure") {
    auto data = synth_regression_data(3, 15, 7);
    auto t = hyperbolic_regression_target(data.X, data.Y, 1.0, data.lambda);
    const auto& add = std::get<AdditiveStructure>(t.structure);
    auto b0 = add.B(Vector::Zero(3)).matrix();
    CHECK((b0 - data.lambda * Matrix::Identity(3, 3)).norm() < 1e-14);
    double xtx_norm = linalg::lambda_max(SymMatrix::symmetrize(data.X.transpose() * data.X));
    CHECK(t.envelope->M - xtx_norm == doctest::Approx(data.lambda));
    CHECK_FALSE(t.envelope->m_attained);

    Rng rng = make_stream(3, 0);
    for (int k = 0; k < 100; ++k) {
        Vector b = 3 * std_normal(rng, 3);
        Matrix diff = t.hessian(b).matrix() - add.A.matrix() - add.B(b).matrix();
        CHECK(diff.norm() <= 1e-10);
        Vector ratio = add.B(b).matrix().diagonal() / data.lambda;
        CHECK(ratio.minCoeff() > 0);
        CHECK(ratio.maxCoeff() <= 1);
    }
    check_envelope(t, rng, 3);
}

TEST_CASE("hyperbolic finite differences") {
    Rng rng = make_stream(4, 0);
    for (int k = 0; k < 20; ++k) {
        auto t = small_hyperbolic(100 + k);
        Vector b = std_normal(rng, 2);
        auto e = finite_diff_check(t, b, 1e-5);
        CHECK(e.grad_err <= 1e-5);
        CHECK(e.hess_err <= 1e-5);
    }
}

TEST_CASE("binomial target structure") {
    auto data = synth_binomial_data(3, 15, 5, 9);
    const double g = 0.01 / 15;
    auto t = binomial_gprior_target(data.X, data.Y, data.w, g);
    const auto& mult = std::get<MultiplicativeStructure>(t.structure);

    Vector lam0 = mult.lambda_diag(Vector::Zero(3));
    for (int i = 0; i < 15; ++i) CHECK(lam0(i) / data.w(i) - g == doctest::Approx(0.25));

    Rng rng = make_stream(5, 0);
    for (int k = 0; k < 100; ++k) {
        Vector b = 0.2 * std_normal(rng, 3);
        Matrix h = t.hessian(b).matrix();
        Matrix xlx = data.X.transpose() * mult.lambda_diag(b).asDiagonal() * data.X;
        CHECK((h - xlx).norm() <= 1e-10 * h.norm());
        Vector l = mult.lambda_diag(b);
        for (int i = 0; i < 15; ++i) {
            CHECK(l(i) >= data.w(i) * g * (1 - 1e-12));
            CHECK(l(i) <= data.w(i) * (0.25 + g) * (1 + 1e-12));
        }
    }
    check_envelope(t, rng, 0.2);
}

TEST_CASE("binomial condition number display for L = I") {
    auto data = synth_binomial_data(2, 10, 0, 21);
    const double lam = 0.01, n = 10;
    auto t = binomial_gprior_target(data.X, data.Y, data.w, lam / n);
    double kx = linalg::spectral_condition_number(SymMatrix::symmetrize(data.X.transpose() * data.X)).cond;
    double display = (n / 4 + lam) / lam * data.w.maxCoeff() / data.w.minCoeff() * kx;
    CHECK(t.envelope->kappa() == doctest::Approx(display).epsilon(1e-10));
}

TEST_CASE("binomial finite differences") {
    Rng rng = make_stream(6, 0);
    for (int k = 0; k < 20; ++k) {
        auto t = small_binomial(200 + k);
        Vector b = 0.5 * std_normal(rng, 2);
        auto e = finite_diff_check(t, b, 1e-5);
        CHECK(e.grad_err <= 1e-5);
        CHECK(e.hess_err <= 1e-5);
    }
}

TEST_CASE("synthetic regression data") {
    auto a = synth_regression_data(2, 10, 42);
    auto b = synth_regression_data(2, 10, 42);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);
    CHECK(a.lambda == doctest::Approx(std::sqrt(10.0) / 2));
    auto big = synth_regression_data(3, 200000, 1);
    for (int j = 0; j < 3; ++j) {
        double mean = big.X.col(j).mean();
        double var = (big.X.col(j).array() - mean).square().sum() / (big.X.rows() - 1);
        CHECK(std::abs(mean) < 0.01);
        CHECK(std::abs(var - 1) < 0.02);
    }
    auto st = synth_regression_data(3, 50, 1, true);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(st.X.col(j).mean()) < 1e-12);
        CHECK((st.X.col(j).array() - st.X.col(j).mean()).square().sum() / 49 == doctest::Approx(1));
    }
}

TEST_CASE("hyperbolic prior sampler matches its density") {
    Rng rng = make_stream(8, 0);
    for (double lambda : {0.05, 1.5, 150.0}) {
        const int N = 200000;
        const double cut = 1.0 / std::sqrt(lambda);
        double inside = 0;
        for (int i = 0; i < N; ++i) inside += std::abs(sample_hyperbolic_prior(lambda, rng)) < cut;
        // P(|b| < cut) by quadrature of exp(-lambda (sqrt(1 + b^2) - 1))
        double num = 0, den = 0;
        const double h = 1e-4 * cut;
        for (double b = h / 2; b < 400 * cut; b += h) {
            double f = std::exp(-lambda * (std::sqrt(1 + b * b) - 1));
            den += f;
            if (b < cut) num += f;
        }
        double p = num / den;
        CHECK(std::abs(inside / N - p) < 4 * std::sqrt(p * (1 - p) / N));
    }
}

TEST_CASE("binomial sampler") {
    Rng rng = make_stream(9, 0);
    const long n = 40;
    const double p = 0.3;
    const int N = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < N; ++i) {
        double k = static_cast<double>(sample_binomial(n, p, rng));
        CHECK_UNARY(k >= 0 && k <= n);
        s += k;
        s2 += k * k;
    }
    double mean = s / N, var = s2 / N - mean * mean;
    CHECK(std::abs(mean - n * p) < 4 * std::sqrt(n * p * (1 - p) / N));
    CHECK(var == doctest::Approx(n * p * (1 - p)).epsilon(0.03));
    CHECK(sample_binomial(10, 0.0, rng) == 0);
    CHECK(sample_binomial(10, 1.0, rng) == 10);
}

TEST_CASE("synthetic binomial data") {
    auto z = synth_binomial_data(2, 3, 0, 5);
    auto g = synth_binomial_data(2, 3, 7, 5);
    CHECK(((g.X.array() - 7).matrix() - z.X).norm() < 1e-12);
    CHECK(z.w(0) == 1);
    CHECK(z.w(1) == 4);
    CHECK(z.w(2) == 9);
    for (double mu : {0.0, 5.0, 50.0, 200.0}) {
        auto data = synth_binomial_data(2, 10, mu, 11);
        Matrix G = (data.X.array() - mu).matrix();
        double num = (G.col(0).array() + mu).square().sum();
        double den = 0.5 * (G.col(0) - G.col(1)).squaredNorm();
        double k = linalg::spectral_condition_number(SymMatrix::symmetrize(data.X.transpose() * data.X)).cond;
        CHECK(k >= num / den * (1 - 1e-12));
        for (int i = 0; i < 10; ++i) {
            CHECK(data.Y(i) >= 0);
            CHECK(data.Y(i) <= 1);
        }
    }
}

TEST_CASE("finite_diff_check") {
    Rng rng = make_stream(10, 0);
    auto gt = gaussian_target(vec({1, -1, 0.5}), SymMatrix::diag(vec({2, 1, 0.5})));
    for (int k = 0; k < 10; ++k) {
        auto e = finite_diff_check(gt, std_normal(rng, 3), 1e-5);
        CHECK(e.grad_err <= 1e-7);
        CHECK(e.hess_err <= 1e-7);
    }
    auto e = finite_diff_check(cosine_hard_target(1, 4), vec({1, -2}), 1e-5);
    CHECK(e.grad_err <= 1e-5);
    CHECK(e.hess_err <= 1e-5);
}

TEST_CASE("stable logistic helpers") {
    CHECK(logistic(0) == doctest::Approx(0.5));
    CHECK(logistic_var(0) == doctest::Approx(0.25));
    CHECK(logistic_var(800) >= 0);
    CHECK(logistic_var(-800) >= 0);
    CHECK(log1pexp(800) == doctest::Approx(800));
    CHECK(log1pexp(-800) >= 0);
    CHECK(std::isfinite(log1pexp(-800)));
}
