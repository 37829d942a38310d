#include <doctest.h>

#include <cmath>

#include "precond/conditioning.hpp"
#include "precond/errors.hpp"
#include "precond/fixtures.hpp"
#include "precond/matrix_kernel.hpp"
#include "precond/rng.hpp"

using namespace precond;
using namespace precond::linalg;

namespace {

SymMatrix random_spd(Rng& rng, int d, double shift = 0.5) {
    Matrix g = std_normal(rng, d, d);
    return SymMatrix::symmetrize(g * g.transpose() / d + shift * Matrix::Identity(d, d));
}

}  // namespace

TEST_CASE("symmetric storage is checked exactly") {
    Matrix m(2, 2);
    m << 1, 2, 2.0000001, 1;
    CHECK_THROWS_AS(SymMatrix{m}, std::invalid_argument);
    CHECK(SymMatrix::symmetrize(m)(0, 1) == SymMatrix::symmetrize(m)(1, 0));
}

TEST_CASE("sym_eigen on identity and diagonal") {
    auto e = sym_eigen(SymMatrix::identity(3));
    CHECK((e.values - Vector::Ones(3)).norm() < 1e-15);

    auto f = sym_eigen(SymMatrix::diag(Vector::Map(std::vector<double>{4, 1}.data(), 2)));
    CHECK(f.values(0) == doctest::Approx(4));
    CHECK(f.values(1) == doctest::Approx(1));
    CHECK(std::abs(f.vectors(0, 0)) == doctest::Approx(1));
    CHECK(std::abs(f.vectors(1, 1)) == doctest::Approx(1));
}

TEST_CASE("sym_eigen rejects non-finite input") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 0) = std::nan("");
    CHECK_THROWS(sym_eigen(SymMatrix::symmetrize(m)));
}

TEST_CASE("sigma_pi spectrum") {
    auto v = sym_eigenvalues(fixtures::sigma_pi());
    CHECK(v(0) / v(4) == doctest::Approx(4400).epsilon(1e-9));
    auto disp = sym_eigenvalues(fixtures::sigma_pi_displayed());
    CHECK(disp(4) < 0);
    Matrix diff = fixtures::sigma_pi().matrix() - fixtures::sigma_pi_displayed().matrix();
    CHECK(diff.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("eigendecomposition reconstruction, orthonormality, ordering and signs") {
    Rng rng = make_stream(11, 0);
    for (int d : {1, 2, 5, 20, 100}) {
        auto a = random_spd(rng, d);
        auto e = sym_eigen(a);
        Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rec - a.matrix()).norm() / a.matrix().norm() < 1e-10);
        CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);
        for (int i = 1; i < d; ++i) CHECK(e.values(i - 1) >= e.values(i));
        for (int j = 0; j < d; ++j) {
            int k = 0;
            while (k < d && e.vectors(k, j) == 0) ++k;
            CHECK(e.vectors(k, j) > 0);
        }
    }
}

TEST_CASE("spectral_condition_number") {
    CHECK(spectral_condition_number(SymMatrix::identity(4)).cond == doctest::Approx(1));
    Vector d(2);
    d << 10, 0.1;
    auto s = spectral_condition_number(SymMatrix::diag(d));
    CHECK(s.cond == doctest::Approx(100));
    CHECK(s.spectral_norm == doctest::Approx(10));
    Vector z(2);
    z << 1, 0;
    CHECK_THROWS_AS(spectral_condition_number(SymMatrix::diag(z)), SingularityError);
}

TEST_CASE("correlation matrix of sigma_pi is ill-conditioned") {
    double c = spectral_condition_number(correlation_matrix(fixtures::sigma_pi())).cond;
    CHECK(c > fixtures::kSigmaPiKappa);
    CHECK(c == doctest::Approx(7.79e3).epsilon(0.01));
}

TEST_CASE("condition number is scale invariant") {
    Rng rng = make_stream(12, 0);
    for (int t = 0; t < 10; ++t) {
        auto a = random_spd(rng, 6);
        double k = spectral_condition_number(a).cond;
        for (double c : {3.0, -0.25, 1e6})
            CHECK(spectral_condition_number(SymMatrix::symmetrize(c * a.matrix())).cond ==
                  doctest::Approx(k).epsilon(1e-10));
    }
}

TEST_CASE("matrix square roots") {
    CHECK((sym_sqrt(SymMatrix::identity(3)).matrix() - Matrix::Identity(3, 3)).norm() < 1e-15);
    Vector d(2);
    d << 4, 9;
    auto r = sym_sqrt(SymMatrix::diag(d));
    CHECK(r(0, 0) == doctest::Approx(2));
    CHECK(r(1, 1) == doctest::Approx(3));
    CHECK(sym_inv_sqrt(SymMatrix::diag(d))(0, 0) == doctest::Approx(0.5));

    Rng rng = make_stream(13, 0);
    for (int t = 0; t < 20; ++t) {
        auto a = random_spd(rng, 4);
        Matrix s = sym_sqrt(a).matrix();
        CHECK((s * s - a.matrix()).norm() / a.matrix().norm() < 1e-9);
        Matrix is = sym_inv_sqrt(a).matrix();
        CHECK((is * a.matrix() * is - Matrix::Identity(4, 4)).norm() < 1e-9);
    }
}

TEST_CASE("sym_sqrt rejects indefinite input") {
    CHECK_THROWS_AS(sym_sqrt(fixtures::sigma_pi_displayed()), DefinitenessError);
    CHECK_THROWS_AS(require_spd(fixtures::sigma_pi_displayed(), "sigma"), DefinitenessError);
}

TEST_CASE("symmetrize_preconditioner") {
    Matrix q = givens_rotation(0.7);
    CHECK((symmetrize_preconditioner(q).matrix() - Matrix::Identity(2, 2)).norm() < 1e-12);
    Matrix d(2, 2);
    d << -2, 0, 0, 3;
    auto s = symmetrize_preconditioner(d);
    CHECK(s(0, 0) == doctest::Approx(2));
    CHECK(s(1, 1) == doctest::Approx(3));

    Rng rng = make_stream(14, 0);
    for (int t = 0; t < 20; ++t) {
        Matrix l = std_normal(rng, 4, 4);
        auto once = symmetrize_preconditioner(l);
        auto twice = symmetrize_preconditioner(once.matrix());
        CHECK((once.matrix() - twice.matrix()).cwiseAbs().maxCoeff() < 1e-12 * once.matrix().norm());
        // same L^T L, hence the same kappa_L on every target
        CHECK((once.matrix() * once.matrix() - l.transpose() * l).norm() < 1e-10 * l.squaredNorm());
    }
}

TEST_CASE("givens_rotation") {
    CHECK((givens_rotation(0) - Matrix::Identity(2, 2)).norm() == 0);
    Matrix r = givens_rotation(M_PI / 2);
    CHECK(r(0, 0) == doctest::Approx(0).epsilon(1e-15));
    CHECK(r(0, 1) == doctest::Approx(-1));
    CHECK(r(1, 0) == doctest::Approx(1));
    Matrix h = givens_rotation(M_PI / 4);
    CHECK(std::abs(h(0, 0)) == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(std::abs(h(0, 1)) == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("loewner_leq") {
    auto i = SymMatrix::identity(3);
    auto two = SymMatrix::symmetrize(2 * Matrix::Identity(3, 3));
    CHECK(loewner_leq(i, two, 0));
    CHECK_FALSE(loewner_leq(two, i, 0));
    CHECK(loewner_leq(i, i, 1e-12));
}

TEST_CASE("spectral helpers") {
    Vector d(3);
    d << -5, 2, 1;
    auto s = SymMatrix::diag(d);
    CHECK(spectral_norm(s.matrix()) == doctest::Approx(5));
    CHECK(lambda_min(s) == doctest::Approx(-5));
    CHECK(lambda_max(s) == doctest::Approx(2));
    auto sum = spectral_condition_number(s);
    CHECK(sum.spectral_norm >= std::abs(sum.lambda_max));
    CHECK(sum.spectral_norm >= std::abs(sum.lambda_min));
    CHECK(sum.cond == doctest::Approx(5));
}
