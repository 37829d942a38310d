#include "precond/matrix_kernel.hpp"

#include <cmath>
#include <sstream>

namespace precond::linalg {

namespace {

void require_finite(const Matrix& m) {
    if (!m.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
}

void require_square(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw DimensionError("expected a non-empty square matrix");
}

Matrix spectral_apply(const SymMatrix& a, double (*f)(double)) {
    auto e = sym_eigen(a);
    Vector fv = e.values.unaryExpr(f);
    Matrix r = e.vectors * fv.asDiagonal() * e.vectors.transpose();
    return 0.5 * (r + r.transpose());
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    require_square(m_);
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m_.cols(); ++j)
            if (m_(i, j) != m_(j, i)) throw std::invalid_argument("matrix is not symmetric");
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
    require_square(m);
    return SymMatrix(0.5 * (m + m.transpose()));
}

SymMatrix SymMatrix::identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }

SymMatrix SymMatrix::diag(const Vector& v) { return SymMatrix(Matrix(v.asDiagonal())); }

EigenDecomposition sym_eigen(const SymMatrix& a) {
    require_finite(a.matrix());
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
    if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
    const Eigen::Index d = a.dim();
    EigenDecomposition out{Vector(d), Matrix(d, d)};
    // Eigen returns ascending order
    for (Eigen::Index i = 0; i < d; ++i) {
        out.values(i) = es.eigenvalues()(d - 1 - i);
        Vector v = es.eigenvectors().col(d - 1 - i);
        for (Eigen::Index k = 0; k < d; ++k) {
            if (v(k) != 0.0) {
                if (v(k) < 0) v = -v;
                break;
            }
        }
        out.vectors.col(i) = v;
    }
    return out;
}

Vector sym_eigenvalues(const SymMatrix& a) {
    require_finite(a.matrix());
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
    return es.eigenvalues().reverse();
}

SpectralSummary spectral_condition_number(const SymMatrix& a) {
    auto e = sym_eigen(a);
    Vector absv = e.values.cwiseAbs();
    double amax = absv.maxCoeff(), amin = absv.minCoeff();
    if (!(amin >= 1e-14 * amax) || amax == 0.0)
        throw SingularityError("matrix is numerically singular");
    return {e.values(0), e.values(e.values.size() - 1), amax, amax / amin};
}

void require_spd(const SymMatrix& a, const char* what) {
    auto v = sym_eigenvalues(a);
    double lmax = v(0), lmin = v(v.size() - 1);
    if (!(lmin > 1e-12 * lmax) || lmax <= 0) {
        std::ostringstream os;
        os << what << " is not positive definite (eigenvalue " << lmin << ")";
        throw DefinitenessError(os.str(), lmin);
    }
}

SymMatrix sym_sqrt(const SymMatrix& a) {
    require_spd(a, "matrix");
    return SymMatrix::symmetrize(spectral_apply(a, [](double x) { return std::sqrt(x); }));
}

SymMatrix sym_inv_sqrt(const SymMatrix& a) {
    require_spd(a, "matrix");
    return SymMatrix::symmetrize(spectral_apply(a, [](double x) { return 1.0 / std::sqrt(x); }));
}

SymMatrix sym_inverse(const SymMatrix& a) {
    require_spd(a, "matrix");
    return SymMatrix::symmetrize(spectral_apply(a, [](double x) { return 1.0 / x; }));
}

SymMatrix symmetrize_preconditioner(const Matrix& l) {
    require_square(l);
    require_finite(l);
    Eigen::JacobiSVD<Matrix> svd(l, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    if (!(s(s.size() - 1) > 1e-14 * s(0)))
        throw SingularityError("preconditioner is not invertible");
    const Matrix& v = svd.matrixV();
    return SymMatrix::symmetrize(v * s.asDiagonal() * v.transpose());
}

Matrix givens_rotation(double theta) {
    Matrix g(2, 2);
    double c = std::cos(theta), s = std::sin(theta);
    g << c, -s, s, c;
    return g;
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
    if (a.dim() != b.dim()) throw DimensionError("loewner_leq: dimension mismatch");
    return lambda_min(SymMatrix::symmetrize(b.matrix() - a.matrix())) >= -tol;
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

double lambda_min(const SymMatrix& a) {
    auto v = sym_eigenvalues(a);
    return v(v.size() - 1);
}

double lambda_max(const SymMatrix& a) { return sym_eigenvalues(a)(0); }

}  // namespace precond::linalg
