#pragma once

#include <Eigen/Dense>

#include "precond/errors.hpp"

namespace precond::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric matrix. Symmetry is checked exactly on construction;
// use SymMatrix::symmetrize for values produced by floating point products.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    static SymMatrix symmetrize(const Matrix& m);
    static SymMatrix identity(Eigen::Index d);
    static SymMatrix diag(const Vector& v);

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
    Matrix m_;
};

struct EigenDecomposition {
    Vector values;   // descending
    Matrix vectors;  // column i pairs with values(i)
};

struct SpectralSummary {
    double lambda_max;
    double lambda_min;
    double spectral_norm;
    double cond;
};

EigenDecomposition sym_eigen(const SymMatrix& a);
Vector sym_eigenvalues(const SymMatrix& a);  // descending, no vectors
SpectralSummary spectral_condition_number(const SymMatrix& a);

SymMatrix sym_sqrt(const SymMatrix& a);
SymMatrix sym_inv_sqrt(const SymMatrix& a);
SymMatrix sym_inverse(const SymMatrix& a);

// V Sigma V^T from the SVD L = U Sigma V^T.
SymMatrix symmetrize_preconditioner(const Matrix& l);

Matrix givens_rotation(double theta);

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

double spectral_norm(const Matrix& a);
double lambda_min(const SymMatrix& a);
double lambda_max(const SymMatrix& a);

// Throws DefinitenessError unless lambda_min > 1e-12 lambda_max.
void require_spd(const SymMatrix& a, const char* what);

}  // namespace precond::linalg
