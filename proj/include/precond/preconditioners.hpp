#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "precond/targets.hpp"

namespace precond {

struct Preconditioner {
    SymMatrix L;
    Matrix inverse;
    std::string label;
    linalg::EigenDecomposition eigs;  // of L L^T, descending
    double eigengap;                  // +inf when d == 1

    Eigen::Index dim() const { return L.dim(); }
    double sigma1_sq() const { return eigs.values(0); }
    double sigmad_sq() const { return eigs.values(eigs.values.size() - 1); }
};

// Symmetrizes (via the polar factor) and validates an arbitrary invertible L.
Preconditioner make_preconditioner(const Matrix& L, std::string label);

Preconditioner identity_preconditioner(int d);
Preconditioner dense_covariance_preconditioner(const SymMatrix& sigma_hat);
Preconditioner diag_covariance_preconditioner(const SymMatrix& sigma_hat);
Preconditioner fisher_preconditioner(const std::vector<Vector>& gradient_samples);
Preconditioner hessian_at_mode_preconditioner(const DifferentiableTarget& target, const Vector& x_star);
Preconditioner design_preconditioner(const Matrix& X, bool scale_by_n = true);
Preconditioner additive_base_preconditioner(const SymMatrix& A);
Preconditioner scaled(const Preconditioner& p, double c);

// Unbiased sample covariance of the rows of `samples`.
SymMatrix sample_covariance(const Matrix& samples);
SymMatrix sample_covariance(const std::vector<Vector>& samples);

void write_preconditioner_csv(std::ostream& os, const Preconditioner& p);
Preconditioner read_preconditioner_csv(std::istream& is);

// Distribution of y = L x for x ~ target.
struct PreconditionedTarget {
    DifferentiableTarget base;
    Preconditioner pre;

    double potential(const Vector& y) const;
    Vector gradient(const Vector& y) const;
    SymMatrix hessian(const Vector& y) const;
    DifferentiableTarget as_target() const;
};

PreconditionedTarget pushforward(const DifferentiableTarget& target, const Preconditioner& pre);

}  // namespace precond
