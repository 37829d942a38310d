#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "precond/matrix_kernel.hpp"
#include "precond/rng.hpp"

namespace precond {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

struct SmoothnessEnvelope {
    double m;
    double M;
    bool m_attained = true;
    bool M_attained = true;
    double kappa() const { return M / m; }
};

struct AdditiveStructure {
    SymMatrix A;
    std::function<SymMatrix(const Vector&)> B;
};

// Per-row infimum and supremum of the diagonal of Lambda(x). When
// jointly_attained, one x (or one limiting sequence) reaches every
// row's sup at once, and likewise for the inf.
struct LambdaExtremes {
    Vector lower;
    Vector upper;
    bool jointly_attained = false;
    double c() const { return lower.minCoeff(); }
    double C() const { return upper.maxCoeff(); }
};

struct MultiplicativeStructure {
    Matrix X;
    std::function<Vector(const Vector&)> lambda_diag;
    std::optional<LambdaExtremes> extremes;
};

using Structure = std::variant<std::monostate, AdditiveStructure, MultiplicativeStructure>;

// Loewner extremes lower <= hess(x) <= upper over all x, together with
// points where they are attained (or, for limits, closely approached):
// witnesses[0] for upper, witnesses[1] for lower.
struct HessianBounds {
    SymMatrix lower;
    SymMatrix upper;
    std::vector<Vector> witnesses;
};

struct DifferentiableTarget {
    int dim = 0;
    std::string name;
    std::function<double(const Vector&)> potential;
    std::function<Vector(const Vector&)> gradient;
    std::function<SymMatrix(const Vector&)> hessian;
    std::optional<SmoothnessEnvelope> envelope;
    Structure structure;
    std::optional<HessianBounds> bounds;
    std::optional<SymMatrix> exact_covariance;
    std::optional<Vector> exact_mode;
};

DifferentiableTarget gaussian_target(const Vector& mu, const SymMatrix& sigma);
DifferentiableTarget cosine_hard_target(double m, double M);
DifferentiableTarget hyperbolic_regression_target(const Matrix& X, const Vector& Y, double sigma2,
                                                  double lambda);
DifferentiableTarget binomial_gprior_target(const Matrix& X, const Vector& Y, const Vector& w,
                                            double lambda_over_n);

struct RegressionData {
    Matrix X;
    Vector Y;
    double lambda;
    Vector beta0;
};

struct BinomialData {
    Matrix X;
    Vector Y;
    Vector w;
    Vector beta0;
};

RegressionData synth_regression_data(int d, int n, std::uint64_t seed, bool standardize = false);
BinomialData synth_binomial_data(int d, int n, double mu, std::uint64_t seed);

// Draw from the density proportional to exp(-lambda sqrt(1 + b^2)).
double sample_hyperbolic_prior(double lambda, Rng& rng);
// Exact Bin(n, p) by inversion of the cdf.
long sample_binomial(long n, double p, Rng& rng);

struct FiniteDiffErrors {
    double grad_err;
    double hess_err;
};

FiniteDiffErrors finite_diff_check(const DifferentiableTarget& t, const Vector& x, double step);

double log1pexp(double z);
double logistic(double z);
double logistic_var(double z);  // p (1 - p), stable for large |z|

}  // namespace precond
