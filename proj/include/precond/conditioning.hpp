#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "precond/preconditioners.hpp"

namespace precond {

enum class Provenance { ClosedForm, Exact, Estimated };
const char* to_string(Provenance p);

struct KappaResult {
    double value;
    Provenance provenance;
    double sup_norm;      // sup ||L^-T H L^-1||
    double sup_inv_norm;  // sup ||L H^-1 L^T||
};

struct EstimatorOptions {
    int starts = 32;
    double start_variance = 4.0;
    double fd_step = 1e-5;
    int max_iter = 200;
    std::uint64_t seed = 0x5eed;
    unsigned threads = 0;  // 0: hardware concurrency
    std::vector<Vector> extra_points;
};

KappaResult condition_number(const DifferentiableTarget& target, const EstimatorOptions& opt = {});
KappaResult kappa_after(const DifferentiableTarget& target, const Preconditioner& pre,
                        const EstimatorOptions& opt = {});
// Loewner-extreme formula; exact when the extremes are attained or approached.
KappaResult kappa_from_bounds(const HessianBounds& b, const Matrix& Linv);
// sup/inf restricted to the given points.
KappaResult kappa_on_points(const DifferentiableTarget& target, const Matrix& Linv,
                            const std::vector<Vector>& points);
// Multistart quasi-Newton search; one-sided (lower) estimate of kappa_L.
KappaResult estimate_kappa(const DifferentiableTarget& target, const Matrix& Linv, const EstimatorOptions& opt);

struct EigenStructureParams {
    double epsilon = 0;
    double delta = 0;
    double gamma = 0;
};

// Probes: up to 128 thinned bulk samples, 128 draws from N(center, 4 (LL^T)^-1),
// and the target's witness points.
std::vector<Vector> default_probes(const DifferentiableTarget& target, const Preconditioner& pre,
                                   const std::vector<Vector>& bulk, Rng& rng, int n_gauss = 128);

double measure_eps_eigenvalue(const DifferentiableTarget& t, const Preconditioner& pre,
                              const std::vector<Vector>& probes);
double measure_delta_eigenvector(const DifferentiableTarget& t, const Preconditioner& pre,
                                 const std::vector<Vector>& probes);
double measure_eps_norm(const DifferentiableTarget& t, const Preconditioner& pre, const std::vector<Vector>& probes);
double measure_min_eigenvalue(const DifferentiableTarget& t, const std::vector<Vector>& probes);

enum class BoundKind {
    Thm1, Thm2, Thm3, Prop3, Prop4, Prop5, Prop5Cor, Prop6, FisherCor, GapSandwich,
    ImprovedGapThreshold, OUGap, CovLocalise, CovLocaliseAdditive, DiagDominance, HardLower
};
const char* to_string(BoundKind k);

struct BoundReport {
    BoundKind kind;
    std::vector<std::pair<std::string, double>> inputs;
    std::vector<std::pair<std::string, double>> values;
    bool certified = true;
    std::string note;

    double value(const std::string& key) const;
    bool has(const std::string& key) const;
    std::string to_json() const;
};

BoundReport hard_target_lower(const Matrix& L, double m, double M);
BoundReport bound_thm1(double eps, double delta, const Vector& sigmas);
BoundReport bound_thm2(double eps, double gamma, double sigma_d, const Vector& sigmas);
BoundReport bound_thm3(double eps, double sigma1, double m);

struct GivensKappa {
    double kappa;
    double coef_displayed;  // (1/4)(l - 2)^2
    double coef_exact;      // delta^4 coefficient of kappa + 1/kappa
    Matrix M;
};
GivensKappa givens_delta_kappa(double lambda1, double lambda2, double delta);

struct GivensInstance {
    DifferentiableTarget target;
    Preconditioner pre;
};
// Sigma = Q diag(l1, l2) Q^T, L = Q G D^-1/2 G^T Q^T with G a rotation by arccos(1 - delta).
GivensInstance givens_instance(double lambda1, double lambda2, double delta, double q_angle = 0.0);

BoundReport mult_kappa_bounds(const DifferentiableTarget& target);
std::vector<BoundReport> mult_dalalyan(const DifferentiableTarget& target);
BoundReport mult_mode_bound(const DifferentiableTarget& target, const Vector& x_star);

BoundReport fisher_bound(double eps, double sigma1, double sigma_d, double m);

inline constexpr double kGapConstant = 1.972e-4;
BoundReport rwm_gap_bounds(double kappa, int d, double xi, double eps, std::optional<double> M = std::nullopt);
BoundReport improved_gap_threshold(double eps_prime, double eps, double sigma1, double m, double xi);

struct OuGap {
    double gap;
    double det;
    bool det_constraint;
};
OuGap ou_spectral_gap(const Matrix& L, const SymMatrix& sigma);

struct Localisation {
    SymMatrix P_minus;
    SymMatrix P_plus;
    double norm_bound;
    double c;
};
Localisation covariance_localisation(const SymMatrix& delta_minus, const SymMatrix& delta_plus,
                                     const Vector& x_star, const Vector& mu);
double covariance_localisation_additive(const SymMatrix& A, double eps, const Vector& x_star, const Vector& mu);

struct DiagDominance {
    double alpha;            // largest a with 1 >= a * sum_{j != i} |C_ij| for all i
    bool dominant;           // alpha > 1
    double displayed_bound;  // d ((1-a)/(1+a))^2 (min S_ii / max S_ii) kappa(S)
    double gershgorin_bound; // (a+1)/(a-1), valid when dominant
    double kappa_corr;
    BoundReport report() const;
};
DiagDominance diag_dominance_bound(const SymMatrix& sigma);

SymMatrix correlation_matrix(const SymMatrix& sigma);

}  // namespace precond
