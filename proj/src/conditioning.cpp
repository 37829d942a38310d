#include "precond/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <json.hpp>

namespace precond {

using linalg::lambda_max;
using linalg::lambda_min;
using linalg::spectral_norm;

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::ClosedForm: return "closed-form";
        case Provenance::Exact: return "exact";
        case Provenance::Estimated: return "estimated";
    }
    return "?";
}

const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::Thm1: return "Thm1";
        case BoundKind::Thm2: return "Thm2";
        case BoundKind::Thm3: return "Thm3";
        case BoundKind::Prop3: return "Prop3";
        case BoundKind::Prop4: return "Prop4";
        case BoundKind::Prop5: return "Prop5";
        case BoundKind::Prop5Cor: return "Prop5Cor";
        case BoundKind::Prop6: return "Prop6";
        case BoundKind::FisherCor: return "FisherCor";
        case BoundKind::GapSandwich: return "GapSandwich";
        case BoundKind::ImprovedGapThreshold: return "ImprovedGapThreshold";
        case BoundKind::OUGap: return "OUGap";
        case BoundKind::CovLocalise: return "CovLocalise";
        case BoundKind::CovLocaliseAdditive: return "CovLocaliseAdditive";
        case BoundKind::DiagDominance: return "DiagDominance";
        case BoundKind::HardLower: return "HardLower";
    }
    return "?";
}

double BoundReport::value(const std::string& key) const {
    for (const auto& [k, v] : values)
        if (k == key) return v;
    throw std::out_of_range("BoundReport has no value '" + key + "'");
}

bool BoundReport::has(const std::string& key) const {
    return std::any_of(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
}

std::string BoundReport::to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = to_string(kind);
    auto in = nlohmann::ordered_json::object();
    for (const auto& [k, v] : inputs) in[k] = v;
    auto out = nlohmann::ordered_json::object();
    for (const auto& [k, v] : values) out[k] = v;
    j["inputs"] = in;
    j["values"] = out;
    j["certified"] = certified;
    if (!note.empty()) j["note"] = note;
    return j.dump();
}

namespace {

SymMatrix conj(const Matrix& Li, const SymMatrix& h) {
    return SymMatrix::symmetrize(Li.transpose() * h.matrix() * Li);
}

struct Extremes {
    double top;
    double bottom;
};

Extremes extremes_at(const DifferentiableTarget& t, const Matrix& Li, const Vector& x) {
    Vector ev = linalg::sym_eigenvalues(conj(Li, t.hessian(x)));
    return {ev(0), ev(ev.size() - 1)};
}

[[noreturn]] void non_convex(double v) {
    throw AssumptionViolation("Hessian is not positive definite at a probed point (eigenvalue " +
                              std::to_string(v) + ")");
}

// Minimize f by BFGS with central-difference gradients and Armijo backtracking.
double bfgs_minimize(const std::function<double(const Vector&)>& f, Vector x, double h0, int max_iter) {
    const Eigen::Index d = x.size();
    auto grad = [&](const Vector& p) {
        Vector g(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            double h = h0 * (1.0 + std::abs(p(i)));
            Vector a = p, b = p;
            a(i) += h;
            b(i) -= h;
            g(i) = (f(a) - f(b)) / (2 * h);
        }
        return g;
    };
    double fx = f(x);
    double best = fx;
    Vector g = grad(x);
    Matrix Hinv = Matrix::Identity(d, d);
    for (int it = 0; it < max_iter; ++it) {
        if (!g.allFinite() || g.norm() <= 1e-10 * (1.0 + std::abs(fx))) break;
        Vector p = -Hinv * g;
        if (p.dot(g) >= 0) {
            Hinv.setIdentity();
            p = -g;
        }
        double step = 1.0, fn = fx;
        Vector xn = x;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = x + step * p;
            fn = f(xn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * step * p.dot(g)) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        Vector gn = grad(xn);
        Vector s = xn - x, y = gn - g;
        double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            double rho = 1.0 / sy;
            Matrix I = Matrix::Identity(d, d);
            Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        bool small = std::abs(fn - fx) <= 1e-13 * (1.0 + std::abs(fx));
        x = xn;
        fx = fn;
        g = gn;
        best = std::min(best, fx);
        if (small) break;
    }
    return best;
}

}  // namespace

KappaResult kappa_from_bounds(const HessianBounds& b, const Matrix& Li) {
    double top = lambda_max(conj(Li, b.upper));
    double bottom = lambda_min(conj(Li, b.lower));
    if (!(bottom > 0)) non_convex(bottom);
    return {top / bottom, Provenance::Exact, top, 1.0 / bottom};
}

KappaResult kappa_on_points(const DifferentiableTarget& t, const Matrix& Li, const std::vector<Vector>& points) {
    if (points.empty()) throw std::invalid_argument("kappa_on_points: no points");
    double top = -std::numeric_limits<double>::infinity(), bottom = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        auto e = extremes_at(t, Li, x);
        if (!(e.bottom > 0)) non_convex(e.bottom);
        top = std::max(top, e.top);
        bottom = std::min(bottom, e.bottom);
    }
    return {top / bottom, Provenance::Estimated, top, 1.0 / bottom};
}

KappaResult estimate_kappa(const DifferentiableTarget& t, const Matrix& Li, const EstimatorOptions& opt) {
    const int d = t.dim;
    Vector center = t.exact_mode ? *t.exact_mode : Vector::Zero(d);
    const int starts = std::max(1, opt.starts);
    std::vector<double> tops(starts), bottoms(starts);
    std::vector<std::exception_ptr> errors(starts);

    auto work = [&](int k) {
        try {
            Rng rng = make_stream(opt.seed, static_cast<std::uint64_t>(k));
            Vector x0 = center + std::sqrt(opt.start_variance) * std_normal(rng, d);
            auto neg_top = [&](const Vector& x) { return -extremes_at(t, Li, x).top; };
            auto bottom = [&](const Vector& x) {
                double b = extremes_at(t, Li, x).bottom;
                if (!(b > 0)) non_convex(b);
                return b;
            };
            tops[k] = -bfgs_minimize(neg_top, x0, opt.fd_step, opt.max_iter);
            bottoms[k] = bfgs_minimize(bottom, x0, opt.fd_step, opt.max_iter);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    unsigned nthreads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(starts));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nthreads; ++w)
        pool.emplace_back([&, w] {
            for (int k = static_cast<int>(w); k < starts; k += static_cast<int>(nthreads)) work(k);
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    double top = *std::max_element(tops.begin(), tops.end());
    double bottom = *std::min_element(bottoms.begin(), bottoms.end());
    std::vector<Vector> pts = opt.extra_points;
    pts.push_back(center);
    auto on = kappa_on_points(t, Li, pts);
    top = std::max(top, on.sup_norm);
    bottom = std::min(bottom, 1.0 / on.sup_inv_norm);
    return {top / bottom, Provenance::Estimated, top, 1.0 / bottom};
}

namespace {

KappaResult exact_verified(const DifferentiableTarget& t, const Matrix& Li) {
    const auto& b = *t.bounds;
    auto exact = kappa_from_bounds(b, Li);
    if (!b.witnesses.empty()) {
        auto seen = kappa_on_points(t, Li, b.witnesses);
        double rel = std::abs(seen.value - exact.value) / exact.value;
        if (rel > 1e-6)
            throw std::runtime_error("kappa certificate failed: witnesses give " + std::to_string(seen.value) +
                                     ", bounds give " + std::to_string(exact.value));
    }
    return exact;
}

}  // namespace

KappaResult condition_number(const DifferentiableTarget& t, const EstimatorOptions& opt) {
    if (t.envelope) {
        const auto& e = *t.envelope;
        if (!(e.m > 0) || e.M < e.m) throw AssumptionViolation("envelope is not strongly convex");
        return {e.M / e.m, Provenance::ClosedForm, e.M, 1.0 / e.m};
    }
    Matrix I = Matrix::Identity(t.dim, t.dim);
    if (t.bounds) return exact_verified(t, I);
    return estimate_kappa(t, I, opt);
}

KappaResult kappa_after(const DifferentiableTarget& t, const Preconditioner& pre, const EstimatorOptions& opt) {
    if (t.dim != pre.dim()) throw DimensionError("kappa_after: dimension mismatch");
    if (t.bounds) return exact_verified(t, pre.inverse);
    return estimate_kappa(t, pre.inverse, opt);
}

std::vector<Vector> default_probes(const DifferentiableTarget& t, const Preconditioner& pre,
                                   const std::vector<Vector>& bulk, Rng& rng, int n_gauss) {
    std::vector<Vector> out;
    const std::size_t take = std::min<std::size_t>(128, bulk.size());
    for (std::size_t k = 0; k < take; ++k) out.push_back(bulk[k * bulk.size() / take]);
    Vector center = t.exact_mode ? *t.exact_mode : Vector::Zero(t.dim);
    if (!t.exact_mode && !bulk.empty()) {
        center.setZero();
        for (const auto& b : bulk) center += b;
        center /= static_cast<double>(bulk.size());
    }
    // (LL^T)^{-1/2} = L^{-1} for symmetric L
    for (int k = 0; k < n_gauss; ++k) out.push_back(center + 2.0 * pre.inverse * std_normal(rng, t.dim));
    if (t.bounds)
        for (const auto& w : t.bounds->witnesses) out.push_back(w);
    return out;
}

double measure_eps_eigenvalue(const DifferentiableTarget& t, const Preconditioner& pre,
                              const std::vector<Vector>& probes) {
    if (probes.empty()) throw std::invalid_argument("no probes");
    const Vector& s2 = pre.eigs.values;
    double eps = 0;
    for (const auto& x : probes) {
        Vector lam = linalg::sym_eigenvalues(t.hessian(x));
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            double r = lam(i) / s2(i);
            if (!(r > 0)) non_convex(lam(i));
            eps = std::max(eps, std::max(r, 1.0 / r) - 1.0);
        }
    }
    return eps;
}

double measure_delta_eigenvector(const DifferentiableTarget& t, const Preconditioner& pre,
                                 const std::vector<Vector>& probes) {
    if (probes.empty()) throw std::invalid_argument("no probes");
    const Vector& s2 = pre.eigs.values;
    auto degenerate = [](const Vector& v) {
        double scale = v.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i + 1 < v.size(); ++i)
            if (std::abs(v(i) - v(i + 1)) < 1e-10 * scale) return true;
        return false;
    };
    if (degenerate(s2)) throw DegeneratePairingError("LL^T has (near-)repeated eigenvalues");
    double a = 1.0;
    for (const auto& x : probes) {
        auto e = linalg::sym_eigen(t.hessian(x));
        if (degenerate(e.values)) throw DegeneratePairingError("Hessian has (near-)repeated eigenvalues at a probe");
        for (Eigen::Index i = 0; i < e.values.size(); ++i)
            a = std::min(a, std::abs(e.vectors.col(i).dot(pre.eigs.vectors.col(i))));
    }
    double r = 1.0 - std::sqrt(std::max(0.0, 1.0 - a));
    return std::clamp(1.0 - r * r, 0.0, 1.0);
}

double measure_eps_norm(const DifferentiableTarget& t, const Preconditioner& pre, const std::vector<Vector>& probes) {
    if (probes.empty()) throw std::invalid_argument("no probes");
    Matrix LLt = pre.L.matrix() * pre.L.matrix();
    double worst = 0;
    for (const auto& x : probes) worst = std::max(worst, spectral_norm(t.hessian(x).matrix() - LLt));
    return worst / pre.sigmad_sq();
}

double measure_min_eigenvalue(const DifferentiableTarget& t, const std::vector<Vector>& probes) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& x : probes) m = std::min(m, lambda_min(t.hessian(x)));
    return m;
}

BoundReport hard_target_lower(const Matrix& L, double m, double M) {
    auto k = linalg::spectral_condition_number(SymMatrix::symmetrize(L * L.transpose())).cond;
    return {BoundKind::HardLower, {{"kappa_LLt", k}, {"m", m}, {"M", M}}, {{"lower", k * M / m}}, true, {}};
}

BoundReport bound_thm1(double eps, double delta, const Vector& sigmas) {
    if (eps < 0 || delta < 0) throw std::invalid_argument("bound_thm1: negative constant");
    if (delta > 1) throw std::invalid_argument("bound_thm1: delta must be in [0, 1]");
    if (sigmas.size() == 0 || !(sigmas.minCoeff() > 0)) throw std::invalid_argument("bound_thm1: sigmas must be positive");
    Vector s2 = sigmas.array().square();
    double alt = std::sqrt(s2.sum() * s2.cwiseInverse().sum());
    double cap = sigmas.size() * sigmas.maxCoeff() / sigmas.minCoeff();
    double v = std::pow(1 + eps, 2) * std::pow(1 + delta * alt, 4);
    return {BoundKind::Thm1, {{"epsilon", eps}, {"delta", delta}, {"d", double(sigmas.size())}},
            {{"upper", v}, {"trace_condition", alt}, {"trace_condition_cap", cap}}, true, {}};
}

BoundReport bound_thm2(double eps, double gamma, double sigma_d, const Vector& sigmas) {
    if (!(gamma > 0)) throw EigengapError("bound_thm2: eigengap is zero");
    double r = 2.0 * eps * sigma_d * sigma_d / gamma;
    if (r > 1) throw BoundInapplicable("bound_thm2: 2 sigma_d^2 eps / gamma = " + std::to_string(r) + " > 1");
    double delta = 1.0 - (1.0 - r) * (1.0 - r);
    auto rep = bound_thm1(eps, delta, sigmas);
    rep.kind = BoundKind::Thm2;
    rep.inputs = {{"epsilon", eps}, {"gamma", gamma}, {"sigma_d", sigma_d}, {"delta", delta}};
    return rep;
}

BoundReport bound_thm3(double eps, double sigma1, double m) {
    if (eps < 0 || !(m > 0)) throw std::invalid_argument("bound_thm3: need eps >= 0, m > 0");
    double v = (1 + eps) * (1 + sigma1 * sigma1 * eps / m);
    return {BoundKind::Thm3, {{"epsilon", eps}, {"sigma1", sigma1}, {"m", m}}, {{"upper", v}}, true, {}};
}

GivensKappa givens_delta_kappa(double l1, double l2, double delta) {
    if (l1 == l2) throw std::invalid_argument("givens_delta_kappa: eigenvalues must differ");
    if (delta < 0 || delta > 1) throw std::invalid_argument("givens_delta_kappa: delta must be in [0, 1]");
    Matrix G = linalg::givens_rotation(std::acos(1.0 - delta));
    Matrix Dh = Vector(Eigen::Vector2d(std::sqrt(l1), std::sqrt(l2))).asDiagonal();
    Matrix Di = Vector(Eigen::Vector2d(1 / l1, 1 / l2)).asDiagonal();
    Matrix M = Dh * G.transpose() * Di * G * Dh;
    double tr = M.trace();
    double lam1 = 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0)));
    double l = l1 / l2 + l2 / l1;
    return {lam1 * lam1, 0.25 * (l - 2) * (l - 2), (l - 2) * (l - 2), M};
}

GivensInstance givens_instance(double l1, double l2, double delta, double q_angle) {
    Matrix Q = linalg::givens_rotation(q_angle);
    Matrix G = linalg::givens_rotation(std::acos(1.0 - delta));
    Matrix D = Vector(Eigen::Vector2d(l1, l2)).asDiagonal();
    Matrix Dmh = Vector(Eigen::Vector2d(1 / std::sqrt(l1), 1 / std::sqrt(l2))).asDiagonal();
    SymMatrix sigma = SymMatrix::symmetrize(Q * D * Q.transpose());
    Matrix L = Q * G * Dmh * G.transpose() * Q.transpose();
    return {gaussian_target(Vector::Zero(2), sigma), make_preconditioner(L, "givens")};
}

namespace {

const MultiplicativeStructure& mult_of(const DifferentiableTarget& t) {
    auto* m = std::get_if<MultiplicativeStructure>(&t.structure);
    if (!m) throw std::invalid_argument("target has no multiplicative structure");
    if (!m->extremes) throw std::invalid_argument("multiplicative structure has no Lambda extremes");
    return *m;
}

// k-th largest (1-based) entry
double kth_largest(Vector v, Eigen::Index k) {
    std::sort(v.data(), v.data() + v.size(), std::greater<>());
    return v(k - 1);
}

bool constant(const Vector& v) {
    return (v.maxCoeff() - v.minCoeff()) <= 1e-12 * std::abs(v.maxCoeff());
}

}  // namespace

BoundReport mult_kappa_bounds(const DifferentiableTarget& t) {
    const auto& ms = mult_of(t);
    const auto& ex = *ms.extremes;
    const Eigen::Index n = ms.X.rows(), d = ms.X.cols();
    double kx = linalg::spectral_condition_number(SymMatrix::symmetrize(ms.X.transpose() * ms.X)).cond;
    BoundReport r{BoundKind::Prop3, {{"kappa_XtX", kx}, {"sup_lambda1", ex.C()}, {"inf_lambda_n", ex.c()}}, {}, true, {}};
    if (ex.jointly_attained) {
        double top = kth_largest(ex.upper, n - d + 1), bottom = kth_largest(ex.lower, d);
        r.inputs.push_back({"sup_lambda_n-d+1", top});
        r.inputs.push_back({"inf_lambda_d", bottom});
        r.values.push_back({"lower", top / (bottom * kx)});
    } else {
        r.note = "lower bound needs jointly attained extremes";
    }
    r.values.push_back({"upper", kx * ex.C() / ex.c()});
    if (constant(ex.lower) && constant(ex.upper)) r.values.push_back({"prop4", kx * ex.C() / ex.c()});
    return r;
}

std::vector<BoundReport> mult_dalalyan(const DifferentiableTarget& t) {
    const auto& ms = mult_of(t);
    const auto& ex = *ms.extremes;
    const Eigen::Index n = ms.X.rows(), d = ms.X.cols();
    std::vector<BoundReport> out;
    BoundReport p5{BoundKind::Prop5, {{"sup_lambda1", ex.C()}, {"inf_lambda_n", ex.c()}}, {}, true, {}};
    if (ex.jointly_attained) {
        double top = kth_largest(ex.upper, n - d + 1), bottom = kth_largest(ex.lower, d);
        p5.values.push_back({"lower", top / bottom});
    }
    p5.values.push_back({"upper", ex.C() / ex.c()});
    out.push_back(p5);
    if (constant(ex.lower) && constant(ex.upper))
        out.push_back({BoundKind::Prop5Cor, {{"c", ex.c()}, {"C", ex.C()}}, {{"value", ex.C() / ex.c()}}, true, {}});
    return out;
}

BoundReport mult_mode_bound(const DifferentiableTarget& t, const Vector& x_star) {
    const auto& ms = mult_of(t);
    const auto& ex = *ms.extremes;
    Vector ls = ms.lambda_diag(x_star);
    if (!(ls.minCoeff() > 0)) throw std::invalid_argument("mult_mode_bound: Lambda(x*) must be positive");
    double top = ex.upper.cwiseQuotient(ls).maxCoeff();
    double bottom = ex.lower.cwiseQuotient(ls).minCoeff();
    double cap = std::pow(ex.C() / ex.c(), 2);
    return {BoundKind::Prop6, {{"sup_ratio", top}, {"inf_ratio", bottom}}, {{"upper", top / bottom}, {"cap", cap}},
            true, {}};
}

BoundReport fisher_bound(double eps, double sigma1, double sigma_d, double m) {
    if (eps < 0 || !(m > 0)) throw std::invalid_argument("fisher_bound: need eps >= 0, m > 0");
    double nb = 2 * sigma_d * sigma_d * eps;
    double kb = (1 + 2 * eps) * (1 + 2 * sigma1 * sigma1 * eps / m);
    return {BoundKind::FisherCor, {{"epsilon", eps}, {"sigma1", sigma1}, {"sigma_d", sigma_d}, {"m", m}},
            {{"norm_bound", nb}, {"upper", kb}}, true, {}};
}

BoundReport rwm_gap_bounds(double kappa, int d, double xi, double eps, std::optional<double> M) {
    if (kappa < 1 || d < 1 || !(xi > 0) || eps < 0) throw std::invalid_argument("rwm_gap_bounds: bad arguments");
    double lower = kGapConstant * xi * std::exp(-2 * xi) / (kappa * d);
    double upper = (1 + 2 * eps) * (xi / 2) / (kappa * d);
    BoundReport r{BoundKind::GapSandwich, {{"kappa", kappa}, {"d", double(d)}, {"xi", xi}, {"epsilon", eps}},
                  {{"lower", lower}, {"upper", upper}}, true, {}};
    if (M) r.values.push_back({"sigma2", xi / (*M * d)});
    return r;
}

BoundReport improved_gap_threshold(double eps_prime, double eps, double sigma1, double m, double xi) {
    if (eps_prime < 0 || eps < 0 || sigma1 < 0 || !(m > 0) || xi < 0)
        throw std::invalid_argument("improved_gap_threshold: bad arguments");
    double v = 0.5 / kGapConstant * std::exp(2 * xi) * (1 + 2 * eps_prime) * (1 + eps) *
               (1 + sigma1 * sigma1 * eps / m);
    return {BoundKind::ImprovedGapThreshold,
            {{"epsilon_prime", eps_prime}, {"epsilon", eps}, {"sigma1", sigma1}, {"m", m}, {"xi", xi}},
            {{"threshold", v}}, true, {}};
}

OuGap ou_spectral_gap(const Matrix& L, const SymMatrix& sigma) {
    if (L.rows() != sigma.dim() || L.cols() != sigma.dim()) throw DimensionError("ou_spectral_gap: dimension mismatch");
    Eigen::PartialPivLU<Matrix> lu(L);
    Matrix Li = lu.inverse();
    SymMatrix prec = linalg::sym_inverse(sigma);
    // L^-1 L^-T S^-1 is similar to L^-T S^-1 L^-1
    Vector ev = linalg::sym_eigenvalues(SymMatrix::symmetrize(Li.transpose() * prec.matrix() * Li));
    double det = ev.prod();
    return {ev.cwiseAbs().minCoeff(), det, std::abs(std::abs(det) - 1.0) <= 1e-9};
}

namespace {

double log_det_spd(const SymMatrix& a) {
    Eigen::LLT<Matrix> llt(a.matrix());
    if (llt.info() != Eigen::Success) throw DefinitenessError("matrix is not positive definite", 0.0);
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

Localisation covariance_localisation(const SymMatrix& dm, const SymMatrix& dp, const Vector& x_star, const Vector& mu) {
    if (dm.dim() != dp.dim() || x_star.size() != dm.dim() || mu.size() != dm.dim())
        throw DimensionError("covariance_localisation: dimension mismatch");
    linalg::require_spd(dm, "Delta_-");
    linalg::require_spd(dp, "Delta_+");
    if (!linalg::loewner_leq(dm, dp, 1e-10 * lambda_max(dp)))
        throw std::invalid_argument("covariance_localisation: need Delta_- <= Delta_+");
    Vector h = x_star - mu;
    double tp = h.dot(dp.matrix() * h), tm = h.dot(dm.matrix() * h);
    if (!(1 - tp > 0)) throw BoundInapplicable("covariance_localisation: 1 - Tr(D_+) <= 0");
    if (!(1 - tm > 0)) throw BoundInapplicable("covariance_localisation: 1 - Tr(D_-) <= 0");
    double c = std::exp(0.5 * (log_det_spd(dm) - log_det_spd(dp)));
    Vector ap = dp.matrix() * h, am = dm.matrix() * h;
    SymMatrix Pp = SymMatrix::symmetrize((dp.matrix() + ap * ap.transpose() / (1 - tp)) / c);
    SymMatrix Pm = SymMatrix::symmetrize(c * (dm.matrix() + am * am.transpose() / (1 - tm)));
    double nb = std::max(spectral_norm(dp.matrix() - Pm.matrix()), spectral_norm(Pp.matrix() - dm.matrix()));
    return {Pm, Pp, nb, c};
}

double covariance_localisation_additive(const SymMatrix& A, double eps, const Vector& x_star, const Vector& mu) {
    if (eps < 0) throw std::invalid_argument("covariance_localisation_additive: eps must be >= 0");
    const Eigen::Index d = A.dim();
    if (!(lambda_min(A) > eps)) throw BoundInapplicable("covariance_localisation_additive: need eps I < A");
    Matrix I = Matrix::Identity(d, d);
    SymMatrix Ap(A.matrix() + eps * I), Am(A.matrix() - eps * I);
    Vector h = x_star - mu;
    double tp = h.dot(Ap.matrix() * h), tm = h.dot(Am.matrix() * h);
    if (!(1 - tp > 0) || !(1 - tm > 0)) throw BoundInapplicable("covariance_localisation_additive: trace condition fails");
    double c = std::exp(0.5 * (log_det_spd(Am) - log_det_spd(Ap)));
    Vector ap = Ap.matrix() * h, am = Am.matrix() * h;
    double np = spectral_norm(ap * ap.transpose() / (c * (1 - tp)));
    double nm = spectral_norm(c * am * am.transpose() / (1 - tm));
    return (1 / c + 1) * eps + (1 / c - 1) * spectral_norm(A.matrix()) + std::max(np, nm);
}

SymMatrix correlation_matrix(const SymMatrix& sigma) {
    Vector dg = sigma.matrix().diagonal();
    if (!(dg.minCoeff() > 0)) throw DefinitenessError("covariance has a non-positive diagonal entry", dg.minCoeff());
    Vector s = dg.array().rsqrt();
    return SymMatrix::symmetrize(s.asDiagonal() * sigma.matrix() * s.asDiagonal());
}

DiagDominance diag_dominance_bound(const SymMatrix& sigma) {
    SymMatrix C = correlation_matrix(sigma);
    const Eigen::Index d = C.dim();
    double rowmax = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        double s = 0;
        for (Eigen::Index j = 0; j < d; ++j)
            if (j != i) s += std::abs(C(i, j));
        rowmax = std::max(rowmax, s);
    }
    DiagDominance out{};
    out.alpha = rowmax > 0 ? 1.0 / rowmax : std::numeric_limits<double>::infinity();
    out.dominant = rowmax < 1.0;
    Vector dg = sigma.matrix().diagonal();
    double ratio = dg.minCoeff() / dg.maxCoeff();
    double ks = linalg::spectral_condition_number(sigma).cond;
    double f = std::isinf(out.alpha) ? 1.0 : std::pow((1 - out.alpha) / (1 + out.alpha), 2);
    out.displayed_bound = d * f * ratio * ks;
    out.gershgorin_bound = out.dominant ? (1 + rowmax) / (1 - rowmax) : std::numeric_limits<double>::infinity();
    out.kappa_corr = linalg::spectral_condition_number(C).cond;
    return out;
}

BoundReport DiagDominance::report() const {
    BoundReport r{BoundKind::DiagDominance, {{"alpha", alpha}, {"kappa_corr", kappa_corr}},
                  {{"displayed", displayed_bound}}, false, {}};
    if (dominant) {
        r.values.push_back({"gershgorin", gershgorin_bound});
        r.note = "the displayed value is not a valid bound in general; gershgorin is";
    } else {
        r.note = "correlation matrix is not diagonally dominant (alpha <= 1); bound inapplicable";
    }
    return r;
}

}  // namespace precond
