#include "precond/preconditioners.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace precond {

namespace {

Preconditioner from_spd(SymMatrix L, std::string label) {
    linalg::require_spd(L, "preconditioner");
    Preconditioner p;
    p.inverse = linalg::sym_inverse(L).matrix();
    p.eigs = linalg::sym_eigen(SymMatrix::symmetrize(L.matrix() * L.matrix()));
    p.eigengap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < p.eigs.values.size(); ++i)
        p.eigengap = std::min(p.eigengap, std::abs(p.eigs.values(i) - p.eigs.values(i + 1)));
    p.L = std::move(L);
    p.label = std::move(label);
    return p;
}

}  // namespace

Preconditioner make_preconditioner(const Matrix& L, std::string label) {
    if (L.rows() == L.cols() && L == L.transpose() && L.allFinite()) {
        SymMatrix s(L);
        if (linalg::lambda_min(s) > 1e-12 * linalg::lambda_max(s)) return from_spd(std::move(s), std::move(label));
    }
    return from_spd(linalg::symmetrize_preconditioner(L), std::move(label));
}

Preconditioner identity_preconditioner(int d) {
    return from_spd(SymMatrix::identity(d), "identity");
}

Preconditioner dense_covariance_preconditioner(const SymMatrix& sigma_hat) {
    return from_spd(linalg::sym_inv_sqrt(sigma_hat), "covariance");
}

Preconditioner diag_covariance_preconditioner(const SymMatrix& sigma_hat) {
    Vector dg = sigma_hat.matrix().diagonal();
    for (Eigen::Index i = 0; i < dg.size(); ++i)
        if (!(dg(i) > 0))
            throw DefinitenessError("diagonal covariance entry " + std::to_string(i) + " is not positive", dg(i));
    return from_spd(SymMatrix::diag(dg.array().rsqrt()), "diagonal");
}

Preconditioner fisher_preconditioner(const std::vector<Vector>& gradient_samples) {
    if (gradient_samples.empty()) throw std::invalid_argument("fisher_preconditioner: no samples");
    const Eigen::Index d = gradient_samples.front().size();
    Matrix F = Matrix::Zero(d, d);
    for (const auto& g : gradient_samples) F.noalias() += g * g.transpose();
    F /= static_cast<double>(gradient_samples.size());
    return from_spd(linalg::sym_sqrt(SymMatrix::symmetrize(F)), "fisher");
}

Preconditioner hessian_at_mode_preconditioner(const DifferentiableTarget& target, const Vector& x_star) {
    return from_spd(linalg::sym_sqrt(target.hessian(x_star)), "mode");
}

Preconditioner design_preconditioner(const Matrix& X, bool scale_by_n) {
    Matrix xtx = X.transpose() * X;
    if (scale_by_n) xtx /= static_cast<double>(X.rows());
    return from_spd(linalg::sym_sqrt(SymMatrix::symmetrize(xtx)), "design");
}

Preconditioner additive_base_preconditioner(const SymMatrix& A) {
    return from_spd(linalg::sym_sqrt(A), "additive-base");
}

Preconditioner scaled(const Preconditioner& p, double c) {
    if (!(c > 0)) throw std::invalid_argument("scaled: c must be positive");
    return from_spd(SymMatrix(c * p.L.matrix()), p.label);
}

SymMatrix sample_covariance(const Matrix& samples) {
    const Eigen::Index n = samples.rows();
    if (n < 2) throw std::invalid_argument("sample_covariance: need at least two samples");
    Vector mean = samples.colwise().mean();
    Matrix c = samples.rowwise() - mean.transpose();
    return SymMatrix::symmetrize(c.transpose() * c / static_cast<double>(n - 1));
}

SymMatrix sample_covariance(const std::vector<Vector>& samples) {
    if (samples.empty()) throw std::invalid_argument("sample_covariance: no samples");
    Matrix m(static_cast<Eigen::Index>(samples.size()), samples.front().size());
    for (std::size_t i = 0; i < samples.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = samples[i].transpose();
    return sample_covariance(m);
}

void write_preconditioner_csv(std::ostream& os, const Preconditioner& p) {
    const Eigen::Index d = p.dim();
    os << p.label << ',' << d << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", p.L(i, j));
            os << (j ? "," : "") << buf;
        }
        os << '\n';
    }
}

Preconditioner read_preconditioner_csv(std::istream& is) {
    std::string line;
    int lineno = 1;
    if (!std::getline(is, line)) throw ParseError("missing header", lineno);
    auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("header must be 'label,dim'", lineno);
    std::string label = line.substr(0, comma);
    long d = 0;
    try {
        d = std::stol(line.substr(comma + 1));
    } catch (const std::exception&) {
        throw ParseError("bad dimension in header", lineno);
    }
    if (d < 1) throw ParseError("dimension must be positive", lineno);
    Matrix L(d, d);
    for (long i = 0; i < d; ++i) {
        ++lineno;
        if (!std::getline(is, line)) throw ParseError("missing matrix row", lineno);
        std::stringstream ss(line);
        std::string cell;
        long j = 0;
        while (std::getline(ss, cell, ',')) {
            if (j >= d) throw ParseError("too many columns", lineno);
            try {
                std::size_t used = 0;
                L(i, j) = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("bad number '" + cell + "'", lineno);
            }
            ++j;
        }
        if (j != d) throw ParseError("expected " + std::to_string(d) + " columns", lineno);
    }
    return make_preconditioner(L, label);
}

double PreconditionedTarget::potential(const Vector& y) const {
    return base.potential(pre.inverse * y);
}

Vector PreconditionedTarget::gradient(const Vector& y) const {
    return pre.inverse * base.gradient(pre.inverse * y);
}

SymMatrix PreconditionedTarget::hessian(const Vector& y) const {
    const Matrix& Li = pre.inverse;
    return SymMatrix::symmetrize(Li * base.hessian(Li * y).matrix() * Li);
}

DifferentiableTarget PreconditionedTarget::as_target() const {
    DifferentiableTarget t;
    const Matrix Li = pre.inverse;
    const Matrix L = pre.L.matrix();
    auto b = base;
    t.dim = base.dim;
    t.name = base.name + "|" + pre.label;
    t.potential = [b, Li](const Vector& y) { return b.potential(Li * y); };
    t.gradient = [b, Li](const Vector& y) -> Vector { return Li * b.gradient(Li * y); };
    t.hessian = [b, Li](const Vector& y) { return SymMatrix::symmetrize(Li * b.hessian(Li * y).matrix() * Li); };
    auto conj = [&Li](const SymMatrix& h) { return SymMatrix::symmetrize(Li * h.matrix() * Li); };

    if (base.bounds) {
        HessianBounds hb{conj(base.bounds->lower), conj(base.bounds->upper), {}};
        for (const auto& w : base.bounds->witnesses) hb.witnesses.push_back(L * w);
        if (base.envelope) {
            t.envelope = SmoothnessEnvelope{linalg::lambda_min(hb.lower), linalg::lambda_max(hb.upper),
                                            base.envelope->m_attained, base.envelope->M_attained};
        }
        t.bounds = std::move(hb);
    }
    if (auto* add = std::get_if<AdditiveStructure>(&base.structure)) {
        auto B = add->B;
        t.structure = AdditiveStructure{conj(add->A), [B, Li](const Vector& y) {
                                            return SymMatrix::symmetrize(Li * B(Li * y).matrix() * Li);
                                        }};
    } else if (auto* mul = std::get_if<MultiplicativeStructure>(&base.structure)) {
        auto lam = mul->lambda_diag;
        t.structure = MultiplicativeStructure{mul->X * Li, [lam, Li](const Vector& y) { return lam(Li * y); },
                                              mul->extremes};
    }
    if (base.exact_covariance)
        t.exact_covariance = SymMatrix::symmetrize(L * base.exact_covariance->matrix() * L);
    if (base.exact_mode) t.exact_mode = L * *base.exact_mode;
    return t;
}

PreconditionedTarget pushforward(const DifferentiableTarget& target, const Preconditioner& pre) {
    if (target.dim != pre.dim()) throw DimensionError("pushforward: dimension mismatch");
    return PreconditionedTarget{target, pre};
}

}  // namespace precond
