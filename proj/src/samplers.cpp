#include "precond/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace precond {

std::vector<Vector> Trace::rows(long first) const {
    std::vector<Vector> out;
    for (long t = first; t < states.rows(); ++t) out.push_back(states.row(t).transpose());
    return out;
}

bool mh_accept(double log_pi_ratio, double log_q_ratio, double u, long* nonfinite) {
    double r = log_pi_ratio + log_q_ratio;
    if (std::isnan(r) || r == std::numeric_limits<double>::infinity()) {
        if (nonfinite) ++*nonfinite;
        return false;
    }
    if (r >= 0) return true;
    return std::log(u) <= r;
}

double adapt_step_size(double step, long t, double accept_prob, const AdaptConfig& a) {
    double gain = std::pow(static_cast<double>(std::max(1L, t)), -a.decay_exponent);
    return step * std::exp(gain * (accept_prob - a.target_rate));
}

double resolve_step_size(const ChainConfig& cfg, const DifferentiableTarget& target) {
    if (cfg.xi) {
        if (!target.envelope) throw std::invalid_argument("xi tuning needs a smoothness envelope");
        return std::sqrt(*cfg.xi / (target.envelope->M * target.dim));
    }
    if (!(cfg.step_size > 0)) throw std::invalid_argument("step size must be positive");
    return cfg.step_size;
}

namespace {

void validate(const ChainConfig& cfg, const DifferentiableTarget& t, const Vector& x0) {
    if (x0.size() != t.dim || cfg.preconditioner.dim() != t.dim) throw DimensionError("chain: dimension mismatch");
    if (cfg.n_steps < 0) throw std::invalid_argument("chain: negative n_steps");
    if (cfg.adapt && !(cfg.adapt->target_rate > 0 && cfg.adapt->target_rate < 1))
        throw std::invalid_argument("chain: target acceptance rate must lie in (0, 1)");
}

// Core sampler. Proposals are y' = y + sigma xi (RWM) or
// y' = y - sigma^2/2 grad(y) + sigma xi (MALA) in coordinates y = L x;
// `Li` maps y-increments to x-increments. With Li = I and the pushforward
// potential this is the plain sampler on the transformed target.
template <class Pot, class Grad>
Trace core(const Pot& U, const Grad& gradU, const Matrix& L, const Matrix& Li, const ChainConfig& cfg,
           double step, const Vector& x0, bool mala) {
    const Eigen::Index d = x0.size();
    Trace tr;
    tr.config = cfg;
    tr.states.resize(cfg.n_steps, d);
    tr.accepted.resize(static_cast<std::size_t>(cfg.n_steps));
    tr.log_potentials.resize(static_cast<std::size_t>(cfg.n_steps));
    Rng rng = make_stream(cfg.seed, 0);
    std::normal_distribution<double> n01;

    Vector x = x0;
    double ux = U(x);
    if (!std::isfinite(ux)) throw std::invalid_argument("chain: non-finite potential at the initial state");
    // drift in x-space is (LL^T)^-1 grad U = Li Li^T grad U
    Vector gx;
    if (mala) {
        gx = Li * (Li.transpose() * gradU(x));
        if (!gx.allFinite()) throw std::invalid_argument("chain: non-finite gradient at the initial state");
    }
    Vector z(d), xp(d), gp;
    for (long t = 0; t < cfg.n_steps; ++t) {
        for (Eigen::Index i = 0; i < d; ++i) z(i) = n01(rng);
        double u = uniform01(rng);
        double lq = 0;
        if (mala) {
            xp = x - 0.5 * step * step * gx + step * (Li * z);
            gp = Li * (Li.transpose() * gradU(xp));
            // Gaussian proposal densities in y coordinates
            Vector fwd = L * (xp - x + 0.5 * step * step * gx);
            Vector bwd = L * (x - xp + 0.5 * step * step * gp);
            lq = (fwd.squaredNorm() - bwd.squaredNorm()) / (2 * step * step);
        } else {
            xp = x + step * (Li * z);
        }
        double up = U(xp);
        double lpi = ux - up;
        bool acc = mh_accept(lpi, lq, u, &tr.nonfinite_rejections);
        if (mala && !gp.allFinite()) acc = false;
        if (acc) {
            x = xp;
            ux = up;
            if (mala) gx = gp;
        }
        if (cfg.adapt) {
            double a = std::isfinite(lpi + lq) ? std::min(1.0, std::exp(lpi + lq)) : 0.0;
            step = adapt_step_size(step, t + 1, a, *cfg.adapt);
        }
        tr.states.row(t) = x.transpose();
        tr.accepted[static_cast<std::size_t>(t)] = acc;
        tr.log_potentials[static_cast<std::size_t>(t)] = ux;
    }
    tr.final_step_size = step;
    return tr;
}

}  // namespace

Trace rwm_chain(const DifferentiableTarget& t, const ChainConfig& cfg, const Vector& x0) {
    if (cfg.kind != SamplerKind::RWM) throw std::invalid_argument("rwm_chain: config kind is not RWM");
    validate(cfg, t, x0);
    return core(t.potential, t.gradient, cfg.preconditioner.L.matrix(), cfg.preconditioner.inverse, cfg,
                resolve_step_size(cfg, t), x0, false);
}

Trace mala_chain(const DifferentiableTarget& t, const ChainConfig& cfg, const Vector& x0) {
    if (cfg.kind != SamplerKind::MALA) throw std::invalid_argument("mala_chain: config kind is not MALA");
    if (!t.gradient) throw std::invalid_argument("mala_chain: target has no gradient");
    validate(cfg, t, x0);
    return core(t.potential, t.gradient, cfg.preconditioner.L.matrix(), cfg.preconditioner.inverse, cfg,
                resolve_step_size(cfg, t), x0, true);
}

Trace run_chain(const DifferentiableTarget& t, const ChainConfig& cfg, const Vector& x0) {
    return cfg.kind == SamplerKind::RWM ? rwm_chain(t, cfg, x0) : mala_chain(t, cfg, x0);
}

Trace run_chain_pushforward(const DifferentiableTarget& t, const ChainConfig& cfg, const Vector& x0) {
    validate(cfg, t, x0);
    auto pf = pushforward(t, cfg.preconditioner);
    const Eigen::Index d = t.dim;
    Matrix I = Matrix::Identity(d, d);
    auto U = [&pf](const Vector& y) { return pf.potential(y); };
    auto G = [&pf](const Vector& y) { return pf.gradient(y); };
    Trace tr = core(U, G, I, I, cfg, resolve_step_size(cfg, t), cfg.preconditioner.L.matrix() * x0,
                    cfg.kind == SamplerKind::MALA);
    tr.states = tr.states * cfg.preconditioner.inverse.transpose();
    return tr;
}

Vector find_mode(const DifferentiableTarget& t, const Preconditioner& pre, const Vector& x0, const ModeOptions& opt) {
    if (x0.size() != t.dim) throw DimensionError("find_mode: dimension mismatch");
    Matrix Pinv = pre.inverse * pre.inverse;  // (LL^T)^-1
    Vector x = x0;
    double fx = t.potential(x);
    Vector g = t.gradient(x);
    double step = 1.0;
    for (long it = 0; it < opt.max_iter; ++it) {
        if (g.norm() <= opt.tol) return x;
        if (opt.hessian_refresh > 0 && it > 0 && it % opt.hessian_refresh == 0) {
            try {
                Pinv = linalg::sym_inverse(t.hessian(x)).matrix();
                step = 1.0;
            } catch (const DefinitenessError&) {
            }
        }
        Vector p = -Pinv * g;
        double slope = p.dot(g);
        if (!(slope < 0)) {
            p = -g;
            slope = -g.squaredNorm();
        }
        step = std::min(1.0, 2.0 * step);
        Vector xn;
        double fn = fx;
        bool ok = false;
        for (int ls = 0; ls < 80; ++ls) {
            xn = x + step * p;
            fn = t.potential(xn);
            if (std::isfinite(fn)) {
                if (step * std::abs(slope) > 1e-10 * (1 + std::abs(fx))) {
                    ok = fn <= fx + 1e-4 * step * slope;
                } else {
                    // predicted decrease at roundoff level: judge the step by the gradient norm
                    Vector gt = t.gradient(xn);
                    ok = gt.allFinite() && gt.norm() < g.norm();
                }
                if (ok) break;
            }
            step *= 0.5;
        }
        if (!ok) {
            // potential differences below roundoff; fall back to gradient-norm decrease
            for (double s = 1.0; s > 1e-6 && !ok; s *= 0.5) {
                xn = x + s * p;
                Vector gt = t.gradient(xn);
                if (gt.allFinite() && gt.norm() < g.norm()) {
                    ok = true;
                    fn = t.potential(xn);
                    step = s;
                }
            }
        }
        Vector gn = ok ? t.gradient(xn) : g;
        if (!ok || (xn - x).norm() <= 1e-15 * (1 + x.norm())) {
            // no representable descent left; accept if the gradient is at roundoff level
            if (gn.norm() <= opt.tol) return ok ? xn : x;
            if (opt.hessian_refresh == 0) break;
            try {
                Pinv = linalg::sym_inverse(t.hessian(x)).matrix();
            } catch (const DefinitenessError&) {
                break;
            }
            if (!ok) {
                step = 1.0;
                continue;
            }
        }
        x = xn;
        fx = fn;
        g = gn;
    }
    if (g.norm() <= opt.tol) return x;
    throw ConvergenceError("find_mode: gradient norm " + std::to_string(g.norm()) + " above tolerance after " +
                           std::to_string(opt.max_iter) + " iterations");
}

void write_trace_csv(std::ostream& os, const Trace& tr, long thin) {
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    const Eigen::Index d = tr.states.cols();
    os << "step,accepted";
    for (Eigen::Index i = 0; i < d; ++i) os << ",x_" << (i + 1);
    os << ",logU\n";
    char buf[40];
    for (long t = 0; t < tr.size(); t += thin) {
        os << (t + 1) << ',' << int(tr.accepted[static_cast<std::size_t>(t)]);
        for (Eigen::Index i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", tr.states(t, i));
            os << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", tr.log_potentials[static_cast<std::size_t>(t)]);
        os << ',' << buf << '\n';
    }
}

}  // namespace precond
