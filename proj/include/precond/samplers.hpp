#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "precond/preconditioners.hpp"

namespace precond {

enum class SamplerKind { RWM, MALA };

struct AdaptConfig {
    double target_rate;
    double decay_exponent = 0.6;
};

struct ChainConfig {
    SamplerKind kind = SamplerKind::RWM;
    double step_size = 1.0;
    std::optional<double> xi;  // when set, step_size^2 = xi / (M d)
    Preconditioner preconditioner;
    long n_steps = 0;
    std::uint64_t seed = 0;
    std::optional<AdaptConfig> adapt;
};

struct Trace {
    Matrix states;  // n_steps x d, row t is X_{t+1}
    std::vector<char> accepted;
    std::vector<double> log_potentials;
    ChainConfig config;
    double final_step_size = 0;
    long nonfinite_rejections = 0;

    long size() const { return static_cast<long>(accepted.size()); }
    std::vector<Vector> rows(long first = 0) const;
};

// accept iff log u <= min(0, log_pi_ratio + log_q_ratio); non-finite ratios reject
bool mh_accept(double log_pi_ratio, double log_q_ratio, double u, long* nonfinite = nullptr);

// Step size used by a config: derived from xi when present.
double resolve_step_size(const ChainConfig& cfg, const DifferentiableTarget& target);

// Preconditioned proposals in the original coordinates.
Trace rwm_chain(const DifferentiableTarget& target, const ChainConfig& cfg, const Vector& x0);
Trace mala_chain(const DifferentiableTarget& target, const ChainConfig& cfg, const Vector& x0);
Trace run_chain(const DifferentiableTarget& target, const ChainConfig& cfg, const Vector& x0);

// Same chains run as unpreconditioned samplers on pushforward(target, L),
// with states mapped back by L^-1.
Trace run_chain_pushforward(const DifferentiableTarget& target, const ChainConfig& cfg, const Vector& x0);

// log sigma <- log sigma + t^-decay (accept_prob - target)
double adapt_step_size(double step, long t, double accept_prob, const AdaptConfig& a);

struct ModeOptions {
    double tol = 1e-8;
    long max_iter = 10000;
    // Replace L by Hess(x)^{1/2} every this many iterations (0: never).
    long hessian_refresh = 0;
};
Vector find_mode(const DifferentiableTarget& target, const Preconditioner& pre, const Vector& x0,
                 const ModeOptions& opt = {});

void write_trace_csv(std::ostream& os, const Trace& tr, long thin = 1);

}  // namespace precond
