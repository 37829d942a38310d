#include "precond/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace precond {

namespace {

// Sums p[0..m) pairing p[i] with p[m-1-i] so that reversing the input
// gives a bit-identical result.
template <class F>
double symmetric_sum(long m, const F& p) {
    double s = 0;
    long i = 0, j = m - 1;
    for (; i < j; ++i, --j) s += p(i) + p(j);
    if (i == j) s += p(i);
    return s;
}

struct Centered {
    std::vector<double> x;
    double var;  // biased
};

Centered center(const Vector& series) {
    const long n = series.size();
    double mean = symmetric_sum(n, [&](long i) { return series(i); }) / n;
    Centered c{std::vector<double>(static_cast<std::size_t>(n)), 0};
    for (long i = 0; i < n; ++i) c.x[static_cast<std::size_t>(i)] = series(i) - mean;
    c.var = symmetric_sum(n, [&](long i) { return c.x[static_cast<std::size_t>(i)] * c.x[static_cast<std::size_t>(i)]; }) / n;
    if (!(c.var > 0)) throw std::domain_error("series has zero variance");
    return c;
}

double autocov(const Centered& c, long k) {
    const long n = static_cast<long>(c.x.size());
    const double* x = c.x.data();
    return symmetric_sum(n - k, [&](long t) { return x[t] * x[t + k]; }) / n;
}

}  // namespace

double ess(const Vector& series) {
    const long n = series.size();
    if (n < 100) throw std::invalid_argument("ess: need at least 100 values");
    if (!series.allFinite()) throw std::invalid_argument("ess: non-finite values");
    auto c = center(series);
    const long kmax = std::min(n / 2, 10000L);
    double sum = 0, prev = std::numeric_limits<double>::infinity();
    for (long m = 0; 2 * m + 1 < kmax; ++m) {
        double g = (autocov(c, 2 * m) + autocov(c, 2 * m + 1)) / c.var;
        if (g <= 0) break;
        g = std::min(g, prev);
        prev = g;
        sum += g;
    }
    double tau = std::max(-1.0 + 2.0 * sum, 1.0 / n);
    return n / tau;
}

EssReport ess_report(const Matrix& states) {
    EssReport r{Vector(states.cols()), 0, static_cast<long>(states.rows())};
    std::vector<double> v;
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
        r.per_dimension(j) = ess(states.col(j));
        v.push_back(r.per_dimension(j));
    }
    r.median = median(v);
    return r;
}

double lag_autocorrelation(const Vector& series, long k) {
    if (k < 0 || 2 * k >= series.size()) throw std::invalid_argument("lag_autocorrelation: need 0 <= k < n/2");
    auto c = center(series);
    return autocov(c, k) / c.var;
}

GapEstimate empirical_gap_upper(const Matrix& states, const Vector& v, int batches) {
    if (v.size() != states.cols() || !(v.norm() > 0)) throw std::invalid_argument("empirical_gap_upper: bad direction");
    Vector g = states * v;
    const long n = g.size();
    auto c = center(g);
    double est = 1.0 - autocov(c, 1) / c.var;
    const long b = n / batches;
    if (batches < 2 || b < 10) return {est, std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> bv;
    for (int k = 0; k < batches; ++k) {
        Vector seg = g.segment(k * b, b);
        auto cb = center(seg);
        bv.push_back(1.0 - autocov(cb, 1) / cb.var);
    }
    double mean = std::accumulate(bv.begin(), bv.end(), 0.0) / batches;
    double ss = 0;
    for (double x : bv) ss += (x - mean) * (x - mean);
    return {est, std::sqrt(ss / (batches - 1) / batches)};
}

GapEstimate empirical_gap_upper(const Trace& tr, const Vector& v, int batches) {
    return empirical_gap_upper(tr.states, v, batches);
}

double acceptance_rate(const std::vector<char>& accepted) {
    if (accepted.empty()) throw std::invalid_argument("acceptance_rate: empty trace");
    return static_cast<double>(std::count(accepted.begin(), accepted.end(), char(1))) / accepted.size();
}

double acceptance_rate(const Trace& tr) { return acceptance_rate(tr.accepted); }

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

// z statistic for U_a - E[U_a] and the continuity-corrected variance terms
struct MwStat {
    double u_minus_mean;
    double sd;
};

MwStat mw_stat(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na == 0 || nb == 0) throw std::invalid_argument("mann_whitney: empty sample");
    std::vector<std::pair<double, int>> all;
    for (double x : a) all.push_back({x, 0});
    for (double x : b) all.push_back({x, 1});
    std::sort(all.begin(), all.end(), [](auto& l, auto& r) { return l.first < r.first; });
    const std::size_t N = all.size();
    double ra = 0, tie = 0;
    for (std::size_t i = 0; i < N;) {
        std::size_t j = i;
        while (j < N && all[j].first == all[i].first) ++j;
        double rank = 0.5 * (i + 1 + j);
        double t = static_cast<double>(j - i);
        tie += t * t * t - t;
        for (std::size_t k = i; k < j; ++k)
            if (all[k].second == 0) ra += rank;
        i = j;
    }
    double ua = ra - na * (na + 1) / 2.0;
    double mean = na * nb / 2.0;
    double var = na * nb / 12.0 * ((N + 1) - tie / (static_cast<double>(N) * (N - 1)));
    return {ua - mean, std::sqrt(std::max(var, 0.0))};
}

double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double mann_whitney_greater(const std::vector<double>& a, const std::vector<double>& b) {
    auto s = mw_stat(a, b);
    if (s.sd == 0) return s.u_minus_mean > 0 ? 0.0 : 1.0;
    return norm_sf((s.u_minus_mean - 0.5) / s.sd);
}

double mann_whitney_two_sided(const std::vector<double>& a, const std::vector<double>& b) {
    auto s = mw_stat(a, b);
    if (s.sd == 0) return s.u_minus_mean == 0 ? 1.0 : 0.0;
    double z = (std::abs(s.u_minus_mean) - 0.5) / s.sd;
    return std::min(1.0, 2.0 * norm_sf(std::max(z, 0.0)));
}

}  // namespace precond
