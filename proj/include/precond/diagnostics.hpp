#pragma once

#include <vector>

#include "precond/samplers.hpp"

namespace precond {

struct EssReport {
    Vector per_dimension;
    double median;
    long n;
};

// Geyer initial monotone sequence estimator, n / (1 + 2 sum rho_k).
double ess(const Vector& series);
EssReport ess_report(const Matrix& states);

double lag_autocorrelation(const Vector& series, long k);

struct GapEstimate {
    double value;
    double se;
};
// 1 - rho_1 of <v, X_t>, standard error from `batches` batch means.
GapEstimate empirical_gap_upper(const Matrix& states, const Vector& v, int batches = 50);
GapEstimate empirical_gap_upper(const Trace& tr, const Vector& v, int batches = 50);

double acceptance_rate(const Trace& tr);
double acceptance_rate(const std::vector<char>& accepted);

double median(std::vector<double> v);

// Mann-Whitney U test, normal approximation with tie and continuity corrections.
// One-sided p-value for H1: a tends to exceed b.
double mann_whitney_greater(const std::vector<double>& a, const std::vector<double>& b);
double mann_whitney_two_sided(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace precond
