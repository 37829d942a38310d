#include "precond/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace precond {

double log1pexp(double z) {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logistic_var(double z) {
    double e = std::exp(-std::abs(z));
    return e / ((1.0 + e) * (1.0 + e));
}

DifferentiableTarget gaussian_target(const Vector& mu, const SymMatrix& sigma) {
    if (mu.size() != sigma.dim()) throw DimensionError("gaussian_target: mean/covariance mismatch");
    linalg::require_spd(sigma, "covariance");
    SymMatrix prec = linalg::sym_inverse(sigma);
    auto ev = linalg::sym_eigen(sigma).values;
    const Eigen::Index d = mu.size();

    DifferentiableTarget t;
    t.dim = static_cast<int>(d);
    t.name = "gaussian";
    Matrix P = prec.matrix();
    t.potential = [mu, P](const Vector& x) {
        Vector r = x - mu;
        return 0.5 * r.dot(P * r);
    };
    t.gradient = [mu, P](const Vector& x) -> Vector { return P * (x - mu); };
    t.hessian = [prec](const Vector&) { return prec; };
    t.envelope = SmoothnessEnvelope{1.0 / ev(0), 1.0 / ev(d - 1), true, true};
    t.bounds = HessianBounds{prec, prec, {mu, mu}};
    t.exact_covariance = sigma;
    t.exact_mode = mu;
    return t;
}

DifferentiableTarget cosine_hard_target(double m, double M) {
    if (!(m > 0) || !(M >= m)) throw std::invalid_argument("cosine_hard_target: need 0 < m <= M");
    DifferentiableTarget t;
    t.dim = 2;
    t.name = "cosine";
    const double a = 0.5 * (m - M), b = 0.5 * (M + m);
    t.potential = [a, b](const Vector& x) {
        return a * (std::cos(x(0)) + std::cos(x(1))) + b * 0.5 * (x(0) * x(0) + x(1) * x(1));
    };
    t.gradient = [a, b](const Vector& x) -> Vector {
        Vector g(2);
        g << -a * std::sin(x(0)) + b * x(0), -a * std::sin(x(1)) + b * x(1);
        return g;
    };
    t.hessian = [a, b](const Vector& x) {
        Vector h(2);
        h << -a * std::cos(x(0)) + b, -a * std::cos(x(1)) + b;
        return SymMatrix::diag(h);
    };
    t.envelope = SmoothnessEnvelope{m, M, true, true};
    const double pi = std::acos(-1.0);
    t.bounds = HessianBounds{SymMatrix(m * Matrix::Identity(2, 2)), SymMatrix(M * Matrix::Identity(2, 2)),
                             {Vector::Zero(2), Vector::Constant(2, pi)}};
    // 64 x 64 grid over [0, 2 pi)^2 plus the bounds above certify kappa_L
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            Vector p(2);
            p << 2 * pi * i / 64.0, 2 * pi * j / 64.0;
            t.bounds->witnesses.push_back(p);
        }
    t.exact_mode = Vector::Zero(2);
    return t;
}

DifferentiableTarget hyperbolic_regression_target(const Matrix& X, const Vector& Y, double sigma2,
                                                  double lambda) {
    if (X.rows() != Y.size()) throw DimensionError("hyperbolic target: X/Y row mismatch");
    if (X.rows() < X.cols()) throw DimensionError("hyperbolic target: need n >= d");
    if (!(sigma2 > 0) || !(lambda > 0)) throw std::invalid_argument("hyperbolic target: need sigma2, lambda > 0");
    const Eigen::Index d = X.cols();
    SymMatrix xtx = SymMatrix::symmetrize(X.transpose() * X);
    auto ev = linalg::sym_eigen(xtx).values;
    if (!(ev(d - 1) > 1e-12 * ev(0))) throw SingularityError("hyperbolic target: X^T X is singular");

    Matrix A = xtx.matrix() / sigma2;
    Vector xty = X.transpose() * Y / sigma2;
    double yty = Y.squaredNorm() / sigma2;

    DifferentiableTarget t;
    t.dim = static_cast<int>(d);
    t.name = "hyperbolic";
    t.potential = [A, xty, yty, lambda](const Vector& b) {
        double quad = 0.5 * (yty - 2 * b.dot(xty) + b.dot(A * b));
        return quad + lambda * (1.0 + b.array().square()).sqrt().sum();
    };
    t.gradient = [A, xty, lambda](const Vector& b) -> Vector {
        return A * b - xty + lambda * (b.array() / (1.0 + b.array().square()).sqrt()).matrix();
    };
    auto Bfun = [lambda](const Vector& b) {
        Vector dd = lambda * (1.0 + b.array().square()).pow(-1.5);
        return SymMatrix::diag(dd);
    };
    t.hessian = [A, Bfun](const Vector& b) {
        Matrix h = A;
        h.diagonal() += Bfun(b).matrix().diagonal();
        return SymMatrix(std::move(h));
    };
    SymMatrix Asym(A);
    t.structure = AdditiveStructure{Asym, Bfun};
    t.envelope = SmoothnessEnvelope{ev(d - 1) / sigma2, ev(0) / sigma2 + lambda, false, true};
    Matrix Ahi = A;
    Ahi.diagonal().array() += lambda;
    // B(b) -> 0 as |b_i| -> inf in every coordinate
    t.bounds = HessianBounds{Asym, SymMatrix(Ahi), {Vector::Zero(d), Vector::Constant(d, 1e8)}};
    return t;
}

DifferentiableTarget binomial_gprior_target(const Matrix& X, const Vector& Y, const Vector& w,
                                            double lambda_over_n) {
    const Eigen::Index n = X.rows(), d = X.cols();
    if (Y.size() != n || w.size() != n) throw DimensionError("binomial target: size mismatch");
    if (n < d) throw DimensionError("binomial target: need n >= d");
    if (!(w.minCoeff() > 0)) throw std::invalid_argument("binomial target: weights must be positive");
    if (!(lambda_over_n > 0)) throw std::invalid_argument("binomial target: need lambda/n > 0");
    const double g = lambda_over_n;
    SymMatrix xtx = SymMatrix::symmetrize(X.transpose() * X);
    auto ev = linalg::sym_eigen(xtx).values;
    if (!(ev(d - 1) > 1e-12 * ev(0))) throw SingularityError("binomial target: X^T X is singular");
    Matrix XtWX = X.transpose() * w.asDiagonal() * X;
    XtWX = (0.5 * (XtWX + XtWX.transpose())).eval();
    Vector wy = w.cwiseProduct(Y);

    DifferentiableTarget t;
    t.dim = static_cast<int>(d);
    t.name = "binomial";
    t.potential = [X, w, wy, XtWX, g](const Vector& b) {
        Vector z = X * b;
        double s = 0;
        for (Eigen::Index i = 0; i < z.size(); ++i) s += w(i) * log1pexp(z(i)) - wy(i) * z(i);
        return s + 0.5 * g * b.dot(XtWX * b);
    };
    t.gradient = [X, w, wy, XtWX, g](const Vector& b) -> Vector {
        Vector z = X * b;
        Vector r(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = w(i) * logistic(z(i)) - wy(i);
        return X.transpose() * r + g * (XtWX * b);
    };
    auto lam = [X, w, g](const Vector& b) -> Vector {
        Vector z = X * b;
        Vector l(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) l(i) = w(i) * (logistic_var(z(i)) + g);
        return l;
    };
    t.hessian = [X, lam](const Vector& b) {
        return SymMatrix::symmetrize(X.transpose() * lam(b).asDiagonal() * X);
    };
    LambdaExtremes ext{w * g, w * (0.25 + g), true};
    t.structure = MultiplicativeStructure{X, lam, ext};
    t.envelope = SmoothnessEnvelope{g * w.minCoeff() * ev(d - 1), (0.25 + g) * w.maxCoeff() * ev(0), false,
                                    false};

    // Far along a direction with every |X_i^T v| bounded away from zero all
    // logistic variances vanish together.
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = 1.0 / std::sqrt(static_cast<double>(j + 1)) + 0.1 * j;
    double zmin = (X * v).cwiseAbs().minCoeff();
    if (zmin < 1e-3) {
        v = X.transpose() * Vector::Ones(n) + Vector::LinSpaced(d, 0.3, 1.7);
        zmin = (X * v).cwiseAbs().minCoeff();
    }
    Vector far = v * (2000.0 / std::max(zmin, 1e-12));
    SymMatrix lo = SymMatrix::symmetrize(g * XtWX);
    SymMatrix hi = SymMatrix::symmetrize((0.25 + g) * XtWX);
    t.bounds = HessianBounds{lo, hi, {Vector::Zero(d), far}};
    return t;
}

double sample_hyperbolic_prior(double lambda, Rng& rng) {
    if (!(lambda > 0)) throw std::invalid_argument("sample_hyperbolic_prior: need lambda > 0");
    // Laplace(rate r = t lambda) envelope; log f/g peaks at lambda (1 - sqrt(1 - t^2))
    const double t = std::min(0.9, 1.0 / std::sqrt(lambda));
    const double r = t * lambda;
    const double peak = lambda * (1.0 - std::sqrt(1.0 - t * t));
    std::exponential_distribution<double> expo(r);
    for (;;) {
        double b = expo(rng);
        double log_acc = -lambda * (std::sqrt(1.0 + b * b) - 1.0) + r * b - peak;
        if (uniform01(rng) < 0.5) b = -b;
        if (std::log(uniform01(rng)) < log_acc) return b;
    }
}

long sample_binomial(long n, double p, Rng& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double lp = std::log(p), lq = std::log1p(-p);
    const double lgn = std::lgamma(static_cast<double>(n) + 1);
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    double total = 0;
    for (long k = 0; k <= n; ++k) {
        double lk = lgn - std::lgamma(k + 1.0) - std::lgamma(static_cast<double>(n - k) + 1) + k * lp +
                    (n - k) * lq;
        pmf[static_cast<std::size_t>(k)] = std::exp(lk);
        total += pmf[static_cast<std::size_t>(k)];
    }
    double u = uniform01(rng) * total, acc = 0;
    for (long k = 0; k <= n; ++k) {
        acc += pmf[static_cast<std::size_t>(k)];
        if (u < acc) return k;
    }
    return n;
}

RegressionData synth_regression_data(int d, int n, std::uint64_t seed, bool standardize) {
    if (d < 1 || n < d) throw std::invalid_argument("synth_regression_data: need n >= d >= 1");
    Rng rng(seed);
    RegressionData out;
    out.X = std_normal(rng, n, d);
    if (standardize) {
        for (int j = 0; j < d; ++j) {
            auto col = out.X.col(j);
            double mean = col.mean();
            col.array() -= mean;
            double sd = std::sqrt(col.squaredNorm() / (n > 1 ? n - 1 : 1));
            if (sd > 0) col /= sd;
        }
    }
    out.lambda = std::sqrt(static_cast<double>(n)) / d;
    out.beta0.resize(d);
    for (int j = 0; j < d; ++j) out.beta0(j) = sample_hyperbolic_prior(out.lambda, rng);
    out.Y = out.X * out.beta0 + std_normal(rng, n);
    return out;
}

BinomialData synth_binomial_data(int d, int n, double mu, std::uint64_t seed) {
    if (d < 1 || n < d || mu < 0) throw std::invalid_argument("synth_binomial_data: bad arguments");
    Rng rng(seed);
    BinomialData out;
    out.X = std_normal(rng, n, d).array() + mu;
    out.w.resize(n);
    for (int i = 0; i < n; ++i) out.w(i) = static_cast<double>(i + 1) * (i + 1);
    out.beta0 = std_normal(rng, d);
    Vector z = out.X * out.beta0;
    out.Y.resize(n);
    for (int i = 0; i < n; ++i) {
        long wi = static_cast<long>(out.w(i));
        out.Y(i) = static_cast<double>(sample_binomial(wi, logistic(z(i)), rng)) / out.w(i);
    }
    return out;
}

FiniteDiffErrors finite_diff_check(const DifferentiableTarget& t, const Vector& x, double step) {
    const Eigen::Index d = x.size();
    const double h = step * (1.0 + x.norm());
    Vector g = t.gradient(x);
    Matrix H = t.hessian(x).matrix();
    Vector gfd(d);
    Matrix hfd(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        gfd(i) = (t.potential(xp) - t.potential(xm)) / (2 * h);
        hfd.col(i) = (t.gradient(xp) - t.gradient(xm)) / (2 * h);
    }
    double ge = (g - gfd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
    double he = (H - hfd).cwiseAbs().maxCoeff() / std::max(1.0, H.cwiseAbs().maxCoeff());
    return {ge, he};
}

}  // namespace precond
