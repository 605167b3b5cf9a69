#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace test_helpers {

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// Random correlation matrix from a normalised Gram matrix of Gaussians,
// regenerated until reasonably conditioned.
inline Eigen::MatrixXd random_correlation(int k, std::mt19937_64& eng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    while (true) {
        Eigen::MatrixXd g(k + 3, k);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < k; ++j) g(i, j) = normal(eng);
        Eigen::MatrixXd s = g.transpose() * g;
        Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
        s = d.asDiagonal() * s * d.asDiagonal();
        s = 0.5 * (s + s.transpose().eval());
        for (int i = 0; i < k; ++i) s(i, i) = 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        if (es.eigenvalues().minCoeff() > 1e-4) return s;
    }
}

// b with mixed signs and at least one positive component.
inline Eigen::VectorXd random_b(int k, std::mt19937_64& eng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.5);
    while (true) {
        Eigen::VectorXd b(k);
        for (int i = 0; i < k; ++i) b[i] = unif(eng);
        if (b.maxCoeff() > 0.05) return b;
    }
}

// Two-sided Kolmogorov-Smirnov p-value (asymptotic, Stephens correction).
inline double ks_p_value(std::vector<double> sorted_u) {
    const std::size_t n = sorted_u.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = sorted_u[i];
        d = std::max(d, std::fabs((i + 1.0) / n - f));
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    }
    const double sn = std::sqrt(static_cast<double>(n));
    const double t = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) p += 2.0 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * t * t);
    return std::min(1.0, std::max(0.0, p));
}

}  // namespace test_helpers
