#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gsdtail/errors.hpp"

namespace gsdtail {

// Adaptive Gauss-Kronrod on a finite or semi-infinite interval.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-10) {
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        std::forward<F>(f), a, b, 15, tol);
}

// Double-exponential rule for integrands with integrable endpoint
// singularities (algebraic kinks at the interval ends).
template <class F>
double integrate_singular(F&& f, double a, double b, double tol = 1e-12) {
    boost::math::quadrature::tanh_sinh<double> rule;
    return rule.integrate(std::forward<F>(f), a, b, tol);
}

// Integral over (a, inf) accumulated on doubling panels; stops once a
// panel contributes less than `tail_tol` of the running total.
template <class F>
double integrate_panels_to_inf(F&& f, double a, double first_width, double tol = 1e-11,
                               double tail_tol = 1e-13, int max_panels = 64) {
    double total = 0.0;
    double lo = a;
    double width = first_width;
    for (int p = 0; p < max_panels; ++p) {
        const double hi = lo + width;
        const double piece = integrate_adaptive(f, lo, hi, tol);
        total += piece;
        if (p > 1 && std::fabs(piece) < tail_tol * (std::fabs(total) + 1e-300)) break;
        lo = hi;
        width *= 2.0;
    }
    return total;
}

namespace quad_detail {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// 32-point Gauss-Legendre rule expanded from boost's half tables.
inline const GaussRule& gauss32() {
    static const GaussRule rule = [] {
        GaussRule r;
        using G = boost::math::quadrature::gauss<double, 32>;
        const auto& xs = G::abscissa();
        const auto& ws = G::weights();
        for (std::size_t i = xs.size(); i-- > 0;) {
            r.nodes.push_back(-xs[i]);
            r.weights.push_back(ws[i]);
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] == 0.0) continue;
            r.nodes.push_back(xs[i]);
            r.weights.push_back(ws[i]);
        }
        return r;
    }();
    return rule;
}

}  // namespace quad_detail

// Composite 32-point Gauss-Legendre over a product of 1-D panel grids.
// `panels[d]` holds the sorted breakpoints of axis d (at least 2).
inline double tensor_gauss_legendre(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::vector<std::vector<double>>& panels) {
    const int dim = static_cast<int>(panels.size());
    if (dim < 1 || dim > 4) throw ArgumentError("tensor_gauss_legendre: dim must be 1..4");
    const auto& rule = quad_detail::gauss32();
    const int m = static_cast<int>(rule.nodes.size());

    // Per-axis flattened node/weight lists across panels.
    std::vector<std::vector<double>> nodes(dim), weights(dim);
    for (int d = 0; d < dim; ++d) {
        const auto& brk = panels[d];
        if (brk.size() < 2) throw ArgumentError("tensor_gauss_legendre: empty axis");
        for (std::size_t p = 0; p + 1 < brk.size(); ++p) {
            const double mid = 0.5 * (brk[p] + brk[p + 1]);
            const double half = 0.5 * (brk[p + 1] - brk[p]);
            for (int i = 0; i < m; ++i) {
                nodes[d].push_back(mid + half * rule.nodes[i]);
                weights[d].push_back(half * rule.weights[i]);
            }
        }
    }

    Eigen::VectorXd x(dim);
    std::vector<std::size_t> idx(dim, 0);
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (int d = 0; d < dim; ++d) {
            x[d] = nodes[d][idx[d]];
            w *= weights[d][idx[d]];
        }
        total += w * f(x);
        int d = 0;
        for (; d < dim; ++d) {
            if (++idx[d] < nodes[d].size()) break;
            idx[d] = 0;
        }
        if (d == dim) break;
    }
    return total;
}

// Uniform breakpoints helper.
inline std::vector<double> linear_panels(double lo, double hi, int n_panels) {
    std::vector<double> brk;
    for (int i = 0; i <= n_panels; ++i)
        brk.push_back(lo + (hi - lo) * static_cast<double>(i) / n_panels);
    return brk;
}

}  // namespace gsdtail
