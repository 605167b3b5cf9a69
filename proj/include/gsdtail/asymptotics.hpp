#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsdtail/errors.hpp"
#include "gsdtail/model.hpp"
#include "gsdtail/qp.hpp"
#include "gsdtail/quadrature.hpp"
#include "gsdtail/rng.hpp"

namespace gsdtail {

// ---------------------------------------------------------------------------
// Index split: degenerate angular directions
// ---------------------------------------------------------------------------

/// L collects the indices with alpha_i != 1/2 whose transformed solution
/// coordinate (C b*)_i vanishes; M is the complement. alpha_tilde replaces
/// the M-components by 1/2.
struct IndexSplit {
    IndexSet L;
    IndexSet M;
    Eigen::VectorXd alpha_tilde;
};

inline IndexSplit index_split(const ModelSpec& m, const QpSolution& sol) {
    const Eigen::VectorXd cb = m.mixing().C() * sol.b_star;
    const double scale = cb.cwiseAbs().maxCoeff();
    const double tol = 1e-9 * std::max(scale, 1e-30);

    IndexSplit split;
    split.alpha_tilde.resize(m.k());
    for (int i = 0; i < m.k(); ++i) {
        const bool half = std::fabs(m.alpha()[i] - 0.5) <= 1e-12;
        const double mag = std::fabs(cb[i]);
        if (!half && mag > tol && mag <= 10.0 * tol) {
            std::ostringstream os;
            os << "index_split: |(C b*)_" << i + 1 << "| = " << mag
               << " lies in the gray zone (" << tol << ", " << 10.0 * tol
               << "); confirm the zero in exact arithmetic";
            throw AmbiguityError(os.str());
        }
        if (!half && mag <= tol) {
            split.L.push_back(i);
            split.alpha_tilde[i] = m.alpha()[i];
        } else {
            split.M.push_back(i);
            split.alpha_tilde[i] = 0.5;
        }
    }
    return split;
}

// ---------------------------------------------------------------------------
// Threshold normalisation
// ---------------------------------------------------------------------------

/// Limits of the recentred threshold sequence: q_I finite, q_J entries in
/// [-inf, inf). For the plain ray u * b the active block gives 0 and the
/// inactive block gives -inf at strict slack, 0 at ties.
struct ThresholdSpec {
    Eigen::VectorXd q_I;
    Eigen::VectorXd q_J;
};

inline ThresholdSpec plain_ray_thresholds(const QpSolution& sol, const Eigen::VectorXd& b) {
    ThresholdSpec t;
    t.q_I = Eigen::VectorXd::Zero(sol.index_I.size());
    t.q_J.resize(sol.index_J.size());
    for (std::size_t j = 0; j < sol.index_J.size(); ++j) {
        const int idx = sol.index_J[j];
        const double slack = sol.b_star[idx] - b[idx];
        t.q_J[j] = slack > 1e-9 * std::max(1.0, std::fabs(sol.b_star[idx])) ? -kInf : 0.0;
    }
    return t;
}

inline ThresholdSpec custom_thresholds(const Eigen::VectorXd& q_I, const Eigen::VectorXd& q_J) {
    for (int i = 0; i < q_I.size(); ++i)
        if (!std::isfinite(q_I[i]))
            throw ArgumentError("thresholds: q_I entries must be finite");
    for (int j = 0; j < q_J.size(); ++j)
        if (std::isnan(q_J[j]) || q_J[j] == kInf)
            throw ArgumentError("thresholds: q_J entries must lie in [-inf, inf)");
    return {q_I, q_J};
}

// ---------------------------------------------------------------------------
// Constant-defining integrals
// ---------------------------------------------------------------------------

enum class IntegralBackend { automatic, quadrature, monte_carlo };

struct IntegralOptions {
    IntegralBackend backend = IntegralBackend::automatic;
    std::int64_t mc_samples = 10'000'000;
    std::uint64_t seed = 97531;
    int panels_per_axis = 6;
    double box_sigmas = 10.0;
};

namespace asym_detail {

inline std::vector<double> axis_breakpoints(double lo, double hi, int panels) {
    auto brk = linear_panels(lo, hi, panels);
    if (lo < 0.0 && hi > 0.0) {
        brk.push_back(0.0);
        std::sort(brk.begin(), brk.end());
    }
    return brk;
}

// prod_j |v_j|^(e_j) over the nonzero exponents, in log space; returns
// -inf (log of 0) or +inf markers through the bool flags.
struct LogAngular {
    double log_value = 0.0;
    bool zero = false;

    void add(double v, double e) {
        if (e == 0.0) return;
        if (v == 0.0) {
            zero = true;  // e > 0 kills the integrand; e <= -1 never occurs (alpha > 0)
            return;
        }
        log_value += e * std::log(std::fabs(v));
    }
};

}  // namespace asym_detail

/// integral over {y > q} of prod_j |(C y)_j|^(exponents_j) exp(-y^T Q y / 2) dy
/// with Q symmetric PD; -inf entries of q open the axis. Quadrature truncates
/// at (box_sigmas + |q_j|) marginal standard deviations; the Monte Carlo
/// backend uses Gaussian proposals with matching covariance Q^{-1}.
inline double gaussian_angular_integral(const Eigen::MatrixXd& C, const Eigen::MatrixXd& Q,
                                        const Eigen::VectorXd& exponents,
                                        const Eigen::VectorXd& q,
                                        const IntegralOptions& opt = {}) {
    const int m = static_cast<int>(Q.rows());
    if (C.rows() != m || C.cols() != m || exponents.size() != m || q.size() != m)
        throw ArgumentError("gaussian_angular_integral: shape mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success)
        throw MatrixError("gaussian_angular_integral: Q must be PD");
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));

    const auto integrand = [&](const Eigen::VectorXd& y) {
        asym_detail::LogAngular ang;
        const Eigen::VectorXd cy = C * y;
        for (int j = 0; j < m; ++j) ang.add(cy[j], exponents[j]);
        if (ang.zero) return 0.0;
        return std::exp(ang.log_value - 0.5 * y.dot(Q * y));
    };

    IntegralBackend backend = opt.backend;
    if (backend == IntegralBackend::automatic)
        backend = m <= 3 ? IntegralBackend::quadrature : IntegralBackend::monte_carlo;

    if (backend == IntegralBackend::quadrature) {
        if (m > 3)
            throw UnsupportedError("gaussian_angular_integral: quadrature supports m <= 3");
        if (m == 1) {
            // |c y|^e exp(-Q y^2/2): the kink at y = 0 is an integrable
            // algebraic endpoint singularity, handled by the double
            // exponential rule on each side.
            const double e = exponents[0];
            const double Q00 = Q(0, 0);
            const double sigma = 1.0 / std::sqrt(Q00);
            const double pad = std::isfinite(q[0]) ? std::fabs(q[0]) : 0.0;
            const double width = (opt.box_sigmas + pad) * sigma;
            const double lo = std::isfinite(q[0]) ? q[0] : -width;
            const double hi = std::max(width, lo + opt.box_sigmas * sigma);
            const auto half = [&](double H) {  // integral of y^e exp(-Q y^2/2) over (0, H)
                if (H <= 0) return 0.0;
                const auto f = [&](double y) {
                    return std::exp(e * std::log(y) - 0.5 * Q00 * y * y);
                };
                return e == 0.0 ? integrate_adaptive(
                                      [&](double y) { return std::exp(-0.5 * Q00 * y * y); },
                                      0.0, H, 1e-12)
                                : integrate_singular(f, 0.0, H);
            };
            const double total = lo >= 0.0 ? half(hi) - half(lo) : half(hi) + half(-lo);
            return (e == 0.0 ? 1.0 : std::pow(std::fabs(C(0, 0)), e)) * total;
        }
        std::vector<std::vector<double>> panels(m);
        for (int j = 0; j < m; ++j) {
            const double sigma = std::sqrt(cov(j, j));
            const double pad = std::isfinite(q[j]) ? std::fabs(q[j]) : 0.0;
            const double width = (opt.box_sigmas + pad) * sigma;
            const double lo = std::isfinite(q[j]) ? q[j] : -width;
            const double hi = std::max(width, lo + opt.box_sigmas * sigma);
            panels[j] = asym_detail::axis_breakpoints(lo, hi, opt.panels_per_axis);
        }
        return tensor_gauss_legendre(integrand, panels);
    }

    // Monte Carlo: Z = L^{-T} xi has covariance Q^{-1}.
    const Eigen::MatrixXd Lmat = llt.matrixL();
    RngStream rs{opt.seed, 0};
    auto eng = rs.make_engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_norm =
        0.5 * m * std::log(2.0 * M_PI) - Lmat.diagonal().array().log().sum();
    double acc = 0.0;
    Eigen::VectorXd xi(m);
    for (std::int64_t t = 0; t < opt.mc_samples; ++t) {
        for (int j = 0; j < m; ++j) xi[j] = normal(eng);
        const Eigen::VectorXd z = Lmat.transpose().triangularView<Eigen::Upper>().solve(xi);
        bool inside = true;
        for (int j = 0; j < m; ++j)
            if (!(z[j] > q[j])) {
                inside = false;
                break;
            }
        if (!inside) continue;
        asym_detail::LogAngular ang;
        const Eigen::VectorXd cz = C * z;
        for (int j = 0; j < m; ++j) ang.add(cz[j], exponents[j]);
        if (!ang.zero) acc += std::exp(ang.log_value);
    }
    return std::exp(log_norm) * acc / static_cast<double>(opt.mc_samples);
}

/// tau over the inactive block J: Gaussian integral with weight
/// prod_{i in L} |(C_JJ y)_i|^(2 alpha_i - 1) and quadratic form (Sigma^{-1})_JJ.
inline double inactive_block_integral(const ModelSpec& m, const QpSolution& sol,
                                      const IndexSplit& split, const Eigen::VectorXd& q_J,
                                      const IntegralOptions& opt = {}) {
    const IndexSet& J = sol.index_J;
    if (J.empty()) throw ArgumentError("inactive_block_integral: J must be non-empty");
    if (q_J.size() != static_cast<int>(J.size()))
        throw ArgumentError("inactive_block_integral: q_J size mismatch");
    for (int i : split.L)
        if (!std::binary_search(J.begin(), J.end(), i))
            throw UnsupportedError("inactive_block_integral: requires L inside J");

    const Eigen::MatrixXd C_JJ = qp_detail::submatrix(m.mixing().C(), J, J);
    const Eigen::MatrixXd Q = qp_detail::submatrix(m.mixing().sigma_inverse(), J, J);
    Eigen::VectorXd expo = Eigen::VectorXd::Zero(J.size());
    for (std::size_t j = 0; j < J.size(); ++j)
        if (std::binary_search(split.L.begin(), split.L.end(), J[j]))
            expo[j] = 2.0 * m.alpha()[J[j]] - 1.0;
    return gaussian_angular_integral(C_JJ, Q, expo, q_J, opt);
}

/// tau*: prod over M of norm_bI^(1 - 2 alpha_i) |(C b*)_i|^(2 alpha_i - 1);
/// empty products are 1.
inline double angular_scale_product(const ModelSpec& m, const QpSolution& sol,
                                    const IndexSplit& split) {
    const Eigen::VectorXd cb = m.mixing().C() * sol.b_star;
    double log_prod = 0.0;
    for (int i : split.M) {
        const double e = 2.0 * m.alpha()[i] - 1.0;
        if (e == 0.0) continue;
        log_prod += -e * std::log(sol.norm_bI) + e * std::log(std::fabs(cb[i]));
    }
    return std::exp(log_prod);
}

/// Full-dimensional tilted integral used when J is empty:
/// integral over {y > q} of prod_{i in L} |(C y)_i|^(2 alpha_i - 1) exp(-ell^T y) dy
/// with ell = Sigma^{-1} b / |b_I|; diverges unless ell > 0.
inline double tilted_angular_integral(const Eigen::MatrixXd& C, const AlphaVector& alpha,
                                      const IndexSet& L, const Eigen::VectorXd& ell,
                                      const Eigen::VectorXd& q,
                                      const IntegralOptions& opt = {}) {
    const int k = static_cast<int>(ell.size());
    if (C.rows() != k || C.cols() != k || q.size() != k || alpha.size() != k)
        throw ArgumentError("tilted_angular_integral: shape mismatch");
    for (int i = 0; i < k; ++i) {
        if (!(ell[i] > 0)) {
            std::ostringstream os;
            os << "tilted_angular_integral: direction " << i + 1
               << " has non-positive tilt; the integral diverges";
            throw DivergedError(os.str());
        }
        if (!std::isfinite(q[i]))
            throw ArgumentError("tilted_angular_integral: q must be finite");
    }

    double log_sep = 0.0;  // separable part prod exp(-ell_i q_i) / ell_i
    for (int i = 0; i < k; ++i) log_sep += -ell[i] * q[i] - std::log(ell[i]);

    IntegralBackend backend = opt.backend;
    if (backend == IntegralBackend::automatic) {
        if (L.empty()) return std::exp(log_sep);
        backend = k <= 3 ? IntegralBackend::quadrature : IntegralBackend::monte_carlo;
    }

    const auto angular = [&](const Eigen::VectorXd& y) -> std::optional<double> {
        asym_detail::LogAngular ang;
        const Eigen::VectorXd cy = C * y;
        for (int i : L) ang.add(cy[i], 2.0 * alpha[i] - 1.0);
        if (ang.zero) return std::nullopt;
        return ang.log_value;
    };

    if (backend == IntegralBackend::quadrature) {
        if (L.empty()) {
            // product of 1-D exponential integrals
            double log_total = 0.0;
            for (int i = 0; i < k; ++i) {
                const double ell_i = ell[i];
                const double v = integrate_adaptive(
                    [&](double y) { return std::exp(-ell_i * y); }, q[i], q[i] + 45.0 / ell_i,
                    1e-12);
                log_total += std::log(v);
            }
            return std::exp(log_total);
        }
        if (k > 3)
            throw UnsupportedError("tilted_angular_integral: quadrature supports k <= 3");
        std::vector<std::vector<double>> panels(k);
        for (int i = 0; i < k; ++i)
            panels[i] = asym_detail::axis_breakpoints(q[i], q[i] + 45.0 / ell[i],
                                                      opt.panels_per_axis);
        return tensor_gauss_legendre(
            [&](const Eigen::VectorXd& y) {
                const auto a = angular(y);
                return a ? std::exp(*a - ell.dot(y)) : 0.0;
            },
            panels);
    }

    // Monte Carlo with exponential proposals y_i = q_i + Exp(ell_i).
    RngStream rs{opt.seed, 1};
    auto eng = rs.make_engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double acc = 0.0;
    Eigen::VectorXd y(k);
    for (std::int64_t t = 0; t < opt.mc_samples; ++t) {
        for (int i = 0; i < k; ++i) {
            double u;
            do {
                u = unif(eng);
            } while (u <= 0.0);
            y[i] = q[i] - std::log(u) / ell[i];
        }
        const auto a = angular(y);
        if (a) acc += std::exp(*a);
    }
    return std::exp(log_sep) * acc / static_cast<double>(opt.mc_samples);
}

inline double tilted_angular_integral(const ModelSpec& m, const QpSolution& sol,
                                      const IndexSplit& split, const Eigen::VectorXd& q,
                                      const IntegralOptions& opt = {}) {
    if (!sol.index_J.empty())
        throw ArgumentError("tilted_angular_integral: requires an empty inactive set");
    const Eigen::VectorXd ell = m.mixing().sigma_inverse() * (sol.b_star / sol.norm_bI);
    return tilted_angular_integral(m.mixing().C(), m.alpha(), split.L, ell, q, opt);
}

// ---------------------------------------------------------------------------
// Orthant probability of the transformed Kotz block (corollary route)
// ---------------------------------------------------------------------------

namespace asym_detail {

// P(Y_J > q_J) where Y_J = C_JJ^{-1} Y* with Y* a standardised Kotz vector
// with parameter alpha_tilde_J; when every alpha_tilde is 1/2, Y_J is the
// Gaussian with covariance Q^{-1} regardless of C_JJ.
inline double kotz_block_orthant(const Eigen::MatrixXd& C_JJ, const Eigen::MatrixXd& Q,
                                 const Eigen::VectorXd& alpha_tilde_J,
                                 const Eigen::VectorXd& q_J, bool condition_holds,
                                 const IntegralOptions& opt) {
    const int mJ = static_cast<int>(q_J.size());
    bool all_open = true;
    for (int j = 0; j < mJ; ++j) all_open = all_open && (q_J[j] == -kInf);
    if (all_open) return 1.0;

    IntegralBackend backend = opt.backend;
    if (backend == IntegralBackend::automatic) {
        if (mJ == 1) {
            // scalar closed form through the incomplete gamma survival
            const double scale = std::sqrt(Q(0, 0));
            return symmetric_sqrt_gamma_survival(alpha_tilde_J[0], scale * q_J[0]);
        }
        backend = mJ <= 2 ? IntegralBackend::quadrature : IntegralBackend::monte_carlo;
    }

    if (backend == IntegralBackend::quadrature) {
        if (mJ > 2) throw UnsupportedError("kotz_block_orthant: quadrature supports |J| <= 2");
        // normalised density of Y_J integrated over the orthant
        double log_norm = 0.5 * std::log(Q.determinant());
        for (int j = 0; j < mJ; ++j)
            log_norm += -alpha_tilde_J[j] * std::log(2.0) - std::lgamma(alpha_tilde_J[j]);
        Eigen::VectorXd expo(mJ);
        for (int j = 0; j < mJ; ++j) expo[j] = 2.0 * alpha_tilde_J[j] - 1.0;
        IntegralOptions sub = opt;
        sub.backend = IntegralBackend::quadrature;
        const double raw = gaussian_angular_integral(C_JJ, Q, expo, q_J, sub);
        return std::exp(log_norm) * raw;
    }

    // Monte Carlo over the explicit construction.
    Eigen::MatrixXd T;
    if (condition_holds) {
        T = C_JJ.inverse();
    } else {
        // only reachable with alpha_tilde = 1/2: Gaussian block
        Eigen::LLT<Eigen::MatrixXd> llt(Q);
        T = Eigen::MatrixXd(llt.matrixL()).transpose().triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(mJ, mJ));
    }
    RngStream rs{opt.seed, 2};
    auto eng = rs.make_engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::int64_t hits = 0;
    Eigen::VectorXd ystar(mJ);
    const std::int64_t n = std::max<std::int64_t>(opt.mc_samples / 10, 1'000'000);
    for (std::int64_t t = 0; t < n; ++t) {
        for (int j = 0; j < mJ; ++j) {
            const double g = sample_gamma(eng, alpha_tilde_J[j]) * 2.0;  // Gamma(a, rate 1/2)
            ystar[j] = (unif(eng) < 0.5 ? -1.0 : 1.0) * std::sqrt(g);
        }
        const Eigen::VectorXd y = T * ystar;
        bool inside = true;
        for (int j = 0; j < mJ; ++j)
            if (!(y[j] > q_J[j])) {
                inside = false;
                break;
            }
        if (inside) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace asym_detail

/// P(Y_J > q_J) for the transformed standardised Kotz block attached to a
/// model's inactive set; the quadrature backend covers |J| <= 2.
inline double kotz_block_orthant_probability(const ModelSpec& m, const QpSolution& sol,
                                             const IndexSplit& split,
                                             const Eigen::VectorXd& q_J,
                                             const IntegralOptions& opt = {}) {
    const IndexSet& J = sol.index_J;
    if (J.empty()) throw ArgumentError("kotz_block_orthant_probability: J must be non-empty");
    if (q_J.size() != static_cast<int>(J.size()))
        throw ArgumentError("kotz_block_orthant_probability: q_J size mismatch");
    bool all_open = true;
    for (int j = 0; j < q_J.size(); ++j) all_open = all_open && (q_J[j] == -kInf);
    if (all_open) return 1.0;
    const Eigen::MatrixXd C_JJ = qp_detail::submatrix(m.mixing().C(), J, J);
    const Eigen::MatrixXd Q = qp_detail::submatrix(m.mixing().sigma_inverse(), J, J);
    const double resid = (C_JJ.transpose() * C_JJ - Q).cwiseAbs().maxCoeff();
    const bool condition_holds = resid <= 1e-10 * std::max(1.0, Q.cwiseAbs().maxCoeff());
    Eigen::VectorXd alpha_tilde_J(J.size());
    for (std::size_t j = 0; j < J.size(); ++j) alpha_tilde_J[j] = split.alpha_tilde[J[j]];
    if (!condition_holds)
        for (std::size_t j = 0; j < J.size(); ++j)
            if (alpha_tilde_J[j] != 0.5)
                throw ArgumentError(
                    "kotz_block_orthant_probability: factorisation condition fails with a "
                    "non-Gaussian block");
    return asym_detail::kotz_block_orthant(C_JJ, Q, alpha_tilde_J, q_J, condition_holds, opt);
}

// ---------------------------------------------------------------------------
// Tail expansion
// ---------------------------------------------------------------------------

enum class ExpansionBranch { active_subset, active_full, orthant_form };

inline std::string to_string(ExpansionBranch b) {
    switch (b) {
        case ExpansionBranch::active_subset: return "active-subset";
        case ExpansionBranch::active_full: return "active-full";
        case ExpansionBranch::orthant_form: return "orthant-form";
    }
    return "?";
}

struct Evaluation {
    double value = 0.0;
    double log_value = -kInf;
};

/// P(X > u b) ~ constant * lambda(u |b_I|)^exponent * survival(u |b_I|)
/// with lambda(v) = v * w(v).
struct TailAsymptotics {
    ExpansionBranch branch = ExpansionBranch::active_full;
    double log_constant = 0.0;
    double constant = 0.0;
    double lambda_exponent = 0.0;
    double radius_scale = 0.0;  // |b_I|
    IndexSet index_I, index_J, index_L, index_M;
    RadialPtr law;

    Evaluation evaluate(double u) const {
        if (!(u > 0)) throw ArgumentError("evaluate: u must be positive");
        const double ut = u * radius_scale;
        const double lambda = ut * law->scaling(ut);
        const double lv = log_constant + lambda_exponent * std::log(lambda) +
                          law->log_survival(ut);
        return {std::exp(lv), lv};
    }
};

namespace asym_detail {

struct Context {
    QpSolution sol;
    IndexSplit split;
    Eigen::VectorXd v;       // (Sigma_II)^{-1} u_I, strictly positive
    double log_tau_star;
};

inline Context make_context(const ModelSpec& m, const Eigen::VectorXd& b,
                            const ThresholdSpec& t) {
    Context ctx;
    ctx.sol = solve_qp(QpProblem(m.mixing().sigma(), b));
    ctx.split = index_split(m, ctx.sol);
    if (t.q_I.size() != static_cast<int>(ctx.sol.index_I.size()) ||
        t.q_J.size() != static_cast<int>(ctx.sol.index_J.size()))
        throw ArgumentError("tail_expansion: threshold block sizes disagree with the QP split");
    ctx.v = ctx.sol.active_multipliers / ctx.sol.norm_bI;
    if (!(ctx.v.minCoeff() > 0))
        throw DegeneracyError("tail_expansion: (Sigma_II)^{-1} u_I must be positive");
    ctx.log_tau_star = std::log(angular_scale_product(m, ctx.sol, ctx.split));
    return ctx;
}

}  // namespace asym_detail

/// Leading-order tail expansion of P(X > thresholds along u b).
inline TailAsymptotics tail_expansion(const ModelSpec& m, const Eigen::VectorXd& b,
                                      const ThresholdSpec& t, const IntegralOptions& opt = {}) {
    auto ctx = asym_detail::make_context(m, b, t);
    const auto& alpha = m.alpha();
    const double alpha_L = alpha.sum_over(ctx.split.L);
    const double common = std::lgamma(alpha.bar()) - alpha.sum_log_gamma() - std::log(2.0) -
                          0.5 * m.mixing().log_det_sigma();

    TailAsymptotics out;
    out.index_I = ctx.sol.index_I;
    out.index_J = ctx.sol.index_J;
    out.index_L = ctx.split.L;
    out.index_M = ctx.split.M;
    out.radius_scale = ctx.sol.norm_bI;
    out.law = m.radial_ptr();

    if (ctx.sol.index_J.empty()) {
        out.branch = ExpansionBranch::active_full;
        const double tau_L = tilted_angular_integral(m, ctx.sol, ctx.split, t.q_I, opt);
        out.lambda_exponent = 1.0 - m.k() + static_cast<double>(ctx.split.L.size()) -
                              2.0 * alpha_L;
        out.log_constant = std::log(tau_L) + ctx.log_tau_star + common;
    } else {
        out.branch = ExpansionBranch::active_subset;
        const double tau_JL = inactive_block_integral(m, ctx.sol, ctx.split, t.q_J, opt);
        out.lambda_exponent = 1.0 - static_cast<double>(ctx.sol.index_I.size()) -
                              0.5 * static_cast<double>(ctx.sol.index_J.size()) +
                              0.5 * static_cast<double>(ctx.split.L.size()) - alpha_L;
        out.log_constant = std::log(tau_JL) + ctx.log_tau_star + common - t.q_I.dot(ctx.v) -
                           ctx.v.array().log().sum();
    }
    out.constant = std::exp(out.log_constant);
    return out;
}

/// Same expansion with the inactive-block integral rewritten as an orthant
/// probability of a transformed standardised Kotz block. Requires J non-empty
/// and, when L is non-empty, the factorisation condition
/// C_JJ^T C_JJ = (Sigma^{-1})_JJ.
inline TailAsymptotics tail_expansion_orthant(const ModelSpec& m, const Eigen::VectorXd& b,
                                              const ThresholdSpec& t,
                                              const IntegralOptions& opt = {}) {
    auto ctx = asym_detail::make_context(m, b, t);
    const auto& alpha = m.alpha();
    const IndexSet& I = ctx.sol.index_I;
    const IndexSet& J = ctx.sol.index_J;
    if (J.empty())
        throw ArgumentError("tail_expansion_orthant: requires a non-empty inactive set");
    for (int i : ctx.split.L)
        if (!std::binary_search(J.begin(), J.end(), i))
            throw UnsupportedError("tail_expansion_orthant: requires L inside J");

    const Eigen::MatrixXd C_JJ = qp_detail::submatrix(m.mixing().C(), J, J);
    const Eigen::MatrixXd Q = qp_detail::submatrix(m.mixing().sigma_inverse(), J, J);
    const double cond_resid = (C_JJ.transpose() * C_JJ - Q).cwiseAbs().maxCoeff();
    const bool condition_holds = cond_resid <= 1e-10 * std::max(1.0, Q.cwiseAbs().maxCoeff());
    if (!ctx.split.L.empty() && !condition_holds) {
        std::ostringstream os;
        os << "tail_expansion_orthant: factorisation condition fails (residual " << cond_resid
           << ") and L is non-empty";
        throw ArgumentError(os.str());
    }

    Eigen::VectorXd alpha_tilde_J(J.size());
    for (std::size_t j = 0; j < J.size(); ++j) alpha_tilde_J[j] = ctx.split.alpha_tilde[J[j]];
    const double alpha_tilde_bar_J = alpha_tilde_J.sum();
    const double alpha_L = alpha.sum_over(ctx.split.L);

    const double P = asym_detail::kotz_block_orthant(C_JJ, Q, alpha_tilde_J, t.q_J,
                                                     condition_holds, opt);

    const Eigen::MatrixXd sigma_II = qp_detail::submatrix(m.mixing().sigma(), I, I);
    double log_const = (alpha_tilde_bar_J - 1.0) * std::log(2.0) + std::lgamma(alpha.bar()) -
                       0.5 * std::log(sigma_II.determinant());
    for (int i : I) log_const -= std::lgamma(alpha[i]);
    for (int j : J)
        if (!std::binary_search(ctx.split.L.begin(), ctx.split.L.end(), j))
            log_const += std::lgamma(0.5) - std::lgamma(alpha[j]);
    log_const += -t.q_I.dot(ctx.v) - ctx.v.array().log().sum() + std::log(P) +
                 ctx.log_tau_star;

    TailAsymptotics out;
    out.branch = ExpansionBranch::orthant_form;
    out.index_I = I;
    out.index_J = J;
    out.index_L = ctx.split.L;
    out.index_M = ctx.split.M;
    out.radius_scale = ctx.sol.norm_bI;
    out.law = m.radial_ptr();
    out.lambda_exponent = 1.0 - static_cast<double>(I.size()) -
                          0.5 * static_cast<double>(J.size()) +
                          0.5 * static_cast<double>(ctx.split.L.size()) - alpha_L;
    out.log_constant = log_const;
    out.constant = std::exp(log_const);
    return out;
}

/// Convenience: plain-ray thresholds for the direction b.
inline TailAsymptotics tail_expansion(const ModelSpec& m, const Eigen::VectorXd& b,
                                      const IntegralOptions& opt = {}) {
    const auto sol = solve_qp(QpProblem(m.mixing().sigma(), b));
    return tail_expansion(m, b, plain_ray_thresholds(sol, b), opt);
}

inline TailAsymptotics tail_expansion_orthant(const ModelSpec& m, const Eigen::VectorXd& b,
                                              const IntegralOptions& opt = {}) {
    const auto sol = solve_qp(QpProblem(m.mixing().sigma(), b));
    return tail_expansion_orthant(m, b, plain_ray_thresholds(sol, b), opt);
}

// ---------------------------------------------------------------------------
// Backend agreement
// ---------------------------------------------------------------------------

struct BackendComparison {
    double quadrature = 0.0;
    double monte_carlo = 0.0;
    double rel_diff = 0.0;
};

/// Runs both backends and raises AccuracyError past the stated tolerance.
template <class F>
BackendComparison cross_check_backends(F&& eval, double tol = 0.01,
                                       IntegralOptions opt = {}) {
    BackendComparison cmp;
    opt.backend = IntegralBackend::quadrature;
    cmp.quadrature = eval(opt);
    opt.backend = IntegralBackend::monte_carlo;
    cmp.monte_carlo = eval(opt);
    cmp.rel_diff = relative_diff(cmp.quadrature, cmp.monte_carlo);
    if (cmp.rel_diff > tol) {
        std::ostringstream os;
        os << "backend disagreement: quadrature " << cmp.quadrature << " vs monte-carlo "
           << cmp.monte_carlo << " (rel " << cmp.rel_diff << ")";
        throw AccuracyError(os.str());
    }
    return cmp;
}

}  // namespace gsdtail
