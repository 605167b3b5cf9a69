#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "gsdtail/errors.hpp"
#include "gsdtail/quadrature.hpp"
#include "gsdtail/radial.hpp"
#include "gsdtail/special.hpp"

namespace gsdtail {

using IndexSet = std::vector<int>;  // sorted, 0-based

inline IndexSet complement_of(const IndexSet& I, int k) {
    IndexSet J;
    std::size_t pos = 0;
    for (int i = 0; i < k; ++i) {
        if (pos < I.size() && I[pos] == i) {
            ++pos;
        } else {
            J.push_back(i);
        }
    }
    return J;
}

/// Dirichlet parameter vector: positive components alpha_i and their sum.
class AlphaVector {
public:
    explicit AlphaVector(Eigen::VectorXd alpha) : alpha_(std::move(alpha)) {
        if (alpha_.size() < 1) throw ArgumentError("alpha_nonempty: alpha must be non-empty");
        for (int i = 0; i < alpha_.size(); ++i)
            if (!(alpha_[i] > 0) || !std::isfinite(alpha_[i]))
                throw ArgumentError("alpha_positive: alpha components must be positive");
        bar_ = alpha_.sum();
    }
    explicit AlphaVector(const std::vector<double>& a)
        : AlphaVector(Eigen::Map<const Eigen::VectorXd>(a.data(), a.size())) {}

    int size() const { return static_cast<int>(alpha_.size()); }
    double operator[](int i) const { return alpha_[i]; }
    const Eigen::VectorXd& vec() const { return alpha_; }
    double bar() const { return bar_; }

    /// Plain partial sum over K; empty K gives 0. Used in exponent arithmetic.
    double sum_over(const IndexSet& K) const {
        double s = 0.0;
        for (int i : K) s += alpha_[i];
        return s;
    }

    /// Partial-sum accessor with the multiplicative convention: empty K gives 1.
    double bar_of(const IndexSet& K) const { return K.empty() ? 1.0 : sum_over(K); }

    double sum_log_gamma() const {
        double s = 0.0;
        for (int i = 0; i < alpha_.size(); ++i) s += std::lgamma(alpha_[i]);
        return s;
    }

private:
    Eigen::VectorXd alpha_;
    double bar_;
};

/// Non-singular mixing matrix A with Sigma = A^T A, C = (A^T)^{-1}.
/// By default Sigma must be a correlation matrix (unit diagonal); pass
/// require_correlation = false to accept any SPD Sigma.
class MixingMatrix {
public:
    explicit MixingMatrix(Eigen::MatrixXd A, bool require_correlation = true)
        : A_(std::move(A)) {
        const int k = static_cast<int>(A_.rows());
        if (k < 1 || A_.cols() != k) throw ArgumentError("a_square: A must be square");
        sigma_ = A_.transpose() * A_;
        sigma_ = 0.5 * (sigma_ + sigma_.transpose().eval());

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (!(lo > 0)) throw MatrixError("sigma_positive_definite: Sigma is not PD");
        if (hi / lo > 1e12)
            throw MatrixError("sigma_condition: condition number above 1e12");

        if (require_correlation) {
            for (int i = 0; i < k; ++i)
                if (std::fabs(sigma_(i, i) - 1.0) > 1e-10)
                    throw MatrixError("sigma_correlation: diag(Sigma) must be 1");
        }

        Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
        if (llt.info() != Eigen::Success)
            throw MatrixError("sigma_positive_definite: Cholesky failed");

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A_.transpose());
        const double det_A = A_.determinant();
        if (std::fabs(det_A) < 1e-12)
            throw MatrixError("a_nonsingular: |det A| below tolerance");
        C_ = lu.solve(Eigen::MatrixXd::Identity(k, k));
        det_sigma_ = det_A * det_A;
        sigma_inv_ = llt.solve(Eigen::MatrixXd::Identity(k, k));

        if (((C_.transpose() * C_) - sigma_inv_).cwiseAbs().maxCoeff() > 1e-8)
            throw MatrixError("c_consistency: C^T C != Sigma^{-1}");
    }

    /// Upper-triangular Cholesky factor A (so C = (A^T)^{-1} is lower-triangular).
    static MixingMatrix from_sigma(const Eigen::MatrixXd& sigma,
                                   bool require_correlation = true) {
        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (sigma + sigma.transpose()));
        if (llt.info() != Eigen::Success)
            throw MatrixError("sigma_positive_definite: Cholesky failed");
        return MixingMatrix(Eigen::MatrixXd(llt.matrixL()).transpose(), require_correlation);
    }

    int dim() const { return static_cast<int>(A_.rows()); }
    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::MatrixXd& C() const { return C_; }
    const Eigen::MatrixXd& sigma_inverse() const { return sigma_inv_; }
    double det_sigma() const { return det_sigma_; }
    double log_det_sigma() const { return std::log(det_sigma_); }

private:
    Eigen::MatrixXd A_, sigma_, C_, sigma_inv_;
    double det_sigma_ = 0.0;
};

/// Full model: X = R A^T U with U ~ SD(k, alpha) and R ~ radial, independent.
class ModelSpec {
public:
    ModelSpec(AlphaVector alpha, MixingMatrix mixing, RadialPtr radial)
        : alpha_(std::move(alpha)), mixing_(std::move(mixing)), radial_(std::move(radial)) {
        if (alpha_.size() != mixing_.dim())
            throw ArgumentError("dimension_consistency: alpha and A disagree");
        if (alpha_.size() < 2) throw ArgumentError("dimension_min: k must be >= 2");
        if (!radial_) throw ArgumentError("radial_present: radial law required");
    }

    int k() const { return alpha_.size(); }
    const AlphaVector& alpha() const { return alpha_; }
    const MixingMatrix& mixing() const { return mixing_; }
    const RadialLaw& radial() const { return *radial_; }
    RadialPtr radial_ptr() const { return radial_; }

private:
    AlphaVector alpha_;
    MixingMatrix mixing_;
    RadialPtr radial_;
};

struct KotzParams {
    double N = 0.0;
    double r = 0.5;
    double s = 1.0;

    bool standardised() const { return N == 0.0 && 2.0 * r == 1.0 && s == 1.0; }
    void validate(double alpha_bar) const {
        if (!(r > 0) || !(s > 0)) throw ArgumentError("kotz_params: need r > 0, s > 0");
        if (!(N > -alpha_bar)) throw ArgumentError("kotz_params: need N > -alpha_bar");
    }
};

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// Density value that can flag a genuine singularity of the formula
/// (infinite density on the support boundary or on a coordinate hyperplane)
/// as opposed to a floating-point overflow.
struct DensityValue {
    double value = 0.0;
    bool singular = false;
};

namespace model_detail {

// Accumulates sum of (2 alpha_i - 1) log|v_i| with the exact conventions
// at v_i = 0: exponent > 0 kills the product, exponent < 0 makes it
// singular, exponent = 0 contributes nothing.
struct AngularProduct {
    double log_sum = 0.0;
    bool zero = false;
    bool singular = false;

    void add(double v, double alpha) {
        const double e = 2.0 * alpha - 1.0;
        if (v == 0.0) {
            if (e > 0)
                zero = true;
            else if (e < 0)
                singular = true;
            return;
        }
        log_sum += e * std::log(std::fabs(v));
    }
};

}  // namespace model_detail

/// Density of the first k-1 coordinates of U ~ SD(k, alpha) at u,
/// supported on the closed unit ball of R^{k-1}.
inline DensityValue sd_density(const AlphaVector& alpha, const Eigen::VectorXd& u) {
    const int k = alpha.size();
    if (u.size() != k - 1) throw ArgumentError("sd_density: u must have k-1 components");
    const double s = u.squaredNorm();
    if (s > 1.0 + 1e-14) return {0.0, false};

    model_detail::AngularProduct prod;
    for (int i = 0; i < k - 1; ++i) prod.add(u[i], alpha[i]);

    const double one_minus = std::max(0.0, 1.0 - s);
    const double ek = alpha[k - 1] - 1.0;
    if (one_minus == 0.0) {
        if (ek < 0) return {kInf, true};
        if (ek > 0) return {0.0, false};
    }
    if (prod.singular) return {kInf, true};
    if (prod.zero) return {0.0, false};

    double log_h = std::lgamma(alpha.bar()) - alpha.sum_log_gamma() + prod.log_sum;
    if (one_minus > 0.0) log_h += ek * std::log(one_minus);
    return {std::exp(log_h), false};
}

/// Joint density h(x) = g(sum x_i^2) * prod |x_i|^(2 alpha_i - 1) for a
/// density generator g satisfying the normalisation contract.
inline double gsd_joint_density(const AlphaVector& alpha,
                                const std::function<double(double)>& g,
                                const Eigen::VectorXd& x) {
    if (x.size() != alpha.size())
        throw ArgumentError("gsd_joint_density: dimension mismatch");
    const double gval = g(x.squaredNorm());
    if (gval < 0) throw ContractViolation("gsd_joint_density: generator returned < 0");
    model_detail::AngularProduct prod;
    for (int i = 0; i < x.size(); ++i) prod.add(x[i], alpha[i]);
    if (prod.zero) return 0.0;
    if (prod.singular) return kInf;
    return gval * std::exp(prod.log_sum);
}

/// Overload taking a full model; requires A = identity.
inline double gsd_joint_density(const ModelSpec& m, const std::function<double(double)>& g,
                                const Eigen::VectorXd& x) {
    if (!m.mixing().A().isIdentity(1e-12))
        throw UnsupportedError("gsd_joint_density: requires A = identity");
    return gsd_joint_density(m.alpha(), g, x);
}

/// Kotz Type I density generator g(t) = c t^N exp(-r t^s), with c fixed by
/// the normalisation contract.
inline std::function<double(double)> kotz_generator(const AlphaVector& alpha,
                                                    const KotzParams& kz) {
    kz.validate(alpha.bar());
    const double g_shape = (kz.N + alpha.bar()) / kz.s;
    const double log_c = std::lgamma(alpha.bar()) - alpha.sum_log_gamma() + std::log(kz.s) +
                         g_shape * std::log(kz.r) - std::lgamma(g_shape);
    const double N = kz.N, r = kz.r, s = kz.s;
    return [log_c, N, r, s](double t) {
        if (t < 0) throw ArgumentError("kotz generator: t must be nonnegative");
        if (t == 0.0) {
            if (N > 0) return 0.0;
            if (N < 0) return kInf;
            return std::exp(log_c);
        }
        return std::exp(log_c + N * std::log(t) - r * std::pow(t, s));
    };
}

/// Kotz Type I joint density. The standardised case (N=0, 2r=s=1) supports a
/// general mixing matrix A; other parameters require A = identity.
inline double kotz_density(const ModelSpec& m, const KotzParams& kz, const Eigen::VectorXd& x) {
    const auto& alpha = m.alpha();
    if (x.size() != alpha.size()) throw ArgumentError("kotz_density: dimension mismatch");
    kz.validate(alpha.bar());

    if (kz.standardised()) {
        const auto& mix = m.mixing();
        model_detail::AngularProduct prod;
        const Eigen::VectorXd cx = mix.C() * x;
        for (int i = 0; i < x.size(); ++i) prod.add(cx[i], alpha[i]);
        if (prod.zero) return 0.0;
        if (prod.singular) return kInf;
        const double quad = x.dot(mix.sigma_inverse() * x);
        const double log_h = -alpha.bar() * std::log(2.0) - alpha.sum_log_gamma() -
                             0.5 * mix.log_det_sigma() - quad / 2.0 + prod.log_sum;
        return std::exp(log_h);
    }

    if (!m.mixing().A().isIdentity(1e-12))
        throw UnsupportedError("kotz_density: general (N,r,s) supports only A = identity");
    return gsd_joint_density(alpha, kotz_generator(alpha, kz), x);
}

/// Radial density induced by a generator:
///   f(r) = 2 (prod Gamma(alpha_i) / Gamma(abar)) g(r^2) r^(2 abar - 1).
inline double radial_density_from_generator(const std::function<double(double)>& g,
                                            const AlphaVector& alpha, double r) {
    if (!(r > 0)) throw ArgumentError("radial_density_from_generator: r must be positive");
    const double log_coef = std::log(2.0) + alpha.sum_log_gamma() - std::lgamma(alpha.bar());
    const double gval = g(r * r);
    if (gval < 0) throw ContractViolation("radial_density_from_generator: generator < 0");
    if (gval == 0.0) return 0.0;
    return std::exp(log_coef + std::log(gval) + (2.0 * alpha.bar() - 1.0) * std::log(r));
}

namespace model_detail {

// K(z) = int_z^inf (r^2 - z^2)^(beta-1) r^(-2(abar-1)) f(r) dr, evaluated
// after the substitution r^2 = z^2 + t^2 which removes the endpoint
// singularity; for 2 beta < 1 a further power substitution t = s^(1/(2 beta))
// flattens the residual algebraic weight at t = 0.
inline double radial_tail_kernel(const RadialLaw& law, double alpha_bar, double beta, double z) {
    if (!(beta > 0)) throw ArgumentError("radial_tail_kernel: beta must be positive");
    const double two_beta_m1 = 2.0 * beta - 1.0;
    const double power = 1.0 - 2.0 * alpha_bar;

    const auto base = [&](double t) {
        const double r = std::hypot(z, t);
        const double lf = law.log_density(r);
        if (lf == -kInf) return 0.0;
        double le = lf + power * std::log(r);
        if (two_beta_m1 != 0.0) le += two_beta_m1 * std::log(t);
        return std::exp(le);
    };

    const double t_scale = std::max({z, law.quantile(0.5), 1e-3});
    if (two_beta_m1 >= 0.0) {
        return integrate_panels_to_inf(base, 0.0, t_scale);
    }
    // t = s^(1/(2 beta)); the integrand becomes (1/(2 beta)) * smooth(s).
    const double inv = 1.0 / (2.0 * beta);
    const auto flat = [&](double s) {
        if (s <= 0) return 0.0;
        const double t = std::pow(s, inv);
        const double r = std::hypot(z, t);
        const double lf = law.log_density(r);
        if (lf == -kInf) return 0.0;
        return inv * std::exp(lf + power * std::log(r));
    };
    const double s_scale = std::pow(t_scale, 2.0 * beta);
    return integrate_panels_to_inf(flat, 0.0, s_scale);
}

}  // namespace model_detail

/// Density of the radius of the subvector X_I: X_I = R_I U_I with
///   f_I(z) = 2 z^(2 abar_I - 1) Gamma(abar) / (Gamma(abar_I) Gamma(abar - abar_I)) K(z).
inline double subvector_radial_density(const ModelSpec& m, const IndexSet& I, double z) {
    const int k = m.k();
    if (I.empty() || static_cast<int>(I.size()) >= k)
        throw ArgumentError("subvector_radial_density: need 0 < |I| < k");
    if (!(z > 0)) throw ArgumentError("subvector_radial_density: z must be positive");
    const double abar = m.alpha().bar();
    const double abar_I = m.alpha().sum_over(I);
    const double beta = abar - abar_I;
    const double kern = model_detail::radial_tail_kernel(m.radial(), abar, beta, z);
    if (kern <= 0.0) return 0.0;
    const double log_f = std::log(2.0) + (2.0 * abar_I - 1.0) * std::log(z) +
                         std::lgamma(abar) - std::lgamma(abar_I) - std::lgamma(beta) +
                         std::log(kern);
    return std::exp(log_f);
}

/// Density of A_sub^T X_I for a non-singular m x m matrix A_sub, m = |I| < k.
inline double subvector_joint_density(const ModelSpec& m, const IndexSet& I,
                                      const Eigen::MatrixXd& A_sub,
                                      const Eigen::VectorXd& x_I) {
    const int k = m.k();
    const int msz = static_cast<int>(I.size());
    if (I.empty() || msz >= k)
        throw ArgumentError("subvector_joint_density: need 0 < |I| < k");
    if (A_sub.rows() != msz || A_sub.cols() != msz || x_I.size() != msz)
        throw ArgumentError("subvector_joint_density: shape mismatch");

    MixingMatrix sub(A_sub, /*require_correlation=*/false);
    const double abar = m.alpha().bar();
    const double abar_I = m.alpha().sum_over(I);
    const double beta = abar - abar_I;

    model_detail::AngularProduct prod;
    const Eigen::VectorXd cx = sub.C() * x_I;
    for (int j = 0; j < msz; ++j) prod.add(cx[j], m.alpha()[I[j]]);
    if (prod.zero) return 0.0;
    if (prod.singular) return kInf;

    const double z = std::sqrt(std::max(0.0, x_I.dot(sub.sigma_inverse() * x_I)));
    const double kern = model_detail::radial_tail_kernel(m.radial(), abar, beta, z);
    if (kern <= 0.0) return 0.0;

    double log_pref = std::lgamma(abar) - std::lgamma(beta) - 0.5 * sub.log_det_sigma();
    for (int j = 0; j < msz; ++j) log_pref -= std::lgamma(m.alpha()[I[j]]);
    return std::exp(log_pref + prod.log_sum + std::log(kern));
}

/// Generator recovered from the radial density (inverse of
/// radial_density_from_generator); lets the joint density of any
/// absolutely continuous model be evaluated pointwise.
inline double gsd_density_from_radial(const ModelSpec& m, const Eigen::VectorXd& x) {
    if (x.size() != m.k()) throw ArgumentError("gsd_density_from_radial: dimension mismatch");
    const auto& mix = m.mixing();
    const auto& alpha = m.alpha();
    model_detail::AngularProduct prod;
    const Eigen::VectorXd cx = mix.C() * x;
    for (int i = 0; i < x.size(); ++i) prod.add(cx[i], alpha[i]);
    if (prod.zero) return 0.0;
    if (prod.singular) return kInf;

    const double t = x.dot(mix.sigma_inverse() * x);
    if (t == 0.0) {
        // g(0) is finite only when the radial density behaves like r^(2 abar - 1).
        throw ArgumentError("gsd_density_from_radial: x = 0 not supported");
    }
    const double r = std::sqrt(t);
    const double log_g = std::lgamma(alpha.bar()) - alpha.sum_log_gamma() - std::log(2.0) +
                         m.radial().log_density(r) - (2.0 * alpha.bar() - 1.0) * std::log(r);
    return std::exp(log_g + prod.log_sum - 0.5 * mix.log_det_sigma());
}

}  // namespace gsdtail
