#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsdtail/errors.hpp"
#include "gsdtail/rng.hpp"
#include "gsdtail/special.hpp"

namespace gsdtail {

/// A positive random radius R ~ F with F(0) = 0, infinite upper endpoint
/// and a tail in the Gumbel max-domain of attraction. The scaling function
/// is the von Mises choice w = f / survival for absolutely continuous laws.
class RadialLaw {
public:
    virtual ~RadialLaw() = default;

    virtual std::string kind() const = 0;
    virtual nlohmann::json params() const = 0;

    virtual double survival(double u) const = 0;
    virtual double log_survival(double u) const = 0;
    virtual double density(double u) const = 0;
    virtual double log_density(double u) const = 0;

    /// F^{-1}(p) for p in (0,1).
    virtual double quantile(double p) const = 0;

    virtual double sample(std::mt19937_64& eng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double p;
        do {
            p = unif(eng);
        } while (p <= 0.0 || p >= 1.0);
        return quantile(p);
    }

    /// Draw from R | R > r0.
    virtual double sample_tail(std::mt19937_64& eng, double r0) const {
        if (r0 <= 0) return sample(eng);
        const double tail = survival(r0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double v;
        do {
            v = unif(eng);
        } while (v <= 0.0 || v >= 1.0);
        return quantile(1.0 - v * tail);
    }

    /// Scaling function w(u) = f(u)/survival(u), evaluated in log space.
    /// Meaningful as a tail object; defined wherever the density is positive.
    virtual double scaling(double u) const {
        if (u <= 0) throw ArgumentError("scaling: u must be positive");
        return std::exp(log_density(u) - log_survival(u));
    }

    /// Smallest u with survival below 0.1; default start of certificate grids.
    double tail_start() const { return quantile(0.9); }
};

using RadialPtr = std::shared_ptr<const RadialLaw>;

/// R with R^2 chi-squared (df degrees of freedom).
class ChiRadial final : public RadialLaw {
public:
    explicit ChiRadial(double df) : df_(df) {
        if (!(df > 0)) throw ArgumentError("chi: df must be positive");
    }

    std::string kind() const override { return "chi"; }
    nlohmann::json params() const override { return {{"kind", "chi"}, {"df", df_}}; }
    double df() const { return df_; }

    double survival(double u) const override {
        check_nonneg(u);
        return gamma_q(df_ / 2.0, u * u / 2.0);
    }
    double log_survival(double u) const override {
        check_nonneg(u);
        return log_gamma_q(df_ / 2.0, u * u / 2.0);
    }
    double log_density(double u) const override {
        if (u <= 0) return -kInf;
        return (df_ - 1.0) * std::log(u) - u * u / 2.0 - (df_ / 2.0 - 1.0) * std::log(2.0) -
               std::lgamma(df_ / 2.0);
    }
    double density(double u) const override { return u <= 0 ? 0.0 : std::exp(log_density(u)); }
    double quantile(double p) const override { return std::sqrt(2.0 * gamma_p_inv(df_ / 2.0, p)); }

    double sample(std::mt19937_64& eng) const override {
        return std::sqrt(2.0 * sample_gamma(eng, df_ / 2.0));
    }
    double sample_tail(std::mt19937_64& eng, double r0) const override {
        if (r0 <= 0) return sample(eng);
        const double q0 = gamma_q(df_ / 2.0, r0 * r0 / 2.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double v;
        do {
            v = unif(eng);
        } while (v <= 0.0 || v >= 1.0);
        return std::sqrt(2.0 * gamma_q_inv(df_ / 2.0, v * q0));
    }

private:
    static void check_nonneg(double u) {
        if (u < 0) throw ArgumentError("chi: u must be nonnegative");
    }
    double df_;
};

/// Radius of a Kotz Type I vector: density
///   f(u) = 2 s r^g / Gamma(g) * u^(2(N+abar)-1) * exp(-r u^(2s)),  g = (N+abar)/s,
/// so r * R^(2s) ~ Gamma(g, 1). The standardised case (N=0, r=1/2, s=1)
/// with abar = k/2 is the chi(k) radius.
class KotzRadial final : public RadialLaw {
public:
    KotzRadial(double N, double r, double s, double alpha_bar)
        : N_(N), r_(r), s_(s), alpha_bar_(alpha_bar), g_((N + alpha_bar) / s) {
        if (!(r > 0) || !(s > 0)) throw ArgumentError("kotz: need r > 0, s > 0");
        if (!(N > -alpha_bar)) throw ArgumentError("kotz: need N > -alpha_bar");
        if (!(alpha_bar > 0)) throw ArgumentError("kotz: need alpha_bar > 0");
    }

    std::string kind() const override { return "kotz"; }
    nlohmann::json params() const override {
        return {{"kind", "kotz"}, {"N", N_}, {"r", r_}, {"s", s_}, {"alpha_bar", alpha_bar_}};
    }

    double survival(double u) const override {
        check_nonneg(u);
        return gamma_q(g_, r_ * std::pow(u, 2.0 * s_));
    }
    double log_survival(double u) const override {
        check_nonneg(u);
        return log_gamma_q(g_, r_ * std::pow(u, 2.0 * s_));
    }
    double log_density(double u) const override {
        if (u <= 0) return -kInf;
        return std::log(2.0 * s_) + g_ * std::log(r_) - std::lgamma(g_) +
               (2.0 * (N_ + alpha_bar_) - 1.0) * std::log(u) - r_ * std::pow(u, 2.0 * s_);
    }
    double density(double u) const override { return u <= 0 ? 0.0 : std::exp(log_density(u)); }
    double quantile(double p) const override {
        return std::pow(gamma_p_inv(g_, p) / r_, 1.0 / (2.0 * s_));
    }

    double sample(std::mt19937_64& eng) const override {
        return std::pow(sample_gamma(eng, g_) / r_, 1.0 / (2.0 * s_));
    }
    double sample_tail(std::mt19937_64& eng, double r0) const override {
        if (r0 <= 0) return sample(eng);
        const double q0 = gamma_q(g_, r_ * std::pow(r0, 2.0 * s_));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double v;
        do {
            v = unif(eng);
        } while (v <= 0.0 || v >= 1.0);
        return std::pow(gamma_q_inv(g_, v * q0) / r_, 1.0 / (2.0 * s_));
    }

private:
    static void check_nonneg(double u) {
        if (u < 0) throw ArgumentError("kotz: u must be nonnegative");
    }
    double N_, r_, s_, alpha_bar_, g_;
};

/// Survival exp(-c u^tau) on (0, inf); w(u) = c tau u^(tau-1) in closed form.
class WeibullTailRadial final : public RadialLaw {
public:
    WeibullTailRadial(double c, double tau) : c_(c), tau_(tau) {
        if (!(c > 0) || !(tau > 0)) throw ArgumentError("weibull_tail: need c > 0, tau > 0");
    }

    std::string kind() const override { return "weibull_tail"; }
    nlohmann::json params() const override {
        return {{"kind", "weibull_tail"}, {"c", c_}, {"tau", tau_}};
    }

    double survival(double u) const override {
        check_nonneg(u);
        return std::exp(-c_ * std::pow(u, tau_));
    }
    double log_survival(double u) const override {
        check_nonneg(u);
        return -c_ * std::pow(u, tau_);
    }
    double log_density(double u) const override {
        if (u <= 0) return -kInf;
        return std::log(c_ * tau_) + (tau_ - 1.0) * std::log(u) - c_ * std::pow(u, tau_);
    }
    double density(double u) const override { return u <= 0 ? 0.0 : std::exp(log_density(u)); }
    double quantile(double p) const override {
        return std::pow(-std::log1p(-p) / c_, 1.0 / tau_);
    }
    double scaling(double u) const override {
        if (u <= 0) throw ArgumentError("scaling: u must be positive");
        return c_ * tau_ * std::pow(u, tau_ - 1.0);
    }

private:
    static void check_nonneg(double u) {
        if (u < 0) throw ArgumentError("weibull_tail: u must be nonnegative");
    }
    double c_, tau_;
};

// ---------------------------------------------------------------------------
// Max-domain-of-attraction diagnostics
// ---------------------------------------------------------------------------

struct MdaParams {
    double x_lo = -2.0, x_hi = 2.0;
    int n_x = 41;
    double u_start = 0.0;        // 0 -> law.tail_start()
    int n_doublings = 8;         // slowly decaying laws need a long grid
    double r = 1.1;              // ratio for the vanishing-moment check
    double eta = 2.0;
    double eps = 1e-6;           // required bound at the top grid point
    double envelope_s_hi = 50.0;
    int envelope_n_s = 101;
};

struct MdaReport {
    // (1) Gumbel limit: max_x | ratio(u_top, x) / exp(-x) - 1 |.
    double gumbel_max_rel_dev = 0.0;
    bool gumbel_pass = false;
    // (2) (u w(u))^eta * survival(r u) / survival(u) over the doubling grid,
    // kept in log space (the values underflow long before the grid top).
    std::vector<double> u_grid;
    std::vector<double> vanishing_log_values;
    std::vector<double> vanishing_values;
    bool vanishing_decreasing = false;
    bool vanishing_pass = false;
    // (3) envelope ratio(u, s) <= c / (1 + eps_fit s)^(1/eps_fit) on s in [0, s_hi].
    double envelope_c = kInf;
    double envelope_eps = 0.0;
    bool envelope_pass = false;

    bool all_passed() const { return gumbel_pass && vanishing_pass && envelope_pass; }
};

/// Finite-u certificate that a law behaves like a Gumbel-MDA tail:
/// the exp(-x) limit, the vanishing of (u w)^eta * survival(ru)/survival(u),
/// and a polynomial tail envelope with fitted (c, eps).
inline MdaReport mda_certificate(const RadialLaw& law, MdaParams p = {}) {
    MdaReport rep;
    const double u0 = p.u_start > 0 ? p.u_start : law.tail_start();

    rep.u_grid.resize(p.n_doublings + 1);
    for (int j = 0; j <= p.n_doublings; ++j) rep.u_grid[j] = u0 * std::pow(2.0, j);
    const double u_top = rep.u_grid.back();

    // (1) Gumbel limit at the largest u, deviation relative to exp(-x).
    {
        const double w = law.scaling(u_top);
        const double ls_top = law.log_survival(u_top);
        double worst = 0.0;
        for (int i = 0; i < p.n_x; ++i) {
            const double x = p.x_lo + (p.x_hi - p.x_lo) * i / (p.n_x - 1);
            const double shifted = u_top + x / w;
            if (shifted <= 0) continue;
            const double log_ratio = law.log_survival(shifted) - ls_top;
            worst = std::max(worst, std::fabs(std::expm1(log_ratio + x)));
        }
        rep.gumbel_max_rel_dev = worst;
        rep.gumbel_pass = worst < 0.02;
    }

    // (2) log-space evaluation of the vanishing-moment quantity.
    {
        const std::size_t n = rep.u_grid.size();
        rep.vanishing_log_values.resize(n);
        rep.vanishing_values.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double u = rep.u_grid[j];
            const double lv = p.eta * std::log(u * law.scaling(u)) + law.log_survival(p.r * u) -
                              law.log_survival(u);
            rep.vanishing_log_values[j] = lv;
            rep.vanishing_values[j] = std::exp(lv);
        }
        // The quantity may rise before the exponential tail wins; the
        // certificate requires it to be decreasing at the top of the grid.
        rep.vanishing_decreasing = true;
        for (std::size_t j = n >= 3 ? n - 2 : 1; j < n; ++j)
            if (rep.vanishing_log_values[j] >= rep.vanishing_log_values[j - 1])
                rep.vanishing_decreasing = false;
        rep.vanishing_pass =
            rep.vanishing_decreasing && rep.vanishing_log_values.back() < std::log(p.eps);
    }

    // (3) envelope fit over the two largest grid points.
    {
        const double eps_candidates[] = {0.5, 0.25, 0.1, 0.05};
        double best_c = kInf, best_eps = 0.0;
        for (double eps : eps_candidates) {
            double c = 0.0;
            for (int which = 0; which < 2; ++which) {
                const double u = rep.u_grid[rep.u_grid.size() - 1 - which];
                const double w = law.scaling(u);
                const double ls = law.log_survival(u);
                for (int i = 0; i < p.envelope_n_s; ++i) {
                    const double s = p.envelope_s_hi * i / (p.envelope_n_s - 1);
                    const double log_ratio = law.log_survival(u + s / w) - ls;
                    const double log_env = -std::log1p(eps * s) / eps;
                    c = std::max(c, std::exp(log_ratio - log_env));
                }
            }
            if (c < best_c) {
                best_c = c;
                best_eps = eps;
            }
        }
        rep.envelope_c = best_c;
        rep.envelope_eps = best_eps;
        rep.envelope_pass = std::isfinite(best_c) && best_c < 1e6;
    }

    return rep;
}

struct TailRatioPoint {
    double u;
    double log_ratio;
    double ratio;
};

/// survival1(u)/survival2(u) over a grid, evaluated in log space.
inline std::vector<TailRatioPoint> tail_equivalence_ratio(const RadialLaw& law1,
                                                          const RadialLaw& law2,
                                                          const std::vector<double>& u_grid) {
    std::vector<TailRatioPoint> out;
    out.reserve(u_grid.size());
    for (double u : u_grid) {
        const double lr = law1.log_survival(u) - law2.log_survival(u);
        out.push_back({u, lr, std::exp(lr)});
    }
    return out;
}

}  // namespace gsdtail
