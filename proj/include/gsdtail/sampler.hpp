#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsdtail/asymptotics.hpp"
#include "gsdtail/errors.hpp"
#include "gsdtail/model.hpp"
#include "gsdtail/qp.hpp"
#include "gsdtail/rng.hpp"

namespace gsdtail {

enum class Estimator { crude, radial_tilt };

inline std::string to_string(Estimator e) {
    return e == Estimator::crude ? "crude" : "radial-tilt";
}

/// Monte Carlo estimate with provenance; crude estimates carry the binomial
/// standard error, tilted ones the weighted-indicator error. A zero-hit crude
/// run reports the rule-of-three one-sided 95% bound instead.
struct McEstimate {
    double p_hat = 0.0;
    double std_err = 0.0;
    std::int64_t n_samples = 0;
    Estimator estimator = Estimator::crude;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    bool no_hits = false;
    double upper_bound = 0.0;  // rule-of-three bound when no_hits
};

namespace sampler_detail {

constexpr std::int64_t kBlock = 1 << 18;

// One SD(k, alpha) draw: U_i = S_i sqrt(G_i / sum G), G_i ~ Gamma(alpha_i, 1).
inline void sample_sd_one(const AlphaVector& alpha, std::mt19937_64& eng, Eigen::VectorXd& u) {
    const int k = alpha.size();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        u[i] = sample_gamma(eng, alpha[i]);
        total += u[i];
    }
    for (int i = 0; i < k; ++i) {
        const double sign = unif(eng) < 0.5 ? -1.0 : 1.0;
        u[i] = sign * std::sqrt(u[i] / total);
    }
}

}  // namespace sampler_detail

/// n draws from SD(k, alpha), one column per draw; every column has unit norm.
inline Eigen::MatrixXd sample_sd(const AlphaVector& alpha, RngStream rng, std::int64_t n) {
    Eigen::MatrixXd out(alpha.size(), n);
    Eigen::VectorXd u(alpha.size());
    std::int64_t done = 0;
    for (std::uint64_t block = 0; done < n; ++block) {
        auto eng = rng.substream(block).make_engine();
        const std::int64_t stop = std::min<std::int64_t>(n, done + sampler_detail::kBlock);
        for (; done < stop; ++done) {
            sampler_detail::sample_sd_one(alpha, eng, u);
            out.col(done) = u;
        }
    }
    return out;
}

/// n draws of X = R A^T U, one column per draw.
inline Eigen::MatrixXd sample_gsd(const ModelSpec& m, RngStream rng, std::int64_t n) {
    Eigen::MatrixXd out(m.k(), n);
    Eigen::VectorXd u(m.k());
    const Eigen::MatrixXd At = m.mixing().A().transpose();
    std::int64_t done = 0;
    for (std::uint64_t block = 0; done < n; ++block) {
        auto eng = rng.substream(block).make_engine();
        const std::int64_t stop = std::min<std::int64_t>(n, done + sampler_detail::kBlock);
        for (; done < stop; ++done) {
            sampler_detail::sample_sd_one(m.alpha(), eng, u);
            const double r = m.radial().sample(eng);
            out.col(done) = r * (At * u);
        }
    }
    return out;
}

/// n draws of a standardised Kotz vector: independent coordinates with
/// squared coordinate Gamma(alpha_i, rate 1/2) and random signs.
inline Eigen::MatrixXd sample_standard_kotz(const AlphaVector& alpha, RngStream rng,
                                            std::int64_t n) {
    Eigen::MatrixXd out(alpha.size(), n);
    std::int64_t done = 0;
    for (std::uint64_t block = 0; done < n; ++block) {
        auto eng = rng.substream(block).make_engine();
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const std::int64_t stop = std::min<std::int64_t>(n, done + sampler_detail::kBlock);
        for (; done < stop; ++done) {
            for (int i = 0; i < alpha.size(); ++i) {
                const double g = 2.0 * sample_gamma(eng, alpha[i]);
                out(i, done) = (unif(eng) < 0.5 ? -1.0 : 1.0) * std::sqrt(g);
            }
        }
    }
    return out;
}

/// Estimate P(X > u b). The radial tilt conditions R beyond
/// (1 - delta) u |b_I| and reweights by the survival mass; the event
/// {X > u b} implies R >= u |b_I|, so the estimator stays unbiased.
inline McEstimate mc_tail(const ModelSpec& m, const Eigen::VectorXd& b, double u, RngStream rng,
                          std::int64_t n, Estimator estimator = Estimator::crude,
                          double delta = 0.2) {
    if (b.size() != m.k()) throw ArgumentError("mc_tail: b dimension mismatch");
    if (u < 0) throw ArgumentError("mc_tail: u must be nonnegative");
    if (n < 1000) throw ArgumentError("mc_tail: need n >= 1000");

    double r0 = 0.0;
    double weight = 1.0;
    if (estimator == Estimator::radial_tilt && u > 0) {
        const auto sol = solve_qp(QpProblem(m.mixing().sigma(), b));
        r0 = (1.0 - delta) * u * sol.norm_bI;
        weight = m.radial().survival(r0);
    }

    const Eigen::VectorXd thr = u * b;
    const Eigen::MatrixXd At = m.mixing().A().transpose();
    Eigen::VectorXd usd(m.k()), x(m.k());
    std::int64_t hits = 0;
    std::int64_t done = 0;
    for (std::uint64_t block = 0; done < n; ++block) {
        auto eng = rng.substream(block).make_engine();
        const std::int64_t stop = std::min<std::int64_t>(n, done + sampler_detail::kBlock);
        for (; done < stop; ++done) {
            sampler_detail::sample_sd_one(m.alpha(), eng, usd);
            const double r = r0 > 0 ? m.radial().sample_tail(eng, r0) : m.radial().sample(eng);
            x = r * (At * usd);
            bool hit = true;
            for (int i = 0; i < m.k(); ++i)
                if (!(x[i] > thr[i])) {
                    hit = false;
                    break;
                }
            if (hit) ++hits;
        }
    }

    McEstimate est;
    est.n_samples = n;
    est.estimator = estimator;
    est.seed = rng.seed;
    est.stream = rng.stream;
    const double hr = static_cast<double>(hits) / static_cast<double>(n);
    est.p_hat = weight * hr;
    est.std_err = weight * std::sqrt(hr * (1.0 - hr) / static_cast<double>(n));
    if (hits == 0) {
        est.no_hits = true;
        est.upper_bound = weight * 3.0 / static_cast<double>(n);
    }
    return est;
}

/// Empirical conditional survival P(X_2 > rho u + x sqrt(u / w(u)) | X_1 > u)
/// over a grid of x, for bivariate models with sigma_12 = rho.
struct ConditionalExcess {
    std::vector<double> x_grid;
    std::vector<double> estimate;
    std::vector<double> std_err;
    std::int64_t conditioning_hits = 0;
    std::int64_t n_samples = 0;
};

inline ConditionalExcess conditional_excess(const ModelSpec& m, double u,
                                            const std::vector<double>& x_grid, RngStream rng,
                                            std::int64_t n,
                                            Estimator estimator = Estimator::radial_tilt,
                                            double delta = 0.2) {
    if (m.k() != 2) throw ArgumentError("conditional_excess: bivariate models only");
    if (!(u > 0)) throw ArgumentError("conditional_excess: u must be positive");
    const double rho = m.mixing().sigma()(0, 1);
    const double scale = std::sqrt(u / m.radial().scaling(u));

    std::vector<double> thr(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) thr[j] = rho * u + x_grid[j] * scale;

    const double r0 = estimator == Estimator::radial_tilt ? (1.0 - delta) * u : 0.0;
    const Eigen::MatrixXd At = m.mixing().A().transpose();
    Eigen::VectorXd usd(2), x(2);
    std::int64_t hits1 = 0;
    std::vector<std::int64_t> hits2(x_grid.size(), 0);
    std::int64_t done = 0;
    for (std::uint64_t block = 0; done < n; ++block) {
        auto eng = rng.substream(block).make_engine();
        const std::int64_t stop = std::min<std::int64_t>(n, done + sampler_detail::kBlock);
        for (; done < stop; ++done) {
            sampler_detail::sample_sd_one(m.alpha(), eng, usd);
            const double r = r0 > 0 ? m.radial().sample_tail(eng, r0) : m.radial().sample(eng);
            x = r * (At * usd);
            if (!(x[0] > u)) continue;
            ++hits1;
            for (std::size_t j = 0; j < x_grid.size(); ++j)
                if (x[1] > thr[j]) ++hits2[j];
        }
    }

    if (hits1 < 500) {
        std::ostringstream os;
        os << "conditional_excess: only " << hits1
           << " conditioning hits (< 500); use the radial tilt or increase n";
        throw InsufficientSamplesError(os.str());
    }

    ConditionalExcess out;
    out.x_grid = x_grid;
    out.conditioning_hits = hits1;
    out.n_samples = n;
    out.estimate.resize(x_grid.size());
    out.std_err.resize(x_grid.size());
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        const double p = static_cast<double>(hits2[j]) / static_cast<double>(hits1);
        out.estimate[j] = p;
        out.std_err[j] = std::sqrt(p * (1.0 - p) / static_cast<double>(hits1));
    }
    return out;
}

}  // namespace gsdtail
