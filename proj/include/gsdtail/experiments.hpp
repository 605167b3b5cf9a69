#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gsdtail/asymptotics.hpp"
#include "gsdtail/sampler.hpp"
#include "gsdtail/serialize.hpp"

namespace gsdtail {

struct ExperimentRow {
    double u = 0.0;
    double mc = 0.0;
    double mc_se = 0.0;
    double asym = 0.0;
    double ratio = 0.0;      // mc / asym, computed in log space
    double log_ratio = 0.0;
};

/// Self-contained comparison report: inputs, per-u Monte Carlo vs asymptotic
/// rows, and named structural checks.
struct ExperimentReport {
    std::string id;
    ordered_json inputs;
    ordered_json expansion;
    std::vector<ExperimentRow> rows;
    std::vector<CheckResult> checks;
    ordered_json extra;  // experiment-specific blocks

    bool all_checks_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

inline ordered_json report_to_json(const ExperimentReport& rep) {
    ordered_json j;
    j["experiment"] = rep.id;
    j["inputs"] = rep.inputs;
    if (!rep.expansion.is_null()) j["expansion"] = rep.expansion;
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"u", r.u},
                        {"mc", r.mc},
                        {"mc_se", r.mc_se},
                        {"asym", r.asym},
                        {"ratio", r.ratio},
                        {"log_ratio", r.log_ratio}});
    j["rows"] = rows;
    ordered_json checks = ordered_json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"residual", c.residual}});
    j["checks"] = checks;
    j["all_checks_passed"] = rep.all_checks_passed();
    if (!rep.extra.is_null()) j["extra"] = rep.extra;
    return j;
}

inline std::string report_to_csv(const ExperimentReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "u,mc,mc_se,asym,ratio,log_ratio\n";
    for (const auto& r : rep.rows)
        os << r.u << ',' << r.mc << ',' << r.mc_se << ',' << r.asym << ',' << r.ratio << ','
           << r.log_ratio << '\n';
    return os.str();
}

inline void write_report(const ExperimentReport& rep, const std::string& path,
                         const std::string& format) {
    if (format == "json")
        write_text_file(path, report_to_json(rep).dump(2) + "\n");
    else if (format == "csv")
        write_text_file(path, report_to_csv(rep));
    else
        throw ArgumentError("write_report: format must be json or csv");
}

namespace exp_detail {

inline ExperimentRow make_row(double u, const McEstimate& mc, const Evaluation& asym) {
    ExperimentRow row;
    row.u = u;
    row.mc = mc.p_hat;
    row.mc_se = mc.std_err;
    row.asym = asym.value;
    row.log_ratio = (mc.p_hat > 0 ? std::log(mc.p_hat) : -kInf) - asym.log_value;
    row.ratio = std::exp(row.log_ratio);
    return row;
}

inline void add_check(std::vector<CheckResult>& checks, const std::string& name,
                      bool passed, double residual) {
    checks.push_back({name, passed, residual});
}

// empirical upper quantile at level 1 - 1/n from a sorted sample
inline double empirical_quantile(const std::vector<double>& sorted, double level) {
    const std::size_t n = sorted.size();
    const std::size_t idx = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(std::floor(level * static_cast<double>(n))));
    return sorted[idx];
}

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// Equicorrelated experiment
// ---------------------------------------------------------------------------

struct EquicorrelatedParams {
    int k = 3;
    double rho = 0.5;
    double p = 0.5;   // all alpha components equal p
    std::vector<double> u_grid;
    std::uint64_t seed = 1;
    std::int64_t n_samples = 1'000'000;
    Estimator estimator = Estimator::radial_tilt;
};

/// Equicorrelated model with the all-ones ray: builds the triangular
/// Cholesky mixing, validates the closed-form structure, and compares the
/// expansion against Monte Carlo on the u grid.
inline ExperimentReport run_equicorrelated_experiment(const EquicorrelatedParams& prm) {
    if (!(prm.rho > -1.0 / (prm.k - 1) && prm.rho < 1.0))
        throw ArgumentError("example1: rho must lie in (-1/(k-1), 1)");
    if (!(prm.p > 0)) throw ArgumentError("example1: p must be positive");

    const int k = prm.k;
    const Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(k, k, prm.rho) +
                                  (1.0 - prm.rho) * Eigen::MatrixXd::Identity(k, k);
    AlphaVector alpha{Eigen::VectorXd::Constant(k, prm.p)};
    ModelSpec model(alpha, MixingMatrix::from_sigma(sigma), std::make_shared<ChiRadial>(k));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);

    ExperimentReport rep;
    rep.id = "example1";
    rep.inputs = {{"k", k},          {"rho", prm.rho},
                  {"p", prm.p},      {"u_grid", prm.u_grid},
                  {"seed", prm.seed}, {"n_samples", prm.n_samples},
                  {"estimator", to_string(prm.estimator)}};

    const double denom = 1.0 + (k - 1) * prm.rho;

    // (i) Sigma^{-1} 1 = 1/(1+(k-1) rho) 1
    {
        const Eigen::VectorXd si1 = model.mixing().sigma_inverse() * ones;
        const double resid = (si1 * denom - ones).cwiseAbs().maxCoeff();
        exp_detail::add_check(rep.checks, "sigma_inverse_ones", resid < 1e-12, resid);
    }

    const auto sol = solve_qp(QpProblem(sigma, ones));
    const auto split = index_split(model, sol);

    // (ii) no degenerate angular directions under the triangular factor
    exp_detail::add_check(rep.checks, "L_empty", split.L.empty(),
                          static_cast<double>(split.L.size()));

    // (iii) row-constant off-diagonal structure of C and positive row sums
    {
        const Eigen::MatrixXd& C = model.mixing().C();
        double resid = 0.0;
        bool positive = true;
        for (int i = 0; i < k; ++i) {
            for (int j = 1; j < i; ++j) resid = std::max(resid, std::fabs(C(i, j) - C(i, 0)));
            const double row_sum = i == 0 ? C(0, 0) : C(i, i) + (i)*C(i, 0);
            const double direct = (C * ones)[i];
            resid = std::max(resid, std::fabs(row_sum - direct));
            if (!(direct > 0)) positive = false;
        }
        exp_detail::add_check(rep.checks, "cholesky_row_structure", resid < 1e-10 && positive,
                              resid);
    }

    // (iv) closed forms for |1|^2 and sqrt(det Sigma)
    {
        const double norm2 = sol.min_value;
        const double r1 = std::fabs(norm2 - k / denom);
        const double sq = std::sqrt(model.mixing().det_sigma());
        const double closed = std::pow(1.0 - prm.rho, (k - 1) / 2.0) * std::sqrt(denom);
        const double r2 = std::fabs(sq - closed);
        exp_detail::add_check(rep.checks, "closed_forms", r1 < 1e-12 && r2 < 1e-12,
                              std::max(r1, r2));
    }

    const auto asym = tail_expansion(model, ones);
    rep.expansion = tail_asymptotics_to_json(asym, prm.u_grid);

    // (v) elliptical specialisation at p = 1/2
    if (std::fabs(prm.p - 0.5) < 1e-14) {
        const double norm1 = std::sqrt(k / denom);
        const double lin = 1.0 / denom;
        const double closed = std::tgamma(k / 2.0) /
                              (2.0 * std::pow(M_PI, k / 2.0) *
                               std::sqrt(model.mixing().det_sigma())) *
                              std::pow(norm1 / lin, k);
        const double resid = relative_diff(asym.constant, closed);
        exp_detail::add_check(rep.checks, "elliptical_constant", resid < 1e-8, resid);
    }

    std::uint64_t stream = 0;
    for (double u : prm.u_grid) {
        const auto mc = mc_tail(model, ones, u, RngStream{prm.seed, stream}, prm.n_samples,
                                prm.estimator);
        stream += 1024;
        rep.rows.push_back(exp_detail::make_row(u, mc, asym.evaluate(u)));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Bivariate experiment
// ---------------------------------------------------------------------------

struct BivariateParams {
    double alpha1 = 1.0;
    double alpha2 = 1.5;
    double rho = 0.0;
    double a = 0.5;
    std::vector<double> u_grid;
    std::uint64_t seed = 1;
    std::int64_t n_samples = 1'000'000;
    Estimator estimator = Estimator::radial_tilt;
    // conditional-limit block (tie case only)
    std::vector<double> conditional_x_grid = {-1.0, 0.0, 1.0};
    double conditional_level = 1e-3;
    // asymptotic-independence block
    bool run_independence = true;
    std::int64_t pilot_n = 10'000'000;
    std::vector<double> independence_n_grid = {1e2, 1e3, 1e4};
};

inline ModelSpec bivariate_experiment_model(double alpha1, double alpha2, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw ArgumentError("example2: rho must lie in (-1, 1)");
    Eigen::MatrixXd A(2, 2);
    A << 1.0, rho, 0.0, std::sqrt(1.0 - rho * rho);
    AlphaVector alpha{Eigen::VectorXd{{alpha1, alpha2}}};
    return ModelSpec(alpha, MixingMatrix(A),
                     std::make_shared<KotzRadial>(0.0, 0.5, 1.0, alpha1 + alpha2));
}

/// Bivariate standardised-Kotz experiment along the ray (1, a): case split on
/// rho vs a, expansion-vs-Monte-Carlo rows, the conditional-limit block at
/// the tie, and the joint-exceedance vanishing check.
inline ExperimentReport run_bivariate_experiment(const BivariateParams& prm) {
    if (!(prm.a <= 1.0)) throw ArgumentError("example2: a must lie in (-inf, 1]");
    ModelSpec model = bivariate_experiment_model(prm.alpha1, prm.alpha2, prm.rho);
    const Eigen::VectorXd b = Eigen::VectorXd{{1.0, prm.a}};

    const bool tie = std::fabs(prm.rho - prm.a) <= 1e-12;
    const std::string case_tag = tie ? "rho=a" : (prm.rho < prm.a ? "rho<a" : "rho>a");

    ExperimentReport rep;
    rep.id = "example2";
    rep.inputs = {{"alpha1", prm.alpha1},
                  {"alpha2", prm.alpha2},
                  {"rho", prm.rho},
                  {"a", prm.a},
                  {"case", case_tag},
                  {"u_grid", prm.u_grid},
                  {"seed", prm.seed},
                  {"n_samples", prm.n_samples},
                  {"estimator", to_string(prm.estimator)}};

    const auto sol = solve_qp(QpProblem(model.mixing().sigma(), b));
    const auto asym = tail_expansion(model, b);
    rep.expansion = tail_asymptotics_to_json(asym, prm.u_grid);

    if (!sol.index_J.empty()) {
        // orthant rewrite must agree on the shared surface
        const auto orthant = tail_expansion_orthant(model, b);
        const double resid = relative_diff(orthant.constant, asym.constant);
        exp_detail::add_check(rep.checks, "orthant_route_agreement", resid < 1e-5, resid);
        rep.extra["orthant_constant"] = orthant.constant;
    }

    std::uint64_t stream = 0;
    for (double u : prm.u_grid) {
        const auto mc =
            mc_tail(model, b, u, RngStream{prm.seed, stream}, prm.n_samples, prm.estimator);
        stream += 1024;
        rep.rows.push_back(exp_detail::make_row(u, mc, asym.evaluate(u)));
    }

    // Tie case: conditional excess against the gamma-tail limit.
    if (tie && !prm.conditional_x_grid.empty()) {
        // pilot for the conditioning level
        const std::int64_t pilot = std::max<std::int64_t>(prm.n_samples, 1'000'000);
        const auto x_pilot = sample_gsd(model, RngStream{prm.seed, 500'000}, pilot);
        std::vector<double> x1(x_pilot.cols());
        for (int c = 0; c < x_pilot.cols(); ++c) x1[c] = x_pilot(0, c);
        std::sort(x1.begin(), x1.end());
        const double u_star =
            exp_detail::empirical_quantile(x1, 1.0 - prm.conditional_level);

        const auto ce = conditional_excess(model, u_star, prm.conditional_x_grid,
                                           RngStream{prm.seed, 600'000}, prm.n_samples,
                                           Estimator::radial_tilt);
        ordered_json block;
        block["u"] = u_star;
        block["conditioning_hits"] = ce.conditioning_hits;
        ordered_json entries = ordered_json::array();
        double worst = 0.0;
        for (std::size_t j = 0; j < ce.x_grid.size(); ++j) {
            const double limit = symmetric_sqrt_gamma_survival(
                prm.alpha2, ce.x_grid[j] / std::sqrt(1.0 - prm.rho * prm.rho));
            worst = std::max(worst, std::fabs(ce.estimate[j] - limit));
            entries.push_back({{"x", ce.x_grid[j]},
                               {"estimate", ce.estimate[j]},
                               {"std_err", ce.std_err[j]},
                               {"limit", limit}});
        }
        block["points"] = entries;
        rep.extra["conditional_excess"] = block;
        exp_detail::add_check(rep.checks, "conditional_limit", worst < 0.05, worst);
    }

    // Joint exceedances of the marginal (1 - 1/n)-quantiles vanish faster
    // than 1/n; estimated with the radial tilt at empirical pilot quantiles.
    if (prm.run_independence && !prm.independence_n_grid.empty()) {
        const auto pilot = sample_gsd(model, RngStream{prm.seed, 700'000}, prm.pilot_n);
        std::vector<double> x1(pilot.cols()), x2(pilot.cols());
        for (int c = 0; c < pilot.cols(); ++c) {
            x1[c] = pilot(0, c);
            x2[c] = pilot(1, c);
        }
        std::sort(x1.begin(), x1.end());
        std::sort(x2.begin(), x2.end());

        ordered_json entries = ordered_json::array();
        std::vector<double> values;
        std::uint64_t ai_stream = 800'000;
        for (double n_level : prm.independence_n_grid) {
            const double level = 1.0 - 1.0 / n_level;
            const Eigen::VectorXd bq{{exp_detail::empirical_quantile(x1, level),
                                      exp_detail::empirical_quantile(x2, level)}};
            const auto mc = mc_tail(model, bq, 1.0, RngStream{prm.seed, ai_stream},
                                    prm.n_samples, Estimator::radial_tilt);
            ai_stream += 1024;
            values.push_back(n_level * mc.p_hat);
            entries.push_back({{"n", n_level},
                               {"b_n", vector_to_json(bq)},
                               {"joint_p", mc.p_hat},
                               {"joint_se", mc.std_err},
                               {"n_times_p", n_level * mc.p_hat}});
        }
        rep.extra["asymptotic_independence"] = entries;
        bool decreasing = true;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] >= values[i - 1]) decreasing = false;
        exp_detail::add_check(rep.checks, "joint_exceedance_vanishes",
                              decreasing && values.back() < 0.1, values.back());
    }

    return rep;
}

}  // namespace gsdtail
