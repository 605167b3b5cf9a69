#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gsdtail/asymptotics.hpp"
#include "gsdtail/errors.hpp"
#include "gsdtail/model.hpp"
#include "gsdtail/qp.hpp"
#include "gsdtail/radial.hpp"
#include "gsdtail/sampler.hpp"

namespace gsdtail {

using ordered_json = nlohmann::ordered_json;

// Index sets are 1-based on the wire.
inline ordered_json index_set_to_json(const IndexSet& s) {
    ordered_json arr = ordered_json::array();
    for (int i : s) arr.push_back(i + 1);
    return arr;
}

inline ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array()) throw ArgumentError(name + ": expected an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].is_string()) {
            const std::string s = j[i].get<std::string>();
            if (s == "-inf")
                v[i] = -kInf;
            else
                throw ArgumentError(name + ": unrecognised entry '" + s + "'");
        } else {
            v[i] = j[i].get<double>();
        }
    }
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) throw ArgumentError(name + ": expected a matrix");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ArgumentError(name + ": ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

// ---------------------------------------------------------------------------
// Radial laws
// ---------------------------------------------------------------------------

inline RadialPtr radial_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ArgumentError("radial: expected an object with a 'kind' tag");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "chi") return std::make_shared<ChiRadial>(j.at("df").get<double>());
    if (kind == "kotz")
        return std::make_shared<KotzRadial>(j.at("N").get<double>(), j.at("r").get<double>(),
                                            j.at("s").get<double>(),
                                            j.at("alpha_bar").get<double>());
    if (kind == "weibull_tail")
        return std::make_shared<WeibullTailRadial>(j.at("c").get<double>(),
                                                   j.at("tau").get<double>());
    throw ArgumentError("radial: unknown kind '" + kind + "'");
}

inline ordered_json radial_to_json(const RadialLaw& law) {
    return ordered_json(law.params());
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

inline ordered_json model_to_json(const ModelSpec& m) {
    ordered_json j;
    j["alpha"] = vector_to_json(m.alpha().vec());
    j["A"] = matrix_to_json(m.mixing().A());
    j["radial"] = radial_to_json(m.radial());
    return j;
}

/// Validating loader; construction errors carry the first violated
/// invariant's name in the message.
inline ModelSpec model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ArgumentError("model: expected an object");
    for (const char* key : {"alpha", "A", "radial"})
        if (!j.contains(key))
            throw ArgumentError(std::string("model: missing field '") + key + "'");
    AlphaVector alpha{vector_from_json(j.at("alpha"), "alpha")};
    const bool require_corr = !j.value("allow_non_correlation", false);
    MixingMatrix mixing(matrix_from_json(j.at("A"), "A"), require_corr);
    return ModelSpec(std::move(alpha), std::move(mixing), radial_from_json(j.at("radial")));
}

// ---------------------------------------------------------------------------
// QP problem / solution
// ---------------------------------------------------------------------------

inline QpProblem qp_problem_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("Sigma") || !j.contains("b"))
        throw ArgumentError("qp: expected an object with 'Sigma' and 'b'");
    return QpProblem(matrix_from_json(j.at("Sigma"), "Sigma"),
                     vector_from_json(j.at("b"), "b"));
}

inline ordered_json qp_solution_to_json(const QpSolution& sol,
                                        const VerificationReport* report = nullptr) {
    ordered_json j;
    j["b_star"] = vector_to_json(sol.b_star);
    j["I"] = index_set_to_json(sol.index_I);
    j["J"] = index_set_to_json(sol.index_J);
    j["min_value"] = sol.min_value;
    j["norm_bI"] = sol.norm_bI;
    if (report) {
        ordered_json checks = ordered_json::array();
        for (const auto& c : report->checks)
            checks.push_back({{"name", c.name}, {"passed", c.passed}, {"residual", c.residual}});
        j["residuals"] = checks;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Thresholds, expansions, estimates, certificates
// ---------------------------------------------------------------------------

inline ordered_json threshold_entry(double q) {
    if (q == -kInf) return ordered_json("-inf");
    return ordered_json(q);
}

inline ordered_json tail_asymptotics_to_json(const TailAsymptotics& a,
                                             const std::vector<double>& u_grid = {}) {
    ordered_json j;
    j["branch"] = to_string(a.branch);
    j["I"] = index_set_to_json(a.index_I);
    j["J"] = index_set_to_json(a.index_J);
    j["L"] = index_set_to_json(a.index_L);
    j["M"] = index_set_to_json(a.index_M);
    j["constant"] = a.constant;
    j["log_constant"] = a.log_constant;
    j["exponent"] = a.lambda_exponent;
    j["radius_scale"] = a.radius_scale;
    ordered_json evals = ordered_json::array();
    for (double u : u_grid) {
        const auto e = a.evaluate(u);
        evals.push_back({{"u", u}, {"value", e.value}, {"log_value", e.log_value}});
    }
    j["evaluate_at"] = evals;
    return j;
}

inline ordered_json mc_estimate_to_json(const McEstimate& e) {
    ordered_json j;
    j["p_hat"] = e.p_hat;
    j["std_err"] = e.std_err;
    j["n_samples"] = e.n_samples;
    j["estimator"] = to_string(e.estimator);
    j["seed"] = e.seed;
    j["stream"] = e.stream;
    if (e.no_hits) {
        j["no_hits"] = true;
        j["upper_bound"] = e.upper_bound;
    }
    return j;
}

inline ordered_json mda_report_to_json(const MdaReport& r) {
    ordered_json j;
    j["gumbel_max_rel_dev"] = r.gumbel_max_rel_dev;
    j["gumbel_pass"] = r.gumbel_pass;
    j["u_grid"] = r.u_grid;
    j["vanishing_log_values"] = r.vanishing_log_values;
    j["vanishing_decreasing"] = r.vanishing_decreasing;
    j["vanishing_pass"] = r.vanishing_pass;
    j["envelope_c"] = r.envelope_c;
    j["envelope_eps"] = r.envelope_eps;
    j["envelope_pass"] = r.envelope_pass;
    j["all_passed"] = r.all_passed();
    return j;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ArgumentError(std::string("json parse error in '") + path + "': " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::argument, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorCode::argument, "write failed for '" + path + "'");
}

}  // namespace gsdtail
