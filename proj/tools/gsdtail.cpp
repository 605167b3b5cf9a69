// Command-line front end: QP solving, tail expansions, Monte Carlo
// estimation, max-domain-of-attraction certificates, density evaluation,
// and the two built-in experiments. All structured I/O is JSON (reports
// also emit CSV).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsdtail/experiments.hpp"
#include "gsdtail/serialize.hpp"

using namespace gsdtail;

namespace {

Eigen::VectorXd parse_vector(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if (tok == "-inf")
            vals.push_back(-kInf);
        else
            vals.push_back(std::stod(tok));
    }
    if (vals.empty()) throw ArgumentError("expected a comma-separated list of numbers");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

std::vector<double> parse_list(const std::string& csv) {
    const Eigen::VectorXd v = parse_vector(csv);
    return {v.data(), v.data() + v.size()};
}

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-")
        std::cout << text;
    else
        write_text_file(output, text);
}

void emit_json(const ordered_json& j, const std::string& output) {
    emit(j.dump(2) + "\n", output);
}

Estimator parse_estimator(const std::string& name) {
    if (name == "crude") return Estimator::crude;
    if (name == "tilt" || name == "radial-tilt") return Estimator::radial_tilt;
    throw ArgumentError("estimator must be 'crude' or 'tilt'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tail asymptotics of generalised symmetrised Dirichlet vectors"};
    app.require_subcommand(1);

    std::string output;
    std::string format = "json";
    std::uint64_t seed = 20240901;
    app.add_option("--output", output, "output file (default: stdout)");
    app.add_option("--format", format, "output format: json or csv (reports only)")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", seed, "base seed for Monte Carlo subcommands");

    // ---- qp-solve -------------------------------------------------------
    auto* qp_cmd = app.add_subcommand("qp-solve", "solve the constrained quadratic program");
    std::string qp_input;
    qp_cmd->add_option("--input", qp_input, "JSON file with {Sigma, b}")->required();
    qp_cmd->callback([&] {
        const auto problem = qp_problem_from_json(load_json_file(qp_input));
        const auto sol = solve_qp(problem);
        const auto rep = verify_solution(problem, sol);
        emit_json(qp_solution_to_json(sol, &rep), output);
    });

    // ---- asym -----------------------------------------------------------
    auto* asym_cmd = app.add_subcommand("asym", "evaluate the tail expansion along a ray");
    std::string asym_model, asym_b, asym_u, asym_qI, asym_qJ, asym_mode = "plain-ray";
    bool asym_orthant = false;
    asym_cmd->add_option("--model", asym_model, "model JSON file")->required();
    asym_cmd->add_option("--b", asym_b, "direction vector, e.g. 1,0.5")->required();
    asym_cmd->add_option("--u", asym_u, "comma list of u values for evaluate_at");
    asym_cmd->add_option("--mode", asym_mode, "plain-ray or custom")
        ->check(CLI::IsMember({"plain-ray", "custom"}));
    asym_cmd->add_option("--qI", asym_qI, "custom q_I (finite, comma list)");
    asym_cmd->add_option("--qJ", asym_qJ, "custom q_J (numbers or -inf)");
    asym_cmd->add_flag("--orthant", asym_orthant, "use the orthant-form rewrite");
    asym_cmd->callback([&] {
        const auto model = model_from_json(load_json_file(asym_model));
        const Eigen::VectorXd b = parse_vector(asym_b);
        const auto sol = solve_qp(QpProblem(model.mixing().sigma(), b));
        ThresholdSpec t;
        if (asym_mode == "plain-ray") {
            t = plain_ray_thresholds(sol, b);
        } else {
            if (asym_qI.empty()) throw ArgumentError("custom mode requires --qI");
            const Eigen::VectorXd qI = parse_vector(asym_qI);
            const Eigen::VectorXd qJ =
                asym_qJ.empty() ? Eigen::VectorXd(0) : parse_vector(asym_qJ);
            t = custom_thresholds(qI, qJ);
        }
        const auto a = asym_orthant ? tail_expansion_orthant(model, b, t)
                                    : tail_expansion(model, b, t);
        const std::vector<double> u_grid = asym_u.empty() ? std::vector<double>{}
                                                          : parse_list(asym_u);
        emit_json(tail_asymptotics_to_json(a, u_grid), output);
    });

    // ---- mc-estimate ----------------------------------------------------
    auto* mc_cmd = app.add_subcommand("mc-estimate", "Monte Carlo joint survivor estimate");
    std::string mc_model, mc_b, mc_estimator = "crude";
    double mc_u = 1.0;
    std::int64_t mc_n = 1'000'000;
    mc_cmd->add_option("--model", mc_model, "model JSON file")->required();
    mc_cmd->add_option("--b", mc_b, "direction vector")->required();
    mc_cmd->add_option("--u", mc_u, "threshold scale")->required();
    mc_cmd->add_option("--n", mc_n, "sample count");
    mc_cmd->add_option("--estimator", mc_estimator, "crude or tilt")
        ->check(CLI::IsMember({"crude", "tilt"}));
    mc_cmd->callback([&] {
        const auto model = model_from_json(load_json_file(mc_model));
        const auto est = mc_tail(model, parse_vector(mc_b), mc_u, RngStream{seed, 0}, mc_n,
                                 parse_estimator(mc_estimator));
        emit_json(mc_estimate_to_json(est), output);
    });

    // ---- mda-check ------------------------------------------------------
    auto* mda_cmd = app.add_subcommand("mda-check", "max-domain-of-attraction certificate");
    std::string mda_law;
    mda_cmd->add_option("--law", mda_law, "radial law JSON file")->required();
    mda_cmd->callback([&] {
        const auto law = radial_from_json(load_json_file(mda_law));
        ordered_json j;
        j["law"] = radial_to_json(*law);
        j["certificate"] = mda_report_to_json(mda_certificate(*law));
        emit_json(j, output);
    });

    // ---- densities ------------------------------------------------------
    auto* den_cmd = app.add_subcommand("densities", "pointwise density evaluation");
    std::string den_model, den_x, den_sphere;
    std::optional<double> den_r;
    den_cmd->add_option("--model", den_model, "model JSON file")->required();
    den_cmd->add_option("--x", den_x, "joint density at this point (k components)");
    den_cmd->add_option("--r", den_r, "radial density at this radius");
    den_cmd->add_option("--sphere", den_sphere,
                        "sphere density at these first k-1 coordinates");
    den_cmd->callback([&] {
        const auto model = model_from_json(load_json_file(den_model));
        ordered_json j;
        if (!den_x.empty()) {
            const Eigen::VectorXd x = parse_vector(den_x);
            j["joint"] = gsd_density_from_radial(model, x);
        }
        if (den_r) j["radial"] = model.radial().density(*den_r);
        if (!den_sphere.empty()) {
            const auto d = sd_density(model.alpha(), parse_vector(den_sphere));
            j["sphere"] = d.singular ? ordered_json("singular") : ordered_json(d.value);
        }
        if (j.empty()) throw ArgumentError("densities: pass at least one of --x, --r, --sphere");
        emit_json(j, output);
    });

    // ---- example1 -------------------------------------------------------
    auto* ex1_cmd = app.add_subcommand("example1", "equicorrelated experiment");
    EquicorrelatedParams ex1;
    std::string ex1_u, ex1_estimator = "tilt";
    ex1_cmd->add_option("--k", ex1.k, "dimension");
    ex1_cmd->add_option("--rho", ex1.rho, "equicorrelation");
    ex1_cmd->add_option("--p", ex1.p, "common alpha component");
    ex1_cmd->add_option("--u", ex1_u, "comma list of u values");
    ex1_cmd->add_option("--n", ex1.n_samples, "samples per u");
    ex1_cmd->add_option("--estimator", ex1_estimator, "crude or tilt")
        ->check(CLI::IsMember({"crude", "tilt"}));
    ex1_cmd->callback([&] {
        ex1.seed = seed;
        ex1.estimator = parse_estimator(ex1_estimator);
        if (!ex1_u.empty()) ex1.u_grid = parse_list(ex1_u);
        const auto rep = run_equicorrelated_experiment(ex1);
        emit(format == "csv" ? report_to_csv(rep) : report_to_json(rep).dump(2) + "\n", output);
    });

    // ---- example2 -------------------------------------------------------
    auto* ex2_cmd = app.add_subcommand("example2", "bivariate experiment");
    BivariateParams ex2;
    std::string ex2_u, ex2_estimator = "tilt";
    ex2_cmd->add_option("--alpha1", ex2.alpha1, "first Dirichlet parameter");
    ex2_cmd->add_option("--alpha2", ex2.alpha2, "second Dirichlet parameter");
    ex2_cmd->add_option("--rho", ex2.rho, "mixing correlation");
    ex2_cmd->add_option("--a", ex2.a, "second ray component");
    ex2_cmd->add_option("--u", ex2_u, "comma list of u values");
    ex2_cmd->add_option("--n", ex2.n_samples, "samples per u");
    ex2_cmd->add_option("--pilot-n", ex2.pilot_n, "pilot sample for empirical quantiles");
    ex2_cmd->add_flag("--no-independence", "skip the joint-exceedance block");
    ex2_cmd->add_option("--estimator", ex2_estimator, "crude or tilt")
        ->check(CLI::IsMember({"crude", "tilt"}));
    ex2_cmd->callback([&] {
        ex2.seed = seed;
        ex2.estimator = parse_estimator(ex2_estimator);
        ex2.run_independence = ex2_cmd->count("--no-independence") == 0;
        if (!ex2_u.empty()) ex2.u_grid = parse_list(ex2_u);
        const auto rep = run_bivariate_experiment(ex2);
        emit(format == "csv" ? report_to_csv(rep) : report_to_json(rep).dump(2) + "\n", output);
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
