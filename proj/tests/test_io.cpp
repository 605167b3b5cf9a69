#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "gsdtail/experiments.hpp"
#include "gsdtail/serialize.hpp"

using namespace gsdtail;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/gsdtail_test_") + name;
}

#ifdef GSDTAIL_CLI_PATH
int run_cli(const std::string& args, std::string* out = nullptr) {
    const std::string out_file = temp_path("cli_out.txt");
    const std::string cmd =
        std::string(GSDTAIL_CLI_PATH) + " " + args + " > " + out_file + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (out) {
        std::ifstream in(out_file);
        std::stringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
    }
    return WEXITSTATUS(status);
}
#endif

ordered_json example2_model_json(double rho, double a1, double a2) {
    ordered_json j;
    j["alpha"] = {a1, a2};
    j["A"] = {{1.0, rho}, {0.0, std::sqrt(1.0 - rho * rho)}};
    j["radial"] = {{"kind", "kotz"}, {"N", 0.0}, {"r", 0.5}, {"s", 1.0}, {"alpha_bar", a1 + a2}};
    return j;
}

}  // namespace

TEST_CASE("model json round trip") {
    const auto j = example2_model_json(0.5, 1.0, 1.5);
    const auto model = model_from_json(j);
    CHECK(model.k() == 2);
    CHECK(model.radial().kind() == "kotz");
    const auto back = model_to_json(model);
    CHECK(back["alpha"] == j["alpha"]);
    CHECK(back["A"] == j["A"]);
    const auto model2 = model_from_json(back);
    CHECK(model2.mixing().sigma()(0, 1) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("model loader names the first violated invariant") {
    auto j = example2_model_json(0.5, 1.0, 1.5);
    j["alpha"] = {1.0, -2.0};
    try {
        model_from_json(j);
        FAIL("expected a throw");
    } catch (const ArgumentError& e) {
        CHECK(std::string(e.what()).find("alpha_positive") != std::string::npos);
    }

    auto j2 = example2_model_json(0.5, 1.0, 1.5);
    j2["A"] = {{2.0, 0.0}, {0.0, 2.0}};
    try {
        model_from_json(j2);
        FAIL("expected a throw");
    } catch (const MatrixError& e) {
        CHECK(std::string(e.what()).find("sigma_correlation") != std::string::npos);
    }

    auto j3 = example2_model_json(0.5, 1.0, 1.5);
    j3.erase("radial");
    CHECK_THROWS_AS(model_from_json(j3), ArgumentError);
}

TEST_CASE("non-correlation input accepted behind the explicit flag") {
    auto j = example2_model_json(0.5, 1.0, 1.5);
    j["A"] = {{2.0, 0.0}, {0.0, 2.0}};
    j["allow_non_correlation"] = true;
    CHECK_NOTHROW(model_from_json(j));
}

TEST_CASE("radial law json round trip") {
    for (const auto& j : {nlohmann::json{{"kind", "chi"}, {"df", 3.0}},
                          nlohmann::json{{"kind", "weibull_tail"}, {"c", 1.0}, {"tau", 2.0}}}) {
        const auto law = radial_from_json(j);
        CHECK(law->params() == j);
    }
    CHECK_THROWS_AS(radial_from_json(ordered_json{{"kind", "cauchy"}}), ArgumentError);
}

TEST_CASE("threshold entries serialise -inf as a string") {
    CHECK(threshold_entry(-kInf) == ordered_json("-inf"));
    CHECK(threshold_entry(0.5) == ordered_json(0.5));
    const auto v = vector_from_json(nlohmann::json::parse(R"([1.0, "-inf"])"), "q");
    CHECK(v[0] == 1.0);
    CHECK(v[1] == -kInf);
}

TEST_CASE("experiment report emission") {
    ExperimentReport rep;
    rep.id = "demo";
    rep.inputs = {{"seed", 7}};

    // empty grid: header-only CSV
    CHECK(report_to_csv(rep) == "u,mc,mc_se,asym,ratio,log_ratio\n");

    rep.rows.push_back({1.0, 0.5, 0.01, 0.55, 0.909, -0.0953});
    rep.rows.push_back({2.0, 0.1, 0.002, 0.11, 0.909, -0.0953});
    const std::string csv = report_to_csv(rep);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + two rows

    // byte-identical json round trip
    const std::string dumped = report_to_json(rep).dump(2);
    const std::string redumped = ordered_json::parse(dumped).dump(2);
    CHECK(dumped == redumped);
}

TEST_CASE("equicorrelated experiment structural checks") {
    std::mt19937_64 eng(5150);
    std::uniform_real_distribution<double> rho_dist(-0.2, 0.8);
    std::uniform_real_distribution<double> p_dist(0.3, 2.0);
    for (int t = 0; t < 20; ++t) {
        EquicorrelatedParams prm;
        prm.k = 2 + static_cast<int>(eng() % 4);
        prm.rho = std::max(rho_dist(eng), -0.9 / (prm.k - 1));
        prm.p = (t % 5 == 0) ? 0.5 : p_dist(eng);
        prm.u_grid = {};  // structural checks only
        const auto rep = run_equicorrelated_experiment(prm);
        INFO("k=" << prm.k << " rho=" << prm.rho << " p=" << prm.p);
        for (const auto& c : rep.checks) {
            INFO(c.name << " residual " << c.residual);
            CHECK(c.passed);
        }
    }
    CHECK_THROWS_AS(run_equicorrelated_experiment(EquicorrelatedParams{3, 2.0, 0.5}),
                    ArgumentError);
}

TEST_CASE("equicorrelated worked values at k = 3, rho = 0.5") {
    EquicorrelatedParams prm;
    prm.k = 3;
    prm.rho = 0.5;
    prm.p = 1.0;
    prm.u_grid = {};
    const auto rep = run_equicorrelated_experiment(prm);
    CHECK(rep.all_checks_passed());
    // |1|^2 = k / (1 + (k-1) rho) = 3/2 and sqrt(det Sigma) = 0.5 sqrt(2)
    const Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(3, 3, 0.5) +
                                  0.5 * Eigen::MatrixXd::Identity(3, 3);
    const auto sol = solve_qp(QpProblem(sigma, Eigen::VectorXd::Ones(3)));
    CHECK(sol.min_value == Catch::Approx(1.5).epsilon(1e-14));
    CHECK(std::sqrt(sigma.determinant()) == Catch::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("equicorrelated experiment produces comparison rows") {
    EquicorrelatedParams prm;
    prm.k = 2;
    prm.rho = 0.0;
    prm.p = 0.5;
    prm.u_grid = {1.0, 2.0};
    prm.n_samples = 200000;
    prm.seed = 99;
    const auto rep = run_equicorrelated_experiment(prm);
    REQUIRE(rep.rows.size() == 2);
    // Gaussian-independent oracle: mc close to normal_survival(u)^2
    for (const auto& row : rep.rows) {
        const double oracle = normal_survival(row.u) * normal_survival(row.u);
        CHECK(std::fabs(row.mc - oracle) < 4.0 * row.mc_se);
        CHECK(row.ratio == Catch::Approx(std::exp(row.log_ratio)).epsilon(1e-12));
    }
}

TEST_CASE("bivariate experiment on the strict case") {
    BivariateParams prm;
    prm.alpha1 = 1.0;
    prm.alpha2 = 1.5;
    prm.rho = 0.0;
    prm.a = 0.5;
    prm.u_grid = {2.0};
    prm.n_samples = 100000;
    prm.pilot_n = 400000;
    prm.independence_n_grid = {1e2, 1e3};
    prm.seed = 31;
    const auto rep = run_bivariate_experiment(prm);
    CHECK(rep.inputs["case"] == "rho<a");
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].mc > 0);
    bool vanish_checked = false;
    for (const auto& c : rep.checks)
        if (c.name == "joint_exceedance_vanishes") {
            vanish_checked = true;
            CHECK(c.passed);
        }
    CHECK(vanish_checked);
}

TEST_CASE("bivariate experiment on the tie case runs the conditional block") {
    BivariateParams prm;
    prm.alpha1 = 1.0;
    prm.alpha2 = 0.5;
    prm.rho = 0.3;
    prm.a = 0.3;
    prm.u_grid = {};
    prm.n_samples = 400000;
    prm.conditional_level = 2e-3;
    prm.run_independence = false;
    prm.seed = 61;
    const auto rep = run_bivariate_experiment(prm);
    CHECK(rep.inputs["case"] == "rho=a");
    bool saw_conditional = false, saw_orthant = false;
    for (const auto& c : rep.checks) {
        if (c.name == "conditional_limit") {
            saw_conditional = true;
            INFO("conditional residual " << c.residual);
            CHECK(c.passed);
        }
        if (c.name == "orthant_route_agreement") {
            saw_orthant = true;
            CHECK(c.passed);
        }
    }
    CHECK(saw_conditional);
    CHECK(saw_orthant);
}

TEST_CASE("backend cross-check raises an accuracy error on disagreement") {
    CHECK_THROWS_AS(cross_check_backends(
                        [](const IntegralOptions& opt) {
                            return opt.backend == IntegralBackend::quadrature ? 1.0 : 1.5;
                        },
                        0.01),
                    AccuracyError);
}

#ifdef GSDTAIL_CLI_PATH

TEST_CASE("cli qp-solve matches the library") {
    const std::string qp_file = temp_path("qp.json");
    write_text_file(qp_file, R"({"Sigma": [[1.0, 0.5], [0.5, 1.0]], "b": [1.0, 0.5]})");
    std::string out;
    const int rc = run_cli("qp-solve --input " + qp_file, &out);
    REQUIRE(rc == 0);
    const auto j = nlohmann::json::parse(out);
    CHECK(j["I"] == nlohmann::json::array({1}));
    CHECK(j["min_value"].get<double>() == Catch::Approx(1.0));
    for (const auto& c : j["residuals"]) CHECK(c["passed"].get<bool>());
}

TEST_CASE("cli asym emits the expansion summary") {
    const std::string model_file = temp_path("model.json");
    write_text_file(model_file, example2_model_json(0.5, 1.0, 1.5).dump());
    std::string out;
    const int rc = run_cli("asym --model " + model_file + " --b 1,0.5 --u 2,3", &out);
    REQUIRE(rc == 0);
    const auto j = nlohmann::json::parse(out);
    CHECK(j["branch"] == "active-subset");
    CHECK(j["exponent"].get<double>() == Catch::Approx(-1.5));
    CHECK(j["evaluate_at"].size() == 2);
    // orthant route agrees through the CLI as well
    std::string out2;
    REQUIRE(run_cli("asym --model " + model_file + " --b 1,0.5 --orthant", &out2) == 0);
    const auto j2 = nlohmann::json::parse(out2);
    CHECK(j2["constant"].get<double>() ==
          Catch::Approx(j["constant"].get<double>()).epsilon(1e-6));

    // custom thresholds: q_J = -inf doubles the tie-case constant (P: 1/2 -> 1)
    std::string out3;
    REQUIRE(run_cli("asym --model " + model_file +
                        " --b 1,0.5 --mode custom --qI 0 --qJ -inf",
                    &out3) == 0);
    const auto j3 = nlohmann::json::parse(out3);
    CHECK(j3["constant"].get<double>() ==
          Catch::Approx(2.0 * j["constant"].get<double>()).epsilon(1e-9));
}

TEST_CASE("cli mc-estimate is reproducible under --seed") {
    const std::string model_file = temp_path("model.json");
    write_text_file(model_file, example2_model_json(0.5, 1.0, 1.5).dump());
    std::string out1, out2;
    const std::string args =
        "mc-estimate --model " + model_file + " --b 1,0.5 --u 2 --n 50000 --estimator tilt";
    REQUIRE(run_cli("--seed 7 " + args, &out1) == 0);
    REQUIRE(run_cli("--seed 7 " + args, &out2) == 0);
    CHECK(out1 == out2);
}

TEST_CASE("cli mda-check reports a passing certificate") {
    const std::string law_file = temp_path("law.json");
    write_text_file(law_file, R"({"kind": "chi", "df": 3.0})");
    std::string out;
    REQUIRE(run_cli("mda-check --law " + law_file, &out) == 0);
    const auto j = nlohmann::json::parse(out);
    CHECK(j["certificate"]["all_passed"].get<bool>());
}

TEST_CASE("cli densities evaluates pointwise values") {
    const std::string model_file = temp_path("model.json");
    write_text_file(model_file, example2_model_json(0.0, 0.5, 0.5).dump());
    std::string out;
    REQUIRE(run_cli("densities --model " + model_file + " --x 0.5,0.5 --r 1.0", &out) == 0);
    const auto j = nlohmann::json::parse(out);
    // gaussian joint density at (0.5, 0.5)
    const double expect = std::exp(-0.25) / (2.0 * M_PI);
    CHECK(j["joint"].get<double>() == Catch::Approx(expect).epsilon(1e-10));
    CHECK(j["radial"].get<double>() == Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("cli exit codes: argument and degeneracy errors") {
    CHECK(run_cli("qp-solve --input /nonexistent.json") == 2);

    const std::string bad_file = temp_path("bad.json");
    write_text_file(bad_file, "{not json");
    CHECK(run_cli("qp-solve --input " + bad_file) == 2);

    // gray-zone model: index_split ambiguity maps to exit 3
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, -0.3, -0.3, 1.0;
    MixingMatrix base = MixingMatrix::from_sigma(sigma);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
    const Eigen::VectorXd w = base.C() * b;
    const double theta = std::atan2(w[1], w[0]) - 3e-9;
    Eigen::MatrixXd G(2, 2);
    G << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    ordered_json gray;
    gray["alpha"] = {1.0, 1.5};
    gray["A"] = matrix_to_json(G * base.A());
    gray["radial"] = {{"kind", "kotz"}, {"N", 0.0}, {"r", 0.5}, {"s", 1.0}, {"alpha_bar", 2.5}};
    const std::string gray_file = temp_path("gray.json");
    write_text_file(gray_file, gray.dump());
    CHECK(run_cli("asym --model " + gray_file + " --b 1,1") == 3);
}

TEST_CASE("cli example1 csv output has one row per u") {
    const std::string out_file = temp_path("ex1.csv");
    const int rc = run_cli("--format csv --output " + out_file +
                           " example1 --k 2 --rho 0.0 --p 0.5 --u 1.0,1.5 --n 50000");
    REQUIRE(rc == 0);
    std::ifstream in(out_file);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);  // header + 2 rows
}

#endif  // GSDTAIL_CLI_PATH
