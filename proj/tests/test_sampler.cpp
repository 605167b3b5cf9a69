#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gsdtail/sampler.hpp"
#include "gof.hpp"
#include "helpers.hpp"

using namespace gsdtail;
using test_helpers::ks_p_value;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<int>(v.size()));
    int i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

ModelSpec gaussian_model(int k) {
    AlphaVector a{Eigen::VectorXd::Constant(k, 0.5)};
    return ModelSpec(a, MixingMatrix(Eigen::MatrixXd::Identity(k, k)),
                     std::make_shared<ChiRadial>(k));
}

ModelSpec standard_kotz_model(std::initializer_list<double> alpha) {
    AlphaVector a{vec(alpha)};
    const int k = a.size();
    return ModelSpec(a, MixingMatrix(Eigen::MatrixXd::Identity(k, k)),
                     std::make_shared<KotzRadial>(0.0, 0.5, 1.0, a.bar()));
}

// squared-coordinate sample transformed to uniforms through the Beta CDF
std::vector<double> beta_uniforms(const Eigen::MatrixXd& u, int coord, double a, double b) {
    std::vector<double> vals(u.cols());
    for (int c = 0; c < u.cols(); ++c) vals[c] = beta_cdf(a, b, u(coord, c) * u(coord, c));
    std::sort(vals.begin(), vals.end());
    return vals;
}

// rejection sampler for the first coordinate of SD(2, alpha) with a bounded
// density; an independent construction used as a cross-check oracle
double rejection_mean_u1_squared(double a1, double a2, std::mt19937_64& eng, int n) {
    const double log_c = std::lgamma(a1 + a2) - std::lgamma(a1) - std::lgamma(a2);
    const auto density = [&](double x) {
        return std::exp(log_c + (a2 - 1.0) * std::log1p(-x * x) +
                        (2.0 * a1 - 1.0) * std::log(std::fabs(x)));
    };
    double peak = 0.0;
    for (int i = 1; i < 2000; ++i) peak = std::max(peak, density(-1.0 + 2.0 * i / 2000.0));
    peak *= 1.05;
    std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.0, 1.0);
    double sum = 0.0;
    int kept = 0;
    while (kept < n) {
        const double x = ux(eng);
        if (uy(eng) * peak < density(x)) {
            sum += x * x;
            ++kept;
        }
    }
    return sum / n;
}

}  // namespace

TEST_CASE("sphere samples have unit norm") {
    AlphaVector a{vec({1.0, 1.5, 0.7})};
    const auto u = sample_sd(a, RngStream{11, 0}, 100000);
    double worst = 0.0;
    for (int c = 0; c < u.cols(); ++c)
        worst = std::max(worst, std::fabs(u.col(c).squaredNorm() - 1.0));
    CHECK(worst < 1e-12);
}

TEST_CASE("uniform circle case: second moment and sign symmetry") {
    AlphaVector a{vec({0.5, 0.5})};
    const int n = 100000;
    const auto u = sample_sd(a, RngStream{17, 0}, n);
    const double m2 = u.row(0).array().square().mean();
    // E[U1^2] = 1/2, Var(U1^2) = E U^4 - 1/4 = 3/8 - 1/4 = 1/8
    CHECK(std::fabs(m2 - 0.5) < 3.0 * std::sqrt(0.125 / n));
    const double mean_sign = (u.row(0).array() > 0).cast<double>().mean();
    CHECK(std::fabs(mean_sign - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("squared coordinates follow the Beta marginals (KS)") {
    struct Case {
        std::vector<double> alpha;
    };
    for (const auto& alpha : {std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 1.5},
                              std::vector<double>{2.0, 3.0, 0.7}}) {
        AlphaVector a{alpha};
        const int n = 100000;
        const auto u = sample_sd(a, RngStream{23, 0}, n);
        for (int i = 0; i < a.size(); ++i) {
            const auto unif = beta_uniforms(u, i, a[i], a.bar() - a[i]);
            const double p = ks_p_value(unif);
            INFO("alpha size " << a.size() << " coord " << i << " p = " << p);
            CHECK(p > 0.01);
        }
    }
}

TEST_CASE("dirichlet moment identity with a rejection-sampler cross-check") {
    AlphaVector a{vec({2.0, 3.0})};
    const int n = 100000;
    const auto u = sample_sd(a, RngStream{29, 0}, n);
    const double m2 = u.row(0).array().square().mean();
    CHECK(std::fabs(m2 - 0.4) < 3.0 * std::sqrt(0.04 / n));

    std::mt19937_64 eng(31);
    const double m2_reject = rejection_mean_u1_squared(2.0, 3.0, eng, 50000);
    CHECK(std::fabs(m2 - m2_reject) < 4.0 * std::sqrt(0.04 / 50000.0));
}

TEST_CASE("chi-square goodness of fit against the sphere density") {
    {
        AlphaVector a{vec({1.0, 1.5, 0.7})};
        const auto u = sample_sd(a, RngStream{37, 0}, 200000);
        const auto gof = test_helpers::sphere_gof_3d(a, u);
        INFO("3d gof chi2 " << gof.chi2 << " df " << gof.df << " p " << gof.p_value);
        CHECK(gof.p_value > 0.001);
    }
    {
        AlphaVector a{vec({0.5, 0.5})};
        const auto u = sample_sd(a, RngStream{41, 0}, 200000);
        const auto gof = test_helpers::sphere_gof_2d(a, u);
        INFO("2d gof chi2 " << gof.chi2 << " df " << gof.df << " p " << gof.p_value);
        CHECK(gof.p_value > 0.001);
    }
}

TEST_CASE("gaussian special case reproduces the independent orthant probability") {
    ModelSpec m = gaussian_model(2);
    const int n = 200000;
    const auto est = mc_tail(m, vec({1.0, 1.0}), 1.0, RngStream{43, 0}, n, Estimator::crude);
    const double p_true = normal_survival(1.0) * normal_survival(1.0);
    CHECK(std::fabs(est.p_hat - p_true) < 3.0 * est.std_err);
}

TEST_CASE("standardised kotz coordinates: gamma marginals and independence") {
    ModelSpec m = standard_kotz_model({1.0, 1.5});
    const int n = 100000;
    const auto x = sample_gsd(m, RngStream{47, 0}, n);

    for (int i = 0; i < 2; ++i) {
        std::vector<double> unif(n);
        const double shape = m.alpha()[i];
        for (int c = 0; c < n; ++c)
            unif[c] = gamma_p(shape, x(i, c) * x(i, c) / 2.0);
        std::sort(unif.begin(), unif.end());
        const double p = ks_p_value(unif);
        INFO("coord " << i << " KS p = " << p);
        CHECK(p > 0.01);
    }

    // pairwise correlation of squared coordinates within 3 sigma of zero
    Eigen::ArrayXd s0 = x.row(0).array().square();
    Eigen::ArrayXd s1 = x.row(1).array().square();
    const double c01 = ((s0 - s0.mean()) * (s1 - s1.mean())).mean() /
                       std::sqrt((s0 - s0.mean()).square().mean() *
                                 (s1 - s1.mean()).square().mean());
    CHECK(std::fabs(c01) < 3.0 / std::sqrt(static_cast<double>(n)));

    // sign symmetry: the sample mean vanishes
    for (int i = 0; i < 2; ++i) {
        const double sd = std::sqrt(s0.mean());
        CHECK(std::fabs(x.row(i).mean()) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("mc estimates are reproducible per seed") {
    ModelSpec m = standard_kotz_model({1.0, 1.5});
    const auto a = mc_tail(m, vec({1.0, 0.5}), 2.0, RngStream{53, 7}, 50000, Estimator::radial_tilt);
    const auto b = mc_tail(m, vec({1.0, 0.5}), 2.0, RngStream{53, 7}, 50000, Estimator::radial_tilt);
    CHECK(a.p_hat == b.p_hat);
    const auto c = mc_tail(m, vec({1.0, 0.5}), 2.0, RngStream{53, 8}, 50000, Estimator::radial_tilt);
    CHECK(a.p_hat != c.p_hat);
}

TEST_CASE("sign-symmetric orthant at u = 0") {
    ModelSpec m = standard_kotz_model({1.0, 1.5});
    const int n = 100000;
    const auto est = mc_tail(m, vec({1.0, 1.0}), 0.0, RngStream{59, 0}, n, Estimator::crude);
    CHECK(std::fabs(est.p_hat - 0.25) < 3.0 * est.std_err);
}

TEST_CASE("tilted and crude estimators agree on an overlapping threshold") {
    ModelSpec m = standard_kotz_model({1.0, 1.5});
    const Eigen::VectorXd b = vec({1.0, 0.5});
    const double u = 2.0;
    const auto crude = mc_tail(m, b, u, RngStream{61, 0}, 400000, Estimator::crude);
    const auto tilt = mc_tail(m, b, u, RngStream{61, 1}, 400000, Estimator::radial_tilt);
    const double se = std::hypot(crude.std_err, tilt.std_err);
    CHECK(std::fabs(crude.p_hat - tilt.p_hat) < 3.0 * se);
    CHECK(tilt.std_err < crude.std_err);  // the tilt must actually help here
}

TEST_CASE("zero hits produce the rule-of-three bound") {
    ModelSpec m = gaussian_model(2);
    const auto est = mc_tail(m, vec({1.0, 1.0}), 10.0, RngStream{67, 0}, 10000, Estimator::crude);
    CHECK(est.no_hits);
    CHECK(est.p_hat == 0.0);
    CHECK(est.upper_bound == Catch::Approx(3.0 / 10000.0));
}

TEST_CASE("tail equivalence under identical laws built differently") {
    // chi(2) radius and the weibull-type survival exp(-u^2/2) are the same law
    AlphaVector a{vec({1.0, 1.5})};
    ModelSpec m1(a, MixingMatrix(Eigen::MatrixXd::Identity(2, 2)),
                 std::make_shared<ChiRadial>(2));
    ModelSpec m2(a, MixingMatrix(Eigen::MatrixXd::Identity(2, 2)),
                 std::make_shared<WeibullTailRadial>(0.5, 2.0));
    const Eigen::VectorXd b = vec({1.0, 0.7});
    const auto e1 = mc_tail(m1, b, 1.5, RngStream{71, 0}, 400000, Estimator::radial_tilt);
    const auto e2 = mc_tail(m2, b, 1.5, RngStream{71, 1}, 400000, Estimator::radial_tilt);
    const double se = std::hypot(e1.std_err, e2.std_err);
    CHECK(std::fabs(e1.p_hat - e2.p_hat) < 3.0 * se);
}

TEST_CASE("tail ratio trends upward for a heavier radial tail") {
    AlphaVector a{vec({0.5, 0.5})};
    ModelSpec heavy(a, MixingMatrix(Eigen::MatrixXd::Identity(2, 2)),
                    std::make_shared<ChiRadial>(4));
    ModelSpec light(a, MixingMatrix(Eigen::MatrixXd::Identity(2, 2)),
                    std::make_shared<ChiRadial>(2));
    const Eigen::VectorXd b = vec({1.0, 1.0});
    double prev = 0.0;
    for (double u : {1.0, 1.6, 2.2}) {
        const auto eh = mc_tail(heavy, b, u, RngStream{73, 0}, 400000, Estimator::radial_tilt);
        const auto el = mc_tail(light, b, u, RngStream{73, 1}, 400000, Estimator::radial_tilt);
        const double ratio = eh.p_hat / el.p_hat;
        CHECK(ratio > prev);
        prev = ratio;
    }
}

TEST_CASE("conditional excess at the symmetric point") {
    // rho = 0 and x = 0: P(X_2 > 0 | X_1 > u) = 1/2 exactly by sign symmetry
    ModelSpec m = standard_kotz_model({1.0, 0.5});
    const auto ce = conditional_excess(m, 2.2, {0.0}, RngStream{79, 0}, 300000);
    REQUIRE(ce.conditioning_hits >= 500);
    CHECK(std::fabs(ce.estimate[0] - 0.5) < 4.0 * ce.std_err[0]);
}

TEST_CASE("conditional excess against the incomplete-gamma oracle") {
    // rho = a = 0.5, alpha_2 = 1.5, x = 1: the limit is P(sqrt(0.75) Y > 1)
    // with Y^2 ~ Gamma(1.5, 1/2); the finite-u bias at this level is ~1e-3
    AlphaVector a{vec({1.0, 1.5})};
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 0.5, 0.0, std::sqrt(0.75);
    ModelSpec m(a, MixingMatrix(A), std::make_shared<KotzRadial>(0.0, 0.5, 1.0, a.bar()));
    const double u = std::sqrt(2.0 * std::log(500.0));
    const auto ce = conditional_excess(m, u, {1.0}, RngStream{97, 0}, 600000);
    const double oracle = symmetric_sqrt_gamma_survival(1.5, 1.0 / std::sqrt(0.75));
    CHECK(std::fabs(ce.estimate[0] - oracle) < 0.01 + 3.0 * ce.std_err[0]);
}

TEST_CASE("conditional excess approaches one far to the left") {
    AlphaVector a{vec({1.0, 1.5})};
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 0.5, 0.0, std::sqrt(0.75);
    ModelSpec m(a, MixingMatrix(A), std::make_shared<KotzRadial>(0.0, 0.5, 1.0, a.bar()));
    const auto ce = conditional_excess(m, 2.5, {-6.0}, RngStream{83, 0}, 300000);
    CHECK(ce.estimate[0] > 0.95);
}

TEST_CASE("insufficient conditioning hits raise an error") {
    ModelSpec m = gaussian_model(2);
    CHECK_THROWS_AS(conditional_excess(m, 6.0, {0.0}, RngStream{89, 0}, 2000, Estimator::crude),
                    InsufficientSamplesError);
}
