#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsdtail/errors.hpp"
#include "gsdtail/model.hpp"

namespace gsdtail {

/// minimise x^T Sigma^{-1} x subject to x >= b, with Sigma PD and b having
/// at least one positive component.
struct QpProblem {
    Eigen::MatrixXd sigma;
    Eigen::VectorXd b;

    QpProblem(Eigen::MatrixXd sigma_, Eigen::VectorXd b_)
        : sigma(std::move(sigma_)), b(std::move(b_)) {
        const int k = static_cast<int>(sigma.rows());
        if (k < 1 || sigma.cols() != k) throw ArgumentError("qp: Sigma must be square");
        if (b.size() != k) throw ArgumentError("qp: b dimension mismatch");
        if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * sigma.cwiseAbs().maxCoeff())
            throw ArgumentError("qp: Sigma must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) throw MatrixError("qp: Sigma is not PD");
        if (b.maxCoeff() <= 0)
            throw ArgumentError("qp: b must have at least one positive component");
    }

    int dim() const { return static_cast<int>(sigma.rows()); }
};

/// Unique solution of the QP: active set I (where b*_I = b_I), inactive
/// complement J with b*_J = Sigma_JI (Sigma_II)^{-1} b_I, and the minimum
/// b_I^T (Sigma_II)^{-1} b_I.
struct QpSolution {
    Eigen::VectorXd b_star;
    IndexSet index_I;
    IndexSet index_J;
    double min_value = 0.0;
    double norm_bI = 0.0;                 // sqrt(min_value)
    Eigen::VectorXd active_multipliers;   // (Sigma_II)^{-1} b_I, positive
};

namespace qp_detail {

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& S, const IndexSet& R,
                                 const IndexSet& C) {
    Eigen::MatrixXd out(R.size(), C.size());
    for (std::size_t i = 0; i < R.size(); ++i)
        for (std::size_t j = 0; j < C.size(); ++j) out(i, j) = S(R[i], C[j]);
    return out;
}

inline Eigen::VectorXd subvector(const Eigen::VectorXd& v, const IndexSet& I) {
    Eigen::VectorXd out(I.size());
    for (std::size_t i = 0; i < I.size(); ++i) out[i] = v[I[i]];
    return out;
}

enum class CandidateState { certified, rejected, ambiguous };

struct Candidate {
    IndexSet I;
    CandidateState state = CandidateState::rejected;
    Eigen::VectorXd v;        // (Sigma_II)^{-1} b_I
    Eigen::VectorXd b_star_J;
    double min_value = 0.0;
    double worst_margin = 0.0;
};

// Certifies one index set against the characterisation: (Sigma_II)^{-1} b_I
// strictly positive (scale-aware tolerance, gray zone -> ambiguous) and
// Sigma_JI (Sigma_II)^{-1} b_I >= b_J with ties allowed.
inline Candidate check_candidate(const QpProblem& p, const IndexSet& I) {
    Candidate cand;
    cand.I = I;
    const IndexSet J = complement_of(I, p.dim());

    const Eigen::MatrixXd sII = submatrix(p.sigma, I, I);
    const Eigen::VectorXd bI = subvector(p.b, I);
    Eigen::LLT<Eigen::MatrixXd> llt(sII);
    if (llt.info() != Eigen::Success) {
        cand.state = CandidateState::rejected;
        return cand;
    }
    cand.v = llt.solve(bI);
    const double scale = cand.v.cwiseAbs().maxCoeff();
    const double tol = 1e-10 * std::max(scale, 1e-30);

    bool ambiguous = false;
    for (int i = 0; i < cand.v.size(); ++i) {
        if (cand.v[i] <= -tol) {
            cand.state = CandidateState::rejected;
            return cand;
        }
        if (cand.v[i] < tol) ambiguous = true;
    }

    if (!J.empty()) {
        const Eigen::MatrixXd sJI = submatrix(p.sigma, J, I);
        cand.b_star_J = sJI * cand.v;
        const Eigen::VectorXd bJ = subvector(p.b, J);
        const double fscale = std::max({1.0, p.b.cwiseAbs().maxCoeff(),
                                        cand.b_star_J.cwiseAbs().maxCoeff()});
        for (int j = 0; j < cand.b_star_J.size(); ++j) {
            if (cand.b_star_J[j] < bJ[j] - 1e-10 * fscale) {
                cand.state = CandidateState::rejected;
                return cand;
            }
        }
    }

    cand.min_value = bI.dot(cand.v);
    cand.worst_margin = cand.v.minCoeff();
    cand.state = ambiguous ? CandidateState::ambiguous : CandidateState::certified;
    return cand;
}

// Visits non-empty subsets in order of ascending size; stops early when
// `visit` returns true.
inline void enumerate_subsets_by_size(int k, const std::function<bool(const IndexSet&)>& visit) {
    for (int m = 1; m <= k; ++m) {
        IndexSet I(m);
        std::iota(I.begin(), I.end(), 0);
        while (true) {
            if (visit(I)) return;
            int pos = m - 1;
            while (pos >= 0 && I[pos] == k - m + pos) --pos;
            if (pos < 0) break;
            ++I[pos];
            for (int j = pos + 1; j < m; ++j) I[j] = I[j - 1] + 1;
        }
    }
}

inline QpSolution build_solution(const QpProblem& p, const Candidate& cand) {
    QpSolution sol;
    sol.index_I = cand.I;
    sol.index_J = complement_of(cand.I, p.dim());
    sol.b_star = p.b;  // active block copied verbatim
    for (std::size_t j = 0; j < sol.index_J.size(); ++j)
        sol.b_star[sol.index_J[j]] = cand.b_star_J[j];
    sol.min_value = cand.min_value;
    sol.norm_bI = std::sqrt(cand.min_value);
    sol.active_multipliers = cand.v;
    return sol;
}

}  // namespace qp_detail

/// Solve by certified enumeration of candidate index sets, smallest first.
/// Exactly one set satisfies the characterisation for non-degenerate
/// instances; gray-zone instances raise DegeneracyError.
inline QpSolution solve_qp(const QpProblem& p) {
    const int k = p.dim();
    if (k > 25) throw UnsupportedError("solve_qp: enumeration targets k <= 25");

    std::optional<qp_detail::Candidate> certified;
    std::optional<qp_detail::Candidate> ambiguous;
    const auto consider = [&](const IndexSet& I) {
        auto cand = qp_detail::check_candidate(p, I);
        if (cand.state == qp_detail::CandidateState::certified) {
            certified = std::move(cand);
            return true;
        }
        if (cand.state == qp_detail::CandidateState::ambiguous) {
            if (!ambiguous || cand.worst_margin > ambiguous->worst_margin)
                ambiguous = std::move(cand);
        }
        return false;
    };

    // Fast path: with Sigma^{-1} b > 0 the solution is b itself.
    IndexSet full(k);
    std::iota(full.begin(), full.end(), 0);
    if (consider(full)) return qp_detail::build_solution(p, *certified);

    qp_detail::enumerate_subsets_by_size(k, consider);
    if (certified) return qp_detail::build_solution(p, *certified);

    std::ostringstream os;
    os << "solve_qp: no index set certified within tolerance";
    if (ambiguous) {
        os << "; best gray-zone candidate I = {";
        for (std::size_t i = 0; i < ambiguous->I.size(); ++i)
            os << (i ? "," : "") << ambiguous->I[i] + 1;
        os << "} with positivity margin " << ambiguous->worst_margin;
    }
    throw DegeneracyError(os.str());
}

/// All index sets satisfying the characterisation (certified or gray-zone);
/// exercised by the uniqueness property tests.
inline std::vector<IndexSet> scan_candidate_sets(const QpProblem& p,
                                                 bool include_ambiguous = false) {
    std::vector<IndexSet> found;
    qp_detail::enumerate_subsets_by_size(p.dim(), [&](const IndexSet& I) {
        auto cand = qp_detail::check_candidate(p, I);
        if (cand.state == qp_detail::CandidateState::certified ||
            (include_ambiguous && cand.state == qp_detail::CandidateState::ambiguous))
            found.push_back(I);
        return false;
    });
    return found;
}

struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

/// Residual checks of a claimed solution: feasibility, multiplier
/// positivity, the inactive-block formula, the bilinear identity
/// x^T Sigma^{-1} b* = x_I^T (Sigma_II)^{-1} b_I on random x, and the
/// minimum value identity.
inline VerificationReport verify_solution(const QpProblem& p, const QpSolution& sol,
                                          double tol = 1e-9, std::uint64_t x_seed = 7) {
    VerificationReport rep;
    const Eigen::MatrixXd sII = qp_detail::submatrix(p.sigma, sol.index_I, sol.index_I);
    const Eigen::VectorXd bI = qp_detail::subvector(p.b, sol.index_I);
    Eigen::LLT<Eigen::MatrixXd> llt(sII);
    const Eigen::VectorXd v = llt.solve(bI);

    {
        const double r = (p.b - sol.b_star).maxCoeff();
        rep.checks.push_back({"feasibility_b_star_ge_b", r <= tol, r});
    }
    {
        const double m = v.minCoeff();
        rep.checks.push_back({"multiplier_positivity", m > 0, m});
    }
    {
        double r = 0.0;
        if (!sol.index_J.empty()) {
            const Eigen::MatrixXd sJI = qp_detail::submatrix(p.sigma, sol.index_J, sol.index_I);
            const Eigen::VectorXd bsJ = qp_detail::subvector(sol.b_star, sol.index_J);
            r = (sJI * v - bsJ).cwiseAbs().maxCoeff();
        }
        rep.checks.push_back({"inactive_block_formula", r <= tol, r});
    }
    {
        Eigen::LLT<Eigen::MatrixXd> full(p.sigma);
        std::mt19937_64 eng(x_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            Eigen::VectorXd x(p.dim());
            for (int i = 0; i < p.dim(); ++i) x[i] = normal(eng);
            const double lhs = x.dot(full.solve(sol.b_star));
            const double rhs = qp_detail::subvector(x, sol.index_I).dot(v);
            worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs)));
        }
        rep.checks.push_back({"bilinear_identity", worst <= tol, worst});
    }
    {
        const double direct = bI.dot(v);
        const double r = std::fabs(direct - sol.min_value) / std::max(1.0, std::fabs(direct));
        rep.checks.push_back({"min_value_identity", r <= tol, r});
    }
    return rep;
}

/// Independent optimisation oracle: accelerated projected gradient from
/// random feasible starts, then an equality-constrained polish on the
/// detected active set (solved through the (Sigma^{-1})_JJ block, a
/// different route than the solver's Sigma_JI (Sigma_II)^{-1} form).
inline double brute_force_min(const QpProblem& p, int n_starts = 50, int max_iters = 2500,
                              std::uint64_t seed = 12345) {
    const int k = p.dim();
    Eigen::LLT<Eigen::MatrixXd> llt(p.sigma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.sigma);
    const double mu = 2.0 / es.eigenvalues().maxCoeff();   // strong convexity of x^T Sigma^{-1} x
    const double L = 2.0 / es.eigenvalues().minCoeff();
    const double step = 1.0 / L;
    const double accel = (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));

    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    double best = kInf;
    Eigen::VectorXd best_x;
    for (int s = 0; s < n_starts; ++s) {
        Eigen::VectorXd x(k);
        for (int i = 0; i < k; ++i) x[i] = p.b[i] + std::fabs(normal(eng));
        Eigen::VectorXd y = x;
        Eigen::VectorXd x_prev = x;
        for (int it = 0; it < max_iters; ++it) {
            const Eigen::VectorXd grad = 2.0 * llt.solve(y);
            Eigen::VectorXd x_new = (y - step * grad).cwiseMax(p.b);
            y = x_new + accel * (x_new - x);
            x_prev = x;
            x = x_new;
            if ((x - x_prev).cwiseAbs().maxCoeff() < 1e-14 * (1.0 + x.cwiseAbs().maxCoeff()))
                break;
        }
        const double val = x.dot(llt.solve(x));
        if (val < best) {
            best = val;
            best_x = x;
        }
    }
    if (!std::isfinite(best)) throw AccuracyError("brute_force_min: did not converge");

    // Polish: fix the near-active coordinates at b and minimise exactly over
    // the rest via the (Sigma^{-1})_JJ system.
    IndexSet act, inact;
    for (int i = 0; i < k; ++i) {
        if (best_x[i] - p.b[i] < 1e-6 * (1.0 + std::fabs(p.b[i])))
            act.push_back(i);
        else
            inact.push_back(i);
    }
    if (!act.empty()) {
        const Eigen::MatrixXd sigma_inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
        Eigen::VectorXd x = p.b;
        if (!inact.empty()) {
            const Eigen::MatrixXd qJJ = qp_detail::submatrix(sigma_inv, inact, inact);
            const Eigen::MatrixXd qJI = qp_detail::submatrix(sigma_inv, inact, act);
            const Eigen::VectorXd bA = qp_detail::subvector(p.b, act);
            const Eigen::VectorXd xJ = -qJJ.llt().solve(qJI * bA);
            for (std::size_t j = 0; j < inact.size(); ++j) x[inact[j]] = xJ[j];
        }
        if ((x - p.b).minCoeff() >= -1e-12) {
            const double val = x.dot(llt.solve(x));
            if (val < best) best = val;
        }
    }
    return best;
}

}  // namespace gsdtail
