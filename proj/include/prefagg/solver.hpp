#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefagg/core.hpp"
#include "prefagg/voronoi.hpp"

namespace prefagg {

// Which ordered pairs the likelihood term sums over. Self-pairs add the
// constant ln(2)/2 * sum_x w(x)^2 and never move the minimizer.
enum class PairTerms { Distinct, All };

namespace detail {

inline void check_problem(const RewardVector& r, const WinRateMatrix& p, const WeightVector& w,
                          double lambda) {
    if (r.size() != p.size() || w.size() != p.size())
        throw InvalidArgument("rewards, win-rate matrix and weights must index the same set");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("lambda must be finite and positive");
    for (double v : r) require_finite(v, "reward");
}

}  // namespace detail

/// Weighted regularized negative log-likelihood
///   -sum_{x1 != x2} w(x1) w(x2) p(x1 > x2) ln sigma(r(x1) - r(x2))
///     + (lambda/2) sum_x w(x) r(x)^2.
/// Unit weights give the plain regularized MLE objective.
inline double objective(const RewardVector& r, const WinRateMatrix& p, const WeightVector& w,
                        double lambda, PairTerms terms = PairTerms::Distinct) {
    detail::check_problem(r, p, w, lambda);
    const std::size_t m = r.size();
    double nll = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j && terms == PairTerms::Distinct) continue;
            const double pij = p(i, j);
            if (pij == 0.0) continue;
            nll -= w[i] * w[j] * pij * log_logistic(r[i] - r[j]);
        }
    }
    double reg = 0.0;
    for (std::size_t i = 0; i < m; ++i) reg += w[i] * r[i] * r[i];
    return nll + 0.5 * lambda * reg;
}

/// d objective / d r(x) = lambda w(x) r(x) + sum_{y != x} w(x) w(y) [sigma(r(x) - r(y)) - p(x > y)].
inline RewardVector gradient(const RewardVector& r, const WinRateMatrix& p, const WeightVector& w,
                             double lambda) {
    detail::check_problem(r, p, w, lambda);
    const std::size_t m = r.size();
    RewardVector g(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            s += w[j] * (logistic(r[i] - r[j]) - p(i, j));
        }
        g[i] = w[i] * (lambda * r[i] + s);
    }
    return g;
}

struct SolverConfig {
    double lambda = 0.01;
    double grad_tol = 1e-9;  // on the sup-norm of the gradient
    std::size_t max_iters = 200000;
    std::optional<RewardVector> initial;  // zeros when empty
};

struct SolveReport {
    std::size_t iterations = 0;
    double objective = 0.0;
    double grad_sup_norm = 0.0;
    // Certified bound on ||r - r_opt||_2 from strong convexity:
    // ||gradient||_2 / (lambda * min w).
    double error_radius = 0.0;
    bool converged = false;
};

struct SolveResult {
    RewardVector rewards;
    SolveReport report;
};

class NonConvergence : public std::runtime_error {
public:
    explicit NonConvergence(SolveResult best)
        : std::runtime_error("solver did not reach the gradient tolerance within " +
                             std::to_string(best.report.iterations) + " iterations (sup-norm " +
                             std::to_string(best.report.grad_sup_norm) + ")"),
          best_(std::move(best)) {}

    const SolveResult& best() const noexcept { return best_; }

private:
    SolveResult best_;
};

namespace detail {

inline double sup_norm(const RewardVector& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline double two_norm(const RewardVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace detail

/// Minimizes the weighted objective by gradient descent with Armijo
/// backtracking (c = 1e-4, halving, unit initial step).
///
/// The descent direction is the gradient scaled by 1 / (w(x) * sum(w)). The
/// scaling removes the per-coordinate w(x) factor so that small weights do not
/// stall progress; the scaled problem has curvature in [lambda/sum(w),
/// lambda/sum(w) + 1/2]. Once objective differences fall to rounding level the
/// sufficient-decrease test is evaluated on the directional derivative
/// instead, which is equivalent for a quadratic model.
inline SolveResult solve(const WinRateMatrix& p, const WeightVector& w,
                         const SolverConfig& config = {}) {
    const std::size_t m = p.size();
    p.validate();
    w.validate();
    if (w.size() != m) throw InvalidArgument("weights and win-rate matrix differ in size");
    if (!(config.grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");

    RewardVector r = config.initial.value_or(RewardVector(m, 0.0));
    detail::check_problem(r, p, w, config.lambda);

    constexpr double kArmijo = 1e-4;
    constexpr double kShrink = 0.5;
    constexpr double kMinStep = 1e-20;
    const double lambda = config.lambda;
    const double total_weight = w.sum();
    const double strong_convexity = lambda * w.min();

    double f = objective(r, p, w, lambda);
    RewardVector g = gradient(r, p, w, lambda);
    RewardVector d(m), trial(m);

    SolveResult result;
    auto finish = [&](std::size_t iters, bool converged) {
        result.rewards = r;
        result.report.iterations = iters;
        result.report.objective = f;
        result.report.grad_sup_norm = detail::sup_norm(g);
        result.report.error_radius = detail::two_norm(g) / strong_convexity;
        result.report.converged = converged;
    };

    for (std::size_t iter = 0;; ++iter) {
        if (detail::sup_norm(g) <= config.grad_tol) {
            finish(iter, true);
            return result;
        }
        if (iter >= config.max_iters) break;

        double slope = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            d[i] = -g[i] / (w[i] * total_weight);
            slope += g[i] * d[i];
        }

        bool accepted = false;
        for (double step = 1.0; step >= kMinStep; step *= kShrink) {
            for (std::size_t i = 0; i < m; ++i) trial[i] = r[i] + step * d[i];
            const double f_trial = objective(trial, p, w, lambda);
            if (f_trial <= f + kArmijo * step * slope) {
                r = trial;
                f = f_trial;
                g = gradient(r, p, w, lambda);
                accepted = true;
                break;
            }
            if (f_trial <= f + 1e-10 * std::abs(f)) {
                RewardVector g_trial = gradient(trial, p, w, lambda);
                double trial_slope = 0.0;
                for (std::size_t i = 0; i < m; ++i) trial_slope += g_trial[i] * d[i];
                if (trial_slope <= (2.0 * kArmijo - 1.0) * slope) {
                    r = trial;
                    f = f_trial;
                    g = std::move(g_trial);
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            finish(iter, false);
            throw NonConvergence(result);
        }
    }
    finish(config.max_iters, false);
    throw NonConvergence(result);
}

/// Per-alternative bound |r_opt(y)| <= sqrt(2 f(0) / (lambda w(y))), which
/// follows from (lambda/2) w(y) r_opt(y)^2 <= f(r_opt) <= f(0).
inline std::vector<double> reward_bound(const WeightVector& w, double lambda, double f_at_zero) {
    if (!(lambda > 0.0)) throw InvalidArgument("reward bound: lambda must be positive");
    if (!(f_at_zero >= 0.0)) throw InvalidArgument("reward bound: f(0) must be non-negative");
    std::vector<double> b(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) throw InvalidArgument("reward bound: weights must be positive");
        b[i] = std::sqrt(2.0 * f_at_zero / (lambda * w[i]));
    }
    return b;
}

}  // namespace prefagg
