#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "prefagg/experiments.hpp"
#include "prefagg/solver.hpp"
#include "test_support.hpp"

using namespace prefagg;
namespace ts = testing_support;

namespace {

WeightVector voronoi(std::vector<double> w) { return {std::move(w), WeightMode::Voronoi}; }

WinRateMatrix two_by_two(double pab) { return WinRateMatrix::from_rows({{0.5, pab}, {1 - pab, 0.5}}); }

SolverConfig config(double lambda) {
    SolverConfig c;
    c.lambda = lambda;
    return c;
}

double sq_dist(const RewardVector& a, const RewardVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace

// --- objective -----------------------------------------------------------------

TEST(Objective, ZeroRewardsUniformPairs) {
    const double f = objective({0.0, 0.0}, two_by_two(0.5), voronoi({0.5, 0.5}), 0.3);
    EXPECT_NEAR(f, std::numbers::ln2 / 4.0, 1e-15);
    EXPECT_NEAR(f, 0.1733, 1e-4);
}

TEST(Objective, UnitWeightsTwoAlternatives) {
    const double f = objective({std::numbers::ln2, 0.0}, two_by_two(1.0), unit_weights(2), 2.0);
    const double expected = -std::log(2.0 / 3.0) + std::numbers::ln2 * std::numbers::ln2;
    EXPECT_NEAR(f, expected, 1e-14);
    EXPECT_NEAR(f, 0.8860, 1e-4);
}

TEST(Objective, SelfPairsAddConstant) {
    std::mt19937_64 gen(4);
    const auto prob = ts::random_problem(gen, 5, 0.2);
    const auto p = WinRateMatrix::from_rows(prob.p);
    const auto w = voronoi(prob.w);
    double w2 = 0.0;
    for (double x : prob.w) w2 += x * x;
    EXPECT_NEAR(objective(prob.r, p, w, 0.2, PairTerms::All) - objective(prob.r, p, w, 0.2),
                0.5 * std::numbers::ln2 * w2, 1e-14);
}

TEST(Objective, MatchesReversedOrderOracle) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto prob = ts::random_problem(gen, 2 + trial % 7, 0.05);
        const auto p = WinRateMatrix::from_rows(prob.p);
        EXPECT_NEAR(objective(prob.r, p, voronoi(prob.w), prob.lambda),
                    ts::objective_oracle(prob.r, prob.p, prob.w, prob.lambda, false), 1e-12);
        EXPECT_NEAR(objective(prob.r, p, voronoi(prob.w), prob.lambda, PairTerms::All),
                    ts::objective_oracle(prob.r, prob.p, prob.w, prob.lambda, true), 1e-12);
    }
}

TEST(Objective, IndexMismatch) {
    EXPECT_THROW(objective({0.0}, two_by_two(0.5), unit_weights(2), 1.0), InvalidArgument);
    EXPECT_THROW(objective({0.0, 0.0}, two_by_two(0.5), unit_weights(3), 1.0), InvalidArgument);
    EXPECT_THROW(gradient({0.0, 0.0}, two_by_two(0.5), unit_weights(2), 0.0), InvalidArgument);
}

TEST(Objective, Convexity) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto prob = ts::random_problem(gen, 2 + trial % 6, 0.1);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto w = voronoi(prob.w);
        RewardVector r2(prob.r.size()), mid(prob.r.size());
        for (double& v : r2) v = 6.0 * u(gen) - 3.0;
        const double theta = u(gen);
        for (std::size_t i = 0; i < mid.size(); ++i)
            mid[i] = theta * prob.r[i] + (1 - theta) * r2[i];
        EXPECT_LE(objective(mid, p, w, 0.1),
                  theta * objective(prob.r, p, w, 0.1) + (1 - theta) * objective(r2, p, w, 0.1) +
                      1e-10);
    }
}

// --- gradient ------------------------------------------------------------------

TEST(Gradient, ZeroAtIndifference) {
    WinRateMatrix p(4);
    const auto g = gradient({0, 0, 0, 0}, p, voronoi({0.1, 0.2, 0.3, 0.4}), 0.5);
    for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, TwoAlternativeHandValue) {
    const auto g = gradient({0.0, 0.0}, two_by_two(2.0 / 3.0), voronoi({0.5, 0.5}), 0.1);
    EXPECT_NEAR(g[0], -1.0 / 24.0, 1e-15);
    EXPECT_NEAR(g[1], 1.0 / 24.0, 1e-15);
}

TEST(Gradient, MatchesFiniteDifferences) {
    std::mt19937_64 gen(7);
    const double lambdas[3] = {0.01, 0.1, 1.0};
    for (int trial = 0; trial < 20; ++trial) {
        const auto prob = ts::random_problem(gen, 2 + trial % 7, lambdas[trial % 3]);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto w = voronoi(prob.w);
        const auto g = gradient(prob.r, p, w, prob.lambda);
        const auto fd = ts::finite_difference(
            [&](const std::vector<double>& r) {
                return ts::objective_oracle(r, prob.p, prob.w, prob.lambda, false);
            },
            prob.r, 1e-5);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num = std::max(num, std::abs(g[i] - fd[i]));
            den = std::max(den, std::abs(fd[i]));
        }
        EXPECT_LE(num / den, 1e-6) << "trial " << trial;
    }
}

// --- solve ---------------------------------------------------------------------

TEST(Solve, IndifferenceGivesZero) {
    const auto res = solve(WinRateMatrix(5), voronoi({0.2, 0.2, 0.2, 0.2, 0.2}));
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.iterations, 0u);
    for (double v : res.rewards) EXPECT_EQ(v, 0.0);
}

TEST(Solve, TwoAlternativeBisectionOracle) {
    const auto res = solve(two_by_two(2.0 / 3.0), voronoi({0.5, 0.5}), config(0.1));
    // Stationarity for r = (t, -t): 1/3 = 0.1 t + 0.5 sigma(2t).
    const double t = ts::bisect(
        [](double x) { return 0.1 * x + 0.5 * ts::btl_closed_form(2 * x, 0.0) - 1.0 / 3.0; },
        0.0, 5.0);
    EXPECT_NEAR(res.rewards[0], t, 1e-8);
    EXPECT_NEAR(res.rewards[1], -t, 1e-8);
    EXPECT_NEAR(t, 0.241, 1e-3);
    EXPECT_LE(std::sqrt(sq_dist(res.rewards, {t, -t})), res.report.error_radius + 1e-12);
}

TEST(Solve, BordaInstanceWinnerIsA) {
    const auto inst = borda_flip_instance();
    const auto p = representative_matrix(inst.population, inst.set);
    const auto res = solve(p, unit_weights(3), config(0.01));
    EXPECT_EQ(argmax(res.rewards), 0u);
}

TEST(Solve, ReportInvariants) {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto prob = ts::random_problem(gen, 2 + trial % 7, trial % 2 ? 0.01 : 1.0);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto w = voronoi(prob.w);
        const auto res = solve(p, w, config(prob.lambda));
        EXPECT_TRUE(res.report.converged);
        EXPECT_LE(res.report.grad_sup_norm, 1e-9);
        EXPECT_TRUE(std::isfinite(res.report.error_radius));
        EXPECT_NEAR(res.report.objective, objective(res.rewards, p, w, prob.lambda), 1e-15);
    }
}

TEST(Solve, UniqueAcrossInitializations) {
    std::mt19937_64 gen(10);
    for (int trial = 0; trial < 10; ++trial) {
        const auto prob = ts::random_problem(gen, 3 + trial % 5, 0.1);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto w = voronoi(prob.w);
        auto c = config(0.1);
        const auto a = solve(p, w, c);
        c.initial = prob.r;
        const auto b = solve(p, w, c);
        EXPECT_LE(std::sqrt(sq_dist(a.rewards, b.rewards)),
                  a.report.error_radius + b.report.error_radius + 1e-12);
    }
}

TEST(Solve, StrongConvexityLowerBound) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 10; ++trial) {
        const auto prob = ts::random_problem(gen, 4, 0.2);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto w = voronoi(prob.w);
        const auto res = solve(p, w, config(0.2));
        const double msc = 0.2 * w.min();
        for (int k = 0; k < 20; ++k) {
            RewardVector r = res.rewards;
            for (double& v : r) v += 0.5 * n01(gen);
            const double gap = objective(r, p, w, 0.2) - res.report.objective;
            EXPECT_GE(gap, 0.5 * msc * sq_dist(r, res.rewards) - 1e-9);
        }
    }
}

TEST(Solve, UniformVoronoiMatchesUnitWithRescaledLambda) {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t m = 2 + trial % 6;
        const auto prob = ts::random_problem(gen, m, 0.05);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto voronoi_res =
            solve(p, voronoi(std::vector<double>(m, 1.0 / m)), config(prob.lambda));
        const auto unit_res = solve(p, unit_weights(m), config(prob.lambda * m));
        for (std::size_t i = 0; i < m; ++i)
            EXPECT_NEAR(voronoi_res.rewards[i], unit_res.rewards[i],
                        voronoi_res.report.error_radius + unit_res.report.error_radius + 1e-12);
    }
}

TEST(Solve, TinyWeightsStillConverge) {
    const auto p = WinRateMatrix::from_rows(
        {{0.5, 0.9, 0.2, 0.6}, {0.1, 0.5, 0.7, 0.3}, {0.8, 0.3, 0.5, 0.4}, {0.4, 0.7, 0.6, 0.5}});
    const auto w = voronoi({0.6, 0.39, 0.009, 0.001});
    const auto res = solve(p, w, config(0.01));
    EXPECT_TRUE(res.report.converged);
    EXPECT_LT(res.report.iterations, 10000u);
}

TEST(Solve, NonConvergenceCarriesBestIterate) {
    auto c = config(0.01);
    c.max_iters = 2;
    c.grad_tol = 1e-14;
    try {
        solve(two_by_two(0.9), unit_weights(2), c);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_FALSE(e.best().report.converged);
        EXPECT_EQ(e.best().report.iterations, 2u);
        EXPECT_GT(e.best().rewards[0], 0.0);
    }
}

TEST(Solve, RejectsInvalidConfig) {
    EXPECT_THROW(solve(two_by_two(0.6), unit_weights(2), config(0.0)), InvalidArgument);
    EXPECT_THROW(solve(two_by_two(0.6), unit_weights(3), config(0.1)), InvalidArgument);
    EXPECT_THROW(solve(two_by_two(0.6), voronoi({0.7, 0.7}), config(0.1)), InvalidArgument);
}

// --- reward_bound ----------------------------------------------------------------

TEST(RewardBound, PlugIn) {
    const auto b = reward_bound(voronoi({0.5, 0.5}), 0.1, 0.1733);
    EXPECT_NEAR(b[0], std::sqrt(2 * 0.1733 / 0.05), 1e-12);
    EXPECT_NEAR(b[0], 2.63, 0.01);
    const auto res = solve(two_by_two(2.0 / 3.0), voronoi({0.5, 0.5}), config(0.1));
    EXPECT_LE(std::abs(res.rewards[0]), b[0]);
}

TEST(RewardBound, NeverWeakerThanUnitReferenceBound) {
    const double lambda = 0.3;
    const auto w = voronoi({0.2, 0.3, 0.5});
    for (double f0 : {0.0, 0.2, 1.0, 1.0 + lambda / 2}) {
        const auto b = reward_bound(w, lambda, f0);
        for (std::size_t i = 0; i < 3; ++i)
            EXPECT_LE(b[i], std::sqrt((2 + lambda) / (lambda * w[i])) + 1e-12);
    }
}

TEST(RewardBound, DegenerateSingleton) {
    const auto w = voronoi({1.0});
    const double f0 = objective({0.0}, WinRateMatrix(1), w, 0.5);
    EXPECT_EQ(f0, 0.0);
    EXPECT_EQ(reward_bound(w, 0.5, f0)[0], 0.0);
    EXPECT_EQ(solve(WinRateMatrix(1), w, config(0.5)).rewards[0], 0.0);
}

TEST(RewardBound, HoldsForSolvedRandomInstances) {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 10; ++trial) {
        const auto prob = ts::random_problem(gen, 2 + trial % 6, 0.05);
        const auto p = WinRateMatrix::from_rows(prob.p);
        const auto w = voronoi(prob.w);
        const RewardVector zero(prob.w.size(), 0.0);
        const auto b = reward_bound(w, 0.05, objective(zero, p, w, 0.05));
        const auto res = solve(p, w, config(0.05));
        for (std::size_t i = 0; i < b.size(); ++i) EXPECT_LE(std::abs(res.rewards[i]), b[i]);
    }
}

TEST(RewardBound, Errors) {
    EXPECT_THROW(reward_bound(voronoi({0.5, 0.5}), 0.0, 1.0), InvalidArgument);
    EXPECT_THROW(reward_bound(voronoi({1.0, 0.0}), 0.1, 1.0), InvalidArgument);
}
