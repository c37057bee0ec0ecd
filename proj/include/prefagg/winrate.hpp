#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prefagg/core.hpp"
#include "prefagg/voronoi.hpp"

namespace prefagg {

enum class ScoreKind { AWR, wAWR, Borda, ModelAWR, ModelwAWR, Residual };

inline const char* to_string(ScoreKind k) {
    switch (k) {
        case ScoreKind::AWR: return "awr";
        case ScoreKind::wAWR: return "wawr";
        case ScoreKind::Borda: return "borda";
        case ScoreKind::ModelAWR: return "model_awr";
        case ScoreKind::ModelwAWR: return "model_wawr";
        case ScoreKind::Residual: return "residual";
    }
    return "?";
}

struct ScoreVector {
    std::vector<double> values;
    ScoreKind kind = ScoreKind::AWR;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

// Borda(x) = sum_y p(x > y), the self term p(x > x) = 1/2 included.
inline ScoreVector borda_count(const WinRateMatrix& p) {
    ScoreVector s{std::vector<double>(p.size(), 0.0), ScoreKind::Borda};
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j) s.values[i] += p(i, j);
    return s;
}

inline ScoreVector average_win_rate(const WinRateMatrix& p) {
    ScoreVector s = borda_count(p);
    s.kind = ScoreKind::AWR;
    for (double& v : s.values) v /= static_cast<double>(p.size());
    return s;
}

inline ScoreVector weighted_average_win_rate(const WinRateMatrix& p, const WeightVector& w) {
    if (w.mode != WeightMode::Voronoi)
        throw InvalidArgument("weighted average win rate needs Voronoi weights");
    if (w.size() != p.size()) throw InvalidArgument("weights and matrix differ in size");
    ScoreVector s{std::vector<double>(p.size(), 0.0), ScoreKind::wAWR};
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j) s.values[i] += w[j] * p(i, j);
    return s;
}

/// Win rate implied by the BTL model with rewards `r`: sum_y omega(y) sigma(r(x) - r(y)),
/// omega = 1/m for unit weights and omega = w for Voronoi weights.
inline ScoreVector model_win_rate(const RewardVector& r, const WeightVector& w) {
    if (w.size() != r.size()) throw InvalidArgument("weights and rewards differ in size");
    const std::size_t m = r.size();
    const bool unit = w.mode == WeightMode::Unit;
    ScoreVector s{std::vector<double>(m, 0.0), unit ? ScoreKind::ModelAWR : ScoreKind::ModelwAWR};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double omega = unit ? 1.0 / static_cast<double>(m) : w[j];
            s.values[i] += omega * logistic(r[i] - r[j]);
        }
    return s;
}

/// Residual of the win-rate moment equations
///   WinRate(x) = lambda_eff r(x) + ModelWinRate(x),
/// i.e. minus the objective gradient divided by w(x) * sum(w). With Voronoi
/// weights lambda_eff = lambda; with unit weights the stationarity system is
/// divided by m, so lambda_eff = lambda / m.
inline ScoreVector m_estimator_residual(const RewardVector& r, const WinRateMatrix& p,
                                        const WeightVector& w, double lambda) {
    if (r.size() != p.size() || w.size() != p.size())
        throw InvalidArgument("rewards, matrix and weights differ in size");
    const bool unit = w.mode == WeightMode::Unit;
    const ScoreVector data = unit ? average_win_rate(p) : weighted_average_win_rate(p, w);
    const ScoreVector model = model_win_rate(r, w);
    const double lambda_eff = unit ? lambda / static_cast<double>(r.size()) : lambda;
    ScoreVector res{std::vector<double>(r.size()), ScoreKind::Residual};
    for (std::size_t i = 0; i < r.size(); ++i)
        res.values[i] = data[i] - lambda_eff * r[i] - model[i];
    return res;
}

struct RankingCheck {
    bool consistent = true;
    std::optional<std::pair<std::size_t, std::size_t>> violation;
};

inline constexpr double kRankingTieTolerance = 1e-9;

/// True iff r(x) >= r(y) exactly when score(x) >= score(y) for every pair,
/// where ">=" allows a shortfall of `tol`.
inline RankingCheck ranking_consistency(const RewardVector& r, const ScoreVector& scores,
                                        double tol = kRankingTieTolerance) {
    if (r.size() != scores.size()) throw InvalidArgument("rewards and scores differ in size");
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (i == j) continue;
            const bool reward_ge = r[i] >= r[j] - tol;
            const bool score_ge = scores[i] >= scores[j] - tol;
            if (reward_ge != score_ge) return {false, std::make_pair(i, j)};
        }
    return {};
}

inline std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Indices sorted by descending value; stable, so ties keep input order.
inline std::vector<std::size_t> ranking(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return order;
}

}  // namespace prefagg
