#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "prefagg/error.hpp"
#include "prefagg/random.hpp"

namespace prefagg {

using ContextVector = std::vector<double>;

// Per-alternative rewards, indexed like the owning AlternativeSet.
using RewardVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Logistic helpers
// ---------------------------------------------------------------------------

inline constexpr double kLogisticClamp = 50.0;

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be finite");
}

/// sigma(delta) = 1 / (1 + e^-delta), with delta clamped to +-50 first.
/// The clamp keeps exp() finite; the saturation error it introduces is
/// below 2e-22.
inline double logistic(double delta) {
    delta = std::clamp(delta, -kLogisticClamp, kLogisticClamp);
    return 1.0 / (1.0 + std::exp(-delta));
}

/// ln sigma(delta) without overflow or cancellation.
inline double log_logistic(double delta) {
    if (delta >= 0.0) return -std::log1p(std::exp(-delta));
    return delta - std::log1p(std::exp(delta));
}

/// Bradley-Terry-Luce probability that an alternative with reward `ra` is
/// preferred to one with reward `rb`.
inline double btl_win_prob(double ra, double rb) {
    require_finite(ra, "reward");
    require_finite(rb, "reward");
    return logistic(ra - rb);
}

// ---------------------------------------------------------------------------
// Alternatives
// ---------------------------------------------------------------------------

inline void validate_context(const ContextVector& c) {
    if (c.empty()) throw InvalidArgument("context vector must have dimension >= 1");
    for (double v : c) require_finite(v, "context coordinate");
}

class AlternativeSet {
public:
    AlternativeSet() = default;

    AlternativeSet(std::vector<std::string> ids, std::vector<ContextVector> contexts)
        : ids_(std::move(ids)), contexts_(std::move(contexts)) {
        if (ids_.empty()) throw InvalidArgument("alternative set must not be empty");
        if (ids_.size() != contexts_.size())
            throw InvalidArgument("alternative set: ids and contexts differ in length");
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            validate_context(contexts_[i]);
            if (contexts_[i].size() != contexts_[0].size())
                throw InvalidArgument("alternative set: contexts have differing dimensions");
            if (!index_.emplace(ids_[i], i).second)
                throw InvalidArgument("alternative set: duplicate id '" + ids_[i] + "'");
        }
    }

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return contexts_.empty() ? 0 : contexts_[0].size(); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::string& id(std::size_t i) const { return ids_.at(i); }
    const ContextVector& context(std::size_t i) const { return contexts_.at(i); }
    const std::vector<ContextVector>& contexts() const noexcept { return contexts_; }

    bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

    std::size_t index_of(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) throw LookupError(std::string(id));
        return it->second;
    }

    // Copy of this set with one more alternative appended at the end.
    AlternativeSet with_alternative(std::string id, ContextVector context) const {
        auto ids = ids_;
        auto contexts = contexts_;
        ids.push_back(std::move(id));
        contexts.push_back(std::move(context));
        return AlternativeSet(std::move(ids), std::move(contexts));
    }

    friend bool operator==(const AlternativeSet& a, const AlternativeSet& b) {
        return a.ids_ == b.ids_ && a.contexts_ == b.contexts_;
    }

private:
    std::vector<std::string> ids_;
    std::vector<ContextVector> contexts_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Reward fields and populations
// ---------------------------------------------------------------------------

struct TabularReward {
    std::map<std::string, double> values;

    friend bool operator==(const TabularReward&, const TabularReward&) = default;
};

// r(x) = theta . x + bias; Lipschitz with constant ||theta||_2.
struct LinearReward {
    ContextVector theta;
    double bias = 0.0;

    double lipschitz() const {
        double s = 0.0;
        for (double t : theta) s += t * t;
        return std::sqrt(s);
    }

    double operator()(const ContextVector& x) const {
        if (x.size() != theta.size())
            throw InvalidArgument("linear reward: context dimension does not match theta");
        double v = bias;
        for (std::size_t k = 0; k < x.size(); ++k) v += theta[k] * x[k];
        return v;
    }

    friend bool operator==(const LinearReward&, const LinearReward&) = default;
};

using RewardField = std::variant<TabularReward, LinearReward>;

inline bool is_tabular(const RewardField& f) { return std::holds_alternative<TabularReward>(f); }

inline double annotator_reward(const RewardField& field, const AlternativeSet& set,
                               std::string_view id) {
    const std::size_t i = set.index_of(id);
    if (const auto* tab = std::get_if<TabularReward>(&field)) {
        auto it = tab->values.find(std::string(id));
        if (it == tab->values.end()) throw LookupError(std::string(id));
        return it->second;
    }
    return std::get<LinearReward>(field)(set.context(i));
}

struct AnnotatorType {
    double proportion = 1.0;
    RewardField reward;

    friend bool operator==(const AnnotatorType&, const AnnotatorType&) = default;
};

class Population {
public:
    static constexpr double kProportionTolerance = 1e-12;

    Population() = default;

    explicit Population(std::vector<AnnotatorType> types) : types_(std::move(types)) {
        if (types_.empty()) throw InvalidArgument("population needs at least one annotator type");
        double total = 0.0;
        for (const auto& t : types_) {
            if (!(t.proportion > 0.0 && t.proportion <= 1.0))
                throw InvalidArgument("population: proportions must lie in (0, 1]");
            total += t.proportion;
            if (const auto* tab = std::get_if<TabularReward>(&t.reward)) {
                for (const auto& [id, v] : tab->values) require_finite(v, "tabular reward");
            } else {
                const auto& lin = std::get<LinearReward>(t.reward);
                validate_context(lin.theta);
                require_finite(lin.bias, "linear reward bias");
            }
        }
        if (std::abs(total - 1.0) > kProportionTolerance)
            throw InvalidArgument("population: proportions must sum to 1");
    }

    const std::vector<AnnotatorType>& types() const noexcept { return types_; }
    std::size_t size() const noexcept { return types_.size(); }

    // Checks every reward field can be evaluated on every alternative of `set`.
    void validate_for(const AlternativeSet& set) const {
        for (const auto& t : types_) {
            if (const auto* tab = std::get_if<TabularReward>(&t.reward)) {
                for (const auto& id : set.ids())
                    if (!tab->values.count(id)) throw LookupError(id);
            } else if (std::get<LinearReward>(t.reward).theta.size() != set.dim()) {
                throw InvalidArgument("linear reward dimension does not match alternatives");
            }
        }
    }

    friend bool operator==(const Population&, const Population&) = default;

private:
    std::vector<AnnotatorType> types_;
};

/// A population evaluated on a fixed alternative set: the reward of every
/// annotator type for every alternative, precomputed once.
class BoundPopulation {
public:
    BoundPopulation(const Population& pop, const AlternativeSet& set) {
        pop.validate_for(set);
        for (const auto& t : pop.types()) {
            proportions_.push_back(t.proportion);
            RewardVector r(set.size());
            for (std::size_t i = 0; i < set.size(); ++i)
                r[i] = annotator_reward(t.reward, set, set.id(i));
            rewards_.push_back(std::move(r));
        }
    }

    std::size_t alternatives() const noexcept { return rewards_.front().size(); }

    double win_prob(std::size_t i, std::size_t j) const {
        double p = 0.0;
        for (std::size_t t = 0; t < rewards_.size(); ++t)
            p += proportions_[t] * btl_win_prob(rewards_[t][i], rewards_[t][j]);
        return p;
    }

    // Draws an annotator type, then that type's BTL outcome. True if i wins.
    bool sample_win(std::size_t i, std::size_t j, RandomStream& rng) const {
        const double u = rng.uniform();
        std::size_t t = 0;
        double acc = proportions_[0];
        while (u >= acc && t + 1 < proportions_.size()) acc += proportions_[++t];
        return rng.uniform() < btl_win_prob(rewards_[t][i], rewards_[t][j]);
    }

    const std::vector<RewardVector>& rewards() const noexcept { return rewards_; }

private:
    std::vector<double> proportions_;
    std::vector<RewardVector> rewards_;
};

inline double population_win_prob(const Population& pop, const AlternativeSet& set,
                                   std::string_view a, std::string_view b) {
    const std::size_t i = set.index_of(a);
    const std::size_t j = set.index_of(b);
    double p = 0.0;
    for (const auto& t : pop.types())
        p += t.proportion *
             btl_win_prob(annotator_reward(t.reward, set, set.id(i)),
                          annotator_reward(t.reward, set, set.id(j)));
    return p;
}

// ---------------------------------------------------------------------------
// Win-rate matrices
// ---------------------------------------------------------------------------

/// Pairwise win probabilities p(i > j), row-major, with p(i > i) = 1/2.
/// `counts` holds the number of observed comparisons per pair when the
/// matrix was built from data.
class WinRateMatrix {
public:
    static constexpr double kAntisymmetryTolerance = 1e-12;

    WinRateMatrix() = default;

    explicit WinRateMatrix(std::size_t m) : m_(m), p_(m * m, 0.5) {}

    static WinRateMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                   std::optional<std::vector<std::vector<std::uint64_t>>>
                                       counts = std::nullopt) {
        WinRateMatrix w(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size())
                throw InvalidArgument("win-rate matrix must be square");
            for (std::size_t j = 0; j < rows.size(); ++j) w.p_[i * w.m_ + j] = rows[i][j];
        }
        if (counts) {
            if (counts->size() != rows.size())
                throw InvalidArgument("win-rate counts must match matrix size");
            std::vector<std::uint64_t> flat;
            for (const auto& row : *counts) {
                if (row.size() != rows.size())
                    throw InvalidArgument("win-rate counts must be square");
                flat.insert(flat.end(), row.begin(), row.end());
            }
            w.counts_ = std::move(flat);
        }
        w.validate();
        return w;
    }

    std::size_t size() const noexcept { return m_; }

    double operator()(std::size_t i, std::size_t j) const { return p_[i * m_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return p_[i * m_ + j]; }

    const std::optional<std::vector<std::uint64_t>>& counts() const noexcept { return counts_; }
    std::uint64_t count(std::size_t i, std::size_t j) const {
        return counts_ ? (*counts_)[i * m_ + j] : 0;
    }
    void set_counts(std::vector<std::uint64_t> c) { counts_ = std::move(c); }

    std::vector<std::vector<double>> rows() const {
        std::vector<std::vector<double>> out(m_, std::vector<double>(m_));
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < m_; ++j) out[i][j] = (*this)(i, j);
        return out;
    }

    void validate() const {
        if (m_ == 0) throw InvalidArgument("win-rate matrix must be non-empty");
        for (std::size_t i = 0; i < m_; ++i) {
            if ((*this)(i, i) != 0.5)
                throw InvalidArgument("win-rate matrix diagonal must be exactly 1/2");
            for (std::size_t j = 0; j < m_; ++j) {
                const double v = (*this)(i, j);
                if (!(v >= 0.0 && v <= 1.0))
                    throw InvalidArgument("win-rate entries must lie in [0, 1]");
                if (std::abs(v + (*this)(j, i) - 1.0) > kAntisymmetryTolerance)
                    throw InvalidArgument("win-rate matrix must satisfy p(x>y) + p(y>x) = 1");
                if (counts_ && count(i, j) != count(j, i))
                    throw InvalidArgument("win-rate counts must be symmetric");
            }
        }
    }

    friend bool operator==(const WinRateMatrix&, const WinRateMatrix&) = default;

private:
    std::size_t m_ = 0;
    std::vector<double> p_;
    std::optional<std::vector<std::uint64_t>> counts_;
};

/// Exact population win rates: what an infinitely large dataset would show.
inline WinRateMatrix representative_matrix(const Population& pop, const AlternativeSet& set) {
    const BoundPopulation bound(pop, set);
    WinRateMatrix w(set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = 0; j < set.size(); ++j)
            if (i != j) w(i, j) = bound.win_prob(i, j);
    w.validate();
    return w;
}

// ---------------------------------------------------------------------------
// Comparison data
// ---------------------------------------------------------------------------

struct PreferenceRecord {
    std::string a;
    std::string b;
    std::string winner;

    friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

inline void validate_record(const PreferenceRecord& r) {
    if (r.a == r.b) throw InvalidArgument("comparison must involve two distinct alternatives");
    if (r.winner != r.a && r.winner != r.b)
        throw InvalidArgument("comparison winner must be one of the compared alternatives");
}

inline PreferenceRecord sample_comparison(const Population& pop, const AlternativeSet& set,
                                          std::string_view a, std::string_view b,
                                          RandomStream& rng) {
    if (a == b) throw InvalidArgument("cannot compare an alternative with itself");
    const std::size_t i = set.index_of(a);
    const std::size_t j = set.index_of(b);
    const double u = rng.uniform();
    const auto& types = pop.types();
    std::size_t t = 0;
    double acc = types[0].proportion;
    while (u >= acc && t + 1 < types.size()) acc += types[++t].proportion;
    const double p = btl_win_prob(annotator_reward(types[t].reward, set, set.id(i)),
                                  annotator_reward(types[t].reward, set, set.id(j)));
    const bool a_wins = rng.uniform() < p;
    return {std::string(a), std::string(b), std::string(a_wins ? a : b)};
}

/// Empirical win rates p_D from observed comparisons. Every unordered pair
/// must have been compared at least once.
inline WinRateMatrix empirical_matrix(std::span<const PreferenceRecord> records,
                                      const AlternativeSet& set) {
    const std::size_t m = set.size();
    std::vector<std::uint64_t> wins(m * m, 0);
    std::vector<std::uint64_t> totals(m * m, 0);
    for (const auto& r : records) {
        validate_record(r);
        const std::size_t i = set.index_of(r.a);
        const std::size_t j = set.index_of(r.b);
        const std::size_t w = r.winner == r.a ? i : j;
        const std::size_t l = w == i ? j : i;
        ++wins[w * m + l];
        ++totals[i * m + j];
        ++totals[j * m + i];
    }
    std::vector<IncompleteCoverage::Pair> missing;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (totals[i * m + j] == 0) missing.emplace_back(set.id(i), set.id(j));
    if (!missing.empty()) throw IncompleteCoverage(std::move(missing));

    WinRateMatrix out(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (i != j)
                out(i, j) = static_cast<double>(wins[i * m + j]) /
                            static_cast<double>(totals[i * m + j]);
    out.set_counts(std::move(totals));
    out.validate();
    return out;
}

}  // namespace prefagg
