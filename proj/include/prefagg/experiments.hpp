#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "prefagg/core.hpp"
#include "prefagg/solver.hpp"
#include "prefagg/voronoi.hpp"
#include "prefagg/winrate.hpp"

namespace prefagg {

// ---------------------------------------------------------------------------
// Cloning
// ---------------------------------------------------------------------------

struct CloneSpec {
    std::string target;
    double epsilon = 0.0;
    ContextVector direction;  // unit length
    std::string new_id;
};

struct Instance {
    AlternativeSet set;
    Population population;
};

/// Adds an alternative at c(target) + epsilon * direction. Tabular rewards
/// are copied from the target, so they only admit exact clones; linear
/// rewards are evaluated at the new context.
inline Instance add_clone(const AlternativeSet& set, const Population& pop,
                          const CloneSpec& spec) {
    const std::size_t t = set.index_of(spec.target);
    if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon))
        throw InvalidArgument("clone epsilon must be finite and >= 0");
    if (spec.direction.size() != set.dim())
        throw InvalidArgument("clone direction must match the context dimension");
    double norm = 0.0;
    for (double v : spec.direction) norm += v * v;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-12)
        throw InvalidArgument("clone direction must have unit length");
    if (set.contains(spec.new_id))
        throw InvalidArgument("clone id '" + spec.new_id + "' already exists");

    std::vector<AnnotatorType> types = pop.types();
    for (auto& type : types) {
        if (auto* tab = std::get_if<TabularReward>(&type.reward)) {
            if (spec.epsilon > 0.0)
                throw UnsupportedCombination(
                    "approximate clones (epsilon > 0) need linear reward fields");
            auto it = tab->values.find(spec.target);
            if (it == tab->values.end()) throw LookupError(spec.target);
            tab->values[spec.new_id] = it->second;
        }
    }
    ContextVector c = set.context(t);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += spec.epsilon * spec.direction[k];
    return {set.with_alternative(spec.new_id, std::move(c)), Population(std::move(types))};
}

// ---------------------------------------------------------------------------
// Built-in instances
// ---------------------------------------------------------------------------

/// Three alternatives whose three-type population makes `a` the Borda winner
/// until `c` is cloned, after which `b` wins. Embedded at (0,0), (1,0), (0,1).
inline Instance borda_flip_instance() {
    const double l1 = 0.0, l10 = std::log(10.0), l100 = std::log(100.0);
    AlternativeSet set({"a", "b", "c"}, {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
    Population pop({
        {0.4, TabularReward{{{"a", l100}, {"b", l10}, {"c", l1}}}},
        {0.3, TabularReward{{{"a", l10}, {"b", l1}, {"c", l100}}}},
        {0.3, TabularReward{{{"a", l1}, {"b", l100}, {"c", l10}}}},
    });
    return {std::move(set), std::move(pop)};
}

/// Three alternatives at (0,0), (1,0), (1,1) in the unit square with a
/// three-type population of linear reward fields.
inline Instance linear_clone_instance() {
    AlternativeSet set({"x00", "x10", "x11"}, {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
    Population pop({
        {0.4, LinearReward{{2.0, 0.5}, 0.0}},
        {0.3, LinearReward{{-1.0, 2.0}, 0.0}},
        {0.3, LinearReward{{0.5, -2.0}, 0.0}},
    });
    return {std::move(set), std::move(pop)};
}

// ---------------------------------------------------------------------------
// Robustness to clones
// ---------------------------------------------------------------------------

enum class Algorithm { Mle, Wmle };

inline const char* to_string(Algorithm a) { return a == Algorithm::Mle ? "mle" : "wmle"; }

struct SweepConfig {
    Algorithm algorithm = Algorithm::Wmle;
    std::string target;
    ContextVector direction;
    std::string new_id = "clone";
    std::vector<double> eps_list;
    SpaceBox space;
    MonteCarloOptions weights;
    SolverConfig solver;
};

struct RobustnessRow {
    double epsilon = 0.0;
    double delta_existing = 0.0;  // max over original alternatives of |r(y) - r'(y)|
    double delta_pair = 0.0;      // |r'(x) - r'(x')|
    std::string winner_before;
    std::string winner_after;
    double error_radius = 0.0;       // sum of both solves' certified radii
    double max_weight_std_error = 0.0;  // over both weight estimates (0 for mle)
};

struct RobustnessReport {
    Algorithm algorithm = Algorithm::Wmle;
    std::vector<RobustnessRow> rows;  // epsilon descending
};

class SweepNonConvergence : public NonConvergence {
public:
    SweepNonConvergence(const NonConvergence& e, double epsilon)
        : NonConvergence(e.best()), epsilon_(epsilon) {}

    double epsilon() const noexcept { return epsilon_; }

private:
    double epsilon_;
};

struct AlgorithmRun {
    WinRateMatrix matrix;
    WeightVector weights;
    std::vector<double> weight_std_errors;
    SolveResult solution;
};

/// Representative matrix, weights and solution for one algorithm on one instance.
inline AlgorithmRun run_algorithm(const Instance& inst, Algorithm algorithm,
                                  const SpaceBox& space, const MonteCarloOptions& weights,
                                  const SolverConfig& solver) {
    AlgorithmRun run;
    run.matrix = representative_matrix(inst.population, inst.set);
    if (algorithm == Algorithm::Wmle) {
        auto est = estimate_weights(inst.set, space, weights);
        run.weights = std::move(est.weights);
        run.weight_std_errors = std::move(est.std_errors);
    } else {
        run.weights = unit_weights(inst.set);
        run.weight_std_errors.assign(inst.set.size(), 0.0);
    }
    run.solution = solve(run.matrix, run.weights, solver);
    return run;
}

/// Adds a clone of `config.target` at each distance in `eps_list` and
/// measures how much the estimated reward function moves. Both alternative
/// sets use representative data and, for wmle, weights from the same sample
/// points.
inline RobustnessReport clone_robustness_sweep(const Instance& base, const SweepConfig& config) {
    std::vector<double> eps = config.eps_list;
    std::sort(eps.begin(), eps.end(), std::greater<>());

    RobustnessReport report;
    report.algorithm = config.algorithm;
    AlgorithmRun before;
    try {
        before = run_algorithm(base, config.algorithm, config.space, config.weights, config.solver);
    } catch (const NonConvergence& e) {
        throw SweepNonConvergence(e, std::nan(""));
    }
    const std::size_t m = base.set.size();
    const double se_before = *std::max_element(before.weight_std_errors.begin(),
                                               before.weight_std_errors.end());

    for (double epsilon : eps) {
        const Instance cloned = add_clone(base.set, base.population,
                                          {config.target, epsilon, config.direction, config.new_id});
        AlgorithmRun after;
        try {
            after = run_algorithm(cloned, config.algorithm, config.space, config.weights,
                                  config.solver);
        } catch (const NonConvergence& e) {
            throw SweepNonConvergence(e, epsilon);
        }
        const auto& r = before.solution.rewards;
        const auto& r2 = after.solution.rewards;
        RobustnessRow row;
        row.epsilon = epsilon;
        for (std::size_t i = 0; i < m; ++i)
            row.delta_existing = std::max(row.delta_existing, std::abs(r[i] - r2[i]));
        row.delta_pair = std::abs(r2[base.set.index_of(config.target)] - r2[m]);
        row.winner_before = base.set.id(argmax(r));
        row.winner_after = cloned.set.id(argmax(r2));
        row.error_radius =
            before.solution.report.error_radius + after.solution.report.error_radius;
        row.max_weight_std_error =
            std::max(se_before, *std::max_element(after.weight_std_errors.begin(),
                                                  after.weight_std_errors.end()));
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Borda flip reproduction
// ---------------------------------------------------------------------------

struct BordaFlipTable {
    AlternativeSet set;
    WinRateMatrix matrix;
    ScoreVector borda;
    SolveResult mle;
    std::string borda_winner;
    std::string mle_winner;
};

struct BordaFlipReport {
    BordaFlipTable original;
    BordaFlipTable cloned;
    bool winner_flipped = false;
    double lambda = 0.0;
};

/// Win rates, Borda counts and regularized-MLE rankings for the three-type
/// population before and after `c` is exactly cloned as `c'`.
inline BordaFlipReport reproduce_appendix_d(const SolverConfig& solver = {}) {
    const Instance base = borda_flip_instance();
    const Instance cloned = add_clone(base.set, base.population, {"c", 0.0, {1.0, 0.0}, "c'"});
    auto table = [&](const Instance& inst) {
        BordaFlipTable t;
        t.set = inst.set;
        t.matrix = representative_matrix(inst.population, inst.set);
        t.borda = borda_count(t.matrix);
        t.mle = solve(t.matrix, unit_weights(inst.set), solver);
        t.borda_winner = inst.set.id(argmax(t.borda.values));
        t.mle_winner = inst.set.id(argmax(t.mle.rewards));
        return t;
    };
    BordaFlipReport report;
    report.original = table(base);
    report.cloned = table(cloned);
    report.lambda = solver.lambda;
    report.winner_flipped = report.original.mle_winner != report.cloned.mle_winner &&
                            report.original.borda_winner != report.cloned.borda_winner;
    return report;
}

// ---------------------------------------------------------------------------
// Indistinguishable populations
// ---------------------------------------------------------------------------

struct ImpossibilityInstance {
    double C = 0.0;
    double kappa = 0.0;
    AlternativeSet set;
    Population population1;
    Population population2;
    double p_ab_1 = 0.0;
    double p_ab_2 = 0.0;
    double mean_rb_1 = 0.0;
    double mean_rb_2 = 0.0;
    double mean_reward_gap = 0.0;
};

/// Two two-type populations over {a, b} with identical win rates
/// p(a > b) = 1/3 but mean rewards for b that drift apart as C grows.
inline ImpossibilityInstance impossibility_instance(double C) {
    const double ln2 = std::numbers::ln2;
    // (ln 2)^2 itself must be accepted, so allow one rounding step below it.
    if (!(C >= ln2 * ln2 * (1.0 - 1e-15)) || !std::isfinite(C))
        throw InvalidArgument("impossibility instance needs C >= (ln 2)^2");
    ImpossibilityInstance inst;
    inst.C = C;
    inst.kappa = std::exp(12.0 * std::sqrt(C));
    const double k = inst.kappa;
    inst.set = AlternativeSet({"a", "b"}, {{0.0}, {1.0}});
    inst.population1 = Population({
        {0.5, TabularReward{{{"a", 0.0}, {"b", ln2}}}},
        {0.5, TabularReward{{{"a", 0.0}, {"b", ln2}}}},
    });
    const double rb_type1 = std::log(k);
    const double rb_type2 = std::log(k + 4.0) - std::log(2.0 * k - 1.0);
    inst.population2 = Population({
        {0.5, TabularReward{{{"a", 0.0}, {"b", rb_type1}}}},
        {0.5, TabularReward{{{"a", 0.0}, {"b", rb_type2}}}},
    });
    inst.p_ab_1 = population_win_prob(inst.population1, inst.set, "a", "b");
    inst.p_ab_2 = population_win_prob(inst.population2, inst.set, "a", "b");
    inst.mean_rb_1 = ln2;
    inst.mean_rb_2 = 0.5 * (rb_type1 + rb_type2);
    inst.mean_reward_gap = std::abs(inst.mean_rb_2 - inst.mean_rb_1);
    return inst;
}

// ---------------------------------------------------------------------------
// Objective as an integral over the alternative space
// ---------------------------------------------------------------------------

struct IntegralCheck {
    WeightEstimate weights;
    SolveResult solution;
    double objective_all_pairs = 0.0;  // weighted objective including self-pairs
    IntegralEstimate integral;
    double z_score = 0.0;
};

/// Solves the weighted MLE on (set, p) and compares its objective with the
/// Monte Carlo estimate of the same objective written over the whole space.
/// The space integral counts self-comparisons, so it is compared against the
/// objective with self-pairs included.
inline IntegralCheck integral_check(const AlternativeSet& set, const WinRateMatrix& p,
                                    const SpaceBox& space, const SolverConfig& solver,
                                    const MonteCarloOptions& weight_opts,
                                    const MonteCarloOptions& integral_opts) {
    IntegralCheck out;
    out.weights = estimate_weights(set, space, weight_opts);
    out.solution = solve(p, out.weights.weights, solver);
    out.objective_all_pairs =
        objective(out.solution.rewards, p, out.weights.weights, solver.lambda, PairTerms::All);
    out.integral = integral_objective_estimate(out.solution.rewards, p, set, space,
                                               solver.lambda, integral_opts);
    out.z_score = (out.integral.estimate - out.objective_all_pairs) / out.integral.std_error;
    return out;
}

}  // namespace prefagg
