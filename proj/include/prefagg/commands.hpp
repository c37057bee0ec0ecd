#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "prefagg/core.hpp"
#include "prefagg/experiments.hpp"
#include "prefagg/io.hpp"
#include "prefagg/solver.hpp"
#include "prefagg/voronoi.hpp"
#include "prefagg/winrate.hpp"

namespace prefagg::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 2, kNonConvergence = 3, kIo = 4 };

struct RunConfig {
    std::string command;
    fs::path alternatives;
    fs::path population;
    fs::path comparisons;
    fs::path matrix;
    fs::path weights;
    fs::path rewards;
    std::string space = "unit-cube";  // unit-cube | factor2 | path to a space file
    std::string algorithm = "mle";
    double lambda = 0.01;
    double grad_tol = 1e-9;
    std::size_t max_iters = 200000;
    std::size_t n_samples = kDefaultWeightSamples;
    std::uint64_t seed = 0;
    std::size_t per_pair = 100;
    std::vector<double> eps_list{0.1, 0.05, 0.01, 0.001};
    std::string experiment;
    std::string instance = "linear";  // built-in instance for clone-sweep / integral-check
    std::string target;
    std::vector<double> direction;
    double C = std::numbers::ln2 * std::numbers::ln2;
    unsigned workers = 1;
    fs::path out = ".";
};

inline AlternativeSet load_alternatives(const fs::path& p) {
    if (p.empty()) throw InvalidArgument("--alternatives is required");
    return io::parse_alternatives_csv(io::read_file(p));
}

inline Population load_population(const fs::path& p) {
    if (p.empty()) throw InvalidArgument("--population is required");
    return io::population_from_json(io::parse_json(io::read_file(p), "population"));
}

inline SpaceBox resolve_space(const std::string& space, const AlternativeSet& set) {
    if (space == "unit-cube") return SpaceBox::unit_cube(set.dim());
    if (space == "factor2") return SpaceBox::factor2(set);
    SpaceBox box = io::space_from_json(io::parse_json(io::read_file(space), "space"));
    if (box.dim() != set.dim())
        throw InvalidArgument("space dimension does not match the alternatives");
    return box;
}

inline Algorithm parse_algorithm(const std::string& a) {
    if (a == "mle") return Algorithm::Mle;
    if (a == "wmle") return Algorithm::Wmle;
    throw InvalidArgument("unknown algorithm '" + a + "' (expected mle or wmle)");
}

inline SolverConfig solver_config(const RunConfig& c) {
    SolverConfig s;
    s.lambda = c.lambda;
    s.grad_tol = c.grad_tol;
    s.max_iters = c.max_iters;
    return s;
}

inline MonteCarloOptions mc_options(const RunConfig& c) {
    MonteCarloOptions o;
    o.n_samples = c.n_samples;
    o.seed = c.seed;
    o.workers = c.workers;
    return o;
}

// Matrix from --matrix (exact) or --comparisons (empirical).
inline WinRateMatrix load_matrix(const RunConfig& c, const AlternativeSet& set) {
    if (!c.matrix.empty())
        return io::matrix_from_json(io::parse_json(io::read_file(c.matrix), "matrix"), set);
    if (!c.comparisons.empty()) {
        const auto records = io::parse_comparisons_jsonl(io::read_file(c.comparisons));
        return empirical_matrix(records, set);
    }
    throw InvalidArgument("either --matrix or --comparisons is required");
}

// Weights for the chosen algorithm: unit for mle; for wmle from --weights,
// otherwise estimated over --space.
inline WeightEstimate load_weights(const RunConfig& c, const AlternativeSet& set,
                                   Algorithm algorithm) {
    if (algorithm == Algorithm::Mle) return {unit_weights(set), {}, 0, 0};
    if (!c.weights.empty()) {
        auto est = io::weights_from_json(io::parse_json(io::read_file(c.weights), "weights"), set);
        if (est.weights.mode != WeightMode::Voronoi)
            throw InvalidArgument("wmle needs a voronoi weights file");
        return est;
    }
    return estimate_weights(set, resolve_space(c.space, set), mc_options(c));
}

// ---------------------------------------------------------------------------

/// Samples `per_pair` comparisons for every unordered pair. Pair k (in
/// row-major i < j order) draws from substream (seed, k).
inline void cmd_gen_dataset(const RunConfig& c) {
    const auto set = load_alternatives(c.alternatives);
    const auto pop = load_population(c.population);
    if (set.size() < 2) throw InvalidArgument("gen-dataset needs at least two alternatives");
    if (c.per_pair < 1) throw InvalidArgument("--per-pair must be at least 1");
    const BoundPopulation bound(pop, set);
    std::vector<PreferenceRecord> records;
    records.reserve(c.per_pair * set.size() * (set.size() - 1) / 2);
    std::uint64_t pair = 0;
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j, ++pair) {
            RandomStream rng = RandomStream::substream(c.seed, pair);
            for (std::size_t s = 0; s < c.per_pair; ++s) {
                const bool a_wins = bound.sample_win(i, j, rng);
                records.push_back({set.id(i), set.id(j), a_wins ? set.id(i) : set.id(j)});
            }
        }
    io::write_file(c.out / "comparisons.jsonl", io::comparisons_jsonl(records));
    auto exact = io::to_json(representative_matrix(pop, set), set);
    exact["seed"] = c.seed;
    exact["per_pair"] = c.per_pair;
    io::write_file(c.out / "exact_matrix.json", io::dump(exact));
}

inline void cmd_estimate_weights(const RunConfig& c) {
    const auto set = load_alternatives(c.alternatives);
    const auto space = resolve_space(c.space, set);
    const auto est = estimate_weights(set, space, mc_options(c));
    auto j = io::to_json(est, set);
    j["space"] = io::to_json(space);
    io::write_file(c.out / "weights.json", io::dump(j));
}

inline void cmd_solve(const RunConfig& c) {
    const Algorithm algorithm = parse_algorithm(c.algorithm);
    const SolverConfig solver = solver_config(c);
    const auto set = load_alternatives(c.alternatives);
    const auto p = load_matrix(c, set);
    const auto est = load_weights(c, set, algorithm);

    io::RewardFile file;
    file.lambda = c.lambda;
    file.weights_mode = est.weights.mode;
    try {
        const auto result = solve(p, est.weights, solver);
        file.rewards = result.rewards;
        file.report = result.report;
    } catch (const NonConvergence& e) {
        file.rewards = e.best().rewards;
        file.report = e.best().report;
        io::write_file(c.out / "rewards.json", io::dump(io::to_json(file, set)));
        throw;
    }
    auto rewards_json = io::to_json(file, set);
    if (algorithm == Algorithm::Wmle) rewards_json["weights"] = io::to_json(est, set);
    io::write_file(c.out / "rewards.json", io::dump(rewards_json));
    io::write_file(c.out / "analysis.json",
                   io::dump(io::analysis_json(set, p, file.rewards, est.weights, c.lambda)));
}

inline void cmd_analyze(const RunConfig& c) {
    const auto set = load_alternatives(c.alternatives);
    const auto p = load_matrix(c, set);
    if (c.rewards.empty()) throw InvalidArgument("--rewards is required");
    const auto file =
        io::rewards_from_json(io::parse_json(io::read_file(c.rewards), "rewards"), set);
    const Algorithm algorithm =
        file.weights_mode == WeightMode::Voronoi ? Algorithm::Wmle : Algorithm::Mle;
    const auto est = load_weights(c, set, algorithm);
    io::write_file(c.out / "analysis.json",
                   io::dump(io::analysis_json(set, p, file.rewards, est.weights, file.lambda)));
}

inline Instance builtin_instance(const std::string& name) {
    if (name == "linear") return linear_clone_instance();
    if (name == "borda-flip") return borda_flip_instance();
    throw InvalidArgument("unknown instance '" + name + "' (expected linear or borda-flip)");
}

// Instance from --alternatives/--population when given, else the built-in one.
inline Instance experiment_instance(const RunConfig& c) {
    if (!c.alternatives.empty() || !c.population.empty()) {
        Instance inst{load_alternatives(c.alternatives), load_population(c.population)};
        inst.population.validate_for(inst.set);
        return inst;
    }
    return builtin_instance(c.instance);
}

inline void cmd_experiment(const RunConfig& c) {
    if (c.experiment == "appendix-d") {
        const auto report = reproduce_appendix_d(solver_config(c));
        io::write_file(c.out / "appendix_d.json", io::dump(io::to_json(report)));
        std::cout << "winner flipped: " << (report.winner_flipped ? "true" : "false") << " ("
                  << report.original.mle_winner << " -> " << report.cloned.mle_winner << ")\n";
    } else if (c.experiment == "impossibility") {
        const auto inst = impossibility_instance(c.C);
        io::write_file(c.out / "impossibility.json", io::dump(io::to_json(inst)));
        std::cout << "kappa = " << io::format_double(inst.kappa)
                  << ", p(a>b) = " << io::format_double(inst.p_ab_1) << " / "
                  << io::format_double(inst.p_ab_2) << "\n";
    } else if (c.experiment == "clone-sweep") {
        const Instance inst = experiment_instance(c);
        SweepConfig sweep;
        sweep.algorithm = parse_algorithm(c.algorithm);
        sweep.target = c.target;
        if (sweep.target.empty()) {
            if (!c.alternatives.empty() || !c.population.empty())
                throw InvalidArgument("--target is required");
            sweep.target = c.instance == "linear" ? "x11" : "c";
        }
        sweep.direction = c.direction;
        if (sweep.direction.empty()) {
            sweep.direction.assign(inst.set.dim(), 0.0);
            sweep.direction[0] = -1.0;
        }
        sweep.eps_list = c.eps_list;
        sweep.space = resolve_space(c.space, inst.set);
        sweep.weights = mc_options(c);
        sweep.solver = solver_config(c);
        RobustnessReport report;
        try {
            report = clone_robustness_sweep(inst, sweep);
        } catch (const SweepNonConvergence& e) {
            std::cerr << "non-convergence at epsilon = " << e.epsilon() << "\n";
            throw;
        }
        io::write_file(c.out / "robustness.csv", io::robustness_csv(report));
        io::write_file(c.out / "robustness.json", io::dump(io::robustness_sidecar(report, sweep)));
    } else if (c.experiment == "integral-check") {
        const Instance inst = experiment_instance(c);
        const auto p = representative_matrix(inst.population, inst.set);
        const auto space = resolve_space(c.space, inst.set);
        // Weight noise enters the direct objective but not the integral's
        // standard error, so the weights get ten times the samples.
        MonteCarloOptions weight_opts = mc_options(c);
        weight_opts.n_samples = 10 * c.n_samples;
        MonteCarloOptions integral_opts = mc_options(c);
        integral_opts.seed = mix64(c.seed ^ 0x1f2e3d4c5b6a7988ULL);
        const auto check =
            integral_check(inst.set, p, space, solver_config(c), weight_opts, integral_opts);
        io::write_file(c.out / "integral_check.json",
                       io::dump(io::to_json(check, inst.set, c.lambda)));
        std::cout << "objective " << io::format_double(check.objective_all_pairs) << ", estimate "
                  << io::format_double(check.integral.estimate) << " +- "
                  << io::format_double(check.integral.std_error) << " (z = "
                  << io::format_double(check.z_score) << ")\n";
    } else {
        throw InvalidArgument("unknown experiment '" + c.experiment +
                              "' (expected clone-sweep, appendix-d, impossibility, integral-check)");
    }
}

inline void dispatch(const RunConfig& c) {
    if (c.command == "gen-dataset") cmd_gen_dataset(c);
    else if (c.command == "estimate-weights") cmd_estimate_weights(c);
    else if (c.command == "solve") cmd_solve(c);
    else if (c.command == "analyze") cmd_analyze(c);
    else if (c.command == "experiment") cmd_experiment(c);
    else throw InvalidArgument("unknown command '" + c.command + "'");
}

/// Runs a command and maps failures onto exit codes.
inline int run(const RunConfig& c, std::ostream& err = std::cerr) {
    try {
        dispatch(c);
        return kOk;
    } catch (const NonConvergence& e) {
        err << "error: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const LookupError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const IncompleteCoverage& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const UnsupportedCombination& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
}

}  // namespace prefagg::cli
