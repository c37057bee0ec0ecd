// prefagg: command-line front end for the preference-aggregation toolkit.

#include <CLI11.hpp>

#include "prefagg/commands.hpp"

int main(int argc, char** argv) {
    using prefagg::cli::RunConfig;
    RunConfig config;

    CLI::App app{"Reward estimation from pairwise comparisons: regularized and Voronoi-weighted MLE"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.add_option("--seed", config.seed, "64-bit random seed");
    app.add_option("--lambda", config.lambda, "regularization strength (> 0)");
    app.add_option("--out", config.out, "output directory");
    app.add_option("--workers", config.workers, "threads for Monte Carlo loops");

    auto add_space = [&](CLI::App* sub) {
        sub->add_option("--space", config.space, "unit-cube, factor2, or a space JSON file");
        sub->add_option("--n-samples", config.n_samples, "Monte Carlo sample count");
    };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--grad-tol", config.grad_tol, "gradient sup-norm tolerance");
        sub->add_option("--max-iters", config.max_iters, "iteration limit");
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--alternatives", config.alternatives, "alternatives CSV")->required();
        auto* cmp = sub->add_option("--comparisons", config.comparisons, "comparisons JSONL");
        auto* mat = sub->add_option("--matrix", config.matrix, "win-rate matrix JSON");
        cmp->excludes(mat);
        sub->add_option("--weights", config.weights, "weights JSON (wmle)");
    };

    auto* gen = app.add_subcommand("gen-dataset", "sample comparisons from a population");
    gen->add_option("--alternatives", config.alternatives, "alternatives CSV")->required();
    gen->add_option("--population", config.population, "population JSON")->required();
    gen->add_option("--per-pair", config.per_pair, "comparisons per unordered pair");

    auto* weights = app.add_subcommand("estimate-weights", "Monte Carlo Voronoi weights");
    weights->add_option("--alternatives", config.alternatives, "alternatives CSV")->required();
    add_space(weights);

    auto* solve = app.add_subcommand("solve", "fit rewards with mle or wmle");
    add_data(solve);
    solve->add_option("--algorithm", config.algorithm, "mle or wmle");
    add_space(solve);
    add_solver(solve);

    auto* analyze = app.add_subcommand("analyze", "win-rate analysis of a reward file");
    add_data(analyze);
    analyze->add_option("--rewards", config.rewards, "rewards JSON")->required();
    add_space(analyze);

    auto* exp = app.add_subcommand("experiment", "run a built-in experiment");
    exp->add_option("name", config.experiment,
                    "clone-sweep, appendix-d, impossibility or integral-check")
        ->required();
    exp->add_option("--C", config.C, "distance constant for the impossibility instance");
    exp->add_option("--algorithm", config.algorithm, "mle or wmle (clone-sweep)");
    exp->add_option("--eps", config.eps_list, "clone distances (clone-sweep)")->delimiter(',');
    exp->add_option("--instance", config.instance, "built-in instance: linear or borda-flip");
    exp->add_option("--alternatives", config.alternatives, "alternatives CSV");
    exp->add_option("--population", config.population, "population JSON");
    exp->add_option("--target", config.target, "alternative to clone");
    exp->add_option("--direction", config.direction, "unit clone direction")->delimiter(',');
    add_space(exp);
    add_solver(exp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : prefagg::cli::kValidation;
    }
    config.command = app.get_subcommands().front()->get_name();
    return prefagg::cli::run(config);
}
