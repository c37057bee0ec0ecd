#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "prefagg/io.hpp"

using namespace prefagg;
namespace fs = std::filesystem;

namespace {

AlternativeSet random_set(std::mt19937_64& gen, std::size_t m, std::size_t d) {
    std::normal_distribution<double> n01;
    std::vector<std::string> ids;
    std::vector<ContextVector> ctx;
    for (std::size_t i = 0; i < m; ++i) {
        ids.push_back("alt_" + std::to_string(i));
        ContextVector c(d);
        for (double& v : c) v = n01(gen) * 1e3;
        ctx.push_back(std::move(c));
    }
    return AlternativeSet(ids, ctx);
}

io::Json roundtrip(const io::Json& j) { return io::parse_json(io::dump(j), "test"); }

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("prefagg_io_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(gen) * std::pow(10.0, i % 13 - 6);
        EXPECT_EQ(std::strtod(io::format_double(v).c_str(), nullptr), v);
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(0.25), "0.25");
}

TEST(AlternativesCsv, RoundTrip) {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto set = random_set(gen, 1 + trial % 6, 1 + trial % 4);
        EXPECT_EQ(io::parse_alternatives_csv(io::alternatives_csv(set)), set);
    }
}

TEST(AlternativesCsv, AcceptsBomAndCrlf) {
    const auto set = io::parse_alternatives_csv("\xEF\xBB\xBFid,c1,c2\r\na,0,0\r\nb,1,0.5\r\n\r\n");
    EXPECT_EQ(set.size(), 2u);
    EXPECT_EQ(set.context(1), (ContextVector{1.0, 0.5}));
}

TEST(AlternativesCsv, Rejects) {
    EXPECT_THROW(io::parse_alternatives_csv(""), InvalidArgument);
    EXPECT_THROW(io::parse_alternatives_csv("name,c1\na,0\n"), InvalidArgument);
    EXPECT_THROW(io::parse_alternatives_csv("id,c1\na,0,1\n"), InvalidArgument);
    EXPECT_THROW(io::parse_alternatives_csv("id,c1\na,zero\n"), InvalidArgument);
    EXPECT_THROW(io::parse_alternatives_csv("id,c1\na,0\na,1\n"), InvalidArgument);
    EXPECT_THROW(io::parse_alternatives_csv("id,c1\n"), InvalidArgument);
}

TEST(PopulationJson, RoundTrip) {
    const Population pop({
        {0.25, TabularReward{{{"a", 1.5}, {"b", -0.1}}}},
        {0.75, LinearReward{{0.3, -2.0}, 0.125}},
    });
    const auto back = io::population_from_json(roundtrip(io::to_json(pop)));
    ASSERT_EQ(back.types().size(), 2u);
    EXPECT_EQ(back.types()[0].proportion, 0.25);
    EXPECT_EQ(std::get<TabularReward>(back.types()[0].reward).values,
              std::get<TabularReward>(pop.types()[0].reward).values);
    const auto& lin = std::get<LinearReward>(back.types()[1].reward);
    EXPECT_EQ(lin.theta, (ContextVector{0.3, -2.0}));
    EXPECT_EQ(lin.bias, 0.125);
}

TEST(PopulationJson, Rejects) {
    using io::Json;
    EXPECT_THROW(io::population_from_json(Json::parse(R"({"types":[]})")), InvalidArgument);
    EXPECT_THROW(io::population_from_json(Json::parse(
                     R"({"types":[{"proportion":1,"reward":{"kind":"neural"}}]})")),
                 InvalidArgument);
    EXPECT_THROW(io::population_from_json(Json::parse(
                     R"({"format_version":2,"types":[{"proportion":1,"reward":{"kind":"linear","theta":[1]}}]})")),
                 InvalidArgument);
    EXPECT_NO_THROW(io::population_from_json(Json::parse(
        R"({"types":[{"proportion":1,"reward":{"kind":"linear","theta":[1]}}]})")));
    EXPECT_THROW(io::parse_json("{not json", "population"), InvalidArgument);
}

TEST(ComparisonsJsonl, RoundTrip) {
    const std::vector<PreferenceRecord> recs{{"a", "b", "a"}, {"b", "c", "c"}, {"c", "a", "a"}};
    EXPECT_EQ(io::parse_comparisons_jsonl(io::comparisons_jsonl(recs)), recs);
    EXPECT_THROW(io::parse_comparisons_jsonl(R"({"a":"x","b":"y","winner":"z"})"),
                 InvalidArgument);
    EXPECT_THROW(io::parse_comparisons_jsonl(R"({"a":"x","b":"y"})"), InvalidArgument);
}

TEST(MatrixJson, RoundTripAndReorder) {
    const AlternativeSet set({"a", "b", "c"}, {{0.0}, {1.0}, {2.0}});
    const auto p = WinRateMatrix::from_rows({{0.5, 0.7, 0.1}, {0.3, 0.5, 0.55}, {0.9, 0.45, 0.5}},
                                            {{{0, 3, 4}, {3, 0, 5}, {4, 5, 0}}});
    const auto back = io::matrix_from_json(roundtrip(io::to_json(p, set)), set);
    EXPECT_EQ(back.rows(), p.rows());
    EXPECT_EQ(back.count(1, 2), 5u);

    const AlternativeSet reversed({"c", "b", "a"}, {{2.0}, {1.0}, {0.0}});
    const auto r = io::matrix_from_json(io::to_json(p, set), reversed);
    EXPECT_EQ(r(0, 2), p(2, 0));
    EXPECT_EQ(r(1, 0), p(1, 2));
    EXPECT_EQ(r.count(0, 1), 5u);
}

TEST(MatrixJson, RejectsMismatchedIds) {
    const AlternativeSet set({"a", "b"}, {{0.0}, {1.0}});
    const AlternativeSet other({"a", "z"}, {{0.0}, {1.0}});
    EXPECT_THROW(io::matrix_from_json(io::to_json(WinRateMatrix(2), set), other), LookupError);
}

TEST(WeightsJson, RoundTrip) {
    const AlternativeSet set({"x", "y", "z"}, {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
    MonteCarloOptions opt;
    opt.n_samples = 5000;
    opt.seed = 123456789012345ULL;
    const auto est = estimate_weights(set, SpaceBox::unit_cube(2), opt);
    const auto j = io::to_json(est, set);
    EXPECT_EQ(j["mode"], "voronoi");
    const auto back = io::weights_from_json(roundtrip(j), set);
    EXPECT_EQ(back.weights, est.weights);
    EXPECT_EQ(back.std_errors, est.std_errors);
    EXPECT_EQ(back.seed, est.seed);
    EXPECT_EQ(back.n_samples, est.n_samples);
}

TEST(SpaceJson, RoundTrip) {
    const SpaceBox box({-1.5, 0.0}, {2.0, 1e-3});
    EXPECT_EQ(io::space_from_json(roundtrip(io::to_json(box))), box);
    EXPECT_THROW(io::space_from_json(io::Json::parse(R"({"lower":[1],"upper":[0]})")),
                 InvalidArgument);
}

TEST(RewardsJson, RoundTrip) {
    const AlternativeSet set({"a", "b"}, {{0.0}, {1.0}});
    io::RewardFile f{0.01, WeightMode::Voronoi, {0.241, -0.241}, {17, 0.5, 1e-10, 2e-10, true}};
    const auto back = io::rewards_from_json(roundtrip(io::to_json(f, set)), set);
    EXPECT_EQ(back.lambda, f.lambda);
    EXPECT_EQ(back.weights_mode, f.weights_mode);
    EXPECT_EQ(back.rewards, f.rewards);
    EXPECT_EQ(back.report.iterations, 17u);
    EXPECT_EQ(back.report.error_radius, 2e-10);
}

TEST(AnalysisJson, UnitWeightsOmitWeightedScores) {
    const AlternativeSet set({"a", "b"}, {{0.0}, {1.0}});
    const auto p = WinRateMatrix::from_rows({{0.5, 0.8}, {0.2, 0.5}});
    const auto res = solve(p, unit_weights(2));
    const auto j = io::analysis_json(set, p, res.rewards, unit_weights(2), 0.01);
    EXPECT_TRUE(j["scores"]["wawr"].is_null());
    EXPECT_EQ(j["ranking"], io::Json::array({"a", "b"}));
    EXPECT_LE(j["residual_sup_norm"].get<double>(), 1e-8);
    EXPECT_TRUE(j["ranking_consistency"]["consistent"].get<bool>());
    EXPECT_EQ(j["format_version"], 1);
}

TEST(Files, WriteCreatesDirectoriesAndReadFails) {
    const auto dir = scratch_dir("files");
    io::write_file(dir / "nested" / "x.txt", "hello\n");
    EXPECT_EQ(io::read_file(dir / "nested" / "x.txt"), "hello\n");
    EXPECT_THROW(io::read_file(dir / "missing.txt"), IoError);
    EXPECT_THROW(io::write_file(dir / "nested" / "x.txt" / "child", "x"), IoError);
    fs::remove_all(dir);
}
