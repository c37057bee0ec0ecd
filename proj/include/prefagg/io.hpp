#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefagg/core.hpp"
#include "prefagg/experiments.hpp"
#include "prefagg/solver.hpp"
#include "prefagg/voronoi.hpp"
#include "prefagg/winrate.hpp"

namespace prefagg::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidArgument(what + ": malformed JSON: " + e.what());
    }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace detail {

template <typename T>
T get_field(const Json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key))
        throw InvalidArgument(what + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InvalidArgument(what + ": field '" + key + "' has the wrong type");
    }
}

inline void check_version(const Json& j, const std::string& what) {
    if (j.is_object() && j.contains("format_version") && j["format_version"] != kFormatVersion)
        throw InvalidArgument(what + ": unsupported format_version");
}

inline std::string trim_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
}

inline std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InvalidArgument(what + ": '" + s + "' is not a number");
    }
    if (used != s.size()) throw InvalidArgument(what + ": '" + s + "' is not a number");
    return v;
}

inline Json keyed(const AlternativeSet& set, const std::vector<double>& values) {
    Json j = Json::object();
    for (std::size_t i = 0; i < set.size(); ++i) j[set.id(i)] = values[i];
    return j;
}

inline std::vector<double> unkeyed(const Json& j, const AlternativeSet& set,
                                   const std::string& what) {
    if (!j.is_object()) throw InvalidArgument(what + ": expected an object keyed by id");
    std::vector<double> out(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (!j.contains(set.id(i))) throw LookupError(set.id(i));
        if (!j[set.id(i)].is_number())
            throw InvalidArgument(what + ": value for '" + set.id(i) + "' is not a number");
        out[i] = j[set.id(i)].get<double>();
    }
    if (j.size() != set.size())
        for (const auto& [key, v] : j.items())
            if (!set.contains(key)) throw LookupError(key);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Alternatives: CSV "id,c1,...,cd"
// ---------------------------------------------------------------------------

inline AlternativeSet parse_alternatives_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("alternatives: empty file");
    line = detail::trim_cr(line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = detail::split_commas(line);
    if (header.size() < 2 || header[0] != "id")
        throw InvalidArgument("alternatives: header must be 'id,c1,...,cd'");
    std::vector<std::string> ids;
    std::vector<ContextVector> contexts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim_cr(line);
        if (line.empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != header.size())
            throw InvalidArgument("alternatives: line " + std::to_string(lineno) +
                                  " has the wrong number of columns");
        ContextVector c;
        for (std::size_t k = 1; k < cells.size(); ++k)
            c.push_back(detail::parse_number(cells[k], "alternatives line " +
                                                           std::to_string(lineno)));
        ids.push_back(cells[0]);
        contexts.push_back(std::move(c));
    }
    return AlternativeSet(std::move(ids), std::move(contexts));
}

inline std::string alternatives_csv(const AlternativeSet& set) {
    std::string out = "id";
    for (std::size_t k = 0; k < set.dim(); ++k) out += ",c" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        out += set.id(i);
        for (double v : set.context(i)) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Population
// ---------------------------------------------------------------------------

inline Json to_json(const Population& pop) {
    Json types = Json::array();
    for (const auto& t : pop.types()) {
        Json reward;
        if (const auto* tab = std::get_if<TabularReward>(&t.reward)) {
            reward["kind"] = "tabular";
            reward["values"] = Json::object();
            for (const auto& [id, v] : tab->values) reward["values"][id] = v;
        } else {
            const auto& lin = std::get<LinearReward>(t.reward);
            reward["kind"] = "linear";
            reward["theta"] = lin.theta;
            reward["bias"] = lin.bias;
        }
        types.push_back(Json{{"proportion", t.proportion}, {"reward", std::move(reward)}});
    }
    return Json{{"format_version", kFormatVersion}, {"types", std::move(types)}};
}

inline Population population_from_json(const Json& j) {
    const std::string what = "population";
    detail::check_version(j, what);
    const auto types_json = detail::get_field<Json>(j, "types", what);
    if (!types_json.is_array()) throw InvalidArgument("population: 'types' must be an array");
    std::vector<AnnotatorType> types;
    for (const auto& t : types_json) {
        AnnotatorType type;
        type.proportion = detail::get_field<double>(t, "proportion", what);
        const auto reward = detail::get_field<Json>(t, "reward", what);
        const auto kind = detail::get_field<std::string>(reward, "kind", what);
        if (kind == "tabular") {
            TabularReward tab;
            const auto values = detail::get_field<Json>(reward, "values", what);
            if (!values.is_object()) throw InvalidArgument("population: 'values' must be an object");
            for (const auto& [id, v] : values.items()) {
                if (!v.is_number()) throw InvalidArgument("population: reward must be a number");
                tab.values[id] = v.get<double>();
            }
            type.reward = std::move(tab);
        } else if (kind == "linear") {
            LinearReward lin;
            lin.theta = detail::get_field<std::vector<double>>(reward, "theta", what);
            lin.bias = reward.contains("bias") ? detail::get_field<double>(reward, "bias", what)
                                               : 0.0;
            type.reward = std::move(lin);
        } else {
            throw InvalidArgument("population: unknown reward kind '" + kind + "'");
        }
        types.push_back(std::move(type));
    }
    return Population(std::move(types));
}

// ---------------------------------------------------------------------------
// Comparisons: JSON Lines {"a":..,"b":..,"winner":..}
// ---------------------------------------------------------------------------

inline std::vector<PreferenceRecord> parse_comparisons_jsonl(const std::string& text) {
    std::vector<PreferenceRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string what = "comparisons line " + std::to_string(lineno);
        const Json j = parse_json(line, what);
        PreferenceRecord r{detail::get_field<std::string>(j, "a", what),
                           detail::get_field<std::string>(j, "b", what),
                           detail::get_field<std::string>(j, "winner", what)};
        validate_record(r);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string comparisons_jsonl(std::span<const PreferenceRecord> records) {
    std::string out;
    for (const auto& r : records)
        out += Json{{"a", r.a}, {"b", r.b}, {"winner", r.winner}}.dump() + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Win-rate matrix
// ---------------------------------------------------------------------------

inline Json to_json(const WinRateMatrix& p, const AlternativeSet& set) {
    Json j{{"format_version", kFormatVersion}, {"ids", set.ids()}, {"p", p.rows()}};
    if (p.counts()) {
        Json counts = Json::array();
        for (std::size_t i = 0; i < p.size(); ++i) {
            Json row = Json::array();
            for (std::size_t k = 0; k < p.size(); ++k) row.push_back(p.count(i, k));
            counts.push_back(std::move(row));
        }
        j["counts"] = std::move(counts);
    }
    return j;
}

/// Loads a matrix and reorders it to follow `set`'s id order.
inline WinRateMatrix matrix_from_json(const Json& j, const AlternativeSet& set) {
    const std::string what = "win-rate matrix";
    detail::check_version(j, what);
    const auto ids = detail::get_field<std::vector<std::string>>(j, "ids", what);
    const auto rows = detail::get_field<std::vector<std::vector<double>>>(j, "p", what);
    if (ids.size() != set.size() || rows.size() != ids.size())
        throw InvalidArgument("win-rate matrix does not match the alternative set");
    std::vector<std::size_t> pos(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) pos[i] = set.index_of(ids[i]);
    std::vector<std::vector<double>> reordered(set.size(), std::vector<double>(set.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (rows[i].size() != ids.size()) throw InvalidArgument("win-rate matrix must be square");
        for (std::size_t k = 0; k < ids.size(); ++k) reordered[pos[i]][pos[k]] = rows[i][k];
    }
    std::optional<std::vector<std::vector<std::uint64_t>>> counts;
    if (j.contains("counts")) {
        const auto raw = detail::get_field<std::vector<std::vector<std::uint64_t>>>(j, "counts", what);
        if (raw.size() != ids.size()) throw InvalidArgument("win-rate counts must be square");
        counts.emplace(set.size(), std::vector<std::uint64_t>(set.size()));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (raw[i].size() != ids.size()) throw InvalidArgument("win-rate counts must be square");
            for (std::size_t k = 0; k < ids.size(); ++k) (*counts)[pos[i]][pos[k]] = raw[i][k];
        }
    }
    return WinRateMatrix::from_rows(reordered, std::move(counts));
}

// ---------------------------------------------------------------------------
// Space and weights
// ---------------------------------------------------------------------------

inline Json to_json(const SpaceBox& s) {
    return Json{{"format_version", kFormatVersion}, {"lower", s.lower}, {"upper", s.upper}};
}

inline SpaceBox space_from_json(const Json& j) {
    detail::check_version(j, "space");
    return SpaceBox(detail::get_field<std::vector<double>>(j, "lower", "space"),
                    detail::get_field<std::vector<double>>(j, "upper", "space"));
}

inline Json to_json(const WeightEstimate& est, const AlternativeSet& set) {
    const bool voronoi = est.weights.mode == WeightMode::Voronoi;
    Json j{{"format_version", kFormatVersion},
           {"mode", voronoi ? "voronoi" : "unit"},
           {"n_samples", est.n_samples},
           {"seed", est.seed},
           {"weights", detail::keyed(set, est.weights.values)}};
    if (!est.std_errors.empty()) j["std_errors"] = detail::keyed(set, est.std_errors);
    return j;
}

inline WeightEstimate weights_from_json(const Json& j, const AlternativeSet& set) {
    const std::string what = "weights";
    detail::check_version(j, what);
    WeightEstimate est;
    const auto mode = detail::get_field<std::string>(j, "mode", what);
    if (mode == "voronoi") est.weights.mode = WeightMode::Voronoi;
    else if (mode == "unit") est.weights.mode = WeightMode::Unit;
    else throw InvalidArgument("weights: unknown mode '" + mode + "'");
    est.weights.values = detail::unkeyed(detail::get_field<Json>(j, "weights", what), set, what);
    if (j.contains("std_errors"))
        est.std_errors = detail::unkeyed(j["std_errors"], set, what);
    if (j.contains("n_samples")) est.n_samples = detail::get_field<std::size_t>(j, "n_samples", what);
    if (j.contains("seed")) est.seed = detail::get_field<std::uint64_t>(j, "seed", what);
    est.weights.validate();
    return est;
}

// ---------------------------------------------------------------------------
// Rewards and analysis
// ---------------------------------------------------------------------------

inline Json to_json(const SolveReport& r) {
    return Json{{"iterations", r.iterations},
                {"objective", r.objective},
                {"grad_sup_norm", r.grad_sup_norm},
                {"error_radius", r.error_radius},
                {"converged", r.converged}};
}

struct RewardFile {
    double lambda = 0.0;
    WeightMode weights_mode = WeightMode::Unit;
    RewardVector rewards;
    SolveReport report;
};

inline Json to_json(const RewardFile& f, const AlternativeSet& set) {
    return Json{{"format_version", kFormatVersion},
                {"lambda", f.lambda},
                {"weights_mode", f.weights_mode == WeightMode::Voronoi ? "voronoi" : "unit"},
                {"rewards", detail::keyed(set, f.rewards)},
                {"report", to_json(f.report)}};
}

inline RewardFile rewards_from_json(const Json& j, const AlternativeSet& set) {
    const std::string what = "rewards";
    detail::check_version(j, what);
    RewardFile f;
    f.lambda = detail::get_field<double>(j, "lambda", what);
    const auto mode = detail::get_field<std::string>(j, "weights_mode", what);
    if (mode != "voronoi" && mode != "unit")
        throw InvalidArgument("rewards: unknown weights_mode '" + mode + "'");
    f.weights_mode = mode == "voronoi" ? WeightMode::Voronoi : WeightMode::Unit;
    f.rewards = detail::unkeyed(detail::get_field<Json>(j, "rewards", what), set, what);
    if (j.contains("report")) {
        const auto& r = j["report"];
        f.report.iterations = detail::get_field<std::size_t>(r, "iterations", what);
        f.report.objective = detail::get_field<double>(r, "objective", what);
        f.report.grad_sup_norm = detail::get_field<double>(r, "grad_sup_norm", what);
        f.report.error_radius = detail::get_field<double>(r, "error_radius", what);
        f.report.converged = r.value("converged", true);
    }
    return f;
}

/// All win-rate scores for a reward vector. The Voronoi-only scores are
/// emitted when Voronoi weights are supplied.
inline Json analysis_json(const AlternativeSet& set, const WinRateMatrix& p,
                          const RewardVector& r, const WeightVector& w, double lambda) {
    const std::size_t m = set.size();
    const bool voronoi = w.mode == WeightMode::Voronoi;
    Json scores = Json::object();
    const auto awr = average_win_rate(p);
    scores["awr"] = detail::keyed(set, awr.values);
    scores["borda"] = detail::keyed(set, borda_count(p).values);
    scores["model_awr"] = detail::keyed(set, model_win_rate(r, unit_weights(m)).values);
    ScoreVector data_score = awr;
    if (voronoi) {
        data_score = weighted_average_win_rate(p, w);
        scores["wawr"] = detail::keyed(set, data_score.values);
        scores["model_wawr"] = detail::keyed(set, model_win_rate(r, w).values);
    } else {
        scores["wawr"] = nullptr;
        scores["model_wawr"] = nullptr;
    }
    const auto residual = m_estimator_residual(r, p, w, lambda);
    scores["residual"] = detail::keyed(set, residual.values);

    double sup = 0.0;
    for (double v : residual.values) sup = std::max(sup, std::abs(v));
    Json ranking_ids = Json::array();
    for (std::size_t i : ranking(r)) ranking_ids.push_back(set.id(i));
    const auto check = ranking_consistency(r, data_score);
    Json consistency{{"score", voronoi ? "wawr" : "awr"}, {"consistent", check.consistent}};
    if (check.violation)
        consistency["violating_pair"] = {set.id(check.violation->first),
                                         set.id(check.violation->second)};
    return Json{{"format_version", kFormatVersion},
                {"lambda", lambda},
                {"weights_mode", voronoi ? "voronoi" : "unit"},
                {"scores", std::move(scores)},
                {"ranking", std::move(ranking_ids)},
                {"residual_sup_norm", sup},
                {"ranking_consistency", std::move(consistency)}};
}

// ---------------------------------------------------------------------------
// Experiment reports
// ---------------------------------------------------------------------------

inline std::string robustness_csv(const RobustnessReport& report) {
    std::string out = "epsilon,delta_existing,delta_pair,winner_before,winner_after\n";
    for (const auto& row : report.rows)
        out += format_double(row.epsilon) + "," + format_double(row.delta_existing) + "," +
               format_double(row.delta_pair) + "," + row.winner_before + "," +
               row.winner_after + "\n";
    return out;
}

inline Json robustness_sidecar(const RobustnessReport& report, const SweepConfig& config) {
    Json rows = Json::array();
    for (const auto& row : report.rows)
        rows.push_back(Json{{"epsilon", row.epsilon},
                            {"error_radius", row.error_radius},
                            {"max_weight_std_error", row.max_weight_std_error}});
    return Json{{"format_version", kFormatVersion},
                {"algorithm", to_string(report.algorithm)},
                {"weights_mode", report.algorithm == Algorithm::Wmle ? "voronoi" : "unit"},
                {"lambda", config.solver.lambda},
                {"grad_tol", config.solver.grad_tol},
                {"seed", config.weights.seed},
                {"n_samples", config.weights.n_samples},
                {"target", config.target},
                {"direction", config.direction},
                {"space", to_json(config.space)},
                {"rows", std::move(rows)}};
}

inline Json to_json(const BordaFlipReport& r) {
    auto table = [](const BordaFlipTable& t) {
        Json rows = Json::array();
        for (std::size_t i = 0; i < t.set.size(); ++i) {
            Json row{{"alternative", t.set.id(i)}};
            Json wins = Json::object();
            for (std::size_t k = 0; k < t.set.size(); ++k) wins[t.set.id(k)] = t.matrix(i, k);
            row["p_vs"] = std::move(wins);
            row["borda"] = t.borda[i];
            row["mle_reward"] = t.mle.rewards[i];
            rows.push_back(std::move(row));
        }
        Json ranking_ids = Json::array();
        for (std::size_t i : ranking(t.mle.rewards)) ranking_ids.push_back(t.set.id(i));
        return Json{{"alternatives", t.set.ids()},
                    {"rows", std::move(rows)},
                    {"borda_winner", t.borda_winner},
                    {"mle_winner", t.mle_winner},
                    {"mle_ranking", std::move(ranking_ids)},
                    {"solve_report", to_json(t.mle.report)}};
    };
    return Json{{"format_version", kFormatVersion},
                {"lambda", r.lambda},
                {"original", table(r.original)},
                {"cloned", table(r.cloned)},
                {"winner_flipped", r.winner_flipped}};
}

inline Json to_json(const ImpossibilityInstance& inst) {
    return Json{{"format_version", kFormatVersion},
                {"C", inst.C},
                {"kappa", inst.kappa},
                {"population1", to_json(inst.population1)},
                {"population2", to_json(inst.population2)},
                {"p_ab_population1", inst.p_ab_1},
                {"p_ab_population2", inst.p_ab_2},
                {"mean_rb_population1", inst.mean_rb_1},
                {"mean_rb_population2", inst.mean_rb_2},
                {"mean_reward_gap", inst.mean_reward_gap}};
}

inline Json to_json(const IntegralCheck& c, const AlternativeSet& set, double lambda) {
    return Json{{"format_version", kFormatVersion},
                {"lambda", lambda},
                {"weights", to_json(c.weights, set)},
                {"rewards", detail::keyed(set, c.solution.rewards)},
                {"objective_all_pairs", c.objective_all_pairs},
                {"integral_estimate", c.integral.estimate},
                {"integral_std_error", c.integral.std_error},
                {"z_score", c.z_score},
                {"within_3_sigma", std::abs(c.z_score) <= 3.0}};
}

}  // namespace prefagg::io
