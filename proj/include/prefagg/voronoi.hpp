#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

#include "prefagg/core.hpp"
#include "prefagg/parallel.hpp"
#include "prefagg/random.hpp"

namespace prefagg {

inline constexpr double kDefaultTieTolerance = 1e-12;
inline constexpr std::size_t kDefaultWeightSamples = 100000;
inline constexpr std::size_t kSampleChunk = 8192;

// ---------------------------------------------------------------------------
// Alternative space
// ---------------------------------------------------------------------------

/// Axis-aligned box standing in for the space of all possible alternatives.
struct SpaceBox {
    ContextVector lower;
    ContextVector upper;

    SpaceBox() = default;
    SpaceBox(ContextVector lo, ContextVector hi) : lower(std::move(lo)), upper(std::move(hi)) {
        validate();
    }

    static SpaceBox unit_cube(std::size_t dim) {
        return SpaceBox(ContextVector(dim, 0.0), ContextVector(dim, 1.0));
    }

    /// Smallest box containing, for every observed alternative, the points
    /// whose coordinates are within a factor of two of that alternative's
    /// coordinates: per coordinate k it spans min(c_k/2, 2c_k) to
    /// max(c_k/2, 2c_k) over all alternatives.
    static SpaceBox factor2(const AlternativeSet& set) {
        ContextVector lo(set.dim(), std::numeric_limits<double>::infinity());
        ContextVector hi(set.dim(), -std::numeric_limits<double>::infinity());
        for (const auto& c : set.contexts()) {
            for (std::size_t k = 0; k < c.size(); ++k) {
                lo[k] = std::min({lo[k], c[k] / 2.0, 2.0 * c[k]});
                hi[k] = std::max({hi[k], c[k] / 2.0, 2.0 * c[k]});
            }
        }
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (!(lo[k] < hi[k]))
                throw InvalidArgument("factor2 space is degenerate: coordinate " +
                                      std::to_string(k) + " is zero for every alternative");
        return SpaceBox(std::move(lo), std::move(hi));
    }

    std::size_t dim() const noexcept { return lower.size(); }

    double volume() const {
        double v = 1.0;
        for (std::size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
        return v;
    }

    void validate() const {
        validate_context(lower);
        validate_context(upper);
        if (lower.size() != upper.size())
            throw InvalidArgument("space box: lower and upper differ in dimension");
        for (std::size_t k = 0; k < lower.size(); ++k)
            if (!(lower[k] < upper[k]))
                throw InvalidArgument("space box: lower must be strictly below upper");
        if (!(volume() > 0.0) || !std::isfinite(volume()))
            throw InvalidArgument("space box must have finite positive volume");
    }

    void sample(RandomStream& rng, ContextVector& out) const {
        out.resize(lower.size());
        for (std::size_t k = 0; k < lower.size(); ++k) out[k] = rng.uniform(lower[k], upper[k]);
    }

    friend bool operator==(const SpaceBox&, const SpaceBox&) = default;
};

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

enum class WeightMode { Voronoi, Unit };

struct WeightVector {
    std::vector<double> values;
    WeightMode mode = WeightMode::Unit;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    double sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }
    double min() const { return *std::min_element(values.begin(), values.end()); }

    void validate() const {
        if (values.empty()) throw InvalidArgument("weight vector must not be empty");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!(values[i] > 0.0) || !std::isfinite(values[i]))
                throw InvalidArgument(
                    "weight " + std::to_string(i) + " is not finite and positive" +
                    (values[i] == 0.0 ? " (its Voronoi cell misses the sampled space)" : ""));
        if (mode == WeightMode::Unit) {
            for (double w : values)
                if (w != 1.0) throw InvalidArgument("unit-mode weights must all equal 1");
        } else if (std::abs(sum() - 1.0) > 1e-9) {
            throw InvalidArgument("voronoi weights must sum to 1");
        }
    }

    friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

inline WeightVector unit_weights(const AlternativeSet& set) {
    return {std::vector<double>(set.size(), 1.0), WeightMode::Unit};
}

inline WeightVector unit_weights(std::size_t m) {
    return {std::vector<double>(m, 1.0), WeightMode::Unit};
}

// ---------------------------------------------------------------------------
// Projection onto the alternative set
// ---------------------------------------------------------------------------

struct ProjectionResult {
    std::vector<std::size_t> indices;  // alternatives attaining the minimum distance
    double distance = 0.0;
};

namespace detail {

inline double distance(const ContextVector& a, const ContextVector& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

// Allocation-free projection used by the Monte Carlo loops. `dist` is scratch.
inline double nearest(const std::vector<ContextVector>& contexts, const ContextVector& x,
                      double tie_tol, std::vector<double>& dist,
                      std::vector<std::size_t>& out) {
    dist.resize(contexts.size());
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        dist[i] = distance(contexts[i], x);
        dmin = std::min(dmin, dist[i]);
    }
    const double cutoff = dmin * (1.0 + tie_tol) + tie_tol;
    out.clear();
    for (std::size_t i = 0; i < contexts.size(); ++i)
        if (dist[i] <= cutoff) out.push_back(i);
    return dmin;
}

}  // namespace detail

/// All alternatives closest to `x`, where distances within a relative and
/// absolute `tie_tol` of the minimum count as ties.
inline ProjectionResult project(const AlternativeSet& set, const ContextVector& x,
                                double tie_tol = kDefaultTieTolerance) {
    if (set.size() == 0) throw InvalidArgument("cannot project onto an empty set");
    if (x.size() != set.dim()) throw InvalidArgument("projection: dimension mismatch");
    if (!(tie_tol >= 0.0)) throw InvalidArgument("projection: tie tolerance must be >= 0");
    ProjectionResult r;
    std::vector<double> scratch;
    r.distance = detail::nearest(set.contexts(), x, tie_tol, scratch, r.indices);
    return r;
}

struct WeightEstimate {
    WeightVector weights;
    std::vector<double> std_errors;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

struct MonteCarloOptions {
    std::size_t n_samples = kDefaultWeightSamples;
    std::uint64_t seed = 0;
    double tie_tol = kDefaultTieTolerance;
    unsigned workers = 1;
};

/// Monte Carlo estimate of the Voronoi weights: the share of `space` whose
/// nearest alternative is each member of `set`, ties split evenly.
///
/// Samples are drawn in fixed-size chunks, chunk k from substream (seed, k),
/// and chunk tallies are summed in chunk order. The sample points depend only
/// on (seed, n_samples, space), so estimates for two alternative sets with the
/// same seed use identical points.
inline WeightEstimate estimate_weights(const AlternativeSet& set, const SpaceBox& space,
                                       const MonteCarloOptions& opt = {}) {
    if (opt.n_samples < 1) throw InvalidArgument("estimate_weights: need at least one sample");
    if (space.dim() != set.dim())
        throw InvalidArgument("estimate_weights: space and alternatives differ in dimension");
    space.validate();
    const std::size_t m = set.size();
    const std::size_t chunks = (opt.n_samples + kSampleChunk - 1) / kSampleChunk;

    auto tallies = map_indexed(chunks, opt.workers, [&](std::size_t k) {
        std::vector<double> tally(m, 0.0);
        RandomStream rng = RandomStream::substream(opt.seed, k);
        const std::size_t count = std::min(kSampleChunk, opt.n_samples - k * kSampleChunk);
        ContextVector x;
        std::vector<double> dist;
        std::vector<std::size_t> nearest;
        for (std::size_t s = 0; s < count; ++s) {
            space.sample(rng, x);
            detail::nearest(set.contexts(), x, opt.tie_tol, dist, nearest);
            const double share = 1.0 / static_cast<double>(nearest.size());
            for (std::size_t i : nearest) tally[i] += share;
        }
        return tally;
    });

    std::vector<double> total(m, 0.0);
    for (const auto& t : tallies)
        for (std::size_t i = 0; i < m; ++i) total[i] += t[i];

    WeightEstimate est;
    est.n_samples = opt.n_samples;
    est.seed = opt.seed;
    est.weights.mode = WeightMode::Voronoi;
    est.weights.values.resize(m);
    est.std_errors.resize(m);
    const double n = static_cast<double>(opt.n_samples);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = total[i] / n;
        est.weights.values[i] = w;
        est.std_errors[i] = std::sqrt(std::max(0.0, w * (1.0 - w)) / n);
    }
    return est;
}

// ---------------------------------------------------------------------------
// Objective written as an integral over the alternative space
// ---------------------------------------------------------------------------

struct IntegralEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of
///   -(1/|S|^2) integral L(y1, y2) dy1 dy2 + (lambda / (2|S|)) integral r2(y) dy
/// where L averages p(x1 > x2) ln sigma(r(x1) - r(x2)) over the projections of
/// y1 and y2 onto `set`, and r2 averages r(x)^2 over the projection of y.
/// Each sample draws an independent triple (y1, y2, y); the estimate is the
/// sample mean and the standard error comes from the sample variance.
inline IntegralEstimate integral_objective_estimate(const RewardVector& r,
                                                    const WinRateMatrix& p,
                                                    const AlternativeSet& set,
                                                    const SpaceBox& space, double lambda,
                                                    const MonteCarloOptions& opt = {}) {
    if (opt.n_samples < 1) throw InvalidArgument("integral estimate: need at least one sample");
    if (r.size() != set.size() || p.size() != set.size())
        throw InvalidArgument("integral estimate: rewards, matrix and set differ in size");
    if (!(lambda > 0.0)) throw InvalidArgument("integral estimate: lambda must be positive");
    if (space.dim() != set.dim())
        throw InvalidArgument("integral estimate: space and alternatives differ in dimension");
    for (double v : r) require_finite(v, "reward");

    struct Moments {
        double count = 0.0;
        double mean = 0.0;
        double m2 = 0.0;
    };
    const std::size_t chunks = (opt.n_samples + kSampleChunk - 1) / kSampleChunk;
    auto parts = map_indexed(chunks, opt.workers, [&](std::size_t k) {
        Moments acc;
        RandomStream rng = RandomStream::substream(opt.seed, k);
        const std::size_t count = std::min(kSampleChunk, opt.n_samples - k * kSampleChunk);
        ContextVector y1, y2, y3;
        std::vector<double> dist;
        std::vector<std::size_t> p1, p2, p3;
        for (std::size_t s = 0; s < count; ++s) {
            space.sample(rng, y1);
            space.sample(rng, y2);
            space.sample(rng, y3);
            detail::nearest(set.contexts(), y1, opt.tie_tol, dist, p1);
            detail::nearest(set.contexts(), y2, opt.tie_tol, dist, p2);
            detail::nearest(set.contexts(), y3, opt.tie_tol, dist, p3);
            double loglik = 0.0;
            for (std::size_t a : p1)
                for (std::size_t b : p2) loglik += p(a, b) * log_logistic(r[a] - r[b]);
            loglik /= static_cast<double>(p1.size() * p2.size());
            double r2 = 0.0;
            for (std::size_t a : p3) r2 += r[a] * r[a];
            r2 /= static_cast<double>(p3.size());
            const double v = -loglik + 0.5 * lambda * r2;
            acc.count += 1.0;
            const double delta = v - acc.mean;
            acc.mean += delta / acc.count;
            acc.m2 += delta * (v - acc.mean);
        }
        return acc;
    });

    Moments total;
    for (const auto& part : parts) {
        if (part.count == 0.0) continue;
        const double n = total.count + part.count;
        const double delta = part.mean - total.mean;
        total.mean += delta * part.count / n;
        total.m2 += part.m2 + delta * delta * total.count * part.count / n;
        total.count = n;
    }
    IntegralEstimate out;
    out.estimate = total.mean;
    out.std_error = total.count > 1.0
                        ? std::sqrt(total.m2 / (total.count - 1.0) / total.count)
                        : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace prefagg
