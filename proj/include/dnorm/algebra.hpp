#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "generator.hpp"
#include "norm.hpp"
#include "sampler.hpp"

namespace dnorm {

/// Norm of the componentwise product of independent generators. Exact when
/// both factors are finite-support with exact policy; otherwise backed by a
/// product sampler. The result does not depend on which representative
/// generators back the factors.
inline DNorm multiply(const DNorm& a, const DNorm& b) {
    if (a.dimension() != b.dimension())
        throw std::invalid_argument("multiplying norms of different dimensions");

    if (a.discrete() && b.discrete()) {
        auto prod = product_generator(*a.discrete(), *b.discrete());
        if (a.exact_policy() && b.exact_policy()) return DNorm::exact(std::move(prod));
        McPolicy pol = a.exact_policy() ? b.policy() : a.policy();
        if (!a.exact_policy() && !b.exact_policy())
            pol.samples = std::max(a.policy().samples, b.policy().samples);
        return DNorm::monte_carlo(prod, pol);
    }

    McPolicy pol;
    if (!a.exact_policy() && !b.exact_policy()) {
        pol = a.policy();
        pol.samples = std::max(a.policy().samples, b.policy().samples);
    } else {
        pol = a.exact_policy() ? b.policy() : a.policy();
    }
    return DNorm::monte_carlo(product_sampler(a.sampler_view(), b.sampler_view()), pol);
}

/// n-fold product of independent copies; power(D, 1) is D itself.
inline DNorm power(const DNorm& D, int n) {
    if (n < 1) throw std::invalid_argument("power exponent must be >= 1");
    DNorm result = D;
    for (int i = 2; i <= n; ++i) result = multiply(result, D);
    return result;
}

namespace detail {

/// Evaluates several points from one shared sample stream; identical to
/// running eval_mc per point with the same seed, at a fraction of the draws.
inline std::vector<NormEstimate> eval_mc_multi(const SamplerGenerator& g,
                                               const std::vector<std::vector<double>>& points,
                                               std::size_t n, std::uint64_t seed) {
    const auto d = static_cast<std::size_t>(g.dimension);
    for (const auto& p : points)
        if (p.size() != d) throw std::invalid_argument("grid point dimension mismatch");
    if (n < 2) throw std::invalid_argument("Monte Carlo evaluation needs n >= 2");

    std::vector<RunningMoments> acc(points.size());
    std::vector<double> buf;
    std::uint64_t chunk_index = 0;
    for (std::size_t done = 0; done < n; ++chunk_index) {
        const std::size_t m = std::min(kEvalChunk, n - done);
        buf.resize(m * d);
        g.fill_batch(seed_mix(seed, salts::eval_chunk + chunk_index), m, buf.data());
        for (std::size_t r = 0; r < m; ++r) {
            const double* z = buf.data() + r * d;
            for (std::size_t q = 0; q < points.size(); ++q) {
                const auto& x = points[q];
                double v = 0.0;
                for (std::size_t i = 0; i < d; ++i) v = std::max(v, std::abs(x[i]) * z[i]);
                acc[q].add(v);
            }
        }
        done += m;
    }
    std::vector<NormEstimate> out(points.size());
    for (std::size_t q = 0; q < points.size(); ++q)
        out[q] = NormEstimate{acc[q].mean, acc[q].standard_error(), n};
    return out;
}

}  // namespace detail

struct TrackOptions {
    int max_steps = 64;
    double tol = 1e-6;
    // Convergence is not tested before this many steps. Useful for MC tracks
    // of heavy-tailed products, where early successive differences drown in
    // their own standard errors.
    int min_steps = 1;
    double z = 3.0;  // MC convergence threshold in pooled standard errors
    // Overrides the evaluation policy taken from the sequence.
    std::optional<McPolicy> mc;
};

struct TrackReport {
    std::vector<std::vector<double>> grid;
    std::vector<std::vector<NormEstimate>> iterations;  // iterations[step][point]
    bool converged = false;
    int steps = 0;
    double final_sup_diff = std::numeric_limits<double>::quiet_NaN();
    std::optional<PartitionFrame> limit_frame;  // attached by track_same
};

namespace detail {

inline TrackReport track_impl(const std::vector<DNorm>& sequence,
                              const std::vector<std::vector<double>>& grid,
                              const TrackOptions& opts) {
    if (sequence.empty()) throw std::invalid_argument("track of an empty norm sequence");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("track tolerance must be positive");
    if (grid.empty()) throw std::invalid_argument("track needs a nonempty grid");
    const int d = sequence.front().dimension();
    for (const auto& D : sequence)
        if (D.dimension() != d)
            throw std::invalid_argument("track over norms of different dimensions");

    bool exact = !opts.mc.has_value();
    if (exact)
        for (const auto& D : sequence)
            if (!D.exact_policy()) exact = false;

    McPolicy pol;
    if (!exact) {
        if (opts.mc)
            pol = *opts.mc;
        else
            for (const auto& D : sequence)
                if (!D.exact_policy()) {
                    pol = D.policy();
                    break;
                }
    }

    TrackReport report;
    report.grid = grid;
    const int steps_available = std::min<int>(opts.max_steps, static_cast<int>(sequence.size()));

    std::optional<DiscreteGenerator> running_discrete;
    std::vector<SamplerGenerator> running_factors;

    for (int step = 1; step <= steps_available; ++step) {
        const DNorm& next = sequence[static_cast<std::size_t>(step - 1)];
        std::vector<NormEstimate> values;
        if (exact) {
            running_discrete = running_discrete
                                   ? product_generator(*running_discrete, *next.discrete())
                                   : *next.discrete();
            values.reserve(grid.size());
            for (const auto& x : grid)
                values.push_back(NormEstimate{eval_exact(*running_discrete, x), 0.0, 0});
        } else {
            auto view = next.sampler_view();
            if (view.factors)
                running_factors.insert(running_factors.end(), view.factors->begin(),
                                       view.factors->end());
            else
                running_factors.push_back(std::move(view));
            // A one-element product is the factor itself; evaluating it bare
            // keeps step n stream-identical to power(D, n).
            const SamplerGenerator current = running_factors.size() == 1
                                                 ? running_factors.front()
                                                 : product_sampler(running_factors);
            values = detail::eval_mc_multi(current, grid, pol.samples, pol.seed);
        }
        report.iterations.push_back(std::move(values));
        report.steps = step;

        if (step < 2) continue;
        const auto& prev = report.iterations[static_cast<std::size_t>(step - 2)];
        const auto& curr = report.iterations.back();
        double sup_diff = 0.0;
        bool within = true;
        for (std::size_t q = 0; q < grid.size(); ++q) {
            const double diff = std::abs(curr[q].value - prev[q].value);
            sup_diff = std::max(sup_diff, diff);
            double threshold = opts.tol;
            if (!exact) {
                const double pooled = std::sqrt(curr[q].standard_error * curr[q].standard_error +
                                                prev[q].standard_error * prev[q].standard_error);
                threshold = std::max(threshold, opts.z * pooled);
            }
            if (diff > threshold) within = false;
        }
        report.final_sup_diff = sup_diff;
        if (within && step >= opts.min_steps) {
            report.converged = true;
            break;
        }
    }
    return report;
}

}  // namespace detail

/// Iterated multiplication along a given norm sequence, recording grid values
/// per step. Sequences are nondecreasing pointwise and bounded by the L1
/// norm; convergence means the sup grid difference of successive steps fell
/// below the tolerance (plus z pooled standard errors in MC mode).
inline TrackReport track(const std::vector<DNorm>& sequence,
                         const std::vector<std::vector<double>>& grid,
                         const TrackOptions& opts = {}) {
    return detail::track_impl(sequence, grid, opts);
}

/// Pairwise extremal coefficients plus union-find merging of completely
/// dependent pairs. Exact mode declares a pair completely dependent when its
/// coefficient is within eps of 1; MC mode when the upper z-se confidence
/// bound is below 1 + eps. After merging, every intra-block pair is
/// re-verified; a failure means the tolerance produced an inconsistent
/// equivalence structure and raises an error rather than patching it.
inline PartitionFrame detect_cdf(const DNorm& D, double eps) {
    if (eps < 0.0) throw std::invalid_argument("detect_cdf tolerance must be >= 0");
    const int d = D.dimension();
    const auto dd = static_cast<std::size_t>(d);

    std::vector<std::vector<bool>> complete(dd, std::vector<bool>(dd, false));
    auto pair_complete = [&](int i, int j) {
        const auto ec = extremal_coefficient(D, {i, j});
        if (D.exact_policy()) return ec.value <= 1.0 + eps;
        return ec.value + D.policy().z * ec.standard_error < 1.0 + eps;
    };

    std::vector<std::size_t> parent(dd);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };

    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (pair_complete(i, j)) {
                complete[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
                parent[find(static_cast<std::size_t>(j))] = find(static_cast<std::size_t>(i));
            }

    std::vector<std::vector<int>> members(dd);
    for (std::size_t i = 0; i < dd; ++i) members[find(i)].push_back(static_cast<int>(i));

    std::vector<std::vector<int>> blocks;
    for (auto& block : members) {
        if (block.size() < 2) continue;
        for (std::size_t a = 0; a < block.size(); ++a)
            for (std::size_t b = a + 1; b < block.size(); ++b)
                if (!complete[static_cast<std::size_t>(block[a])]
                             [static_cast<std::size_t>(block[b])])
                    throw std::runtime_error(
                        "inconsistent complete-dependence frame at the given tolerance; "
                        "raise the sample size or loosen eps");
        blocks.push_back(std::move(block));
    }
    return make_frame(d, std::move(blocks));
}

inline PartitionFrame detect_cdf(const DNorm& D) {
    return detect_cdf(D, D.exact_policy() ? 1e-9 : 1e-3);
}

/// The idempotent norm a constant track of D converges to: the frame norm of
/// D's complete-dependence frame (the L1 norm when the frame is empty).
inline DNorm idempotent_limit(const DNorm& D) {
    return DNorm::exact(partition_generator(detect_cdf(D)));
}

/// track() over the constant sequence (D, D, ...), with the predicted limit
/// frame attached for comparison.
inline TrackReport track_same(const DNorm& D, const std::vector<std::vector<double>>& grid,
                              const TrackOptions& opts = {}) {
    std::vector<DNorm> sequence(static_cast<std::size_t>(std::max(1, opts.max_steps)), D);
    TrackReport report = detail::track_impl(sequence, grid, opts);
    report.limit_frame = detect_cdf(D);
    return report;
}

struct IdempotencyResult {
    bool idempotent = false;
    double max_deviation = 0.0;
    std::size_t witness_index = 0;
    std::vector<double> witness;
    NormEstimate base;     // ||x|| at the witness
    NormEstimate squared;  // ||x|| under the squared norm at the witness
};

/// Tests ||.||_{D^2} = ||.||_D on the grid. Exact mode compares at tol
/// (default 1e-12); MC mode allows z pooled standard errors on top.
inline IdempotencyResult is_idempotent(const DNorm& D,
                                       const std::vector<std::vector<double>>& grid,
                                       double tol = 1e-12) {
    if (!(tol > 0.0)) throw std::invalid_argument("idempotency tolerance must be positive");
    if (grid.empty()) throw std::invalid_argument("idempotency test needs a nonempty grid");
    const DNorm squared = multiply(D, D);

    IdempotencyResult result;
    result.idempotent = true;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < grid.size(); ++q) {
        NormEstimate v1, v2;
        if (D.exact_policy()) {
            v1 = norm(D, grid[q]);
            v2 = norm(squared, grid[q]);
        } else {
            // Re-seed per point so grid evaluations are decorrelated.
            const auto& pol = D.policy();
            const std::uint64_t point_seed = seed_mix(pol.seed, salts::grid_point + q);
            v1 = eval_mc(D.sampler_view(), grid[q], pol.samples, point_seed);
            v2 = eval_mc(squared.sampler_view(), grid[q], pol.samples, point_seed);
        }
        const double dev = std::abs(v2.value - v1.value);
        double allowance = tol;
        if (!D.exact_policy()) {
            const double pooled = std::sqrt(v1.standard_error * v1.standard_error +
                                            v2.standard_error * v2.standard_error);
            allowance = std::max(tol, D.policy().z * pooled);
        }
        const double excess = dev - allowance;
        if (excess > worst_excess) {
            worst_excess = excess;
            result.max_deviation = dev;
            result.witness_index = q;
            result.witness = grid[q];
            result.base = v1;
            result.squared = v2;
        }
        if (dev > allowance) result.idempotent = false;
    }
    return result;
}

struct ClassifyResult {
    enum class Verdict { not_idempotent, frame, violation };
    Verdict verdict = Verdict::not_idempotent;
    std::optional<PartitionFrame> frame;
    IdempotencyResult idempotency;
    double frame_deviation = 0.0;
};

/// Canonical form of an idempotent norm: the partition frame whose norm
/// matches it on the grid. A norm that tests idempotent but matches no frame
/// signals numerical trouble and is reported as a violation.
inline ClassifyResult classify_idempotent(const DNorm& D,
                                          const std::vector<std::vector<double>>& grid,
                                          double tol = 1e-12) {
    ClassifyResult result;
    result.idempotency = is_idempotent(D, grid, tol);
    if (!result.idempotency.idempotent) {
        result.verdict = ClassifyResult::Verdict::not_idempotent;
        return result;
    }

    PartitionFrame frame = detect_cdf(D);
    const DiscreteGenerator frame_gen = partition_generator(frame);
    double worst = 0.0;
    bool matches = true;
    for (const auto& x : grid) {
        const auto v = norm(D, x);
        const double f = eval_exact(frame_gen, x);
        const double dev = std::abs(v.value - f);
        worst = std::max(worst, dev);
        double allowance = tol;
        if (!D.exact_policy())
            allowance = std::max(tol, D.policy().z * v.standard_error);
        if (dev > allowance) matches = false;
    }
    result.frame_deviation = worst;
    if (matches) {
        result.verdict = ClassifyResult::Verdict::frame;
        result.frame = std::move(frame);
    } else {
        result.verdict = ClassifyResult::Verdict::violation;
    }
    return result;
}

}  // namespace dnorm
