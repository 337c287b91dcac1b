#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "norm.hpp"
#include "random.hpp"
#include "sampler.hpp"

namespace dnorm {

/// One standard max-stable draw: strictly negative coordinates and the
/// number of Poisson points the simulator consumed.
struct SmsSample {
    std::vector<double> eta;
    std::uint64_t points_used = 0;
};

struct SimOptions {
    std::uint64_t max_points = 1'000'000;
    std::size_t mark_block = 1024;  // marks are drawn from the sampler in blocks of this size
};

namespace detail {

// Sequential view of the generator mark stream. Blocks are drawn with
// deterministic per-block sub-seeds, so any two consumers with the same seed
// see the same sequence regardless of how far they read.
class MarkStream {
public:
    MarkStream(const SamplerGenerator& g, std::uint64_t seed, std::size_t block)
        : g_(&g), seed_(seed), block_(block), dim_(static_cast<std::size_t>(g.dimension)) {}

    const double* next() {
        if (pos_ == filled_) {
            buf_.resize(block_ * dim_);
            g_->fill_batch(seed_mix(seed_, salts::mark_block + block_index_), block_,
                           buf_.data());
            ++block_index_;
            pos_ = 0;
            filled_ = block_;
        }
        return buf_.data() + (pos_++) * dim_;
    }

private:
    const SamplerGenerator* g_;
    std::uint64_t seed_;
    std::size_t block_;
    std::size_t dim_;
    std::uint64_t block_index_ = 0;
    std::size_t pos_ = 0;
    std::size_t filled_ = 0;
    std::vector<double> buf_;
};

// Shared core of the adaptive and fixed-horizon simulators. The Poisson
// process with mean measure r^-2 dr on (0, inf) is realized as V_i = 1/Gamma_i
// with Gamma_i the arrival times of a unit-rate Poisson process. Once
// c / Gamma_{n+1} falls below every accumulated coordinate maximum, no later
// point can change the result, which makes the adaptive cut exact.
inline SmsSample sms_core(const SamplerGenerator& g, double c, std::uint64_t seed,
                          std::uint64_t fixed_points, const SimOptions& opts) {
    const auto d = static_cast<std::size_t>(g.dimension);
    Xoshiro256 arrivals(seed_mix(seed, salts::sms_arrivals));
    MarkStream marks(g, seed_mix(seed, salts::sms_marks), opts.mark_block);

    std::vector<double> running(d, 0.0);
    double gamma = arrivals.exponential();
    std::uint64_t used = 0;
    for (;;) {
        const double* z = marks.next();
        ++used;
        for (std::size_t i = 0; i < d; ++i) running[i] = std::max(running[i], z[i] / gamma);
        const double next_gamma = gamma + arrivals.exponential();
        if (fixed_points > 0) {
            if (used == fixed_points) break;
        } else {
            const double floor = *std::min_element(running.begin(), running.end());
            if (floor > 0.0 && c / next_gamma < floor) break;
            if (used >= opts.max_points)
                throw std::runtime_error(
                    floor == 0.0
                        ? "some coordinate never left zero after the point cap; the "
                          "generator puts no mass on it"
                        : "the point cap was reached before the stopping rule; the "
                          "generator is numerically degenerate");
        }
        gamma = next_gamma;
    }

    SmsSample sample;
    sample.points_used = used;
    sample.eta.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (running[i] == 0.0)
            throw std::runtime_error("zero coordinate maximum; increase the point horizon");
        sample.eta[i] = -1.0 / running[i];
    }
    return sample;
}

}  // namespace detail

/// Draws one standard max-stable vector with df exp(-||x||) for the norm
/// generated by g. Requires a declared bound; truncate unbounded samplers
/// first.
inline SmsSample sample_sms(const SamplerGenerator& g, std::uint64_t seed,
                            const SimOptions& opts = {}) {
    if (!g.bound)
        throw std::invalid_argument(
            "the simulator needs a bounded generator; apply truncate_normalize first");
    return detail::sms_core(g, *g.bound, seed, 0, opts);
}

inline SmsSample sample_sms(const DiscreteGenerator& g, std::uint64_t seed,
                            const SimOptions& opts = {}) {
    return sample_sms(discrete_sampler(g), seed, opts);
}

/// Fixed-horizon reference run over the same point stream as sample_sms; used
/// to confirm the adaptive stopping rule changes nothing.
inline SmsSample sample_sms_fixed(const SamplerGenerator& g, std::uint64_t seed,
                                  std::uint64_t points, const SimOptions& opts = {}) {
    if (points == 0) throw std::invalid_argument("fixed horizon must be >= 1");
    if (!g.bound)
        throw std::invalid_argument(
            "the simulator needs a bounded generator; apply truncate_normalize first");
    return detail::sms_core(g, *g.bound, seed, points, opts);
}

/// n independent samples with per-sample sub-seeds; order-stable under any
/// parallel split.
inline std::vector<SmsSample> sample_batch(const SamplerGenerator& g, std::size_t n,
                                           std::uint64_t seed, const SimOptions& opts = {}) {
    if (n < 1) throw std::invalid_argument("batch size must be >= 1");
    std::vector<SmsSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sample_sms(g, seed_mix(seed, salts::batch_sample + i), opts));
    return out;
}

inline std::vector<SmsSample> sample_batch(const DiscreteGenerator& g, std::size_t n,
                                           std::uint64_t seed, const SimOptions& opts = {}) {
    return sample_batch(discrete_sampler(g), n, seed, opts);
}

/// Asymptotic two-sided Kolmogorov p-value with the Stephens small-sample
/// correction.
inline double kolmogorov_pvalue(double distance, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * distance;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 128; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * k * lambda * lambda);
        sum += (k % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct MarginDiagnostic {
    int coordinate = 0;  // 0-based
    std::size_t samples = 0;
    double ks_distance = 0.0;
    double p_value = 0.0;
};

/// Kolmogorov-Smirnov distance of coordinate j against the standard negative
/// exponential margin P(eta_j <= x) = exp(x), x <= 0.
inline MarginDiagnostic margin_check(const std::vector<SmsSample>& samples, int j) {
    if (samples.size() < 1000)
        throw std::invalid_argument("margin check needs at least 1000 samples");
    const std::size_t n = samples.size();
    std::vector<double> values(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& eta = samples[r].eta;
        if (j < 0 || static_cast<std::size_t>(j) >= eta.size())
            throw std::invalid_argument("margin coordinate out of range");
        values[r] = eta[static_cast<std::size_t>(j)];
    }
    std::sort(values.begin(), values.end());

    double distance = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double cdf = std::exp(std::min(0.0, values[r]));
        const double lo = static_cast<double>(r) / static_cast<double>(n);
        const double hi = static_cast<double>(r + 1) / static_cast<double>(n);
        distance = std::max({distance, cdf - lo, hi - cdf});
    }
    return MarginDiagnostic{j, n, distance, kolmogorov_pvalue(distance, n)};
}

struct CdfRow {
    std::vector<double> x;
    double empirical = 0.0;
    double theoretical = 0.0;
    double se = 0.0;
    double z = 0.0;
};

/// Empirical joint df against exp(-||x||) with binomial standard errors.
inline std::vector<CdfRow> joint_cdf_check(const std::vector<SmsSample>& samples, const DNorm& D,
                                           const std::vector<std::vector<double>>& grid) {
    if (samples.empty()) throw std::invalid_argument("joint cdf check needs samples");
    const std::size_t n = samples.size();
    const auto d = static_cast<std::size_t>(D.dimension());
    std::vector<CdfRow> rows;
    rows.reserve(grid.size());
    for (const auto& x : grid) {
        if (x.size() != d) throw std::invalid_argument("grid point dimension mismatch");
        for (double v : x)
            if (v > 0.0) throw std::invalid_argument("joint cdf grid must satisfy x <= 0");
        std::size_t hits = 0;
        for (const auto& s : samples) {
            bool below = true;
            for (std::size_t i = 0; i < d && below; ++i) below = s.eta[i] <= x[i];
            if (below) ++hits;
        }
        CdfRow row;
        row.x = x;
        row.empirical = static_cast<double>(hits) / static_cast<double>(n);
        row.theoretical = std::exp(-norm(D, x).value);
        row.se = std::sqrt(row.theoretical * (1.0 - row.theoretical) / static_cast<double>(n));
        const double dev = std::abs(row.empirical - row.theoretical);
        row.z = row.se > 0.0 ? dev / row.se
                             : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        rows.push_back(std::move(row));
    }
    return rows;
}

struct TwoSampleRow {
    std::vector<double> x;
    double p_first = 0.0;
    double p_second = 0.0;
    double pooled_se = 0.0;
    double z = 0.0;
};

struct MaxStabilityReport {
    int block = 1;
    std::vector<TwoSampleRow> rows;
    double max_z = 0.0;
};

/// Compares the empirical df of k-scaled componentwise block maxima with the
/// empirical df of the raw samples. Under max-stability the two laws agree.
inline MaxStabilityReport max_stability_check(const std::vector<SmsSample>& samples, int k,
                                              const std::vector<std::vector<double>>& grid) {
    if (k < 1) throw std::invalid_argument("block size must be >= 1");
    if (samples.empty() || samples.size() % static_cast<std::size_t>(k) != 0)
        throw std::invalid_argument("sample count must be a positive multiple of the block size");
    const std::size_t n = samples.size();
    const std::size_t blocks = n / static_cast<std::size_t>(k);
    const std::size_t d = samples.front().eta.size();

    std::vector<std::vector<double>> maxima(blocks, std::vector<double>(d));
    for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<double>& m = maxima[b];
        m.assign(d, -std::numeric_limits<double>::infinity());
        for (std::size_t r = b * static_cast<std::size_t>(k);
             r < (b + 1) * static_cast<std::size_t>(k); ++r)
            for (std::size_t i = 0; i < d; ++i) m[i] = std::max(m[i], samples[r].eta[i]);
        for (std::size_t i = 0; i < d; ++i) m[i] *= static_cast<double>(k);
    }

    MaxStabilityReport report;
    report.block = k;
    for (const auto& x : grid) {
        if (x.size() != d) throw std::invalid_argument("grid point dimension mismatch");
        auto fraction_below = [&](auto const& rows, auto&& coord) {
            std::size_t hits = 0;
            for (const auto& row : rows) {
                bool below = true;
                for (std::size_t i = 0; i < d && below; ++i) below = coord(row, i) <= x[i];
                if (below) ++hits;
            }
            return hits;
        };
        TwoSampleRow row;
        row.x = x;
        row.p_first =
            static_cast<double>(fraction_below(
                samples, [](const SmsSample& s, std::size_t i) { return s.eta[i]; })) /
            static_cast<double>(n);
        row.p_second =
            static_cast<double>(fraction_below(
                maxima, [](const std::vector<double>& m, std::size_t i) { return m[i]; })) /
            static_cast<double>(blocks);
        row.pooled_se = std::sqrt(row.p_first * (1.0 - row.p_first) / static_cast<double>(n) +
                                  row.p_second * (1.0 - row.p_second) /
                                      static_cast<double>(blocks));
        const double dev = std::abs(row.p_first - row.p_second);
        row.z = row.pooled_se > 0.0
                    ? dev / row.pooled_se
                    : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        report.max_z = std::max(report.max_z, row.z);
        report.rows.push_back(std::move(row));
    }
    return report;
}

struct InvarianceReport {
    std::vector<TwoSampleRow> rows;
    double max_z = 0.0;
    MeanCheck xi_mean;
};

/// Multiplying the generator by an independent nonnegative unit-mean scalar
/// leaves the simulated law unchanged. Both branches run from the same master
/// seed, so xi identically 1 reproduces the base stream bit for bit.
inline InvarianceReport multiplicative_invariance_check(
    const SamplerGenerator& g, const SamplerGenerator& xi, std::size_t n, std::uint64_t seed,
    const std::vector<std::vector<double>>& grid, const SimOptions& opts = {}) {
    if (xi.dimension != 1)
        throw std::invalid_argument("the scalar factor must have dimension 1");

    InvarianceReport report;
    report.xi_mean = sampler_mean_check(xi, 100'000, seed);
    if (report.xi_mean.max_z() > 5.0)
        throw std::invalid_argument("scalar factor fails the unit-mean check");

    const SamplerGenerator one = discrete_sampler(constant_generator(1));
    const auto base = sample_batch(scalar_scaled_sampler(g, one), n, seed, opts);
    const auto scaled = sample_batch(scalar_scaled_sampler(g, xi), n, seed, opts);

    const std::size_t d = base.front().eta.size();
    for (const auto& x : grid) {
        if (x.size() != d) throw std::invalid_argument("grid point dimension mismatch");
        auto fraction = [&](const std::vector<SmsSample>& rows) {
            std::size_t hits = 0;
            for (const auto& s : rows) {
                bool below = true;
                for (std::size_t i = 0; i < d && below; ++i) below = s.eta[i] <= x[i];
                if (below) ++hits;
            }
            return static_cast<double>(hits) / static_cast<double>(rows.size());
        };
        TwoSampleRow row;
        row.x = x;
        row.p_first = fraction(base);
        row.p_second = fraction(scaled);
        row.pooled_se = std::sqrt(row.p_first * (1.0 - row.p_first) / static_cast<double>(n) +
                                  row.p_second * (1.0 - row.p_second) / static_cast<double>(n));
        const double dev = std::abs(row.p_first - row.p_second);
        row.z = row.pooled_se > 0.0
                    ? dev / row.pooled_se
                    : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        report.max_z = std::max(report.max_z, row.z);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace dnorm
