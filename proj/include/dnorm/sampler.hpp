#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "generator.hpp"
#include "random.hpp"

namespace dnorm {

/// Seeded sampling procedure emitting nonnegative d-vectors with unit
/// componentwise means. `fill(seed, count, out)` writes count x dimension
/// values row-major and must be a pure function of (seed, count); that purity
/// is what makes results independent of how work is chunked or parallelized.
///
/// `bound` declares a constant c with Z_i <= c almost surely, when one is
/// known; std::nullopt means unbounded.
struct SamplerGenerator {
    int dimension = 0;
    std::optional<double> bound;
    std::string name;
    std::function<void(std::uint64_t, std::size_t, double*)> fill;
    // Non-null for product samplers; factor k draws from sub-seed
    // seed_mix(seed, salts::product_factor + k).
    std::shared_ptr<const std::vector<SamplerGenerator>> factors;

    void fill_batch(std::uint64_t seed, std::size_t count, double* out) const {
        if (!factors) {
            fill(seed, count, out);
            return;
        }
        const auto d = static_cast<std::size_t>(dimension);
        std::vector<double> tmp(count * d);
        for (std::size_t k = 0; k < factors->size(); ++k) {
            double* dst = (k == 0) ? out : tmp.data();
            (*factors)[k].fill_batch(seed_mix(seed, salts::product_factor + k), count, dst);
            if (k > 0)
                for (std::size_t j = 0; j < count * d; ++j) out[j] *= tmp[j];
        }
    }

    std::vector<double> sample(std::uint64_t seed, std::size_t count) const {
        std::vector<double> out(count * static_cast<std::size_t>(dimension));
        fill_batch(seed, count, out.data());
        return out;
    }
};

/// Z = 2U for a copula sampler U (uniform (0,1) margins). `copula_fill` must
/// write count x d uniforms row-major, purely in (seed, count).
inline SamplerGenerator scaled_copula_generator(
    int d, std::function<void(std::uint64_t, std::size_t, double*)> copula_fill,
    std::string name) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    SamplerGenerator g;
    g.dimension = d;
    g.bound = 2.0;
    g.name = std::move(name);
    g.fill = [d, copula = std::move(copula_fill)](std::uint64_t seed, std::size_t count,
                                                  double* out) {
        copula(seed, count, out);
        const std::size_t total = count * static_cast<std::size_t>(d);
        for (std::size_t j = 0; j < total; ++j) out[j] *= 2.0;
    };
    return g;
}

/// 2U with independent uniform coordinates.
inline SamplerGenerator independent_uniform_2u(int d) {
    return scaled_copula_generator(
        d,
        [d](std::uint64_t seed, std::size_t count, double* out) {
            Xoshiro256 rng(seed);
            const std::size_t total = count * static_cast<std::size_t>(d);
            for (std::size_t j = 0; j < total; ++j) out[j] = rng.uniform01();
        },
        "independent_uniform_2u");
}

/// 2U with one shared uniform across all coordinates (comonotone copula);
/// represents the sup-norm.
inline SamplerGenerator comonotone_2u(int d) {
    return scaled_copula_generator(
        d,
        [d](std::uint64_t seed, std::size_t count, double* out) {
            Xoshiro256 rng(seed);
            const auto dd = static_cast<std::size_t>(d);
            for (std::size_t r = 0; r < count; ++r) {
                const double u = rng.uniform01();
                for (std::size_t i = 0; i < dd; ++i) out[r * dd + i] = u;
            }
        },
        "comonotone_2u");
}

/// Independent unit-exponential coordinates. Unbounded; truncate_normalize
/// before feeding it to the max-stable simulator.
inline SamplerGenerator iid_exponential(int d) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    SamplerGenerator g;
    g.dimension = d;
    g.bound = std::nullopt;
    g.name = "iid_exponential";
    g.fill = [d](std::uint64_t seed, std::size_t count, double* out) {
        Xoshiro256 rng(seed);
        const std::size_t total = count * static_cast<std::size_t>(d);
        for (std::size_t j = 0; j < total; ++j) out[j] = rng.exponential();
    };
    return g;
}

/// Sampling view of a discrete generator (inverse-CDF over the atoms, one
/// uniform per draw).
inline SamplerGenerator discrete_sampler(const DiscreteGenerator& g) {
    auto report = validate_generator(g);
    if (!report.ok())
        throw std::invalid_argument("invalid generator:\n" + report.to_string());

    auto shared = std::make_shared<const DiscreteGenerator>(g);
    auto cumulative = std::make_shared<std::vector<double>>();
    cumulative->reserve(g.probs.size());
    double acc = 0.0;
    for (double p : g.probs) {
        acc += p;
        cumulative->push_back(acc);
    }
    double top = 0.0;
    for (double v : g.atoms) top = std::max(top, v);

    SamplerGenerator s;
    s.dimension = g.dimension;
    s.bound = top;
    s.name = "discrete";
    s.fill = [shared, cumulative](std::uint64_t seed, std::size_t count, double* out) {
        Xoshiro256 rng(seed);
        const auto d = static_cast<std::size_t>(shared->dimension);
        for (std::size_t r = 0; r < count; ++r) {
            const double u = rng.uniform01();
            auto it = std::upper_bound(cumulative->begin(), cumulative->end(), u);
            std::size_t k = static_cast<std::size_t>(it - cumulative->begin());
            if (k >= shared->atom_count()) k = shared->atom_count() - 1;
            const auto z = shared->atom(k);
            std::copy(z.begin(), z.end(), out + r * d);
        }
    };
    return s;
}

/// Componentwise product of independent draws. Factor lists are flattened so
/// that iterated products keep one flat sub-seed per factor, which makes
/// track evaluations and n-fold powers consume identical streams.
inline SamplerGenerator product_sampler(std::vector<SamplerGenerator> factors) {
    if (factors.empty()) throw std::invalid_argument("product of an empty factor list");
    const int d = factors.front().dimension;
    std::vector<SamplerGenerator> flat;
    for (auto& f : factors) {
        if (f.dimension != d)
            throw std::invalid_argument("product of samplers with different dimensions");
        if (f.factors)
            flat.insert(flat.end(), f.factors->begin(), f.factors->end());
        else
            flat.push_back(std::move(f));
    }

    SamplerGenerator s;
    s.dimension = d;
    s.bound = 1.0;
    for (const auto& f : flat) {
        if (!f.bound || !s.bound) {
            s.bound = std::nullopt;
            break;
        }
        *s.bound *= *f.bound;
    }
    s.name = "product";
    s.factors = std::make_shared<const std::vector<SamplerGenerator>>(std::move(flat));
    return s;
}

inline SamplerGenerator product_sampler(SamplerGenerator a, SamplerGenerator b) {
    std::vector<SamplerGenerator> fs;
    fs.push_back(std::move(a));
    fs.push_back(std::move(b));
    return product_sampler(std::move(fs));
}

inline SamplerGenerator product_sampler(const SamplerGenerator& a, const DiscreteGenerator& b) {
    return product_sampler(a, discrete_sampler(b));
}

/// Coordinate restriction (Z_i)_{i in S}.
inline SamplerGenerator project_sampler(const SamplerGenerator& g, std::vector<int> indices) {
    if (indices.empty()) throw std::invalid_argument("projection onto an empty index set");
    for (int i : indices)
        if (i < 0 || i >= g.dimension) throw std::invalid_argument("projection index out of range");
    SamplerGenerator s;
    s.dimension = static_cast<int>(indices.size());
    s.bound = g.bound;
    s.name = g.name + "|project";
    auto inner = std::make_shared<SamplerGenerator>(g);
    auto idx = std::make_shared<std::vector<int>>(std::move(indices));
    s.fill = [inner, idx](std::uint64_t seed, std::size_t count, double* out) {
        const auto full = static_cast<std::size_t>(inner->dimension);
        std::vector<double> buf(count * full);
        inner->fill_batch(seed, count, buf.data());
        const std::size_t m = idx->size();
        for (std::size_t r = 0; r < count; ++r)
            for (std::size_t i = 0; i < m; ++i)
                out[r * m + i] = buf[r * full + static_cast<std::size_t>((*idx)[i])];
    };
    return s;
}

/// Z scaled by an independent nonnegative unit-mean scalar xi (a
/// 1-dimensional sampler). The represented max-stable law is unchanged.
inline SamplerGenerator scalar_scaled_sampler(const SamplerGenerator& g,
                                              const SamplerGenerator& xi) {
    if (xi.dimension != 1) throw std::invalid_argument("scalar factor must have dimension 1");
    SamplerGenerator s;
    s.dimension = g.dimension;
    if (g.bound && xi.bound)
        s.bound = *g.bound * *xi.bound;
    else
        s.bound = std::nullopt;
    s.name = g.name + "*xi";
    auto base = std::make_shared<SamplerGenerator>(g);
    auto scalar = std::make_shared<SamplerGenerator>(xi);
    s.fill = [base, scalar](std::uint64_t seed, std::size_t count, double* out) {
        const auto d = static_cast<std::size_t>(base->dimension);
        base->fill_batch(seed_mix(seed, salts::scaled_factor + 1), count, out);
        std::vector<double> xs(count);
        scalar->fill_batch(seed_mix(seed, salts::scaled_factor + 2), count, xs.data());
        for (std::size_t r = 0; r < count; ++r)
            for (std::size_t i = 0; i < d; ++i) out[r * d + i] *= xs[r];
    };
    return s;
}

/// Per-coordinate sample means against the unit-mean contract.
struct MeanCheck {
    std::vector<double> mean;
    std::vector<double> se;
    std::size_t samples = 0;

    /// Largest |mean - 1| in standard-error units (infinity if some se is 0
    /// while the mean is off).
    double max_z() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double dev = std::abs(mean[i] - 1.0);
            if (se[i] > 0.0)
                worst = std::max(worst, dev / se[i]);
            else if (dev > 1e-12)
                return std::numeric_limits<double>::infinity();
        }
        return worst;
    }
};

inline MeanCheck sampler_mean_check(const SamplerGenerator& g, std::size_t n,
                                    std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("mean check needs at least 2 samples");
    const auto d = static_cast<std::size_t>(g.dimension);
    std::vector<double> buf = g.sample(seed_mix(seed, salts::mean_probe), n);
    MeanCheck check;
    check.samples = n;
    check.mean.assign(d, 0.0);
    check.se.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = buf[r * d + i];
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / static_cast<double>(n);
        const double var =
            std::max(0.0, (sumsq - static_cast<double>(n) * mean * mean) /
                              static_cast<double>(n - 1));
        check.mean[i] = mean;
        check.se[i] = std::sqrt(var / static_cast<double>(n));
    }
    return check;
}

struct TruncateOptions {
    // Analytic per-coordinate means of min(c, Z_i); estimated when absent.
    std::optional<std::vector<double>> means;
    std::size_t estimate_samples = 100'000;
    std::uint64_t estimate_seed = 0x74e1c2a5u;
    double mean_floor = 1e-6;
};

struct TruncationResult {
    SamplerGenerator sampler;
    std::vector<double> means;  // mu_i = E min(c, Z_i)
    std::vector<double> ses;    // 0 when means were supplied analytically
};

/// Bounded surrogate min(c, Z_i) / mu_i with unit means; its norm converges
/// pointwise to the original norm as c grows. If Z is already bounded by c
/// the truncation is the identity and the draws pass through unchanged.
inline TruncationResult truncate_normalize(const SamplerGenerator& g, double c,
                                           const TruncateOptions& opts = {}) {
    if (!(c > 0.0)) throw std::invalid_argument("truncation level must be positive");
    const auto d = static_cast<std::size_t>(g.dimension);

    if (g.bound && *g.bound <= c) {
        TruncationResult res{g, std::vector<double>(d, 1.0), std::vector<double>(d, 0.0)};
        res.sampler.name = g.name;
        return res;
    }

    std::vector<double> mu, se(d, 0.0);
    if (opts.means) {
        if (opts.means->size() != d)
            throw std::invalid_argument("analytic truncation means have the wrong dimension");
        mu = *opts.means;
    } else {
        if (opts.estimate_samples < 2)
            throw std::invalid_argument("truncation mean estimation needs >= 2 samples");
        const std::size_t n = opts.estimate_samples;
        std::vector<double> buf =
            g.sample(seed_mix(opts.estimate_seed, salts::mean_probe), n);
        mu.assign(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double v = std::min(c, buf[r * d + i]);
                sum += v;
                sumsq += v * v;
            }
            const double mean = sum / static_cast<double>(n);
            const double var =
                std::max(0.0, (sumsq - static_cast<double>(n) * mean * mean) /
                                  static_cast<double>(n - 1));
            mu[i] = mean;
            se[i] = std::sqrt(var / static_cast<double>(n));
        }
    }
    double min_mu = mu.front();
    for (double m : mu) {
        if (m <= opts.mean_floor)
            throw std::invalid_argument("truncated mean below the configured floor");
        min_mu = std::min(min_mu, m);
    }

    SamplerGenerator s;
    s.dimension = g.dimension;
    s.bound = c / min_mu;
    s.name = g.name + "|trunc";
    auto inner = std::make_shared<SamplerGenerator>(g);
    auto means = std::make_shared<std::vector<double>>(mu);
    s.fill = [inner, means, c](std::uint64_t seed, std::size_t count, double* out) {
        inner->fill_batch(seed, count, out);
        const auto dim = static_cast<std::size_t>(inner->dimension);
        for (std::size_t r = 0; r < count; ++r)
            for (std::size_t i = 0; i < dim; ++i) {
                double& v = out[r * dim + i];
                v = std::min(c, v) / (*means)[i];
            }
    };
    return TruncationResult{std::move(s), std::move(mu), std::move(se)};
}

}  // namespace dnorm
