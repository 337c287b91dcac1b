#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "generator.hpp"
#include "random.hpp"
#include "sampler.hpp"

namespace dnorm {

/// Evaluation result. Exact evaluations carry standard_error = 0 and
/// sample_count = 0.
struct NormEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t sample_count = 0;
};

/// Monte Carlo evaluation policy: sample size, master seed, and the
/// z-threshold used when estimates are compared.
struct McPolicy {
    std::size_t samples = 100'000;
    std::uint64_t seed = 0;
    double z = 4.0;
};

inline constexpr std::size_t kEvalChunk = 1 << 16;

/// E(max_i |x_i| Z_i) for a finite-support generator.
inline double eval_exact(const DiscreteGenerator& g, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(g.dimension))
        throw std::invalid_argument("point dimension does not match the generator");
    const auto d = x.size();
    double total = 0.0;
    for (std::size_t k = 0; k < g.atom_count(); ++k) {
        const double* z = g.atoms.data() + k * d;
        double m = 0.0;
        for (std::size_t i = 0; i < d; ++i) m = std::max(m, std::abs(x[i]) * z[i]);
        total += g.probs[k] * m;
    }
    return total;
}

namespace detail {

// Streaming mean/variance (Welford), merged chunk by chunk in a fixed order.
struct RunningMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) noexcept {
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }

    double standard_error() const noexcept {
        if (count < 2) return 0.0;
        const double var = m2 / static_cast<double>(count - 1);
        return std::sqrt(std::max(0.0, var) / static_cast<double>(count));
    }
};

}  // namespace detail

/// Monte Carlo estimate of E(max_i |x_i| Z_i). Draws are consumed in fixed
/// chunks with per-chunk sub-seeds, so the estimate depends only on (n, seed)
/// and not on how the work is split.
inline NormEstimate eval_mc(const SamplerGenerator& g, std::span<const double> x, std::size_t n,
                            std::uint64_t seed) {
    if (x.size() != static_cast<std::size_t>(g.dimension))
        throw std::invalid_argument("point dimension does not match the generator");
    if (n < 2) throw std::invalid_argument("Monte Carlo evaluation needs n >= 2");

    const auto d = x.size();
    detail::RunningMoments acc;
    std::vector<double> buf;
    std::uint64_t chunk_index = 0;
    for (std::size_t done = 0; done < n; ++chunk_index) {
        const std::size_t m = std::min(kEvalChunk, n - done);
        buf.resize(m * d);
        g.fill_batch(seed_mix(seed, salts::eval_chunk + chunk_index), m, buf.data());
        for (std::size_t r = 0; r < m; ++r) {
            double v = 0.0;
            for (std::size_t i = 0; i < d; ++i) v = std::max(v, std::abs(x[i]) * buf[r * d + i]);
            acc.add(v);
        }
        done += m;
    }
    return NormEstimate{acc.mean, acc.standard_error(), n};
}

/// A concrete norm handle: a generator (finite-support or sampling) plus the
/// evaluation policy. Exact policy requires a discrete generator.
class DNorm {
public:
    static DNorm exact(DiscreteGenerator g) {
        DNorm n;
        n.discrete_ = std::move(g);
        return n;
    }

    static DNorm monte_carlo(SamplerGenerator g, McPolicy policy = {}) {
        if (policy.samples < 2) throw std::invalid_argument("MC policy needs samples >= 2");
        DNorm n;
        n.sampler_ = std::move(g);
        n.mc_ = policy;
        return n;
    }

    static DNorm monte_carlo(const DiscreteGenerator& g, McPolicy policy = {}) {
        if (policy.samples < 2) throw std::invalid_argument("MC policy needs samples >= 2");
        DNorm n;
        n.discrete_ = g;
        n.sampler_ = discrete_sampler(g);
        n.mc_ = policy;
        return n;
    }

    int dimension() const {
        return discrete_ ? discrete_->dimension : sampler_->dimension;
    }

    bool exact_policy() const noexcept { return !mc_.has_value(); }
    const McPolicy& policy() const { return *mc_; }

    const DiscreteGenerator* discrete() const noexcept {
        return discrete_ ? &*discrete_ : nullptr;
    }

    /// Sampling view; materializes one for discrete generators on demand.
    SamplerGenerator sampler_view() const {
        if (sampler_) return *sampler_;
        return discrete_sampler(*discrete_);
    }

private:
    DNorm() = default;
    std::optional<DiscreteGenerator> discrete_;
    std::optional<SamplerGenerator> sampler_;
    std::optional<McPolicy> mc_;
};

/// Norm evaluation under the handle's policy.
inline NormEstimate norm(const DNorm& D, std::span<const double> x) {
    if (D.exact_policy()) return NormEstimate{eval_exact(*D.discrete(), x), 0.0, 0};
    const auto& pol = D.policy();
    auto view = D.sampler_view();
    return eval_mc(view, x, pol.samples, pol.seed);
}

inline NormEstimate norm(const DNorm& D, const std::vector<double>& x) {
    return norm(D, std::span<const double>(x));
}

/// G(x) = exp(-||x||) on the nonpositive orthant: the distribution function
/// of the associated standard max-stable vector.
inline double sms_cdf(const DNorm& D, std::span<const double> x) {
    for (double v : x)
        if (v > 0.0) throw std::invalid_argument("sms_cdf requires x <= 0 componentwise");
    return std::exp(-norm(D, x).value);
}

/// C(u) = exp(-||log u||) on (0,1]^d; the extreme value copula of the norm.
inline double copula_value(const DNorm& D, std::span<const double> u) {
    std::vector<double> logs(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] > 0.0 && u[i] <= 1.0))
            throw std::invalid_argument("copula argument must lie in (0, 1]^d");
        logs[i] = std::log(u[i]);
    }
    return std::exp(-norm(D, logs).value);
}

/// Stable tail dependence function; equals the norm on the nonnegative
/// orthant.
inline double stdf(const DNorm& D, std::span<const double> x) {
    for (double v : x)
        if (v < 0.0) throw std::invalid_argument("stdf requires x >= 0 componentwise");
    return norm(D, x).value;
}

/// Dependence function on the unit simplex: t has d-1 coordinates, the last
/// one is implied as 1 - sum(t).
inline double pickands(const DNorm& D, std::span<const double> t) {
    if (t.size() + 1 != static_cast<std::size_t>(D.dimension()))
        throw std::invalid_argument("pickands argument must have dimension d - 1");
    double sum = 0.0;
    for (double v : t) {
        if (v < 0.0) throw std::invalid_argument("pickands argument must be nonnegative");
        sum += v;
    }
    if (sum > 1.0 + 1e-12) throw std::invalid_argument("pickands argument exceeds the simplex");
    std::vector<double> x(t.begin(), t.end());
    x.push_back(1.0 - sum);
    return norm(D, x).value;
}

/// Coordinate restriction of a norm: the handle generated by (Z_i)_{i in S}.
inline DNorm project(const DNorm& D, const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("projection onto an empty index set");
    for (int i : indices)
        if (i < 0 || i >= D.dimension())
            throw std::invalid_argument("projection index out of range");

    if (const auto* g = D.discrete()) {
        DiscreteGenerator out;
        out.dimension = static_cast<int>(indices.size());
        out.probs = g->probs;
        out.atoms.reserve(g->atom_count() * indices.size());
        for (std::size_t k = 0; k < g->atom_count(); ++k) {
            const auto z = g->atom(k);
            for (int i : indices) out.atoms.push_back(z[static_cast<std::size_t>(i)]);
        }
        if (D.exact_policy()) return DNorm::exact(std::move(out));
        return DNorm::monte_carlo(out, D.policy());
    }
    return DNorm::monte_carlo(project_sampler(D.sampler_view(), indices), D.policy());
}

/// ||sum_{i in S} e_i||: 1 under complete dependence of S, |S| under
/// independence, and between the two otherwise.
inline NormEstimate extremal_coefficient(const DNorm& D, const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("extremal coefficient of an empty set");
    std::vector<double> x(static_cast<std::size_t>(D.dimension()), 0.0);
    for (int i : indices) {
        if (i < 0 || i >= D.dimension())
            throw std::invalid_argument("extremal coefficient index out of range");
        x[static_cast<std::size_t>(i)] = 1.0;
    }
    return norm(D, x);
}

/// Exponent of a logistic reference norm; infinity is an explicit state, not
/// a float sentinel.
class LogisticExponent {
public:
    static LogisticExponent finite(double lambda) {
        if (!(lambda >= 1.0)) throw std::invalid_argument("logistic exponent must be >= 1");
        return LogisticExponent{false, lambda};
    }
    static LogisticExponent sup() { return LogisticExponent{true, 0.0}; }

    bool is_sup() const noexcept { return is_sup_; }
    double value() const noexcept { return lambda_; }

private:
    LogisticExponent(bool s, double l) : is_sup_(s), lambda_(l) {}
    bool is_sup_;
    double lambda_;
};

/// Closed-form logistic norm (sum |x_i|^lambda)^(1/lambda); reference values
/// only, no generator is attached.
inline double logistic_norm_ref(std::span<const double> x, const LogisticExponent& lambda) {
    double top = 0.0;
    for (double v : x) top = std::max(top, std::abs(v));
    if (lambda.is_sup() || top == 0.0) return top;
    if (lambda.value() == 1.0) {
        double s = 0.0;
        for (double v : x) s += std::abs(v);
        return s;
    }
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v) / top, lambda.value());
    return top * std::pow(s, 1.0 / lambda.value());
}

/// All points of the unit L1 simplex with coordinates in multiples of 1/k.
inline std::vector<std::vector<double>> simplex_grid(int d, int k) {
    if (d < 1 || k < 1) throw std::invalid_argument("simplex grid needs d >= 1 and k >= 1");
    std::vector<std::vector<double>> grid;
    std::vector<int> parts(static_cast<std::size_t>(d), 0);
    auto emit = [&]() {
        std::vector<double> p(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i)
            p[i] = static_cast<double>(parts[i]) / static_cast<double>(k);
        grid.push_back(std::move(p));
    };
    // Lexicographic enumeration of compositions of k into d parts.
    auto rec = [&](auto&& self, std::size_t pos, int rest) -> void {
        if (pos + 1 == parts.size()) {
            parts[pos] = rest;
            emit();
            return;
        }
        for (int a = 0; a <= rest; ++a) {
            parts[pos] = a;
            self(self, pos + 1, rest - a);
        }
    };
    rec(rec, 0, k);
    return grid;
}

/// Comparison grid used across the toolkit: by homogeneity it suffices to
/// compare norms on the simplex. Full 1/8 simplex for d <= 4; unit vectors,
/// pair indicators, and the all-ones point beyond that.
inline std::vector<std::vector<double>> default_grid(int d) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (d <= 4) return simplex_grid(d, 8);
    std::vector<std::vector<double>> grid;
    const auto dd = static_cast<std::size_t>(d);
    for (std::size_t i = 0; i < dd; ++i) {
        std::vector<double> e(dd, 0.0);
        e[i] = 1.0;
        grid.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < dd; ++i)
        for (std::size_t j = i + 1; j < dd; ++j) {
            std::vector<double> p(dd, 0.0);
            p[i] = p[j] = 1.0;
            grid.push_back(std::move(p));
        }
    grid.emplace_back(dd, 1.0);
    return grid;
}

}  // namespace dnorm
