#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "algebra.hpp"
#include "generator.hpp"

namespace dnorm {

/// Ground-truth norm evaluation. Deliberately shares no code with
/// eval_exact; the test suite compares the two.
inline double brute_force_norm(const DiscreteGenerator& g, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(g.dimension))
        throw std::invalid_argument("point dimension does not match the generator");
    double expectation = 0.0;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < g.probs.size(); ++k) {
        double largest = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i, ++offset) {
            const double term = (x[i] < 0.0 ? -x[i] : x[i]) * g.atoms[offset];
            if (term > largest) largest = term;
        }
        expectation += g.probs[k] * largest;
    }
    return expectation;
}

/// Finite-support scalar law on [-c, c]; inputs to the mean-zero lemma
/// machinery below.
struct DiscreteScalarLaw {
    std::vector<double> support;
    std::vector<double> probs;
    double bound = 1.0;
};

inline void validate_law(const DiscreteScalarLaw& law, bool require_zero_mean = true) {
    if (law.support.empty() || law.support.size() != law.probs.size())
        throw std::invalid_argument("law needs matching nonempty support and probabilities");
    if (!(law.bound > 0.0)) throw std::invalid_argument("law bound must be positive");
    double psum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < law.support.size(); ++i) {
        if (std::abs(law.support[i]) > law.bound)
            throw std::invalid_argument("law support exceeds the declared bound");
        if (law.probs[i] < 0.0) throw std::invalid_argument("law probabilities must be >= 0");
        psum += law.probs[i];
        mean += law.probs[i] * law.support[i];
    }
    if (std::abs(psum - 1.0) > kProbSumTol)
        throw std::invalid_argument("law probabilities must sum to one");
    if (require_zero_mean && std::abs(mean) > kProbSumTol)
        throw std::invalid_argument("law must have mean zero");
}

namespace detail {

// Compensated accumulation of a*b terms (fma two-product + Neumaier sum);
// keeps enumeration results correctly rounded.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) noexcept {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }

    void add_product(double a, double b) noexcept {
        const double p = a * b;
        const double err = std::fma(a, b, -p);
        add(p);
        add(err);
    }

    double result() const noexcept { return sum + comp; }
};

}  // namespace detail

/// (E|X+Y|, E|X|) for an independent copy Y, by exact enumeration over the
/// product measure.
inline std::pair<double, double> abs_sum_expectations(const DiscreteScalarLaw& law) {
    validate_law(law);
    detail::CompensatedSum pair_sum;
    for (std::size_t i = 0; i < law.support.size(); ++i)
        for (std::size_t j = 0; j < law.support.size(); ++j)
            pair_sum.add_product(law.probs[i] * law.probs[j],
                                 std::abs(law.support[i] + law.support[j]));
    detail::CompensatedSum single_sum;
    for (std::size_t i = 0; i < law.support.size(); ++i)
        single_sum.add_product(law.probs[i], std::abs(law.support[i]));
    return {pair_sum.result(), single_sum.result()};
}

struct LemmaVerdict {
    double e_abs_sum = 0.0;
    double e_abs = 0.0;
    bool equality = false;           // E|X+Y| == E|X| within tol
    bool two_point_or_zero = false;  // X == 0 or X in {-m, m} with equal mass
    bool consistent() const noexcept { return equality == two_point_or_zero; }
};

/// Checks both sides of the characterization E|X+Y| = E|X| iff X is zero or
/// symmetric two-point. The two tests are computed independently; a
/// disagreement would falsify the characterization and signals a bug.
inline LemmaVerdict lemma_classify(const DiscreteScalarLaw& law, double tol = 1e-12) {
    LemmaVerdict verdict;
    auto [pair_v, single_v] = abs_sum_expectations(law);
    verdict.e_abs_sum = pair_v;
    verdict.e_abs = single_v;
    verdict.equality = std::abs(pair_v - single_v) <= tol;

    // Aggregate the support; laws may list a value twice or carry zero-mass
    // atoms.
    std::map<double, double> mass;
    for (std::size_t i = 0; i < law.support.size(); ++i)
        if (law.probs[i] > 0.0) mass[law.support[i]] += law.probs[i];

    if (mass.size() == 1 && mass.begin()->first == 0.0) {
        verdict.two_point_or_zero = true;
    } else if (mass.size() == 2) {
        const auto lo = mass.begin();
        const auto hi = std::next(lo);
        verdict.two_point_or_zero = lo->first == -hi->first && hi->first > 0.0 &&
                                    std::abs(lo->second - 0.5) <= tol &&
                                    std::abs(hi->second - 0.5) <= tol;
    }
    return verdict;
}

/// max(a, b) = (a+b)/2 + |a-b|/2.
inline bool max_decomposition_check(double a, double b) {
    return std::max(a, b) == (a + b) / 2.0 + std::abs(a - b) / 2.0;
}

struct ScanRow {
    std::size_t index = 0;
    bool idempotent = false;
    enum class Match { none, l1, sup } match = Match::none;
    double deviation = 0.0;  // worst grid deviation from the matched norm
};

struct ScanReport {
    std::vector<ScanRow> rows;
    // Idempotent members matching neither the L1 nor the sup-norm. Any entry
    // contradicts the bivariate characterization and signals a bug.
    std::vector<std::size_t> counterexamples;
};

/// Runs the idempotency test over a family of bivariate generators and
/// matches every idempotent member against the only two admissible norms.
inline ScanReport bivariate_idempotency_scan(const std::vector<DiscreteGenerator>& family,
                                             const std::vector<std::vector<double>>& grid,
                                             double tol) {
    ScanReport report;
    const DiscreteGenerator l1 = permutation_generator(2);
    const DiscreteGenerator sup = constant_generator(2);
    for (std::size_t idx = 0; idx < family.size(); ++idx) {
        const auto& g = family[idx];
        if (g.dimension != 2)
            throw std::invalid_argument("bivariate scan fed a non-bivariate generator");
        ScanRow row;
        row.index = idx;
        const auto idem = is_idempotent(DNorm::exact(g), grid, tol);
        row.idempotent = idem.idempotent;
        if (idem.idempotent) {
            double dev_l1 = 0.0, dev_sup = 0.0;
            for (const auto& x : grid) {
                const double v = eval_exact(g, x);
                dev_l1 = std::max(dev_l1, std::abs(v - eval_exact(l1, x)));
                dev_sup = std::max(dev_sup, std::abs(v - eval_exact(sup, x)));
            }
            if (dev_l1 <= tol) {
                row.match = ScanRow::Match::l1;
                row.deviation = dev_l1;
            } else if (dev_sup <= tol) {
                row.match = ScanRow::Match::sup;
                row.deviation = dev_sup;
            } else {
                row.deviation = std::min(dev_l1, dev_sup);
                report.counterexamples.push_back(idx);
            }
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace dnorm
