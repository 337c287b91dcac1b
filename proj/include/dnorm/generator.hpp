#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnorm {

inline constexpr double kProbSumTol = 1e-12;    // |sum(probs) - 1|
inline constexpr double kUnitMeanTol = 1e-9;    // per-coordinate |E(Z_i) - 1|
inline constexpr double kAtomMergeTol = 1e-12;  // componentwise atom identity
inline constexpr double kProbFloor = 1e-15;     // merged atoms below this mass are dropped
inline constexpr std::size_t kAtomCap = 1'000'000;

/// Finite-support law of a nonnegative random vector with unit componentwise
/// means. Atoms are stored row-major (atom_count x dimension). Instances are
/// immutable after construction and safe to share across threads.
struct DiscreteGenerator {
    int dimension = 0;
    std::vector<double> atoms;
    std::vector<double> probs;

    std::size_t atom_count() const noexcept { return probs.size(); }

    std::span<const double> atom(std::size_t k) const noexcept {
        const auto d = static_cast<std::size_t>(dimension);
        return {atoms.data() + k * d, d};
    }

    bool operator==(const DiscreteGenerator&) const = default;
};

struct ValidationIssue {
    enum class Kind {
        empty_support,
        atom_shape,
        nonfinite_value,
        negative_atom,
        negative_prob,
        prob_sum,
        coordinate_mean,
    };
    Kind kind;
    std::size_t atom = 0;  // offending atom index, where applicable
    int coordinate = -1;   // offending coordinate (0-based), where applicable
    double residual = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const noexcept { return issues.empty(); }

    std::string to_string() const {
        std::ostringstream os;
        for (const auto& i : issues) os << i.message << '\n';
        return os.str();
    }
};

/// Checks the generator contract: nonnegative atoms, probabilities summing to
/// one, unit componentwise means. Always returns a report; empty iff valid.
inline ValidationReport validate_generator(const DiscreteGenerator& g) {
    ValidationReport report;
    auto add = [&](ValidationIssue issue) { report.issues.push_back(std::move(issue)); };

    if (g.dimension < 1) {
        add({ValidationIssue::Kind::empty_support, 0, -1, 0.0, "dimension must be >= 1"});
        return report;
    }
    if (g.probs.empty()) {
        add({ValidationIssue::Kind::empty_support, 0, -1, 0.0, "generator has no atoms"});
        return report;
    }
    const auto d = static_cast<std::size_t>(g.dimension);
    if (g.atoms.size() != g.probs.size() * d) {
        std::ostringstream os;
        os << "atom storage holds " << g.atoms.size() << " values, expected "
           << g.probs.size() * d;
        add({ValidationIssue::Kind::atom_shape, 0, -1, 0.0, os.str()});
        return report;
    }

    for (std::size_t k = 0; k < g.probs.size(); ++k) {
        if (!std::isfinite(g.probs[k]) || g.probs[k] < 0.0) {
            std::ostringstream os;
            os << "probability of atom " << k << " is " << g.probs[k];
            add({ValidationIssue::Kind::negative_prob, k, -1, g.probs[k], os.str()});
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double v = g.atoms[k * d + i];
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "atom " << k << " coordinate " << i + 1 << " is not finite";
                add({ValidationIssue::Kind::nonfinite_value, k, static_cast<int>(i), v,
                     os.str()});
            } else if (v < 0.0) {
                std::ostringstream os;
                os << "atom " << k << " coordinate " << i + 1 << " is negative (" << v << ")";
                add({ValidationIssue::Kind::negative_atom, k, static_cast<int>(i), v, os.str()});
            }
        }
    }

    double psum = 0.0;
    for (double p : g.probs) psum += p;
    if (std::abs(psum - 1.0) > kProbSumTol) {
        std::ostringstream os;
        os << "probabilities sum to " << psum << ", residual " << psum - 1.0;
        add({ValidationIssue::Kind::prob_sum, 0, -1, psum - 1.0, os.str()});
    }

    for (std::size_t i = 0; i < d; ++i) {
        double mean = 0.0;
        for (std::size_t k = 0; k < g.probs.size(); ++k) mean += g.probs[k] * g.atoms[k * d + i];
        if (std::abs(mean - 1.0) > kUnitMeanTol) {
            std::ostringstream os;
            os << "mean of coordinate " << i + 1 << " is " << mean << ", residual "
               << mean - 1.0;
            add({ValidationIssue::Kind::coordinate_mean, 0, static_cast<int>(i), mean - 1.0,
                 os.str()});
        }
    }
    return report;
}

/// Validates and returns the generator; throws std::invalid_argument with the
/// full report text otherwise.
inline DiscreteGenerator checked(DiscreteGenerator g) {
    auto report = validate_generator(g);
    if (!report.ok()) throw std::invalid_argument("invalid generator:\n" + report.to_string());
    return g;
}

/// Z identically (1,...,1); the norm it generates is the sup-norm, complete
/// dependence.
inline DiscreteGenerator constant_generator(int d) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    DiscreteGenerator g;
    g.dimension = d;
    g.atoms.assign(static_cast<std::size_t>(d), 1.0);
    g.probs.assign(1, 1.0);
    return g;
}

/// Random permutation of (d, 0, ..., 0) with equal probabilities; generates
/// the L1 norm, complete independence.
inline DiscreteGenerator permutation_generator(int d) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    DiscreteGenerator g;
    g.dimension = d;
    const auto dd = static_cast<std::size_t>(d);
    g.atoms.assign(dd * dd, 0.0);
    g.probs.assign(dd, 1.0 / static_cast<double>(d));
    for (std::size_t k = 0; k < dd; ++k) g.atoms[k * dd + k] = static_cast<double>(d);
    return g;
}

/// Disjoint blocks of coordinates treated as completely dependent. Blocks are
/// 0-based, internally sorted, pairwise disjoint, each of size >= 2. An empty
/// block list is the empty frame.
struct PartitionFrame {
    int dimension = 0;
    std::vector<std::vector<int>> blocks;

    bool operator==(const PartitionFrame&) const = default;
};

/// Canonicalizes (sorts) and validates a frame; throws on overlapping blocks,
/// blocks of size < 2, or out-of-range coordinates.
inline PartitionFrame make_frame(int dimension, std::vector<std::vector<int>> blocks) {
    if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
    std::vector<bool> used(static_cast<std::size_t>(dimension), false);
    for (auto& block : blocks) {
        if (block.size() < 2) throw std::invalid_argument("frame blocks need >= 2 coordinates");
        std::sort(block.begin(), block.end());
        for (int i : block) {
            if (i < 0 || i >= dimension) throw std::invalid_argument("frame coordinate out of range");
            if (used[static_cast<std::size_t>(i)])
                throw std::invalid_argument("frame blocks must be pairwise disjoint");
            used[static_cast<std::size_t>(i)] = true;
        }
    }
    std::sort(blocks.begin(), blocks.end());
    return PartitionFrame{dimension, std::move(blocks)};
}

/// Generator of the frame norm sum_k max_{i in A_k} |x_i| + sum_rest |x_i|:
/// one atom per block (value m on the block) and one per uncovered
/// coordinate, each with probability 1/m, where m = K + #uncovered.
inline DiscreteGenerator partition_generator(const PartitionFrame& frame) {
    const auto canonical = make_frame(frame.dimension, frame.blocks);
    const auto d = static_cast<std::size_t>(canonical.dimension);
    std::vector<bool> covered(d, false);
    for (const auto& block : canonical.blocks)
        for (int i : block) covered[static_cast<std::size_t>(i)] = true;

    std::size_t singletons = 0;
    for (bool c : covered)
        if (!c) ++singletons;
    const std::size_t m = canonical.blocks.size() + singletons;

    DiscreteGenerator g;
    g.dimension = canonical.dimension;
    g.atoms.assign(m * d, 0.0);
    g.probs.assign(m, 1.0 / static_cast<double>(m));
    std::size_t row = 0;
    for (const auto& block : canonical.blocks) {
        for (int i : block) g.atoms[row * d + static_cast<std::size_t>(i)] = static_cast<double>(m);
        ++row;
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (!covered[i]) {
            g.atoms[row * d + i] = static_cast<double>(m);
            ++row;
        }
    }
    return g;
}

/// True when every atom is a constant vector (lambda_k, ..., lambda_k); such
/// a generator represents the sup-norm.
inline bool is_sup_structured(const DiscreteGenerator& g) {
    const auto d = static_cast<std::size_t>(g.dimension);
    for (std::size_t k = 0; k < g.atom_count(); ++k) {
        const auto z = g.atom(k);
        for (std::size_t i = 1; i < d; ++i)
            if (z[i] != z[0]) return false;
    }
    return !g.probs.empty();
}

/// True when every atom has at most one nonzero entry; with unit means such
/// a generator represents the L1 norm.
inline bool is_l1_structured(const DiscreteGenerator& g) {
    for (std::size_t k = 0; k < g.atom_count(); ++k) {
        int nonzero = 0;
        for (double v : g.atom(k))
            if (v != 0.0) ++nonzero;
        if (nonzero > 1) return false;
    }
    return !g.probs.empty();
}

/// True when atoms are constant on pairwise disjoint supports. A valid
/// generator of this shape realizes a frame norm and is idempotent under the
/// product.
inline bool is_frame_structured(const DiscreteGenerator& g) {
    const auto d = static_cast<std::size_t>(g.dimension);
    std::vector<bool> used(d, false);
    for (std::size_t k = 0; k < g.atom_count(); ++k) {
        const auto z = g.atom(k);
        double value = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (z[i] == 0.0) continue;
            if (value == 0.0)
                value = z[i];
            else if (z[i] != value)
                return false;
            if (used[i]) return false;
            used[i] = true;
        }
    }
    return !g.probs.empty();
}

/// Merges componentwise-identical atoms (within tol), dropping merged atoms
/// whose mass falls below prob_floor. Atoms come out lexicographically
/// sorted. Controls support growth under iterated products.
inline DiscreteGenerator dedup_atoms(const DiscreteGenerator& g, double tol = kAtomMergeTol,
                                     double prob_floor = kProbFloor) {
    const auto d = static_cast<std::size_t>(g.dimension);
    const std::size_t n = g.atom_count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(g.atoms.begin() + a * d, g.atoms.begin() + (a + 1) * d,
                                            g.atoms.begin() + b * d, g.atoms.begin() + (b + 1) * d);
    });

    DiscreteGenerator out;
    out.dimension = g.dimension;
    auto close = [&](std::size_t a, std::size_t b) {
        for (std::size_t i = 0; i < d; ++i)
            if (std::abs(g.atoms[a * d + i] - g.atoms[b * d + i]) > tol) return false;
        return true;
    };
    std::size_t pos = 0;
    while (pos < n) {
        const std::size_t rep = order[pos];
        double mass = g.probs[rep];
        std::size_t next = pos + 1;
        while (next < n && close(order[next - 1], order[next])) {
            mass += g.probs[order[next]];
            ++next;
        }
        if (mass >= prob_floor) {
            out.atoms.insert(out.atoms.end(), g.atoms.begin() + rep * d,
                             g.atoms.begin() + (rep + 1) * d);
            out.probs.push_back(mass);
        }
        pos = next;
    }
    if (out.probs.empty()) throw std::runtime_error("atom dedup removed all mass");
    return out;
}

struct ProductOptions {
    bool algebraic_shortcuts = true;
    double merge_tol = kAtomMergeTol;
    double prob_floor = kProbFloor;
    std::size_t atom_cap = kAtomCap;
};

/// Product measure of independent generators: atoms z_k * z_l componentwise
/// with probabilities p_k * q_l, deduplicated. The norm it generates does not
/// depend on the representatives chosen, which justifies the shortcuts for
/// sup-structured factors (identity element), L1-structured factors
/// (absorber), and an equal frame-structured pair (idempotent fixed point).
inline DiscreteGenerator product_generator(const DiscreteGenerator& a, const DiscreteGenerator& b,
                                           const ProductOptions& opts = {}) {
    if (a.dimension != b.dimension)
        throw std::invalid_argument("product of generators with different dimensions");

    if (opts.algebraic_shortcuts) {
        if (is_l1_structured(b)) return b;
        if (is_l1_structured(a)) return a;
        if (is_sup_structured(b)) return a;
        if (is_sup_structured(a)) return b;
        if (a == b && is_frame_structured(a)) return a;
    }

    const auto d = static_cast<std::size_t>(a.dimension);
    const std::size_t ka = a.atom_count();
    const std::size_t kb = b.atom_count();
    if (ka > opts.atom_cap / kb)
        throw std::runtime_error(
            "product support exceeds the atom cap; evaluate this norm in Monte Carlo mode");

    DiscreteGenerator out;
    out.dimension = a.dimension;
    out.atoms.resize(ka * kb * d);
    out.probs.resize(ka * kb);
    std::size_t row = 0;
    for (std::size_t k = 0; k < ka; ++k) {
        for (std::size_t l = 0; l < kb; ++l, ++row) {
            out.probs[row] = a.probs[k] * b.probs[l];
            for (std::size_t i = 0; i < d; ++i)
                out.atoms[row * d + i] = a.atoms[k * d + i] * b.atoms[l * d + i];
        }
    }
    return dedup_atoms(out, opts.merge_tol, opts.prob_floor);
}

/// Convex mixture of two generator laws; stays in the generator set by
/// linearity of the mean. w = 1 and w = 0 return the inputs unchanged.
inline DiscreteGenerator mixture_generator(const DiscreteGenerator& a, const DiscreteGenerator& b,
                                           double w) {
    if (a.dimension != b.dimension)
        throw std::invalid_argument("mixture of generators with different dimensions");
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("mixture weight must be in [0, 1]");
    if (w == 1.0) return a;
    if (w == 0.0) return b;

    DiscreteGenerator out;
    out.dimension = a.dimension;
    out.atoms = a.atoms;
    out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
    out.probs.reserve(a.probs.size() + b.probs.size());
    for (double p : a.probs) out.probs.push_back(w * p);
    for (double p : b.probs) out.probs.push_back((1.0 - w) * p);
    return dedup_atoms(out);
}

/// Equivalent generator satisfying sum_i Z_i = d on every atom: atoms are
/// rescaled to L1 mass d and probabilities reweighted by mass/d; all-zero
/// atoms carry no reweighted mass and are dropped. The represented norm is
/// unchanged. Atoms already of mass d are passed through untouched.
inline DiscreteGenerator angular_normalize(const DiscreteGenerator& g) {
    const auto d = static_cast<std::size_t>(g.dimension);
    const double dim = static_cast<double>(g.dimension);
    DiscreteGenerator out;
    out.dimension = g.dimension;
    for (std::size_t k = 0; k < g.atom_count(); ++k) {
        const auto z = g.atom(k);
        double mass = 0.0;
        for (double v : z) mass += v;
        if (mass == 0.0) continue;
        if (mass == dim) {
            out.atoms.insert(out.atoms.end(), z.begin(), z.end());
            out.probs.push_back(g.probs[k]);
            continue;
        }
        for (double v : z) out.atoms.push_back(dim * v / mass);
        out.probs.push_back(g.probs[k] * mass / dim);
    }
    if (out.probs.empty()) throw std::invalid_argument("generator concentrated on the zero atom");
    return out;
}

}  // namespace dnorm
