#include <catch2/catch_amalgamated.hpp>

#include "dnorm/oracles.hpp"
#include "support/corpus.hpp"

using namespace dnorm;

namespace {

DiscreteScalarLaw two_point(double m) {
    return DiscreteScalarLaw{{-m, m}, {0.5, 0.5}, std::max(1.0, m)};
}

DiscreteScalarLaw uniform_three() {
    return DiscreteScalarLaw{{-1.0, 0.0, 1.0}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1.0};
}

}  // namespace

TEST_CASE("brute-force norm mirrors the evaluator contract") {
    const std::vector<double> x{1, -2, 3};
    CHECK(brute_force_norm(constant_generator(3), x) == 3.0);
    const std::vector<double> ones{1, 1};
    CHECK(brute_force_norm(permutation_generator(2), ones) == 2.0);
    CHECK_THROWS_AS(brute_force_norm(constant_generator(3), ones), std::invalid_argument);
}

TEST_CASE("absolute-sum expectations of the symmetric two-point family") {
    for (double m : {0.5, 0.7, 0.0625, 1.0}) {
        const auto [pair_v, single_v] = abs_sum_expectations(two_point(m));
        CHECK(pair_v == m);
        CHECK(single_v == m);
    }
}

TEST_CASE("absolute-sum expectations of the uniform three-point law are exact") {
    const auto [pair_v, single_v] = abs_sum_expectations(uniform_three());
    CHECK(pair_v == 8.0 / 9.0);
    CHECK(single_v == 2.0 / 3.0);
}

TEST_CASE("degenerate law at zero") {
    const DiscreteScalarLaw zero{{0.0}, {1.0}, 1.0};
    const auto [pair_v, single_v] = abs_sum_expectations(zero);
    CHECK(pair_v == 0.0);
    CHECK(single_v == 0.0);
    const auto verdict = lemma_classify(zero);
    CHECK(verdict.equality);
    CHECK(verdict.two_point_or_zero);
    CHECK(verdict.consistent());
}

TEST_CASE("law validation") {
    CHECK_THROWS_AS(validate_law(DiscreteScalarLaw{{0.5}, {1.0}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_law(DiscreteScalarLaw{{-2.0, 2.0}, {0.5, 0.5}, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_law(DiscreteScalarLaw{{-1.0, 1.0}, {0.6, 0.6}, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(abs_sum_expectations(DiscreteScalarLaw{{1.0}, {1.0}, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("both lemma directions hold on the given examples") {
    for (double m : {0.125, 0.5, 0.9375}) {
        const auto verdict = lemma_classify(two_point(m));
        CHECK(verdict.equality);
        CHECK(verdict.two_point_or_zero);
    }
    const auto verdict = lemma_classify(uniform_three());
    CHECK_FALSE(verdict.equality);
    CHECK_FALSE(verdict.two_point_or_zero);
    CHECK(verdict.consistent());

    // Duplicate support entries and zero-mass atoms do not fool the
    // structural test.
    const DiscreteScalarLaw split{{-0.5, 0.5, 0.5, 0.25}, {0.5, 0.25, 0.25, 0.0}, 1.0};
    const auto split_verdict = lemma_classify(split);
    CHECK(split_verdict.equality);
    CHECK(split_verdict.two_point_or_zero);
}

TEST_CASE("no disagreement between the two lemma tests over the random corpus") {
    Xoshiro256 rng(corpus::kCorpusSeed + 30);
    int two_point_hits = 0;
    for (int rep = 0; rep < 2000; ++rep) {
        const auto law = corpus::random_zero_mean_law(rng, 6);
        const auto verdict = lemma_classify(law);
        INFO("rep " << rep);
        REQUIRE(verdict.consistent());
        if (verdict.two_point_or_zero) ++two_point_hits;
    }
    // The corpus occasionally produces symmetric two-point laws; both
    // branches of the equivalence get exercised.
    CHECK(two_point_hits > 0);
}

TEST_CASE("max decomposition identity") {
    CHECK(max_decomposition_check(2.0, 2.0));
    CHECK(max_decomposition_check(3.0, -1.0));
    CHECK(std::max(3.0, -1.0) == 1.0 + 2.0);
    Xoshiro256 rng(corpus::kCorpusSeed + 31);
    for (int rep = 0; rep < 100'000; ++rep) {
        const double a = (static_cast<double>(rng() % 2049) - 1024.0) / 16.0;
        const double b = (static_cast<double>(rng() % 2049) - 1024.0) / 16.0;
        REQUIRE(max_decomposition_check(a, b));
    }
}

TEST_CASE("product moments of the constant-sum two-point family") {
    // Z = (1 + X, 1 - X) with X symmetric two-point: the squared norm at the
    // diagonal is 1 + E|X+Y|, the base norm 1 + E|X|.
    for (double m : {0.5, 0.25}) {
        DiscreteGenerator g;
        g.dimension = 2;
        g.atoms = {1.0 + m, 1.0 - m, 1.0 - m, 1.0 + m};
        g.probs = {0.5, 0.5};
        REQUIRE(validate_generator(g).ok());

        const auto law = two_point(m);
        const auto [pair_v, single_v] = abs_sum_expectations(law);
        const std::vector<double> ones{1, 1};

        const auto squared = product_generator(g, g, ProductOptions{.algebraic_shortcuts = false});
        CHECK(eval_exact(squared, ones) == 1.0 + pair_v);
        CHECK(eval_exact(g, ones) == 1.0 + single_v);
    }
}

TEST_CASE("bivariate idempotency scan") {
    const auto grid = default_grid(2);

    SECTION("the two extremes are recognized") {
        const std::vector<DiscreteGenerator> family{constant_generator(2),
                                                    permutation_generator(2)};
        const auto report = bivariate_idempotency_scan(family, grid, 1e-9);
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].idempotent);
        CHECK(report.rows[0].match == ScanRow::Match::sup);
        CHECK(report.rows[1].idempotent);
        CHECK(report.rows[1].match == ScanRow::Match::l1);
        CHECK(report.counterexamples.empty());
    }

    SECTION("random bivariate generators produce no counterexample") {
        Xoshiro256 rng(corpus::kCorpusSeed + 32);
        std::vector<DiscreteGenerator> family;
        for (int rep = 0; rep < 50; ++rep)
            family.push_back(corpus::random_generator(rng, 2, 6));
        const auto report = bivariate_idempotency_scan(family, grid, 1e-9);
        CHECK(report.counterexamples.empty());
    }

    SECTION("the constant-sum two-point member is not idempotent") {
        DiscreteGenerator g;
        g.dimension = 2;
        g.atoms = {1.5, 0.5, 0.5, 1.5};
        g.probs = {0.5, 0.5};
        const auto report = bivariate_idempotency_scan({g}, grid, 1e-9);
        CHECK_FALSE(report.rows.front().idempotent);
    }

    SECTION("dimension is enforced") {
        CHECK_THROWS_AS(bivariate_idempotency_scan({constant_generator(3)}, grid, 1e-9),
                        std::invalid_argument);
    }
}
