#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tpi/errors.hpp"
#include "tpi/market.hpp"
#include "tpi/market_model.hpp"

using namespace tpi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("rho uses left-endpoint quadrature", "[market_model]") {
    const double ln2 = std::log(2.0);
    SECTION("zero resilience") {
        TimeGrid g({0.0, 0.3, 1.0});
        const auto rho = build_rho(g, std::vector<double>{0, 0, 0});
        for (double x : rho) CHECK(x == 1.0);
    }
    SECTION("one step") {
        const auto rho = build_rho(TimeGrid({0.0, 1.0}), std::vector<double>{ln2, ln2});
        CHECK(rho[0] == 1.0);
        CHECK_THAT(rho[1], WithinAbs(2.0, 1e-14));
    }
    SECTION("two half steps") {
        const auto rho = build_rho(TimeGrid({0.0, 0.5, 1.0}), std::vector<double>{ln2, ln2, ln2});
        CHECK_THAT(rho[1], WithinAbs(std::sqrt(2.0), 1e-14));
        CHECK_THAT(rho[2], WithinAbs(2.0, 1e-14));
    }
    SECTION("only left endpoints matter") {
        const auto rho = build_rho(TimeGrid({0.0, 1.0}), std::vector<double>{ln2, 5.0});
        CHECK_THAT(rho[1], WithinAbs(2.0, 1e-14));
    }
    SECTION("negative resilience rejected") {
        CHECK_THROWS_AS(build_rho(TimeGrid({0.0, 1.0}), std::vector<double>{-0.1, 0.0}), ValidationError);
        CHECK_THROWS_AS(build_rho(TimeGrid({0.0, 1.0}), std::vector<double>{0.1}), GridMismatch);
    }
}

TEST_CASE("kappa is depth over rho squared", "[market_model]") {
    CHECK(build_kappa(std::vector<double>{10, 10}, std::vector<double>{1, 1}) == std::vector<double>{10, 10});
    const auto k = build_kappa(std::vector<double>{10, 10}, std::vector<double>{1, 2});
    CHECK_THAT(k[1], WithinAbs(2.5, 1e-15));
    CHECK(build_kappa(std::vector<double>{10, 5}, std::vector<double>{1, 1}) == std::vector<double>{10, 5});
    CHECK_THROWS_AS(build_kappa(std::vector<double>{10, 0}, std::vector<double>{1, 1}), ValidationError);
}

TEST_CASE("mu splits kappa into interval weights and an atom", "[market_model]") {
    auto mu = build_mu(std::vector<double>{10, 2.5});
    REQUIRE(mu.interior.size() == 1);
    CHECK(mu.interior[0] == 7.5);
    CHECK(mu.atom == 2.5);
    CHECK(mu.total_mass() == 10.0);

    mu = build_mu(std::vector<double>{10, 5, 2.5});
    CHECK(mu.interior == std::vector<double>{5, 2.5});
    CHECK(mu.atom == 2.5);
    CHECK(mu.total_mass() == 10.0);

    CHECK_THROWS_AS(build_mu(std::vector<double>{10, 10}), MonotonicityViolation);
    CHECK_THROWS_AS(build_mu(std::vector<double>{10, 11}), MonotonicityViolation);
}

TEST_CASE("assumption validation reports failing clauses", "[market_model]") {
    const TimeGrid g = TimeGrid::uniform(1.0, 4);
    SECTION("positive constants pass") {
        const auto rep = validate_assumptions(g, LiquiditySpec::constant(g, 10.0, 1.0));
        CHECK(rep.ok);
        CHECK(rep.violations.empty());
        CHECK_THAT(rep.max_delta_over_rho, WithinAbs(10.0, 1e-12));
        CHECK_THAT(rep.min_delta_over_rho, WithinRel(10.0 * std::exp(-1.0), 1e-12));
    }
    SECTION("flat kappa fails") {
        const auto rep = validate_assumptions(g, LiquiditySpec::constant(g, 10.0, 0.0));
        CHECK_FALSE(rep.ok);
        REQUIRE_FALSE(rep.violations.empty());
        CHECK(rep.violations.front().clause == "kappa_decreasing");
    }
    SECTION("doubling depth without resilience fails") {
        LiquiditySpec l{{1, 2, 4, 8, 16}, {0, 0, 0, 0, 0}};
        const auto rep = validate_assumptions(g, l);
        CHECK_FALSE(rep.ok);
    }
    SECTION("bad inputs are reported, not thrown") {
        LiquiditySpec l{{10, -1, 10, 10, 10}, {1, 1, -1, 1, 1}};
        AssumptionReport rep;
        REQUIRE_NOTHROW(rep = validate_assumptions(g, l));
        CHECK_FALSE(rep.ok);
        bool saw_delta = false, saw_r = false;
        for (const auto& v : rep.violations) {
            saw_delta |= v.clause == "delta_positive";
            saw_r |= v.clause == "r_nonnegative";
        }
        CHECK(saw_delta);
        CHECK(saw_r);
    }
}

TEST_CASE("grid validation", "[market_model]") {
    CHECK_THROWS_AS(TimeGrid({0.0}), ValidationError);
    CHECK_THROWS_AS(TimeGrid({0.5, 1.0}), ValidationError);
    CHECK_THROWS_AS(TimeGrid({0.0, 1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0), ValidationError);
    CHECK(TimeGrid::uniform(2.0, 4).step(3) == 0.5);
}

TEST_CASE("mu mass equals initial depth on random markets", "[market_model][property]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        testing::TreeShape shape;
        shape.steps = 1 + trial % 4;
        shape.branches = 1 + trial % 3;
        shape.zero_resilience = trial % 5 == 0;
        const Market m(testing::random_tree(rng, shape), ImpactParams{});
        for (std::size_t leaf : m.tree().leaves()) {
            double mass = m.atom(leaf);
            for (std::size_t id : m.tree().path_to(leaf)) mass += m.interval_weight(id);
            REQUIRE_THAT(mass, WithinRel(m.delta0(), 1e-12));
        }
    }
}

TEST_CASE("mu weights aggregate under grid refinement", "[market_model][property]") {
    // piecewise-constant depth and resilience on a coarse grid, split into halves
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3;
        std::vector<double> coarse_t{0}, fine_t{0};
        std::vector<double> r_coarse, r_fine;
        for (std::size_t i = 0; i < n; ++i) {
            const double dt = u(rng);
            coarse_t.push_back(coarse_t.back() + dt);
            fine_t.push_back(fine_t.back() + dt / 2);
            fine_t.push_back(fine_t.back() + dt / 2);
            const double r = u(rng);
            r_coarse.push_back(r);
            r_fine.push_back(r);
            r_fine.push_back(r);
        }
        r_coarse.push_back(0.5);
        r_fine.push_back(0.5);
        const auto rho_c = build_rho(TimeGrid(coarse_t), r_coarse);
        const auto rho_f = build_rho(TimeGrid(fine_t), r_fine);
        const auto mu_c = build_mu(build_kappa(std::vector<double>(n + 1, 10.0), rho_c));
        const auto mu_f = build_mu(build_kappa(std::vector<double>(2 * n + 1, 10.0), rho_f));
        for (std::size_t i = 0; i < n; ++i)
            CHECK_THAT(mu_f.interior[2 * i] + mu_f.interior[2 * i + 1], WithinRel(mu_c.interior[i], 1e-12));
        CHECK_THAT(mu_f.atom, WithinRel(mu_c.atom, 1e-12));
    }
}

TEST_CASE("rho never decreases and kappa strictness matches validation", "[market_model][property]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const TimeGrid g = testing::random_grid(rng, 1 + trial % 6);
        LiquiditySpec l;
        for (std::size_t i = 0; i < g.size(); ++i) {
            l.delta.push_back(1.0 + 10.0 * u(rng));
            l.r.push_back(trial % 3 == 0 ? 0.0 : u(rng));
        }
        const auto rho = build_rho(g, l.r);
        for (std::size_t i = 1; i < rho.size(); ++i) REQUIRE(rho[i] >= rho[i - 1]);
        const auto kappa = build_kappa(l.delta, rho);
        bool strict = true;
        for (std::size_t i = 1; i < kappa.size(); ++i) strict &= strictly_decreasing(kappa[i - 1], kappa[i]);
        REQUIRE(validate_assumptions(g, l).ok == strict);
    }
}

TEST_CASE("market assembly honours the assumption mode", "[market]") {
    const TimeGrid g({0.0, 1.0});
    const auto flat = ScenarioTree::chain(g, std::vector<double>{100, 100}, LiquiditySpec::constant(g, 10, 0));
    CHECK_THROWS_AS(Market(flat, ImpactParams{}), MonotonicityViolation);
    const Market relaxed(flat, ImpactParams{}, AssumptionCheck::relaxed);
    CHECK(relaxed.interval_weight(1) == 0.0);
    CHECK(relaxed.atom(1) == 10.0);

    const auto rising = ScenarioTree::chain(g, std::vector<double>{100, 100}, LiquiditySpec{{10, 20}, {0, 0}});
    CHECK_THROWS_AS(Market(rising, ImpactParams{}, AssumptionCheck::relaxed), MonotonicityViolation);

    const auto good = ScenarioTree::chain(g, std::vector<double>{100, 100}, LiquiditySpec::constant(g, 10, std::log(2.0)));
    const Market m(good, ImpactParams{1.0, 0.2, 2.0, 3.0});
    CHECK_THAT(m.kappa(1), WithinAbs(2.5, 1e-14));
    CHECK_THAT(m.interval_weight(1), WithinAbs(7.5, 1e-14));
    CHECK_THAT(m.impact_ratio(1), WithinAbs(0.2, 1e-14));
    CHECK_THAT(m.v0(), WithinAbs(3.0 + 0.5 * (1.0 * 4.0 + 10.0 * 0.04), 1e-14));
    CHECK(m.deterministic_liquidity().has_value());
    CHECK_THROWS_AS(Market(good, ImpactParams{-1.0, 0, 0, 0}), ValidationError);
}
