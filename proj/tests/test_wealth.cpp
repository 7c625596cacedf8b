#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tpi/errors.hpp"
#include "tpi/solver.hpp"
#include "tpi/wealth.hpp"

using namespace tpi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Market round_trip_market(double r, double iota = 0.0, double zeta0 = 0.0) {
    const TimeGrid g({0.0, 1.0});
    const auto tree = ScenarioTree::chain(g, std::vector<double>{100, 100}, LiquiditySpec::constant(g, 10, r));
    return Market(tree, ImpactParams{iota, zeta0, 0.0, 0.0}, AssumptionCheck::relaxed);
}

const TradeSchedule kRoundTrip{{1, 0}, {0, 1}, 0.0};

} // namespace

TEST_CASE("spread state for round trips", "[wealth]") {
    SECTION("no trades") {
        const auto m = round_trip_market(std::log(2.0), 0.0, 0.2);
        const auto st = eta_path(m, TradeSchedule::zero(m.tree(), 0.0));
        CHECK(st.eta == std::vector<double>{0.2, 0.2});
        CHECK_THAT(st.zeta[1], WithinAbs(0.1, 1e-15));
    }
    SECTION("zero resilience") {
        const auto st = eta_path(round_trip_market(0.0), kRoundTrip);
        CHECK_THAT(st.eta[0], WithinAbs(0.1, 1e-15));
        CHECK_THAT(st.eta[1], WithinAbs(0.2, 1e-15));
    }
    SECTION("resilience ln 2") {
        const auto st = eta_path(round_trip_market(std::log(2.0)), kRoundTrip);
        CHECK_THAT(st.eta[0], WithinAbs(0.1, 1e-15));
        CHECK_THAT(st.eta[1], WithinAbs(0.3, 1e-14));
        // pre-trade half-spread has decayed by half
        CHECK_THAT(st.zeta_pre[1], WithinAbs(0.05, 1e-15));
        CHECK_THAT(st.zeta[1], WithinAbs(0.15, 1e-14));
    }
}

TEST_CASE("terminal cash by the midpoint rule", "[wealth]") {
    CHECK_THAT(terminal_cash_direct(round_trip_market(0.0), kRoundTrip)[0], WithinAbs(-0.2, 1e-12));
    CHECK_THAT(terminal_cash_direct(round_trip_market(std::log(2.0)), kRoundTrip)[0], WithinAbs(-0.15, 1e-12));
    CHECK_THAT(terminal_cash_direct(round_trip_market(0.0, 2.0), kRoundTrip)[0], WithinAbs(-0.2, 1e-12));
}

TEST_CASE("lambda decomposition", "[wealth]") {
    SECTION("no trades") {
        const auto m = round_trip_market(std::log(2.0), 0.0, 0.3);
        const auto b = lambda_functional(m, TradeSchedule::zero(m.tree(), 0.0));
        CHECK_THAT(b.lambda_T[0], WithinAbs(0.5 * 0.09 * 10, 1e-13));
        CHECK_THAT(b.xi_T[0], WithinAbs(0.0, 1e-13));
    }
    SECTION("flat kappa round trip") {
        const auto b = lambda_functional(round_trip_market(0.0), kRoundTrip);
        CHECK_THAT(b.lambda_T[0], WithinAbs(0.2, 1e-13));
        CHECK_THAT(b.eta_penalty[0], WithinAbs(0.2, 1e-13));
        CHECK_THAT(b.p_integral[0], WithinAbs(0.0, 1e-13));
    }
    SECTION("resilient round trip matches (1 + e^-rT) / delta") {
        const auto b = lambda_functional(round_trip_market(std::log(2.0)), kRoundTrip);
        CHECK_THAT(b.lambda_T[0], WithinAbs(0.15, 1e-13));
        CHECK_THAT(b.xi_T[0], WithinAbs(-0.15, 1e-13));
        CHECK(b.liquidated[0]);
    }
    SECTION("eta one on unit spread integrates to half the depth") {
        const auto m = round_trip_market(std::log(2.0), 0.0, 1.0);
        CHECK_THAT(lambda_functional(m, TradeSchedule::zero(m.tree(), 0.0)).eta_penalty[0], WithinAbs(5.0, 1e-13));
    }
}

TEST_CASE("consistency check", "[wealth]") {
    CHECK(consistency_check(round_trip_market(0.0), kRoundTrip) <= 1e-10);
    CHECK(consistency_check(round_trip_market(std::log(2.0), 1.5, 0.2), kRoundTrip) <= 1e-10);
    CHECK_THROWS_AS(consistency_check(round_trip_market(0.0), TradeSchedule{{1, 0}, {0, 0}, 0.0}), TerminalNotZero);
}

TEST_CASE("quadratic scaling coefficients", "[wealth]") {
    const auto m = round_trip_market(std::log(2.0));
    auto q = quadratic_scaling(m, kRoundTrip)[0];
    CHECK_THAT(q.quadratic, WithinAbs(0.15, 1e-13));
    CHECK_THAT(q.linear, WithinAbs(0.0, 1e-13));
    CHECK(q.max_residual <= 1e-12);
    q = quadratic_scaling(m, TradeSchedule::zero(m.tree(), 0.0))[0];
    CHECK(q.quadratic == 0.0);
}

TEST_CASE("convexity gap", "[wealth]") {
    const auto m = round_trip_market(std::log(2.0));
    CHECK_THAT(convexity_gap(m, kRoundTrip, kRoundTrip)[0], WithinAbs(0.0, 1e-14));
    // round trip of size 2 against doing nothing: (0.6 + 0) / 2 - 0.15
    const TradeSchedule up{{2, 0}, {0, 2}, 0.0};
    CHECK_THAT(convexity_gap(m, up, TradeSchedule::zero(m.tree(), 0.0))[0], WithinAbs(0.15, 1e-13));
    // opposite round trips: the gross midpoint keeps the same activity, so the spread cost is unchanged
    const TradeSchedule down{{0, 2}, {2, 0}, 0.0};
    CHECK_THAT(convexity_gap(m, up, down)[0], WithinAbs(0.0, 1e-13));
}

TEST_CASE("total variation bound", "[wealth]") {
    const auto m = round_trip_market(std::log(2.0));
    const auto b = tv_bound(m, 1.0);
    CHECK(std::isfinite(b.bound));
    CHECK(b.bound > 0.0);
    CHECK(tv_bound(m, 0.0).bound >= 0.0);

    // doubled depth shrinks the penalty per share, so the constant grows
    const TimeGrid g({0.0, 1.0});
    const Market deep(ScenarioTree::chain(g, std::vector<double>{100, 100}, LiquiditySpec::constant(g, 20, std::log(2.0))),
                      ImpactParams{});
    CHECK(tv_bound(deep, 1.0).penalty_constant > b.penalty_constant);
    CHECK(tv_bound(deep, 1.0).bound >= b.bound);

    // exhaustive lattice: anything with Lambda <= l^2 respects the bound
    std::size_t checked = 0;
    for_each_lattice_schedule(m.tree(), 0.0, TradeGrid{-10.0, 10.0, 0.1}, [&](const TradeSchedule& s) {
        const double lam = lambda_functional(m, s).lambda_T[0];
        if (lam <= 1.0) {
            ++checked;
            REQUIRE(total_variation(m.tree(), s)[0] <= b.bound + 1e-12);
        }
    });
    CHECK(checked > 10);
}

TEST_CASE("wealth identities on random markets", "[wealth][property]") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 400; ++trial) {
        testing::TreeShape shape;
        shape.steps = 1 + trial % 4;
        shape.branches = 1 + trial % 3;
        const auto tree = testing::random_tree(rng, shape);
        const auto imp = testing::random_impact(rng);
        const Market m(tree, imp);
        const auto s = testing::random_schedule(rng, tree, imp.x0);

        // independent path simulation
        const auto direct = terminal_cash_direct(m, s);
        const auto sim = testing::simulate_cash(m, s);
        for (std::size_t k = 0; k < sim.size(); ++k) REQUIRE_THAT(direct[k], WithinAbs(sim[k], 1e-10 * (1 + std::abs(sim[k]))));

        const auto b = lambda_functional(m, s);
        for (std::size_t k = 0; k < b.lambda_T.size(); ++k) {
            REQUIRE_THAT(b.lambda_T[k], WithinAbs(b.p_integral[k] + b.eta_penalty[k], 1e-12 * (1 + std::abs(b.lambda_T[k]))));
            REQUIRE(std::abs(direct[k] - (b.v0 - b.lambda_T[k])) <= 1e-10 * (1 + std::abs(b.v0) + std::abs(b.lambda_T[k])));
        }

        // iota only moves v0
        auto other = imp;
        other.iota = imp.iota + 1.0;
        const auto b2 = lambda_functional(m.with_impact(other), s);
        for (std::size_t k = 0; k < b.lambda_T.size(); ++k) REQUIRE(b2.lambda_T[k] == b.lambda_T[k]);

        // eta never falls along a path
        const auto st = eta_path(m, s);
        for (std::size_t id = 0; id < tree.size(); ++id) {
            REQUIRE(st.eta[id] >= imp.zeta0);
            if (tree.node(id).parent != kNoNode) REQUIRE(st.eta[id] >= st.eta[tree.node(id).parent]);
        }
    }
}

TEST_CASE("convexity and scaling on random schedules", "[wealth][property]") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        testing::TreeShape shape;
        shape.steps = 1 + trial % 3;
        shape.branches = 1 + trial % 3;
        const auto tree = testing::random_tree(rng, shape);
        const auto imp = testing::random_impact(rng);
        const Market m(tree, imp);
        const auto s0 = testing::random_schedule(rng, tree, imp.x0);
        const auto s1 = testing::random_schedule(rng, tree, imp.x0, 3.0);
        for (double g : convexity_gap(m, s0, s1)) REQUIRE(g >= -1e-10);
        for (const auto& q : quadratic_scaling(m, s0)) {
            REQUIRE(q.quadratic >= 0.0);
            REQUIRE(q.max_residual <= 1e-10);
        }
    }
}
