#include <catch_amalgamated.hpp>

#include <random>

#include "test_support.hpp"
#include "tpi/errors.hpp"
#include "tpi/strategy.hpp"

using namespace tpi;
using Catch::Matchers::WithinAbs;

namespace {

ScenarioTree two_point_chain() {
    const TimeGrid g({0.0, 1.0});
    return ScenarioTree::chain(g, std::vector<double>{100, 100}, LiquiditySpec::constant(g, 10, 0));
}

} // namespace

TEST_CASE("position path accumulates net trades", "[strategy]") {
    const auto tree = two_point_chain();
    auto s = TradeSchedule::zero(tree, 3.0);
    CHECK(position_path(tree, s) == std::vector<double>{3, 3});

    s = TradeSchedule{{1, 0}, {0, 1}, 0.0};
    CHECK(position_path(tree, s) == std::vector<double>{1, 0});

    s = TradeSchedule{{1, 2}, {0, 3}, 0.0};
    CHECK(position_path(tree, s) == std::vector<double>{1, 0});
    CHECK(total_variation(tree, s) == std::vector<double>{6});
}

TEST_CASE("normalize nets simultaneous trades", "[strategy]") {
    const auto tree = two_point_chain();
    TradeSchedule s{{2, 0}, {0.5, 0}, 0.0};
    auto n = normalize(s);
    CHECK(n.buys[0] == 1.5);
    CHECK(n.sells[0] == 0.0);
    CHECK(normalize(n).buys == n.buys);
    CHECK(normalize(n).sells == n.sells);

    s = TradeSchedule{{1, 0}, {1, 0}, 0.0};
    n = normalize(s);
    CHECK(n.buys[0] == 0.0);
    CHECK(n.sells[0] == 0.0);
}

TEST_CASE("total variation", "[strategy]") {
    const auto tree = two_point_chain();
    CHECK(total_variation(tree, TradeSchedule{{1, 0}, {0, 1}, 0.0}) == std::vector<double>{2});
    CHECK(total_variation(tree, TradeSchedule::zero(tree, 0.0)) == std::vector<double>{0});
}

TEST_CASE("convex combination is component-wise", "[strategy]") {
    const auto tree = two_point_chain();
    const TradeSchedule a{{1, 0}, {0, 1}, 0.0};
    const TradeSchedule b{{0, 0.5}, {0.25, 0}, 0.0};
    auto c = convex_combine(a, b, 1.0);
    CHECK(c.buys == a.buys);
    CHECK(c.sells == a.sells);
    c = convex_combine(a, a, 0.5);
    CHECK(c.buys == a.buys);

    const TradeSchedule buy2{{2, 0}, {0, 0}, 0.0};
    const TradeSchedule sell2{{0, 0}, {2, 0}, 0.0};
    c = convex_combine(buy2, sell2, 0.5);
    CHECK(c.buys[0] == 1.0);
    CHECK(c.sells[0] == 1.0);

    CHECK_THROWS_AS(convex_combine(a, TradeSchedule{{0, 0}, {0, 0}, 1.0}, 0.5), GridMismatch);
    CHECK_THROWS(convex_combine(a, b, 1.5));
}

TEST_CASE("terminal zero check", "[strategy]") {
    const auto tree = two_point_chain();
    CHECK(check_terminal_zero(tree, TradeSchedule{{1, 0}, {0, 1}, 0.0}) == std::vector<bool>{true});
    CHECK(check_terminal_zero(tree, TradeSchedule{{1, 0}, {0, 0}, 0.0}) == std::vector<bool>{false});
    CHECK(check_terminal_zero(tree, TradeSchedule{{0, 0}, {0, 1}, 1.0}) == std::vector<bool>{true});
    CHECK(check_terminal_zero(tree, with_terminal_liquidation(tree, TradeSchedule{{0.7, 0}, {0, 0}, -2.0})) ==
          std::vector<bool>{true});
}

TEST_CASE("schedule validation", "[strategy]") {
    const auto tree = two_point_chain();
    CHECK_THROWS_AS(TradeSchedule({-1, 0}, {0, 0}, 0.0).validate(tree), ValidationError);
    CHECK_THROWS_AS(TradeSchedule({0}, {0}, 0.0).validate(tree), GridMismatch);
    CHECK_THROWS_AS(position_path(tree, TradeSchedule{{0, 0, 0}, {0, 0, 0}, 0.0}), GridMismatch);
}

TEST_CASE("normalize and combine properties", "[strategy][property]") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        testing::TreeShape shape;
        shape.steps = 1 + trial % 3;
        shape.branches = 1 + trial % 3;
        const auto tree = testing::random_tree(rng, shape);
        const double x0 = (trial % 7) * 0.3 - 1.0;
        const auto s0 = testing::random_schedule(rng, tree, x0, 1.0, false);
        const auto s1 = testing::random_schedule(rng, tree, x0, 2.0, false);

        const auto n = normalize(s0);
        const auto x = position_path(tree, s0);
        const auto xn = position_path(tree, n);
        const auto tv = total_variation(tree, s0);
        const auto tvn = total_variation(tree, n);
        for (std::size_t i = 0; i < x.size(); ++i) REQUIRE_THAT(xn[i], WithinAbs(x[i], 1e-12));
        for (std::size_t i = 0; i < tv.size(); ++i) REQUIRE(tvn[i] <= tv[i] + 1e-12);
        for (std::size_t id = 0; id < tree.size(); ++id) REQUIRE(std::min(n.buys[id], n.sells[id]) == 0.0);

        const double w = (trial % 11) / 10.0;
        const auto c = convex_combine(s0, s1, w);
        const auto xc = position_path(tree, c);
        const auto x1 = position_path(tree, s1);
        for (std::size_t i = 0; i < x.size(); ++i) REQUIRE_THAT(xc[i], WithinAbs(w * x[i] + (1 - w) * x1[i], 1e-12));
        // gross activity of the combination is the combination of gross activities
        for (std::size_t id = 0; id < tree.size(); ++id)
            REQUIRE_THAT(c.gross(id), WithinAbs(w * s0.gross(id) + (1 - w) * s1.gross(id), 1e-12));
    }
}
