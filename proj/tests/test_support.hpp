#pragma once

// Shared generators and hand-rolled oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "tpi/market.hpp"
#include "tpi/strategy.hpp"
#include "tpi/tree.hpp"

namespace tpi::testing {

inline TimeGrid unit_grid(std::size_t steps) {
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = static_cast<double>(i) / static_cast<double>(steps);
    return TimeGrid(t);
}

inline TimeGrid random_grid(std::mt19937_64& rng, std::size_t steps) {
    std::uniform_real_distribution<double> dt(0.05, 1.0);
    std::vector<double> t{0.0};
    for (std::size_t i = 0; i < steps; ++i) t.push_back(t.back() + dt(rng));
    return TimeGrid(t);
}

/// Random tree with node-wise depth and resilience satisfying strict kappa
/// decrease (r > 0, depth never increasing along a path).
struct TreeShape {
    std::size_t steps = 2;
    std::size_t branches = 2;
    double r_min = 0.05;
    double r_max = 1.0;
    bool deterministic_liquidity = false;
    bool zero_resilience = false; ///< r = 0 with strictly decreasing depth
};

inline ScenarioTree random_tree(std::mt19937_64& rng, const TreeShape& shape) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const TimeGrid grid = random_grid(rng, shape.steps);
    std::vector<double> level_delta(grid.size()), level_r(grid.size());
    level_delta[0] = 5.0 + 20.0 * u(rng);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) level_delta[i] = level_delta[i - 1] * (shape.zero_resilience ? 0.5 + 0.45 * u(rng) : 0.7 + 0.3 * u(rng));
        level_r[i] = shape.zero_resilience ? 0.0 : shape.r_min + (shape.r_max - shape.r_min) * u(rng);
    }

    std::vector<TreeNode> nodes;
    nodes.push_back({kNoNode, 0, 1.0, 50.0 + 100.0 * u(rng), level_delta[0], level_r[0]});
    std::size_t begin = 0;
    for (std::size_t t = 1; t < grid.size(); ++t) {
        const std::size_t end = nodes.size();
        for (std::size_t parent = begin; parent < end; ++parent) {
            const std::size_t b = 1 + static_cast<std::size_t>(u(rng) * static_cast<double>(shape.branches)) % shape.branches;
            std::vector<double> w(b);
            double total = 0.0;
            for (auto& x : w) total += (x = 0.2 + u(rng));
            for (std::size_t k = 0; k < b; ++k) {
                double delta = level_delta[t];
                double r = level_r[t];
                if (!shape.deterministic_liquidity) {
                    const double parent_delta = nodes[parent].delta;
                    delta = shape.zero_resilience ? parent_delta * (0.5 + 0.45 * u(rng)) : parent_delta * (0.7 + 0.3 * u(rng));
                    r = shape.zero_resilience ? 0.0 : shape.r_min + (shape.r_max - shape.r_min) * u(rng);
                }
                const double price = nodes[parent].price * (0.85 + 0.3 * u(rng));
                nodes.push_back({parent, t, w[k] / total, price, delta, r});
            }
        }
        begin = end;
    }
    return ScenarioTree(grid, std::move(nodes));
}

/// Reprices a tree so that no node offers a frictionless arbitrage: lone children keep the parent
/// price, otherwise the first child sits above the parent and the second below.
inline ScenarioTree arbitrage_free(std::mt19937_64& rng, const ScenarioTree& tree) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> prices;
    for (const auto& n : tree.nodes()) prices.push_back(n.price);
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const auto kids = tree.children(id);
        for (std::size_t k = 0; k < kids.size(); ++k) {
            const double move = prices[id] * (0.02 + 0.13 * u(rng));
            if (kids.size() == 1) prices[kids[k]] = prices[id];
            else if (k == 0) prices[kids[k]] = prices[id] + move;
            else if (k == 1) prices[kids[k]] = prices[id] - move;
            else prices[kids[k]] = prices[id] + (2.0 * u(rng) - 1.0) * move;
        }
    }
    return tree.with_prices(prices);
}

inline ImpactParams random_impact(std::mt19937_64& rng, bool with_position = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImpactParams p;
    p.iota = 2.0 * u(rng);
    p.zeta0 = 0.5 * u(rng);
    p.x0 = with_position ? -1.0 + 2.0 * u(rng) : 0.0;
    p.xi0 = -5.0 + 10.0 * u(rng);
    return p;
}

/// Sparse random gross trades, then liquidated at the leaves.
inline TradeSchedule random_schedule(std::mt19937_64& rng, const ScenarioTree& tree, double x0, double size = 1.0,
                                     bool liquidate = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TradeSchedule s = TradeSchedule::zero(tree, x0);
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (u(rng) < 0.6) s.buys[id] = size * u(rng);
        if (u(rng) < 0.6) s.sells[id] = size * u(rng);
    }
    return liquidate ? with_terminal_liquidation(tree, s) : s;
}

/// Independent path simulation of terminal cash: half-spread decays by the
/// discount ratio between grid points and jumps by gross / depth at trades;
/// every trade is charged the midpoint of pre- and post-trade quotes.
inline std::vector<double> simulate_cash(const Market& market, const TradeSchedule& s) {
    const ScenarioTree& tree = market.tree();
    const auto& imp = market.impact();
    std::vector<double> out;
    for (std::size_t leaf : tree.leaves()) {
        const auto path = tree.path_to(leaf);
        double cash = imp.xi0, zeta = imp.zeta0, x = s.x0, rho = 1.0;
        for (std::size_t k = 0; k < path.size(); ++k) {
            const TreeNode& n = tree.node(path[k]);
            if (k > 0) {
                const TreeNode& prev = tree.node(path[k - 1]);
                const double dt = tree.grid()[n.t_index] - tree.grid()[prev.t_index];
                const double rho_next = rho * std::exp(prev.r * dt);
                zeta *= rho / rho_next;
                rho = rho_next;
            }
            const double buy = s.buys[path[k]], sell = s.sells[path[k]];
            const double dx = buy - sell;
            const double zeta_after = zeta + (buy + sell) / n.delta;
            const double x_after = x + dx;
            cash -= 0.5 * ((n.price + imp.iota * x) + (n.price + imp.iota * x_after)) * dx;
            cash -= 0.5 * (zeta + zeta_after) * (buy + sell);
            zeta = zeta_after;
            x = x_after;
        }
        out.push_back(cash);
    }
    return out;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace tpi::testing
