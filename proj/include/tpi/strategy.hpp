#pragma once

#include <vector>

#include "tpi/tree.hpp"

namespace tpi {

/// Bounded-variation strategy on a scenario tree: gross buys and sells per
/// node plus the initial position. A node's trade is shared by every
/// scenario passing through it.
struct TradeSchedule {
    std::vector<double> buys;
    std::vector<double> sells;
    double x0 = 0.0;

    static TradeSchedule zero(const ScenarioTree& tree, double x0);

    /// Throws GridMismatch on size errors, ValidationError on negative trades.
    void validate(const ScenarioTree& tree) const;
    double net(std::size_t id) const { return buys[id] - sells[id]; }
    double gross(std::size_t id) const { return buys[id] + sells[id]; }
};

/// Post-trade position at every node.
std::vector<double> position_path(const ScenarioTree& tree, const TradeSchedule& s);

/// Nets simultaneous buys and sells at each node.
TradeSchedule normalize(const TradeSchedule& s);

/// Sum of gross trades along each root-to-leaf path, in leaves() order.
std::vector<double> total_variation(const ScenarioTree& tree, const TradeSchedule& s);

/// Component-wise w * s0 + (1 - w) * s1 of the gross decompositions.
TradeSchedule convex_combine(const TradeSchedule& s0, const TradeSchedule& s1, double w);

/// Per leaf: is the terminal position zero within 1e-12 (1 + |x0| + TV)?
std::vector<bool> check_terminal_zero(const ScenarioTree& tree, const TradeSchedule& s);

/// Adds the trade at every leaf that closes the pre-terminal position, on
/// top of whatever is scheduled there.
TradeSchedule with_terminal_liquidation(const ScenarioTree& tree, const TradeSchedule& s);

} // namespace tpi
