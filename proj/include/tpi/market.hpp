#pragma once

#include <optional>
#include <vector>

#include "tpi/market_model.hpp"
#include "tpi/tree.hpp"

namespace tpi {

/// How strictly the kappa-monotonicity assumption is enforced when a market
/// is assembled. `relaxed` admits flat kappa (zero interior mu-mass) but
/// still rejects increasing kappa.
enum class AssumptionCheck { strict, relaxed };

/// Node-wise validation of a tree's depth/resilience data. Never throws.
AssumptionReport validate_assumptions(const ScenarioTree& tree);

/// A scenario tree together with impact parameters and the liquidity
/// quantities derived node by node: rho, kappa, the mu-mass of the interval
/// ending at each node and the terminal atom.
class Market {
public:
    Market(ScenarioTree tree, ImpactParams impact, AssumptionCheck check = AssumptionCheck::strict);

    /// Broadcast a deterministic market spec onto a single price path.
    static Market on_path(const MarketSpec& spec, std::span<const double> prices,
                          AssumptionCheck check = AssumptionCheck::strict);

    const ScenarioTree& tree() const noexcept { return tree_; }
    const ImpactParams& impact() const noexcept { return impact_; }
    AssumptionCheck check() const noexcept { return check_; }

    double rho(std::size_t id) const { return rho_[id]; }
    double kappa(std::size_t id) const { return kappa_[id]; }
    /// rho / delta: spread-units added per share traded at the node.
    double impact_ratio(std::size_t id) const { return impact_ratio_[id]; }
    /// mu-mass of the interval (t_{i-1}, t_i) ending at this node; zero at the root.
    double interval_weight(std::size_t id) const { return interval_weight_[id]; }
    /// kappa at leaves, zero elsewhere.
    double atom(std::size_t id) const { return atom_[id]; }

    double delta0() const { return tree_.node(tree_.root()).delta; }
    /// 1/2 (iota x0^2 + delta0 zeta0^2)
    double initial_offset() const;
    /// xi0 + initial_offset()
    double v0() const { return impact_.xi0 + initial_offset(); }

    /// Deterministic liquidity if delta and r only depend on the time index.
    std::optional<LiquiditySpec> deterministic_liquidity() const;

    Market with_impact(ImpactParams impact) const;
    Market with_prices(std::span<const double> prices) const;

private:
    ScenarioTree tree_;
    ImpactParams impact_;
    AssumptionCheck check_;
    std::vector<double> rho_;
    std::vector<double> kappa_;
    std::vector<double> impact_ratio_;
    std::vector<double> interval_weight_;
    std::vector<double> atom_;
};

} // namespace tpi
