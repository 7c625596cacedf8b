#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpi/duality.hpp"
#include "tpi/market.hpp"
#include "tpi/strategy.hpp"

namespace tpi {

/// Cash-settled call (P_T - k)^+.
struct CallSpec {
    double strike = 0.0;

    void validate() const;
    /// Payoff per leaf in leaves() order.
    std::vector<double> payoff(const ScenarioTree& tree) const;
};

/// Super-replication price of the call for x0 <= 1 under deterministic
/// liquidity:
///   P0 (1 - x0) - iota x0^2 / 2 + zeta0 (1 - x0) + (1 - x0)^2 / (2 delta0)
///     + (zeta0 + (1 - x0) / delta0) / rho_T + 1 / (2 delta_T).
/// Independent of the strike. Throws NotApplicable when x0 > 1.
double call_price_formula(const MarketSpec& spec, double p0, AssumptionCheck check = AssumptionCheck::strict);

/// Same for a tree market (P0 at the root). Throws NotApplicable when the
/// liquidity varies across nodes of one level.
double call_price_formula(const Market& market);

/// Buy 1 - x0 at the root, sell 1 at every leaf.
TradeSchedule buy_and_hold(const ScenarioTree& tree, double x0);

struct CallCheck {
    double xi0 = 0.0;                ///< closed-form price used as initial cash
    std::vector<double> xi_T;        ///< direct terminal cash per leaf
    std::vector<double> p_T;
    std::vector<double> payoff;
    double max_identity_error = 0.0; ///< max |xi_T - P_T|
    bool identity_holds = true;      ///< error <= 1e-10 (1 + |P_T|) on every leaf
    bool superreplicates = true;     ///< xi_T >= payoff on every leaf
};

/// Funds buy-and-hold with the closed-form price and checks xi_T = P_T.
/// Requires P >= 0 on the tree.
CallCheck verify_call_superreplication(const Market& market, const CallSpec& call);

enum class UtilityKind { exponential, power, logarithmic };

/// Hard-coded utility families with analytic marginal utility.
///   exponential: u = -exp(-a x) / a, a > 0
///   power:       u = x^(1 - g) / (1 - g), g > 0, g != 1, x > 0
///   logarithmic: u = log x, x > 0
struct Utility {
    UtilityKind kind = UtilityKind::exponential;
    double parameter = 1.0;

    static Utility exponential(double a) { return {UtilityKind::exponential, a}; }
    static Utility power(double g) { return {UtilityKind::power, g}; }
    static Utility logarithmic() { return {UtilityKind::logarithmic, 0.0}; }

    void validate() const;
    bool in_domain(double x) const;
    double value(double x) const;
    double marginal(double x) const;
    std::string name() const;
};

/// Result of the interval recursion for martingales inside [P - lambda, P + lambda].
struct BandFeasibility {
    bool feasible = false;
    std::vector<double> martingale;   ///< empty when infeasible
    std::size_t first_empty = kNoNode;
    BandIntervals intervals;
};

/// pins (optional, node-indexed): +1 forces M = P + lambda, -1 forces
/// M = P - lambda, 0 leaves the node free. The selected martingale tracks
/// E_Q[P_T | node] as closely as the bands allow.
BandFeasibility shadow_band_feasibility(const ScenarioTree& tree, const NodeMeasure& q,
                                        std::span<const double> lambda, std::span<const int> pins = {},
                                        double tol = 0.0);

struct ShadowCheckInput {
    TradeSchedule schedule;
    Utility utility;
    std::optional<std::vector<double>> martingale;
};

struct ShadowVerdict {
    std::string verdict;              ///< "optimal" or "inconclusive"
    std::vector<std::string> reasons;
    double tolerance = 0.0;           ///< 1e-8 * (1 + max |P|)
    bool searched = false;            ///< M was produced by the band search
    NodeMeasure q;
    std::vector<double> xi_T;
    std::vector<double> alpha;
    std::vector<double> lambda;
    std::vector<double> martingale;
    double martingale_defect = 0.0;
    std::vector<double> lower_slack;  ///< M - (P - lambda)
    std::vector<double> upper_slack;  ///< (P + lambda) - M
    std::vector<double> flat_off;     ///< distance of M from the touched band edge where trades occur
    bool martingale_ok = false;
    bool band_ok = false;
    bool flat_off_ok = false;
};

/// Sufficient optimality test for a liquidating schedule under the utility.
/// Never declares suboptimality. Throws TerminalNotZero for non-liquidating
/// schedules and ValidationError when the utility is undefined at xi_T.
ShadowVerdict shadow_price_check(const Market& market, const ShadowCheckInput& input);

} // namespace tpi
