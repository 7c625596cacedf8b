#pragma once

#include <vector>

#include "tpi/market.hpp"
#include "tpi/strategy.hpp"

namespace tpi {

/// eta = rho * zeta at every node, before (pre) and after the node's trade.
struct SpreadState {
    std::vector<double> eta;
    std::vector<double> zeta;
    std::vector<double> eta_pre;
    std::vector<double> zeta_pre;
};

SpreadState eta_path(const Market& market, const TradeSchedule& s);

/// Terminal cash per leaf from the midpoint-rule trading costs, starting
/// from the market's initial cash.
std::vector<double> terminal_cash_direct(const Market& market, const TradeSchedule& s);

/// Per-leaf decomposition Lambda = sum P dX + 1/2 int eta^2 dmu. xi_T is
/// v0 - Lambda on liquidated leaves and NaN elsewhere.
struct WealthBreakdown {
    std::vector<double> xi_T;
    std::vector<double> lambda_T;
    std::vector<double> p_integral;
    std::vector<double> eta_penalty;
    std::vector<bool> liquidated;
    double v0 = 0.0;
};

WealthBreakdown lambda_functional(const Market& market, const TradeSchedule& s);

/// max over leaves |xi_direct - (v0 - Lambda)|. Throws TerminalNotZero when
/// some leaf keeps a position.
double consistency_check(const Market& market, const TradeSchedule& s);

/// Bound on total variation for strategies with Lambda <= level^2.
///
/// penalty_constant C satisfies 1/2 int eta^2 dmu >= TV^2 / C, with
/// C = 2 / (min kappa_T * (min rho/delta)^2). `bound` is the positive root of
/// x^2 = C (p x + level^2) with p = sup |P| over the tree, and
/// `linear_bound` = max(C, sqrt C) * (level + p) >= bound.
struct TvBound {
    double penalty_constant = 0.0;
    double linear_constant = 0.0;
    double sup_price = 0.0;
    double level = 0.0;
    double bound = 0.0;
    double linear_bound = 0.0;
};

TvBound tv_bound(const Market& market, double level);

/// 1/2 (Lambda^0 + Lambda^1) - Lambda^{mid} per leaf, mid being the gross midpoint.
std::vector<double> convexity_gap(const Market& market, const TradeSchedule& s0, const TradeSchedule& s1);

/// Lambda of the schedule with every trade multiplied by c equals
/// constant + linear * c + quadratic * c^2 on each leaf.
struct QuadraticScaling {
    double constant = 0.0;  ///< 1/2 zeta0^2 mu-mass
    double linear = 0.0;    ///< sum P dX + zeta0 int (eta - zeta0) dmu
    double quadratic = 0.0; ///< 1/2 int (eta - zeta0)^2 dmu
    double max_residual = 0.0; ///< largest misfit against direct evaluation at c = 0, 1, 2
};

std::vector<QuadraticScaling> quadratic_scaling(const Market& market, const TradeSchedule& s);

TradeSchedule scale_trades(const TradeSchedule& s, double c);

} // namespace tpi
