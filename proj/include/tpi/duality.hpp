#pragma once

#include <span>
#include <vector>

#include "tpi/market.hpp"
#include "tpi/strategy.hpp"

namespace tpi {

/// Dual variables: a measure Q << P, a Q-martingale M and a spread
/// multiplier alpha, all node-indexed.
struct DualCertificate {
    NodeMeasure q;
    std::vector<double> martingale;
    std::vector<double> alpha;

    /// Throws GridMismatch / InvalidCertificate on shape or measure errors.
    void validate(const ScenarioTree& tree) const;
};

/// B_n = (rho_n / delta_n) E_Q[ sum over the remaining intervals of alpha(left) * mu + alpha_T kappa_T | n ].
std::vector<double> constraint_bound(const Market& market, const DualCertificate& cert);

struct FeasibilityReport {
    bool feasible = true;
    double scale = 1.0;              ///< 1 + max |P|, tolerance is 1e-10 * scale
    double worst_violation = 0.0;    ///< max_n (|P_n - M_n| - B_n), may be negative
    std::size_t worst_node = kNoNode;
    double martingale_defect = 0.0;
    std::vector<double> bound;       ///< B per node
    std::vector<double> slack;       ///< B - |P - M| per node
};

/// Band constraint |P - M| <= B at every node plus the martingale property.
/// Throws InvalidCertificate when the measure itself is not admissible.
FeasibilityReport check_feasibility(const Market& market, const DualCertificate& cert);

/// 1/2 E_Q int (alpha - zeta0)^2 dmu, alpha taken at the left end of each interval.
double alpha_penalty(const Market& market, const DualCertificate& cert);

/// E_Q[H] - 1/2 E_Q int (alpha - zeta0)^2 dmu - M_0 x0 - 1/2 iota x0^2.
/// Payoff is given in leaves() order and must be non-negative.
double dual_objective(const Market& market, const DualCertificate& cert, std::span<const double> payoff);

/// xi0 - D split into three non-negative slacks.
struct WeakDualityReport {
    double xi0 = 0.0;
    double dual_value = 0.0;
    double margin = 0.0;
    double scale = 1.0;
    double superreplication_slack = 0.0; ///< E_Q[xi_T - H]
    double band_slack = 0.0;             ///< E_Q sum_n (B V + (P - M) dX)
    double square_slack = 0.0;           ///< 1/2 E_Q int (eta - alpha)^2 dmu
    double identity_residual = 0.0;      ///< margin minus the three slacks
    std::vector<double> node_band_slack; ///< B V + (P - M) dX per node
};

/// Evaluates a super-replicating pair (xi0, schedule) against a certificate.
/// xi0 replaces the market's initial cash. Throws SuperReplicationViolated
/// when the schedule leaves a position or some leaf ends below the payoff
/// (tolerance 1e-9 * scale), InfeasibleCertificate when the band fails.
WeakDualityReport weak_duality_check(const Market& market, const TradeSchedule& s, double xi0,
                                     const DualCertificate& cert, std::span<const double> payoff);

/// Always-feasible certificate: Q = P, M = 0, alpha = running max of |P| rho.
DualCertificate running_max_certificate(const Market& market);

/// Band intervals implied by (q, alpha) for the interval recursion.
BandIntervals certificate_intervals(const Market& market, const NodeMeasure& q, std::span<const double> alpha,
                                    double tol = 0.0);

/// Makes (q, alpha) feasible by raising alpha where the interval recursion
/// finds an empty interval, then selects the martingale whose root value is
/// best for the initial position.
DualCertificate complete_certificate(const Market& market, const NodeMeasure& q, std::vector<double> alpha);

/// Scale used in tolerances: 1 + max |P| over the tree.
double price_scale(const ScenarioTree& tree);

} // namespace tpi
