#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tpi/duality.hpp"
#include "tpi/market.hpp"
#include "tpi/strategy.hpp"

namespace tpi {

struct SolverOptions {
    double tol = 1e-6;                ///< relative to scale = 1 + max |H| + max |P|
    std::size_t max_iter = 200000;    ///< gradient steps over all smoothing stages
    double smoothing_start = 1e-1;    ///< first soft-max temperature, relative to scale
    double smoothing_end = 1e-9;      ///< last temperature, relative to scale
    double smoothing_factor = 0.1;    ///< temperature ratio between stages
    std::size_t dual_iter = 100;      ///< measure updates in dual_ascent
    std::size_t inner_iter = 20000;   ///< gradient steps per inner expected-cost solve

    void validate() const;
};

/// Primal and dual results. Values are in currency units.
struct PriceReport {
    double scale = 1.0;
    double primal_value = std::numeric_limits<double>::quiet_NaN();
    TradeSchedule strategy;               ///< normalized, liquidating
    std::vector<double> leaf_cost;        ///< H + Lambda per leaf at the strategy
    std::size_t primal_iterations = 0;
    std::size_t stages = 0;
    double last_stage_change = std::numeric_limits<double>::quiet_NaN();
    bool primal_converged = false;
    std::vector<std::vector<double>> stage_weights; ///< final soft-max leaf weights of every stage

    double dual_value = -std::numeric_limits<double>::infinity();
    std::optional<DualCertificate> certificate;
    std::size_t dual_iterations = 0;
    std::vector<double> dual_trace;       ///< best objective after each measure update
    double init_dual_value = -std::numeric_limits<double>::infinity();

    double gap = std::numeric_limits<double>::quiet_NaN();
};

/// 1 + max |H| + max |P|.
double solver_scale(const ScenarioTree& tree, std::span<const double> payoff);

/// min over schedules of max over P-positive leaves of (H + Lambda) - (iota x0^2 + delta0 zeta0^2)/2.
/// The leaf trade is always the liquidation of the running position.
/// Non-convergence is flagged in the report, never thrown.
PriceReport primal_solve(const Market& market, std::span<const double> payoff, const SolverOptions& opts = {});

/// Grid of net trades used by the exhaustive oracle: lo, lo + step, ..., hi.
struct TradeGrid {
    double lo = -1.0;
    double hi = 1.0;
    double step = 0.01;

    std::vector<double> points() const;
};

/// Visits every schedule whose internal-node net trades lie on the grid
/// (leaf trades liquidate). Throws InstanceTooLarge beyond 3 periods,
/// 3 branches, 1000 grid points or 5e7 combinations.
void for_each_lattice_schedule(const ScenarioTree& tree, double x0, const TradeGrid& grid,
                               const std::function<void(const TradeSchedule&)>& visit);

/// Exhaustive minimum of the initial cash needed over the lattice, using the
/// direct cash formula only.
struct OracleResult {
    double value = std::numeric_limits<double>::infinity();
    TradeSchedule strategy;
    std::size_t evaluated = 0;
};

OracleResult brute_force_oracle(const Market& market, std::span<const double> payoff, const TradeGrid& grid);

/// Certificate for a fixed measure: alpha is the spread process of the
/// schedule minimizing E_Q[Lambda], then repaired; M from band intervals.
struct BestResponse {
    DualCertificate certificate;
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> leaf_cost; ///< H + Lambda of the inner schedule
    TradeSchedule schedule;
};

BestResponse best_response(const Market& market, std::span<const double> payoff, const NodeMeasure& q,
                           const SolverOptions& opts = {});

/// Monotone ascent over the measure; every emitted certificate is feasible.
/// Throws InfeasibleInit when `init` fails the band or martingale check.
PriceReport dual_ascent(const Market& market, std::span<const double> payoff, const DualCertificate& init,
                        const SolverOptions& opts = {});

/// Primal solve, dual ascent from the better of the running-max certificate
/// and the certificates induced by the primal soft-max weights, and the gap.
PriceReport gap_report(const Market& market, std::span<const double> payoff, const SolverOptions& opts = {});

} // namespace tpi
