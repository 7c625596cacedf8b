#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tpi {

/// Relative margin by which kappa must drop between consecutive grid points.
inline constexpr double kMonotonicityEpsilon = 1e-12;

/// Discretization points 0 = t_0 < t_1 < ... < t_N = T.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> times);

    std::size_t size() const noexcept { return times_.size(); }
    std::size_t steps() const noexcept { return times_.empty() ? 0 : times_.size() - 1; }
    double operator[](std::size_t i) const { return times_[i]; }
    double horizon() const { return times_.back(); }
    /// t_{i+1} - t_i
    double step(std::size_t i) const { return times_[i + 1] - times_[i]; }
    std::span<const double> times() const noexcept { return times_; }

    static TimeGrid uniform(double horizon, std::size_t steps);

private:
    std::vector<double> times_;
};

/// Market depth and resilience sampled at every grid point.
struct LiquiditySpec {
    std::vector<double> delta;
    std::vector<double> r;

    static LiquiditySpec constant(const TimeGrid& grid, double delta, double r);
};

struct ImpactParams {
    double iota = 0.0;  ///< permanent impact, price per share
    double zeta0 = 0.0; ///< initial half-spread, price
    double x0 = 0.0;    ///< initial position, shares
    double xi0 = 0.0;   ///< initial cash, currency

    void validate() const;
};

/// Deterministic market description (the JSON market file).
struct MarketSpec {
    TimeGrid grid;
    LiquiditySpec liquidity;
    ImpactParams impact;
};

/// The liquidity measure mu on a single path: interior[i-1] is the mass of
/// (t_{i-1}, t_i), the atom sits at T.
struct MuWeights {
    std::vector<double> interior;
    double atom = 0.0;

    double total_mass() const;
};

std::vector<double> build_rho(const TimeGrid& grid, std::span<const double> r);
std::vector<double> build_kappa(std::span<const double> delta, std::span<const double> rho);

/// Throws MonotonicityViolation unless kappa drops strictly at every step.
MuWeights build_mu(std::span<const double> kappa);

/// Strict decrease with relative margin kMonotonicityEpsilon.
bool strictly_decreasing(double previous, double next);

struct AssumptionViolation {
    std::string clause;  ///< "delta_positive", "r_nonnegative", "kappa_decreasing", "shape"
    std::size_t index = 0; ///< grid index or tree node where it failed
    std::string detail;
};

struct AssumptionReport {
    bool ok = true;
    double min_delta_over_rho = 0.0;
    double max_delta_over_rho = 0.0;
    std::vector<AssumptionViolation> violations;
};

/// Never throws: malformed input shows up as violations.
AssumptionReport validate_assumptions(const TimeGrid& grid, const LiquiditySpec& liquidity);

} // namespace tpi
