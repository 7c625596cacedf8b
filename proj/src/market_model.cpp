#include "tpi/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tpi/errors.hpp"

namespace tpi {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw ValidationError("time grid needs at least two points");
    if (times_.front() != 0.0) throw ValidationError("time grid must start at t = 0");
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1]) || !std::isfinite(times_[i]))
            throw ValidationError("time grid must be strictly increasing and finite");
    }
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    if (steps == 0) throw ValidationError("uniform grid needs at least one step");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

LiquiditySpec LiquiditySpec::constant(const TimeGrid& grid, double delta, double r) {
    return {std::vector<double>(grid.size(), delta), std::vector<double>(grid.size(), r)};
}

void ImpactParams::validate() const {
    if (!(iota >= 0.0)) throw ValidationError("iota must be non-negative");
    if (!(zeta0 >= 0.0)) throw ValidationError("zeta0 must be non-negative");
    if (!std::isfinite(x0) || !std::isfinite(xi0)) throw ValidationError("x0 and xi0 must be finite");
}

double MuWeights::total_mass() const {
    return std::accumulate(interior.begin(), interior.end(), 0.0) + atom;
}

std::vector<double> build_rho(const TimeGrid& grid, std::span<const double> r) {
    if (r.size() != grid.size()) throw GridMismatch("resilience path length differs from grid");
    std::vector<double> rho(grid.size());
    double integral = 0.0;
    rho[0] = 1.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(r[i] >= 0.0)) throw ValidationError("resilience must be non-negative");
        integral += r[i] * grid.step(i);
        rho[i + 1] = std::exp(integral);
    }
    if (!(r.back() >= 0.0)) throw ValidationError("resilience must be non-negative");
    return rho;
}

std::vector<double> build_kappa(std::span<const double> delta, std::span<const double> rho) {
    if (delta.size() != rho.size()) throw GridMismatch("depth and rho lengths differ");
    std::vector<double> kappa(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(delta[i] > 0.0) || !std::isfinite(delta[i])) throw ValidationError("market depth must be positive");
        kappa[i] = delta[i] / (rho[i] * rho[i]);
    }
    return kappa;
}

bool strictly_decreasing(double previous, double next) {
    return previous - next > kMonotonicityEpsilon * std::abs(previous);
}

MuWeights build_mu(std::span<const double> kappa) {
    if (kappa.size() < 2) throw ValidationError("kappa needs at least two points");
    MuWeights mu;
    mu.interior.resize(kappa.size() - 1);
    for (std::size_t i = 1; i < kappa.size(); ++i) {
        if (!strictly_decreasing(kappa[i - 1], kappa[i])) {
            std::ostringstream msg;
            msg << "kappa not strictly decreasing at grid index " << i;
            throw MonotonicityViolation(msg.str());
        }
        mu.interior[i - 1] = kappa[i - 1] - kappa[i];
    }
    mu.atom = kappa.back();
    return mu;
}

AssumptionReport validate_assumptions(const TimeGrid& grid, const LiquiditySpec& liquidity) {
    AssumptionReport report;
    auto fail = [&](std::string clause, std::size_t index, std::string detail) {
        report.ok = false;
        report.violations.push_back({std::move(clause), index, std::move(detail)});
    };
    if (liquidity.delta.size() != grid.size() || liquidity.r.size() != grid.size()) {
        fail("shape", 0, "delta and r must have one value per grid point");
        return report;
    }
    bool usable = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(liquidity.delta[i] > 0.0) || !std::isfinite(liquidity.delta[i])) {
            fail("delta_positive", i, "market depth must be positive");
            usable = false;
        }
        if (!(liquidity.r[i] >= 0.0) || !std::isfinite(liquidity.r[i])) {
            fail("r_nonnegative", i, "resilience must be non-negative");
            usable = false;
        }
    }
    if (!usable) return report;

    const auto rho = build_rho(grid, liquidity.r);
    const auto kappa = build_kappa(liquidity.delta, rho);
    report.min_delta_over_rho = std::numeric_limits<double>::infinity();
    report.max_delta_over_rho = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double ratio = liquidity.delta[i] / rho[i];
        report.min_delta_over_rho = std::min(report.min_delta_over_rho, ratio);
        report.max_delta_over_rho = std::max(report.max_delta_over_rho, ratio);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!strictly_decreasing(kappa[i - 1], kappa[i])) {
            std::ostringstream msg;
            msg << "kappa " << kappa[i - 1] << " -> " << kappa[i];
            fail("kappa_decreasing", i, msg.str());
        }
    }
    return report;
}

} // namespace tpi
