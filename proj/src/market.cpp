#include "tpi/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tpi/errors.hpp"

namespace tpi {

namespace {

std::vector<double> tree_rho(const ScenarioTree& tree) {
    // same left-endpoint quadrature as build_rho, accumulated per path
    std::vector<double> integral(tree.size(), 0.0);
    std::vector<double> rho(tree.size(), 1.0);
    for (std::size_t t = 1; t <= tree.last_level(); ++t) {
        const double dt = tree.grid().step(t - 1);
        for (std::size_t id : tree.level(t)) {
            const std::size_t parent = tree.node(id).parent;
            integral[id] = integral[parent] + tree.node(parent).r * dt;
            rho[id] = std::exp(integral[id]);
        }
    }
    return rho;
}

} // namespace

AssumptionReport validate_assumptions(const ScenarioTree& tree) {
    AssumptionReport report;
    auto fail = [&](std::string clause, std::size_t index, std::string detail) {
        report.ok = false;
        report.violations.push_back({std::move(clause), index, std::move(detail)});
    };
    bool usable = true;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (!(tree.node(id).delta > 0.0)) {
            fail("delta_positive", id, "market depth must be positive");
            usable = false;
        }
        if (!(tree.node(id).r >= 0.0)) {
            fail("r_nonnegative", id, "resilience must be non-negative");
            usable = false;
        }
    }
    if (!usable) return report;
    const auto rho = tree_rho(tree);
    report.min_delta_over_rho = std::numeric_limits<double>::infinity();
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const double ratio = tree.node(id).delta / rho[id];
        report.min_delta_over_rho = std::min(report.min_delta_over_rho, ratio);
        report.max_delta_over_rho = std::max(report.max_delta_over_rho, ratio);
        const std::size_t parent = tree.node(id).parent;
        if (parent == kNoNode) continue;
        const double k_prev = tree.node(parent).delta / (rho[parent] * rho[parent]);
        const double k_next = tree.node(id).delta / (rho[id] * rho[id]);
        if (!strictly_decreasing(k_prev, k_next)) {
            std::ostringstream msg;
            msg << "kappa " << k_prev << " -> " << k_next;
            fail("kappa_decreasing", id, msg.str());
        }
    }
    return report;
}

Market::Market(ScenarioTree tree, ImpactParams impact, AssumptionCheck check)
    : tree_(std::move(tree)), impact_(impact), check_(check) {
    impact_.validate();
    const std::size_t n = tree_.size();
    for (std::size_t id = 0; id < n; ++id) {
        if (!(tree_.node(id).delta > 0.0)) throw ValidationError("market depth must be positive");
        if (!(tree_.node(id).r >= 0.0)) throw ValidationError("resilience must be non-negative");
    }
    rho_ = tree_rho(tree_);
    kappa_.resize(n);
    impact_ratio_.resize(n);
    interval_weight_.assign(n, 0.0);
    atom_.assign(n, 0.0);
    for (std::size_t id = 0; id < n; ++id) {
        kappa_[id] = tree_.node(id).delta / (rho_[id] * rho_[id]);
        impact_ratio_[id] = rho_[id] / tree_.node(id).delta;
    }
    for (std::size_t id = 0; id < n; ++id) {
        const std::size_t parent = tree_.node(id).parent;
        if (parent != kNoNode) {
            const double prev = kappa_[parent];
            const double next = kappa_[id];
            const bool ok = check_ == AssumptionCheck::strict ? strictly_decreasing(prev, next) : next <= prev;
            if (!ok) {
                std::ostringstream msg;
                msg << "kappa not decreasing into node " << id << " (" << prev << " -> " << next << ")";
                throw MonotonicityViolation(msg.str());
            }
            interval_weight_[id] = prev - next;
        }
        if (tree_.is_leaf(id)) atom_[id] = kappa_[id];
    }
}

Market Market::on_path(const MarketSpec& spec, std::span<const double> prices, AssumptionCheck check) {
    return Market(ScenarioTree::chain(spec.grid, prices, spec.liquidity), spec.impact, check);
}

double Market::initial_offset() const {
    return 0.5 * (impact_.iota * impact_.x0 * impact_.x0 + delta0() * impact_.zeta0 * impact_.zeta0);
}

std::optional<LiquiditySpec> Market::deterministic_liquidity() const {
    const std::size_t levels = tree_.last_level() + 1;
    LiquiditySpec spec{std::vector<double>(levels), std::vector<double>(levels)};
    for (std::size_t t = 0; t < levels; ++t) {
        const auto level = tree_.level(t);
        spec.delta[t] = tree_.node(level.front()).delta;
        spec.r[t] = tree_.node(level.front()).r;
        for (std::size_t id : level) {
            if (tree_.node(id).delta != spec.delta[t] || tree_.node(id).r != spec.r[t]) return std::nullopt;
        }
    }
    return spec;
}

Market Market::with_impact(ImpactParams impact) const {
    Market copy = *this;
    impact.validate();
    copy.impact_ = impact;
    return copy;
}

Market Market::with_prices(std::span<const double> prices) const {
    Market copy = *this;
    copy.tree_ = tree_.with_prices(prices);
    return copy;
}

} // namespace tpi
