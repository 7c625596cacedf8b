#include "tpi/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "tpi/errors.hpp"

namespace tpi {

TradeSchedule TradeSchedule::zero(const ScenarioTree& tree, double x0) {
    return {std::vector<double>(tree.size(), 0.0), std::vector<double>(tree.size(), 0.0), x0};
}

void TradeSchedule::validate(const ScenarioTree& tree) const {
    if (buys.size() != tree.size() || sells.size() != tree.size())
        throw GridMismatch("schedule size differs from node count");
    if (!std::isfinite(x0)) throw ValidationError("x0 must be finite");
    for (std::size_t i = 0; i < buys.size(); ++i) {
        if (!(buys[i] >= 0.0) || !(sells[i] >= 0.0) || !std::isfinite(buys[i]) || !std::isfinite(sells[i]))
            throw ValidationError("buys and sells must be finite and non-negative");
    }
}

std::vector<double> position_path(const ScenarioTree& tree, const TradeSchedule& s) {
    s.validate(tree);
    std::vector<double> x(tree.size());
    x[tree.root()] = s.x0 + s.net(tree.root());
    for (std::size_t t = 1; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) x[id] = x[tree.node(id).parent] + s.net(id);
    }
    return x;
}

TradeSchedule normalize(const TradeSchedule& s) {
    TradeSchedule out = s;
    for (std::size_t i = 0; i < s.buys.size(); ++i) {
        const double common = std::min(s.buys[i], s.sells[i]);
        out.buys[i] = s.buys[i] - common;
        out.sells[i] = s.sells[i] - common;
    }
    return out;
}

std::vector<double> total_variation(const ScenarioTree& tree, const TradeSchedule& s) {
    s.validate(tree);
    std::vector<double> tv(tree.size());
    tv[tree.root()] = s.gross(tree.root());
    for (std::size_t t = 1; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) tv[id] = tv[tree.node(id).parent] + s.gross(id);
    }
    std::vector<double> out;
    out.reserve(tree.leaves().size());
    for (std::size_t id : tree.leaves()) out.push_back(tv[id]);
    return out;
}

TradeSchedule convex_combine(const TradeSchedule& s0, const TradeSchedule& s1, double w) {
    if (s0.buys.size() != s1.buys.size() || s0.sells.size() != s1.sells.size())
        throw GridMismatch("schedules live on different trees");
    if (s0.x0 != s1.x0) throw GridMismatch("schedules start from different positions");
    if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("combination weight must lie in [0, 1]");
    TradeSchedule out = s0;
    for (std::size_t i = 0; i < s0.buys.size(); ++i) {
        out.buys[i] = w * s0.buys[i] + (1.0 - w) * s1.buys[i];
        out.sells[i] = w * s0.sells[i] + (1.0 - w) * s1.sells[i];
    }
    return out;
}

std::vector<bool> check_terminal_zero(const ScenarioTree& tree, const TradeSchedule& s) {
    const auto x = position_path(tree, s);
    const auto tv = total_variation(tree, s);
    std::vector<bool> out;
    out.reserve(tv.size());
    for (std::size_t k = 0; k < tv.size(); ++k) {
        const double tol = 1e-12 * (1.0 + std::abs(s.x0) + tv[k]);
        out.push_back(std::abs(x[tree.leaves()[k]]) <= tol);
    }
    return out;
}

TradeSchedule with_terminal_liquidation(const ScenarioTree& tree, const TradeSchedule& s) {
    const auto x = position_path(tree, s);
    TradeSchedule out = s;
    for (std::size_t id : tree.leaves()) {
        const double residual = x[id];
        if (residual > 0.0) out.sells[id] += residual;
        else out.buys[id] -= residual;
    }
    return out;
}

} // namespace tpi
