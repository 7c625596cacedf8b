#include "tpi/wealth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tpi/errors.hpp"

namespace tpi {

SpreadState eta_path(const Market& market, const TradeSchedule& s) {
    const ScenarioTree& tree = market.tree();
    s.validate(tree);
    const double zeta0 = market.impact().zeta0;
    SpreadState st;
    st.eta.resize(tree.size());
    st.zeta.resize(tree.size());
    st.eta_pre.resize(tree.size());
    st.zeta_pre.resize(tree.size());
    for (std::size_t t = 0; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            const std::size_t parent = tree.node(id).parent;
            const double pre = parent == kNoNode ? zeta0 : st.eta[parent];
            st.eta_pre[id] = pre;
            st.eta[id] = pre + market.impact_ratio(id) * s.gross(id);
            st.zeta_pre[id] = pre / market.rho(id);
            st.zeta[id] = st.eta[id] / market.rho(id);
        }
    }
    return st;
}

std::vector<double> terminal_cash_direct(const Market& market, const TradeSchedule& s) {
    const ScenarioTree& tree = market.tree();
    const SpreadState st = eta_path(market, s);
    const auto x = position_path(tree, s);
    const double iota = market.impact().iota;

    std::vector<double> cash(tree.size());
    for (std::size_t t = 0; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            const std::size_t parent = tree.node(id).parent;
            const double before = parent == kNoNode ? market.impact().xi0 : cash[parent];
            const double x_pre = parent == kNoNode ? s.x0 : x[parent];
            const double price = tree.node(id).price;
            const double mid_cost = 0.5 * ((price + iota * x_pre) + (price + iota * x[id])) * s.net(id);
            const double spread_cost = 0.5 * (st.zeta_pre[id] + st.zeta[id]) * s.gross(id);
            cash[id] = before - mid_cost - spread_cost;
        }
    }
    std::vector<double> out;
    out.reserve(tree.leaves().size());
    for (std::size_t id : tree.leaves()) out.push_back(cash[id]);
    return out;
}

WealthBreakdown lambda_functional(const Market& market, const TradeSchedule& s) {
    const ScenarioTree& tree = market.tree();
    const SpreadState st = eta_path(market, s);
    const auto terminal_zero = check_terminal_zero(tree, s);

    std::vector<double> p_int(tree.size());
    std::vector<double> pen(tree.size());
    for (std::size_t t = 0; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            const std::size_t parent = tree.node(id).parent;
            const double p_before = parent == kNoNode ? 0.0 : p_int[parent];
            double pen_before = 0.0;
            if (parent != kNoNode) {
                // interval (t_{i-1}, t_i) carries the pre-step eta
                pen_before = pen[parent] + st.eta[parent] * st.eta[parent] * market.interval_weight(id);
            }
            p_int[id] = p_before + tree.node(id).price * s.net(id);
            pen[id] = pen_before;
        }
    }

    WealthBreakdown wb;
    wb.v0 = market.v0();
    const std::size_t leaves = tree.leaves().size();
    wb.xi_T.resize(leaves);
    wb.lambda_T.resize(leaves);
    wb.p_integral.resize(leaves);
    wb.eta_penalty.resize(leaves);
    wb.liquidated = terminal_zero;
    for (std::size_t k = 0; k < leaves; ++k) {
        const std::size_t id = tree.leaves()[k];
        const double penalty = 0.5 * (pen[id] + st.eta[id] * st.eta[id] * market.atom(id));
        wb.p_integral[k] = p_int[id];
        wb.eta_penalty[k] = penalty;
        wb.lambda_T[k] = p_int[id] + penalty;
        wb.xi_T[k] = terminal_zero[k] ? wb.v0 - wb.lambda_T[k] : std::numeric_limits<double>::quiet_NaN();
    }
    return wb;
}

double consistency_check(const Market& market, const TradeSchedule& s) {
    const WealthBreakdown wb = lambda_functional(market, s);
    for (std::size_t k = 0; k < wb.liquidated.size(); ++k) {
        if (!wb.liquidated[k]) throw TerminalNotZero("schedule does not liquidate on every scenario");
    }
    const auto direct = terminal_cash_direct(market, s);
    double worst = 0.0;
    for (std::size_t k = 0; k < direct.size(); ++k) worst = std::max(worst, std::abs(direct[k] - wb.xi_T[k]));
    return worst;
}

TvBound tv_bound(const Market& market, double level) {
    if (!(level >= 0.0)) throw ValidationError("level must be non-negative");
    const ScenarioTree& tree = market.tree();
    double min_ratio = std::numeric_limits<double>::infinity();
    double sup_price = 0.0;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        min_ratio = std::min(min_ratio, market.impact_ratio(id));
        sup_price = std::max(sup_price, std::abs(tree.node(id).price));
    }
    double min_atom = std::numeric_limits<double>::infinity();
    for (std::size_t id : tree.leaves()) min_atom = std::min(min_atom, market.atom(id));

    TvBound b;
    b.level = level;
    b.sup_price = sup_price;
    b.penalty_constant = 2.0 / (min_atom * min_ratio * min_ratio);
    const double c = b.penalty_constant;
    b.bound = 0.5 * (c * sup_price + std::sqrt(c * c * sup_price * sup_price + 4.0 * c * level * level));
    b.linear_constant = std::max(c, std::sqrt(c));
    b.linear_bound = b.linear_constant * (level + sup_price);
    return b;
}

std::vector<double> convexity_gap(const Market& market, const TradeSchedule& s0, const TradeSchedule& s1) {
    const auto mid = convex_combine(s0, s1, 0.5);
    const auto l0 = lambda_functional(market, s0).lambda_T;
    const auto l1 = lambda_functional(market, s1).lambda_T;
    const auto lm = lambda_functional(market, mid).lambda_T;
    std::vector<double> gap(l0.size());
    for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = 0.5 * (l0[k] + l1[k]) - lm[k];
    return gap;
}

TradeSchedule scale_trades(const TradeSchedule& s, double c) {
    if (!(c >= 0.0)) throw ValidationError("scale factor must be non-negative");
    TradeSchedule out = s;
    for (auto& v : out.buys) v *= c;
    for (auto& v : out.sells) v *= c;
    return out;
}

std::vector<QuadraticScaling> quadratic_scaling(const Market& market, const TradeSchedule& s) {
    const ScenarioTree& tree = market.tree();
    const SpreadState st = eta_path(market, s);
    const double zeta0 = market.impact().zeta0;

    // per-path accumulations of int e dmu, int e^2 dmu and mu-mass with e = eta - zeta0
    std::vector<double> first(tree.size(), 0.0);
    std::vector<double> second(tree.size(), 0.0);
    std::vector<double> mass(tree.size(), 0.0);
    std::vector<double> p_int(tree.size(), 0.0);
    for (std::size_t t = 0; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            const std::size_t parent = tree.node(id).parent;
            p_int[id] = tree.node(id).price * s.net(id);
            if (parent == kNoNode) continue;
            const double e = st.eta[parent] - zeta0;
            const double w = market.interval_weight(id);
            p_int[id] += p_int[parent];
            first[id] = first[parent] + e * w;
            second[id] = second[parent] + e * e * w;
            mass[id] = mass[parent] + w;
        }
    }

    std::vector<QuadraticScaling> out;
    out.reserve(tree.leaves().size());
    for (std::size_t id : tree.leaves()) {
        const double e = st.eta[id] - zeta0;
        const double a = market.atom(id);
        QuadraticScaling qs;
        qs.constant = 0.5 * zeta0 * zeta0 * (mass[id] + a);
        qs.linear = p_int[id] + zeta0 * (first[id] + e * a);
        qs.quadratic = 0.5 * (second[id] + e * e * a);
        out.push_back(qs);
    }

    for (double c : {0.0, 1.0, 2.0}) {
        const auto direct = lambda_functional(market, scale_trades(s, c)).lambda_T;
        for (std::size_t k = 0; k < out.size(); ++k) {
            const double fit = out[k].constant + out[k].linear * c + out[k].quadratic * c * c;
            out[k].max_residual = std::max(out[k].max_residual, std::abs(fit - direct[k]));
        }
    }
    return out;
}

} // namespace tpi
