#include "tpi/applications.hpp"

#include <algorithm>
#include <cmath>

#include "tpi/errors.hpp"
#include "tpi/wealth.hpp"

namespace tpi {

void CallSpec::validate() const {
    if (!(strike >= 0.0) || !std::isfinite(strike)) throw ValidationError("strike must be finite and non-negative");
}

std::vector<double> CallSpec::payoff(const ScenarioTree& tree) const {
    validate();
    std::vector<double> h;
    h.reserve(tree.leaves().size());
    for (std::size_t id : tree.leaves()) h.push_back(std::max(tree.node(id).price - strike, 0.0));
    return h;
}

double call_price_formula(const MarketSpec& spec, double p0, AssumptionCheck check) {
    const std::vector<double> path(spec.grid.size(), p0);
    return call_price_formula(Market::on_path(spec, path, check));
}

double call_price_formula(const Market& market) {
    const ImpactParams& ip = market.impact();
    if (ip.x0 > 1.0) throw NotApplicable("closed form needs x0 <= 1");
    if (!market.deterministic_liquidity()) throw NotApplicable("closed form needs deterministic depth and resilience");
    const ScenarioTree& tree = market.tree();
    const std::size_t leaf = tree.leaves().front();
    const double p0 = tree.node(tree.root()).price;
    const double d0 = market.delta0();
    const double d_t = tree.node(leaf).delta;
    const double rho_t = market.rho(leaf);
    const double y = 1.0 - ip.x0;
    return p0 * y - 0.5 * ip.iota * ip.x0 * ip.x0 + ip.zeta0 * y + y * y / (2.0 * d0) + (ip.zeta0 + y / d0) / rho_t +
           1.0 / (2.0 * d_t);
}

TradeSchedule buy_and_hold(const ScenarioTree& tree, double x0) {
    if (!std::isfinite(x0)) throw ValidationError("x0 must be finite");
    TradeSchedule s = TradeSchedule::zero(tree, x0);
    const double first = 1.0 - x0;
    if (first > 0.0) s.buys[tree.root()] = first;
    else s.sells[tree.root()] = -first;
    for (std::size_t id : tree.leaves()) s.sells[id] += 1.0;
    return s;
}

CallCheck verify_call_superreplication(const Market& market, const CallSpec& call) {
    const ScenarioTree& tree = market.tree();
    for (const auto& n : tree.nodes()) {
        if (n.price < 0.0) throw ValidationError("prices must be non-negative");
    }
    CallCheck out;
    out.xi0 = call_price_formula(market);
    ImpactParams ip = market.impact();
    ip.xi0 = out.xi0;
    const Market funded = market.with_impact(ip);
    const TradeSchedule s = buy_and_hold(tree, ip.x0);
    out.xi_T = terminal_cash_direct(funded, s);
    out.payoff = call.payoff(tree);
    for (std::size_t k = 0; k < out.xi_T.size(); ++k) {
        const double p_t = tree.node(tree.leaves()[k]).price;
        out.p_T.push_back(p_t);
        const double err = std::abs(out.xi_T[k] - p_t);
        out.max_identity_error = std::max(out.max_identity_error, err);
        if (err > 1e-10 * (1.0 + std::abs(p_t))) out.identity_holds = false;
        if (out.xi_T[k] < out.payoff[k] - 1e-10 * (1.0 + std::abs(p_t))) out.superreplicates = false;
    }
    return out;
}

void Utility::validate() const {
    switch (kind) {
    case UtilityKind::exponential:
        if (!(parameter > 0.0)) throw ValidationError("exponential utility needs a > 0");
        break;
    case UtilityKind::power:
        if (!(parameter > 0.0) || parameter == 1.0) throw ValidationError("power utility needs g > 0, g != 1");
        break;
    case UtilityKind::logarithmic:
        break;
    }
}

bool Utility::in_domain(double x) const {
    if (!std::isfinite(x)) return false;
    return kind == UtilityKind::exponential || x > 0.0;
}

double Utility::value(double x) const {
    switch (kind) {
    case UtilityKind::exponential:
        return -std::exp(-parameter * x) / parameter;
    case UtilityKind::power:
        return std::pow(x, 1.0 - parameter) / (1.0 - parameter);
    case UtilityKind::logarithmic:
        return std::log(x);
    }
    return 0.0;
}

double Utility::marginal(double x) const {
    switch (kind) {
    case UtilityKind::exponential:
        return std::exp(-parameter * x);
    case UtilityKind::power:
        return std::pow(x, -parameter);
    case UtilityKind::logarithmic:
        return 1.0 / x;
    }
    return 0.0;
}

std::string Utility::name() const {
    switch (kind) {
    case UtilityKind::exponential:
        return "exponential";
    case UtilityKind::power:
        return "power";
    case UtilityKind::logarithmic:
        return "log";
    }
    return "";
}

BandFeasibility shadow_band_feasibility(const ScenarioTree& tree, const NodeMeasure& q,
                                        std::span<const double> lambda, std::span<const int> pins, double tol) {
    q.validate(tree);
    if (lambda.size() != tree.size()) throw GridMismatch("lambda must be node-indexed");
    if (!pins.empty() && pins.size() != tree.size()) throw GridMismatch("pins must be node-indexed");
    std::vector<double> lower(tree.size());
    std::vector<double> upper(tree.size());
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (!(lambda[id] >= 0.0)) throw ValidationError("lambda must be non-negative");
        const double p = tree.node(id).price;
        lower[id] = p - lambda[id];
        upper[id] = p + lambda[id];
        if (!pins.empty() && pins[id] > 0) lower[id] = upper[id];
        if (!pins.empty() && pins[id] < 0) upper[id] = lower[id];
    }
    BandFeasibility out;
    out.intervals = martingale_band_intervals(tree, q, lower, upper, tol);
    out.feasible = out.intervals.feasible;
    out.first_empty = out.intervals.first_empty;
    if (out.feasible) {
        std::vector<double> terminal;
        for (std::size_t id : tree.leaves()) terminal.push_back(tree.node(id).price);
        const auto target = martingale_projection(tree, q, terminal);
        out.martingale = select_band_martingale_near(tree, q, out.intervals, target);
    }
    return out;
}

ShadowVerdict shadow_price_check(const Market& market, const ShadowCheckInput& input) {
    const ScenarioTree& tree = market.tree();
    input.utility.validate();
    const TradeSchedule s = normalize(input.schedule);
    s.validate(tree);
    if (s.x0 != market.impact().x0) throw GridMismatch("schedule and market disagree on x0");
    const auto liquidated = check_terminal_zero(tree, s);
    for (bool ok : liquidated) {
        if (!ok) throw TerminalNotZero("candidate schedule keeps a terminal position");
    }

    ShadowVerdict v;
    v.tolerance = 1e-8 * price_scale(tree);
    v.xi_T = terminal_cash_direct(market, s);
    const auto p_leaf = leaf_probabilities(tree, NodeMeasure::reference(tree));
    std::vector<double> density(v.xi_T.size());
    for (std::size_t k = 0; k < v.xi_T.size(); ++k) {
        if (!input.utility.in_domain(v.xi_T[k])) throw ValidationError("utility undefined at the candidate's terminal cash");
        const double du = input.utility.marginal(v.xi_T[k]);
        if (!(du > 0.0) || !std::isfinite(du)) throw ValidationError("marginal utility must be positive and finite");
        density[k] = p_leaf[k] * du;
    }
    v.q = NodeMeasure::from_leaf_weights(tree, density);
    v.alpha = eta_path(market, s).eta;
    DualCertificate probe{v.q, std::vector<double>(tree.size(), 0.0), v.alpha};
    v.lambda = constraint_bound(market, probe);

    std::vector<int> pins(tree.size(), 0);
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (s.buys[id] > 0.0) pins[id] = 1;
        else if (s.sells[id] > 0.0) pins[id] = -1;
    }

    if (input.martingale) {
        if (input.martingale->size() != tree.size()) throw GridMismatch("candidate martingale must be node-indexed");
        v.martingale = *input.martingale;
    } else {
        v.searched = true;
        BandFeasibility bf = shadow_band_feasibility(tree, v.q, v.lambda, pins, v.tolerance);
        if (!bf.feasible) {
            v.verdict = "inconclusive";
            v.reasons.push_back("no martingale inside the band touches it where the schedule trades (first empty node " +
                                std::to_string(bf.first_empty) + ")");
            return v;
        }
        v.martingale = std::move(bf.martingale);
    }

    const auto& m = v.martingale;
    v.martingale_ok = true;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (tree.is_leaf(id)) continue;
        double e = 0.0;
        for (std::size_t c : tree.children(id)) e += v.q.transition[c] * m[c];
        v.martingale_defect = std::max(v.martingale_defect, std::abs(m[id] - e));
    }
    v.martingale_ok = v.martingale_defect <= v.tolerance;

    v.lower_slack.resize(tree.size());
    v.upper_slack.resize(tree.size());
    v.flat_off.assign(tree.size(), 0.0);
    v.band_ok = true;
    v.flat_off_ok = true;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const double p = tree.node(id).price;
        v.lower_slack[id] = m[id] - (p - v.lambda[id]);
        v.upper_slack[id] = (p + v.lambda[id]) - m[id];
        if (v.lower_slack[id] < -v.tolerance || v.upper_slack[id] < -v.tolerance) v.band_ok = false;
        if (pins[id] > 0) v.flat_off[id] = std::abs(v.upper_slack[id]);
        if (pins[id] < 0) v.flat_off[id] = std::abs(v.lower_slack[id]);
        if (v.flat_off[id] > v.tolerance) v.flat_off_ok = false;
    }
    if (!v.martingale_ok) v.reasons.push_back("candidate is not a martingale under the utility-weighted measure");
    if (!v.band_ok) v.reasons.push_back("candidate leaves the band [P - lambda, P + lambda]");
    if (!v.flat_off_ok) v.reasons.push_back("candidate does not touch the band where the schedule trades");
    v.verdict = v.martingale_ok && v.band_ok && v.flat_off_ok ? "optimal" : "inconclusive";
    return v;
}

} // namespace tpi
