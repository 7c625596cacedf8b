#include "tpi/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tpi/errors.hpp"
#include "tpi/wealth.hpp"

namespace tpi {

namespace {

constexpr double kFeasibilityTolerance = 1e-10;
constexpr double kReplicationTolerance = 1e-9;

double expectation(std::span<const double> probs, std::span<const double> values) {
    double e = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) e += probs[k] * values[k];
    return e;
}

void check_payoff(const ScenarioTree& tree, std::span<const double> payoff) {
    if (payoff.size() != tree.leaves().size()) throw GridMismatch("payoff length differs from leaf count");
    for (double h : payoff) {
        if (!std::isfinite(h)) throw ValidationError("payoff must be finite");
        if (h < 0.0) throw ValidationError("payoff must be non-negative");
    }
}

// S_n = E_Q[ sum alpha(left) mu + alpha_T kappa_T | n ] for the whole tree.
std::vector<double> tail_integral(const Market& market, const NodeMeasure& q, std::span<const double> alpha) {
    const ScenarioTree& tree = market.tree();
    std::vector<double> s(tree.size(), 0.0);
    for (std::size_t t = tree.last_level() + 1; t-- > 0;) {
        for (std::size_t id : tree.level(t)) {
            if (tree.is_leaf(id)) {
                s[id] = alpha[id] * market.atom(id);
                continue;
            }
            double acc = 0.0;
            for (std::size_t c : tree.children(id)) acc += q.transition[c] * (alpha[id] * market.interval_weight(c) + s[c]);
            s[id] = acc;
        }
    }
    return s;
}

std::vector<std::size_t> subtree(const ScenarioTree& tree, std::size_t id) {
    std::vector<std::size_t> ids{id};
    for (std::size_t k = 0; k < ids.size(); ++k) {
        for (std::size_t c : tree.children(ids[k])) ids.push_back(c);
    }
    return ids;
}

} // namespace

double price_scale(const ScenarioTree& tree) {
    double m = 0.0;
    for (const auto& n : tree.nodes()) m = std::max(m, std::abs(n.price));
    return 1.0 + m;
}

void DualCertificate::validate(const ScenarioTree& tree) const {
    if (martingale.size() != tree.size() || alpha.size() != tree.size())
        throw GridMismatch("certificate vectors must be node-indexed");
    try {
        q.validate(tree);
    } catch (const ValidationError& e) {
        throw InvalidCertificate(std::string("certificate measure: ") + e.what());
    }
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (!std::isfinite(martingale[i]) || !std::isfinite(alpha[i]))
            throw InvalidCertificate("certificate contains non-finite values");
    }
}

std::vector<double> constraint_bound(const Market& market, const DualCertificate& cert) {
    cert.validate(market.tree());
    auto s = tail_integral(market, cert.q, cert.alpha);
    for (std::size_t id = 0; id < s.size(); ++id) s[id] *= market.impact_ratio(id);
    return s;
}

FeasibilityReport check_feasibility(const Market& market, const DualCertificate& cert) {
    const ScenarioTree& tree = market.tree();
    FeasibilityReport rep;
    rep.bound = constraint_bound(market, cert);
    rep.scale = price_scale(tree);
    rep.slack.resize(tree.size());
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const double gap = std::abs(tree.node(id).price - cert.martingale[id]);
        rep.slack[id] = rep.bound[id] - gap;
        if (-rep.slack[id] > rep.worst_violation) {
            rep.worst_violation = -rep.slack[id];
            rep.worst_node = id;
        }
    }
    const MartingaleCheck mc = is_martingale(tree, cert.q, cert.martingale);
    rep.martingale_defect = mc.max_defect;
    rep.feasible = mc.ok && rep.worst_violation <= kFeasibilityTolerance * rep.scale;
    return rep;
}

double alpha_penalty(const Market& market, const DualCertificate& cert) {
    const ScenarioTree& tree = market.tree();
    cert.validate(tree);
    const double zeta0 = market.impact().zeta0;
    const auto pi = node_probabilities(tree, cert.q);
    double acc = 0.0;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const std::size_t parent = tree.node(id).parent;
        if (parent != kNoNode) {
            const double e = cert.alpha[parent] - zeta0;
            acc += pi[id] * e * e * market.interval_weight(id);
        }
        if (tree.is_leaf(id)) {
            const double e = cert.alpha[id] - zeta0;
            acc += pi[id] * e * e * market.atom(id);
        }
    }
    return 0.5 * acc;
}

double dual_objective(const Market& market, const DualCertificate& cert, std::span<const double> payoff) {
    const ScenarioTree& tree = market.tree();
    check_payoff(tree, payoff);
    cert.validate(tree);
    const auto ql = leaf_probabilities(tree, cert.q);
    const ImpactParams& ip = market.impact();
    return expectation(ql, payoff) - alpha_penalty(market, cert) - cert.martingale[tree.root()] * ip.x0 -
           0.5 * ip.iota * ip.x0 * ip.x0;
}

WeakDualityReport weak_duality_check(const Market& market, const TradeSchedule& s, double xi0,
                                     const DualCertificate& cert, std::span<const double> payoff) {
    const ScenarioTree& tree = market.tree();
    check_payoff(tree, payoff);
    cert.validate(tree);
    if (!std::isfinite(xi0)) throw ValidationError("initial cash must be finite");
    if (s.x0 != market.impact().x0) throw GridMismatch("schedule and market disagree on x0");

    ImpactParams ip = market.impact();
    ip.xi0 = xi0;
    const Market m = market.with_impact(ip);

    WeakDualityReport rep;
    rep.xi0 = xi0;
    double hmax = 0.0;
    for (double h : payoff) hmax = std::max(hmax, std::abs(h));
    rep.scale = price_scale(tree) + hmax + std::abs(xi0);

    const auto liquidated = check_terminal_zero(tree, s);
    for (std::size_t k = 0; k < liquidated.size(); ++k) {
        if (!liquidated[k]) throw SuperReplicationViolated("schedule keeps a terminal position");
    }
    const auto xi_t = terminal_cash_direct(m, s);
    for (std::size_t k = 0; k < xi_t.size(); ++k) {
        if (xi_t[k] < payoff[k] - kReplicationTolerance * rep.scale) {
            std::ostringstream os;
            os << "terminal cash " << xi_t[k] << " below payoff " << payoff[k] << " at leaf " << tree.leaves()[k];
            throw SuperReplicationViolated(os.str());
        }
    }
    const FeasibilityReport feas = check_feasibility(m, cert);
    if (!feas.feasible) {
        std::ostringstream os;
        os << "certificate violates the band by " << feas.worst_violation << " at node " << feas.worst_node;
        throw InfeasibleCertificate(os.str());
    }

    rep.dual_value = dual_objective(m, cert, payoff);
    rep.margin = xi0 - rep.dual_value;

    const auto ql = leaf_probabilities(tree, cert.q);
    const auto pi = node_probabilities(tree, cert.q);
    for (std::size_t k = 0; k < ql.size(); ++k) rep.superreplication_slack += ql[k] * (xi_t[k] - payoff[k]);

    const SpreadState st = eta_path(m, s);
    rep.node_band_slack.resize(tree.size());
    double square = 0.0;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const double v = s.gross(id);
        const double dx = s.net(id);
        rep.node_band_slack[id] = feas.bound[id] * v + (tree.node(id).price - cert.martingale[id]) * dx;
        rep.band_slack += pi[id] * rep.node_band_slack[id];
        const std::size_t parent = tree.node(id).parent;
        if (parent != kNoNode) {
            const double e = st.eta[parent] - cert.alpha[parent];
            square += pi[id] * e * e * m.interval_weight(id);
        }
        if (tree.is_leaf(id)) {
            const double e = st.eta[id] - cert.alpha[id];
            square += pi[id] * e * e * m.atom(id);
        }
    }
    rep.square_slack = 0.5 * square;
    rep.identity_residual = rep.margin - (rep.superreplication_slack + rep.band_slack + rep.square_slack);
    return rep;
}

DualCertificate running_max_certificate(const Market& market) {
    const ScenarioTree& tree = market.tree();
    DualCertificate cert;
    cert.q = NodeMeasure::reference(tree);
    cert.martingale.assign(tree.size(), 0.0);
    cert.alpha.assign(tree.size(), 0.0);
    for (std::size_t t = 0; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            const std::size_t parent = tree.node(id).parent;
            const double here = std::abs(tree.node(id).price) * market.rho(id);
            cert.alpha[id] = parent == kNoNode ? here : std::max(cert.alpha[parent], here);
        }
    }
    return cert;
}

BandIntervals certificate_intervals(const Market& market, const NodeMeasure& q, std::span<const double> alpha,
                                    double tol) {
    const ScenarioTree& tree = market.tree();
    auto b = tail_integral(market, q, alpha);
    std::vector<double> lower(tree.size());
    std::vector<double> upper(tree.size());
    for (std::size_t id = 0; id < tree.size(); ++id) {
        b[id] *= market.impact_ratio(id);
        lower[id] = tree.node(id).price - b[id];
        upper[id] = tree.node(id).price + b[id];
    }
    return martingale_band_intervals(tree, q, lower, upper, tol);
}

DualCertificate complete_certificate(const Market& market, const NodeMeasure& q, std::vector<double> alpha) {
    const ScenarioTree& tree = market.tree();
    q.validate(tree);
    if (alpha.size() != tree.size()) throw GridMismatch("alpha must be node-indexed");
    const double scale = price_scale(tree);
    const double margin = 1e-13 * scale;

    std::vector<double> s(tree.size(), 0.0);
    std::vector<double> lo(tree.size(), 0.0);
    std::vector<double> hi(tree.size(), 0.0);
    bool restart = true;
    while (restart) {
        restart = false;
        for (std::size_t t = tree.last_level() + 1; t-- > 0 && !restart;) {
            for (std::size_t id : tree.level(t)) {
                const double price = tree.node(id).price;
                const double c = market.impact_ratio(id);
                double e_lo = -std::numeric_limits<double>::infinity();
                double e_hi = std::numeric_limits<double>::infinity();
                double wsum = 0.0;
                double tail = 0.0;
                if (tree.is_leaf(id)) {
                    wsum = market.atom(id);
                } else {
                    e_lo = e_hi = 0.0;
                    for (std::size_t ch : tree.children(id)) {
                        e_lo += q.transition[ch] * lo[ch];
                        e_hi += q.transition[ch] * hi[ch];
                        wsum += q.transition[ch] * market.interval_weight(ch);
                        tail += q.transition[ch] * s[ch];
                    }
                }
                double b = c * (alpha[id] * wsum + tail);
                const double need = std::max({0.0, -b, e_lo - (price + b), (price - b) - e_hi});
                if (need > 0.0) {
                    const double d = need + margin;
                    if (c * wsum > 1e-12 * c * market.kappa(id)) {
                        alpha[id] += d / (c * wsum);
                        b = c * (alpha[id] * wsum + tail);
                    } else {
                        // flat kappa right below: lift the whole subtree
                        const double lift = d / (c * market.kappa(id));
                        for (std::size_t v : subtree(tree, id)) alpha[v] += lift;
                        restart = true;
                        break;
                    }
                }
                s[id] = alpha[id] * wsum + tail;
                lo[id] = std::max(price - b, e_lo);
                hi[id] = std::max(lo[id], std::min(price + b, e_hi));
            }
        }
    }

    BandIntervals iv = certificate_intervals(market, q, alpha, 1e-9 * scale);
    if (!iv.feasible) throw InfeasibleCertificate("certificate repair failed");
    const double x0 = market.impact().x0;
    const std::size_t root = tree.root();
    double root_value = std::clamp(tree.node(root).price, iv.lo[root], iv.hi[root]);
    if (x0 > 0.0) root_value = iv.lo[root];
    if (x0 < 0.0) root_value = iv.hi[root];

    DualCertificate cert;
    cert.q = q;
    cert.martingale = select_band_martingale(tree, q, iv, root_value);
    cert.alpha = std::move(alpha);
    return cert;
}

} // namespace tpi
