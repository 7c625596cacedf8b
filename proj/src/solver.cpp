#include "tpi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpi/errors.hpp"
#include "tpi/wealth.hpp"

namespace tpi {

namespace {

constexpr std::size_t kMaxOraclePeriods = 3;
constexpr std::size_t kMaxOracleBranches = 3;
constexpr std::size_t kMaxOraclePoints = 1000;
constexpr double kMaxOracleCombos = 5e7;

double smooth_abs(double x, double s) { return s > 0.0 ? std::sqrt(x * x + s * s) - s : std::abs(x); }

double smooth_abs_slope(double x, double s) {
    if (s > 0.0) return x / std::sqrt(x * x + s * s);
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

void check_payoff(const ScenarioTree& tree, std::span<const double> payoff) {
    if (payoff.size() != tree.leaves().size()) throw GridMismatch("payoff length differs from leaf count");
    for (double h : payoff) {
        if (!std::isfinite(h) || h < 0.0) throw ValidationError("payoff must be finite and non-negative");
    }
}

// H + Lambda per leaf as a function of gross trades at internal nodes; the
// leaf trade liquidates the running position.
class CostModel {
public:
    struct Work {
        std::vector<double> x, eta, pint, pen, leaf;
        std::vector<double> pi, big_w, g, r;
    };

    CostModel(const Market& market, std::span<const double> payoff)
        : market_(market), tree_(market.tree()), payoff_(payoff.begin(), payoff.end()),
          var_(tree_.size(), kNoNode) {
        for (std::size_t id = 0; id < tree_.size(); ++id) {
            if (!tree_.is_leaf(id)) {
                var_[id] = internal_.size();
                internal_.push_back(id);
            }
        }
    }

    std::size_t dim() const { return 2 * internal_.size(); }

    void forward(std::span<const double> z, double s, Work& w) const {
        const std::size_t n = tree_.size();
        w.x.resize(n);
        w.eta.resize(n);
        w.pint.resize(n);
        w.pen.resize(n);
        w.leaf.resize(tree_.leaves().size());
        const ImpactParams& ip = market_.impact();
        for (std::size_t t = 0; t <= tree_.last_level(); ++t) {
            for (std::size_t id : tree_.level(t)) {
                const std::size_t parent = tree_.node(id).parent;
                const bool root = parent == kNoNode;
                const double x_pre = root ? ip.x0 : w.x[parent];
                const double eta_pre = root ? ip.zeta0 : w.eta[parent];
                double net;
                double gross;
                if (var_[id] != kNoNode) {
                    const double b = z[2 * var_[id]];
                    const double sl = z[2 * var_[id] + 1];
                    net = b - sl;
                    gross = b + sl;
                } else {
                    net = -x_pre;
                    gross = smooth_abs(x_pre, s);
                }
                w.x[id] = x_pre + net;
                w.eta[id] = eta_pre + market_.impact_ratio(id) * gross;
                w.pint[id] = (root ? 0.0 : w.pint[parent]) + tree_.node(id).price * net;
                w.pen[id] = root ? 0.0 : w.pen[parent] + eta_pre * eta_pre * market_.interval_weight(id);
            }
        }
        for (std::size_t k = 0; k < w.leaf.size(); ++k) {
            const std::size_t id = tree_.leaves()[k];
            w.leaf[k] = payoff_[k] + w.pint[id] + 0.5 * (w.pen[id] + w.eta[id] * w.eta[id] * market_.atom(id));
        }
    }

    // Gradient of sum_k weight[k] * leaf[k] at the point of the last forward().
    void backward(Work& w, std::span<const double> weight, double s, std::span<double> grad) const {
        const std::size_t n = tree_.size();
        w.pi.assign(n, 0.0);
        w.big_w.assign(n, 0.0);
        w.g.assign(n, 0.0);
        w.r.assign(n, 0.0);
        for (std::size_t t = tree_.last_level() + 1; t-- > 0;) {
            for (std::size_t id : tree_.level(t)) {
                if (tree_.is_leaf(id)) {
                    const double q = weight[tree_.leaf_index(id)];
                    w.pi[id] = q;
                    w.big_w[id] = q * market_.atom(id);
                    w.g[id] = w.big_w[id] * w.eta[id];
                    continue;
                }
                double pi = 0.0;
                double bw = 0.0;
                double gsum = 0.0;
                double r = 0.0;
                for (std::size_t c : tree_.children(id)) {
                    pi += w.pi[c];
                    bw += w.pi[c] * market_.interval_weight(c);
                    gsum += w.g[c];
                    if (tree_.is_leaf(c)) {
                        r += -w.pi[c] * tree_.node(c).price +
                             market_.impact_ratio(c) * w.g[c] * smooth_abs_slope(w.x[id], s);
                    } else {
                        r += w.r[c];
                    }
                }
                w.pi[id] = pi;
                w.big_w[id] = bw;
                w.g[id] = bw * w.eta[id] + gsum;
                w.r[id] = r;
                const std::size_t v = var_[id];
                const double common = market_.impact_ratio(id) * w.g[id];
                const double linear = pi * tree_.node(id).price + r;
                grad[2 * v] = common + linear;
                grad[2 * v + 1] = common - linear;
            }
        }
    }

    TradeSchedule schedule(std::span<const double> z) const {
        TradeSchedule s = TradeSchedule::zero(tree_, market_.impact().x0);
        for (std::size_t v = 0; v < internal_.size(); ++v) {
            s.buys[internal_[v]] = z[2 * v];
            s.sells[internal_[v]] = z[2 * v + 1];
        }
        return with_terminal_liquidation(tree_, normalize(s));
    }

    std::vector<double> variables(const TradeSchedule& s) const {
        std::vector<double> z(dim());
        for (std::size_t v = 0; v < internal_.size(); ++v) {
            z[2 * v] = s.buys[internal_[v]];
            z[2 * v + 1] = s.sells[internal_[v]];
        }
        return z;
    }

private:
    const Market& market_;
    const ScenarioTree& tree_;
    std::vector<double> payoff_;
    std::vector<std::size_t> var_;
    std::vector<std::size_t> internal_;
};

// Accelerated projected gradient on the non-negative orthant with
// backtracking and function-value restart. Returns the iterations used.
template <class Fn>
std::size_t fista(Fn&& fn, std::vector<double>& z, std::size_t budget, double grad_tol, double& lip, bool& settled) {
    const std::size_t n = z.size();
    settled = true;
    if (n == 0) return 0;
    settled = false;
    std::vector<double> y = z;
    std::vector<double> g(n);
    std::vector<double> gtmp(n);
    std::vector<double> zn(n);
    double fz = fn(z, gtmp);
    double t = 1.0;
    std::size_t it = 0;
    while (it < budget) {
        ++it;
        const double fy = fn(y, g);
        double fzn = 0.0;
        double dist2 = 0.0;
        for (int bt = 0; bt < 80; ++bt) {
            double lin = 0.0;
            dist2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                zn[i] = std::max(0.0, y[i] - g[i] / lip);
                const double d = zn[i] - y[i];
                lin += g[i] * d;
                dist2 += d * d;
            }
            fzn = fn(zn, gtmp);
            if (fzn <= fy + lin + 0.5 * lip * dist2 + 1e-14 * (1.0 + std::abs(fy))) break;
            lip *= 2.0;
        }
        const double gm = lip * std::sqrt(dist2);
        if (fzn > fz) {
            t = 1.0;
            y = z;
            if (gm <= grad_tol) {
                settled = true;
                break;
            }
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < n; ++i) y[i] = std::max(0.0, zn[i] + mom * (zn[i] - z[i]));
        z = zn;
        fz = fzn;
        t = t_next;
        if (gm <= grad_tol) {
            settled = true;
            break;
        }
        lip *= 0.98;
    }
    return it;
}

std::vector<double> temperatures(const SolverOptions& opts, double scale) {
    std::vector<double> out;
    for (double tau = opts.smoothing_start; tau > opts.smoothing_end * (1.0 + 1e-9); tau *= opts.smoothing_factor)
        out.push_back(tau * scale);
    out.push_back(opts.smoothing_end * scale);
    return out;
}

double max_price(const ScenarioTree& tree) { return price_scale(tree) - 1.0; }

std::vector<bool> positive_leaves(const ScenarioTree& tree) {
    const auto p = leaf_probabilities(tree, NodeMeasure::reference(tree));
    std::vector<bool> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out[k] = p[k] > 0.0;
    return out;
}

// Soft-max of the leaf costs over the support; fills weights.
double soft_max(std::span<const double> f, const std::vector<bool>& support, double tau, std::vector<double>& weight) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (support[k]) m = std::max(m, f[k]);
    }
    double total = 0.0;
    weight.assign(f.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!support[k]) continue;
        weight[k] = std::exp((f[k] - m) / tau);
        total += weight[k];
    }
    for (double& w : weight) w /= total;
    return m + tau * std::log(total);
}

double exact_max(std::span<const double> f, const std::vector<bool>& support) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (support[k]) m = std::max(m, f[k]);
    }
    return m;
}

} // namespace

void SolverOptions::validate() const {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (max_iter == 0) throw ValidationError("max_iter must be positive");
    if (!(smoothing_start > 0.0) || !(smoothing_end > 0.0) || smoothing_end > smoothing_start)
        throw ValidationError("smoothing schedule must satisfy 0 < end <= start");
    if (!(smoothing_factor > 0.0 && smoothing_factor < 1.0)) throw ValidationError("smoothing_factor must lie in (0, 1)");
    if (inner_iter == 0) throw ValidationError("inner_iter must be positive");
}

double solver_scale(const ScenarioTree& tree, std::span<const double> payoff) {
    double h = 0.0;
    for (double v : payoff) h = std::max(h, std::abs(v));
    return price_scale(tree) + h;
}

PriceReport primal_solve(const Market& market, std::span<const double> payoff, const SolverOptions& opts) {
    opts.validate();
    const ScenarioTree& tree = market.tree();
    check_payoff(tree, payoff);
    const CostModel model(market, payoff);
    const auto support = positive_leaves(tree);
    const double offset = market.initial_offset();
    const double share_unit = 1.0 + max_price(tree);

    PriceReport rep;
    rep.scale = solver_scale(tree, payoff);
    const auto taus = temperatures(opts, rep.scale);
    const std::size_t stage_budget = std::max<std::size_t>(1, opts.max_iter / taus.size());

    std::vector<double> z(model.dim(), 0.0);
    CostModel::Work work;
    std::vector<double> weight;
    model.forward(z, 0.0, work);
    double best = exact_max(work.leaf, support);
    std::vector<double> best_z = z;
    double lip = 1.0;
    double prev_stage = std::numeric_limits<double>::quiet_NaN();
    bool settled = false;
    bool first_settled = false;

    for (double tau : taus) {
        const double s = tau / share_unit;
        auto fn = [&](const std::vector<double>& zz, std::vector<double>& grad) {
            model.forward(zz, s, work);
            const double v = soft_max(work.leaf, support, tau, weight);
            model.backward(work, weight, s, grad);
            return v;
        };
        rep.primal_iterations += fista(fn, z, stage_budget, 1e-3 * tau, lip, settled);
        if (rep.stages == 0) first_settled = settled;
        ++rep.stages;

        model.forward(z, s, work);
        soft_max(work.leaf, support, tau, weight);
        rep.stage_weights.push_back(weight);

        // exact value of the normalized, liquidating schedule
        const auto zz = model.variables(model.schedule(z));
        model.forward(zz, 0.0, work);
        const double stage_value = exact_max(work.leaf, support);
        if (stage_value < best) {
            best = stage_value;
            best_z = zz;
        }
        if (!std::isnan(prev_stage)) rep.last_stage_change = std::abs(stage_value - prev_stage);
        prev_stage = stage_value;
    }

    // the smoothest stage must stop on its gradient test; a starved budget fails here
    rep.primal_converged = first_settled && rep.stages >= 2 && rep.last_stage_change <= opts.tol * rep.scale;
    rep.strategy = model.schedule(best_z);
    model.forward(best_z, 0.0, work);
    rep.leaf_cost = work.leaf;
    rep.primal_value = exact_max(work.leaf, support) - offset;
    return rep;
}

std::vector<double> TradeGrid::points() const {
    if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        throw ValidationError("trade grid needs lo <= hi and step > 0");
    const double count = std::floor((hi - lo) / step + 1e-9) + 1.0;
    if (count > static_cast<double>(kMaxOraclePoints)) throw InstanceTooLarge("trade grid has more than 1000 points");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lo + static_cast<double>(i) * step;
    return out;
}

void for_each_lattice_schedule(const ScenarioTree& tree, double x0, const TradeGrid& grid,
                               const std::function<void(const TradeSchedule&)>& visit) {
    if (tree.last_level() > kMaxOraclePeriods) throw InstanceTooLarge("oracle supports at most 3 periods");
    std::vector<std::size_t> internal;
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (tree.children(id).size() > kMaxOracleBranches) throw InstanceTooLarge("oracle supports at most 3 branches");
        if (!tree.is_leaf(id)) internal.push_back(id);
    }
    const auto pts = grid.points();
    const double combos = std::pow(static_cast<double>(pts.size()), static_cast<double>(internal.size()));
    if (combos > kMaxOracleCombos) throw InstanceTooLarge("trade lattice exceeds 5e7 schedules");

    std::vector<std::size_t> digit(internal.size(), 0);
    TradeSchedule base = TradeSchedule::zero(tree, x0);
    while (true) {
        TradeSchedule s = base;
        for (std::size_t v = 0; v < internal.size(); ++v) {
            const double net = pts[digit[v]];
            s.buys[internal[v]] = std::max(net, 0.0);
            s.sells[internal[v]] = std::max(-net, 0.0);
        }
        visit(with_terminal_liquidation(tree, s));
        std::size_t v = 0;
        while (v < digit.size() && ++digit[v] == pts.size()) digit[v++] = 0;
        if (v == digit.size()) break;
    }
}

OracleResult brute_force_oracle(const Market& market, std::span<const double> payoff, const TradeGrid& grid) {
    const ScenarioTree& tree = market.tree();
    check_payoff(tree, payoff);
    ImpactParams ip = market.impact();
    ip.xi0 = 0.0;
    const Market m = market.with_impact(ip);
    const auto support = positive_leaves(tree);

    OracleResult res;
    for_each_lattice_schedule(tree, ip.x0, grid, [&](const TradeSchedule& s) {
        const auto cash = terminal_cash_direct(m, s);
        double need = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cash.size(); ++k) {
            if (support[k]) need = std::max(need, payoff[k] - cash[k]);
        }
        ++res.evaluated;
        if (need < res.value) {
            res.value = need;
            res.strategy = s;
        }
    });
    return res;
}

BestResponse best_response(const Market& market, std::span<const double> payoff, const NodeMeasure& q,
                           const SolverOptions& opts) {
    const ScenarioTree& tree = market.tree();
    check_payoff(tree, payoff);
    q.validate(tree);
    const CostModel model(market, payoff);
    const auto weight = leaf_probabilities(tree, q);
    const double scale = solver_scale(tree, payoff);
    const double share_unit = 1.0 + max_price(tree);
    const auto taus = temperatures(opts, scale);
    const std::size_t stage_budget = std::max<std::size_t>(100, opts.inner_iter / taus.size());

    std::vector<double> z(model.dim(), 0.0);
    CostModel::Work work;
    double lip = 1.0;
    bool settled = false;
    for (double tau : taus) {
        const double s = tau / share_unit;
        auto fn = [&](const std::vector<double>& zz, std::vector<double>& grad) {
            model.forward(zz, s, work);
            model.backward(work, weight, s, grad);
            return std::inner_product(weight.begin(), weight.end(), work.leaf.begin(), 0.0);
        };
        fista(fn, z, stage_budget, 1e-3 * tau, lip, settled);
    }

    BestResponse br;
    br.schedule = model.schedule(z);
    model.forward(model.variables(br.schedule), 0.0, work);
    br.leaf_cost = work.leaf;
    br.certificate = complete_certificate(market, q, work.eta);
    if (check_feasibility(market, br.certificate).feasible)
        br.value = dual_objective(market, br.certificate, payoff);
    return br;
}

namespace {

// Per-node logits for the measure; reference-null children stay at zero mass.
struct LogitMeasure {
    std::vector<double> logit;
    std::vector<bool> active;

    LogitMeasure(const ScenarioTree& tree, const NodeMeasure& q) : logit(tree.size(), 0.0), active(tree.size(), false) {
        for (std::size_t id = 0; id < tree.size(); ++id) {
            if (id == tree.root()) continue;
            active[id] = tree.node(id).p_transition > 0.0;
            logit[id] = active[id] ? std::log(std::max(q.transition[id], 1e-30)) : 0.0;
        }
    }

    NodeMeasure measure(const ScenarioTree& tree) const {
        NodeMeasure q;
        q.transition.assign(tree.size(), 0.0);
        q.transition[tree.root()] = 1.0;
        for (std::size_t id = 0; id < tree.size(); ++id) {
            if (tree.is_leaf(id)) continue;
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t c : tree.children(id)) {
                if (active[c]) m = std::max(m, logit[c]);
            }
            double total = 0.0;
            for (std::size_t c : tree.children(id)) {
                if (active[c]) total += std::exp(logit[c] - m);
            }
            for (std::size_t c : tree.children(id)) q.transition[c] = active[c] ? std::exp(logit[c] - m) / total : 0.0;
        }
        return q;
    }
};

} // namespace

PriceReport dual_ascent(const Market& market, std::span<const double> payoff, const DualCertificate& init,
                        const SolverOptions& opts) {
    opts.validate();
    const ScenarioTree& tree = market.tree();
    check_payoff(tree, payoff);
    try {
        init.validate(tree);
    } catch (const Error& e) {
        throw InfeasibleInit(std::string("initial certificate invalid: ") + e.what());
    }
    const FeasibilityReport feas = check_feasibility(market, init);
    if (!feas.feasible) throw InfeasibleInit("initial certificate violates the band or martingale condition");

    PriceReport rep;
    rep.scale = solver_scale(tree, payoff);
    rep.certificate = init;
    rep.dual_value = dual_objective(market, init, payoff);
    rep.init_dual_value = rep.dual_value;

    LogitMeasure theta(tree, init.q);
    BestResponse cur = best_response(market, payoff, theta.measure(tree), opts);
    if (cur.value > rep.dual_value) {
        rep.dual_value = cur.value;
        rep.certificate = cur.certificate;
    }
    double step = 1.0;
    for (std::size_t it = 0; it < opts.dual_iter && step > 1e-8; ++it) {
        ++rep.dual_iterations;
        const NodeMeasure q = theta.measure(tree);
        std::vector<double> node_g(tree.size(), 0.0);
        for (std::size_t k = 0; k < tree.leaves().size(); ++k) node_g[tree.leaves()[k]] = cur.leaf_cost[k];
        const auto cond = conditional_expectation(tree, q, node_g);

        LogitMeasure trial = theta;
        for (std::size_t id = 0; id < tree.size(); ++id) {
            if (!trial.active[id]) continue;
            trial.logit[id] += step * (cond[id] - cond[tree.node(id).parent]) / rep.scale;
        }
        BestResponse next = best_response(market, payoff, trial.measure(tree), opts);
        if (next.value > rep.dual_value) {
            rep.dual_value = next.value;
            rep.certificate = next.certificate;
            theta = trial;
            cur = std::move(next);
            step *= 2.0;
        } else {
            step *= 0.5;
        }
        rep.dual_trace.push_back(rep.dual_value);
    }
    return rep;
}

PriceReport gap_report(const Market& market, std::span<const double> payoff, const SolverOptions& opts) {
    PriceReport primal = primal_solve(market, payoff, opts);
    const ScenarioTree& tree = market.tree();

    DualCertificate init = running_max_certificate(market);
    double init_value = dual_objective(market, init, payoff);
    for (const auto& w : primal.stage_weights) {
        const NodeMeasure q = NodeMeasure::from_leaf_weights(tree, w);
        BestResponse br = best_response(market, payoff, q, opts);
        if (br.value > init_value) {
            init_value = br.value;
            init = br.certificate;
        }
    }
    PriceReport dual = dual_ascent(market, payoff, init, opts);

    PriceReport rep = std::move(primal);
    rep.dual_value = dual.dual_value;
    rep.certificate = std::move(dual.certificate);
    rep.dual_iterations = dual.dual_iterations;
    rep.dual_trace = std::move(dual.dual_trace);
    rep.init_dual_value = dual.init_dual_value;
    rep.gap = rep.primal_value - rep.dual_value;
    if (rep.gap < -1e-9 * rep.scale) throw Error("weak duality violated between primal and dual solutions");
    return rep;
}

} // namespace tpi
