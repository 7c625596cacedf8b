#include "tpi/cli.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tpi/applications.hpp"
#include "tpi/io.hpp"
#include "tpi/solver.hpp"
#include "tpi/wealth.hpp"

namespace tpi::cli {

namespace {

using io::json;

constexpr std::uint64_t kDefaultSeed = 20240917;

struct RunConfig {
    std::string command;
    std::string market;
    std::string tree;
    std::string strategy;
    std::string certificate;
    std::string payoff = "zero";
    std::string paths;
    std::string options;
    std::string breakdown;
    std::string trade_grid;
    std::string assumptions = "strict";
    std::string format = "json";
    std::string out;
    std::string g;
    std::string utility = "exp:1";
    std::optional<double> tol;
    std::optional<std::size_t> max_iter;
    std::optional<double> p0;
    double strike = 0.0;
    double eps = 0.0;
    std::uint64_t seed = kDefaultSeed;
    bool require_liquidation = false;
};

// Per-node series for plot-ready CSV output; missing columns stay empty.
struct NodeTable {
    std::optional<ScenarioTree> tree;
    std::map<std::string, std::vector<double>> columns;
};

struct Report {
    json body;
    NodeTable table;
    int code = kOk;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string render_csv(const NodeTable& t) {
    static const char* order[] = {"P", "X", "eta", "M", "B", "alpha"};
    std::ostringstream os;
    os << "id,parent,t_index,time";
    for (const char* c : order) os << ',' << c;
    os << '\n';
    if (!t.tree) return os.str();
    for (std::size_t id = 0; id < t.tree->size(); ++id) {
        const TreeNode& n = t.tree->node(id);
        os << id << ',';
        if (n.parent != kNoNode) os << n.parent;
        os << ',' << n.t_index << ',' << fmt(t.tree->grid()[n.t_index]);
        for (const char* c : order) {
            os << ',';
            if (std::string(c) == "P") {
                os << fmt(n.price);
            } else if (auto it = t.columns.find(c); it != t.columns.end()) {
                os << fmt(it->second[id]);
            }
        }
        os << '\n';
    }
    return os.str();
}

AssumptionCheck check_mode(const RunConfig& cfg) {
    if (cfg.assumptions == "strict") return AssumptionCheck::strict;
    if (cfg.assumptions == "relaxed") return AssumptionCheck::relaxed;
    throw io::ParseError("--assumptions must be strict or relaxed");
}

std::optional<io::MarketFile> load_market_file(const RunConfig& cfg, bool required) {
    if (cfg.market.empty()) {
        if (required) throw io::ParseError("--market is required");
        return std::nullopt;
    }
    return io::market_from_json(io::read_json_file(cfg.market));
}

ScenarioTree load_tree(const RunConfig& cfg, const io::MarketFile* mf) {
    if (cfg.tree.empty()) throw io::ParseError("--tree is required");
    return io::tree_from_json(io::read_json_file(cfg.tree), mf);
}

Market load_market(const RunConfig& cfg) {
    const auto mf = load_market_file(cfg, true);
    return Market(load_tree(cfg, &*mf), mf->impact, check_mode(cfg));
}

SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions o;
    if (!cfg.options.empty()) o = io::options_from_json(io::read_json_file(cfg.options), o);
    if (cfg.tol) o.tol = *cfg.tol;
    if (cfg.max_iter) o.max_iter = *cfg.max_iter;
    o.validate();
    return o;
}

TradeSchedule load_strategy(const RunConfig& cfg) {
    if (cfg.strategy.empty()) throw io::ParseError("--strategy is required");
    return io::strategy_from_json(io::read_json_file(cfg.strategy));
}

json header(const RunConfig& cfg) {
    json j;
    j["command"] = cfg.command;
    j["seed"] = cfg.seed;
    json inputs;
    for (const auto& [k, v] : std::map<std::string, std::string>{{"market", cfg.market},
                                                                 {"tree", cfg.tree},
                                                                 {"strategy", cfg.strategy},
                                                                 {"certificate", cfg.certificate},
                                                                 {"paths", cfg.paths},
                                                                 {"options", cfg.options}}) {
        if (!v.empty()) inputs[k] = v;
    }
    j["inputs"] = inputs;
    return j;
}

json leaf_ids(const ScenarioTree& tree) { return std::vector<std::size_t>(tree.leaves().begin(), tree.leaves().end()); }

// ---- validate ----------------------------------------------------------

Report cmd_validate(const RunConfig& cfg) {
    const auto mf = load_market_file(cfg, true);
    AssumptionReport rep;
    Report out;
    if (!cfg.tree.empty()) {
        const ScenarioTree tree = load_tree(cfg, &*mf);
        rep = validate_assumptions(tree);
    } else {
        const MarketSpec spec = mf->spec();
        rep = validate_assumptions(spec.grid, spec.liquidity);
    }
    try {
        mf->impact.validate();
    } catch (const ValidationError& e) {
        rep.ok = false;
        rep.violations.push_back({"impact", 0, e.what()});
    }
    json j = header(cfg);
    j["ok"] = rep.ok;
    j["min_delta_over_rho"] = rep.min_delta_over_rho;
    j["max_delta_over_rho"] = rep.max_delta_over_rho;
    json v = json::array();
    for (const auto& x : rep.violations) v.push_back({{"clause", x.clause}, {"index", x.index}, {"detail", x.detail}});
    j["violations"] = v;
    j["units"] = {{"min_delta_over_rho", "shares per price unit"}, {"max_delta_over_rho", "shares per price unit"}};
    out.body = j;
    out.code = rep.ok ? kOk : kDomainFailure;
    return out;
}

// ---- wealth ------------------------------------------------------------

json wealth_block(const Market& market, const TradeSchedule& s, bool& all_liquidated, double& worst_rel) {
    const auto direct = terminal_cash_direct(market, s);
    const WealthBreakdown wb = lambda_functional(market, s);
    json j;
    j["leaves"] = leaf_ids(market.tree());
    j["xi_direct"] = direct;
    j["lambda_T"] = wb.lambda_T;
    j["p_integral"] = wb.p_integral;
    j["eta_penalty"] = wb.eta_penalty;
    j["v0"] = wb.v0;
    j["total_variation"] = total_variation(market.tree(), s);
    json xi = json::array();
    json liq = json::array();
    bool all = true;
    double worst = 0.0;
    double lam_max = 0.0;
    for (std::size_t k = 0; k < direct.size(); ++k) {
        liq.push_back(static_cast<bool>(wb.liquidated[k]));
        if (wb.liquidated[k]) {
            xi.push_back(wb.xi_T[k]);
            worst = std::max(worst, std::abs(direct[k] - wb.xi_T[k]));
            lam_max = std::max(lam_max, std::abs(wb.lambda_T[k]));
        } else {
            xi.push_back(nullptr);
            all = false;
        }
    }
    j["xi_T"] = xi;
    j["liquidated"] = liq;
    if (all) {
        j["discrepancy"] = worst;
        const double tol = 1e-10 * (1.0 + std::abs(wb.v0) + lam_max);
        j["consistent"] = worst <= tol;
        worst_rel = std::max(worst_rel, worst / tol);
    } else {
        j["discrepancy"] = nullptr;
        j["consistent"] = nullptr;
    }
    all_liquidated = all_liquidated && all;
    return j;
}

Report cmd_wealth(const RunConfig& cfg) {
    const auto mf = load_market_file(cfg, true);
    const TradeSchedule s = load_strategy(cfg);
    Report out;
    json j = header(cfg);
    bool all_liquidated = true;
    double worst_rel = 0.0;
    std::vector<Market> markets;
    if (!cfg.tree.empty()) {
        markets.emplace_back(load_tree(cfg, &*mf), mf->impact, check_mode(cfg));
    } else if (!cfg.paths.empty()) {
        const MarketSpec spec = mf->spec();
        for (const auto& path : io::price_paths_from_csv(io::read_text_file(cfg.paths)))
            markets.push_back(Market::on_path(spec, path, check_mode(cfg)));
    } else {
        throw io::ParseError("wealth needs --tree or --paths");
    }
    json scen = json::array();
    for (const auto& m : markets) scen.push_back(wealth_block(m, s, all_liquidated, worst_rel));
    j["scenarios"] = scen;
    j["all_liquidated"] = all_liquidated;

    if (!cfg.breakdown.empty()) {
        const json b = io::read_json_file(cfg.breakdown);
        bool ok = b.is_object() && b.contains("xi_T") && b.at("xi_T").is_array();
        if (ok) {
            std::vector<double> claimed;
            for (const auto& sc : b.at("xi_T")) {
                if (!sc.is_number()) throw io::ParseError("breakdown xi_T must hold numbers");
                claimed.push_back(sc.get<double>());
            }
            std::vector<double> computed;
            for (const auto& m : markets) {
                for (double v : terminal_cash_direct(m, s)) computed.push_back(v);
            }
            ok = claimed.size() == computed.size();
            for (std::size_t k = 0; ok && k < claimed.size(); ++k)
                ok = std::abs(claimed[k] - computed[k]) <= 1e-10 * (1.0 + std::abs(computed[k]));
        }
        j["breakdown_consistent"] = ok;
        if (!ok) out.code = kDomainFailure;
    }
    j["units"] = {{"xi_direct", "currency"},   {"xi_T", "currency"},     {"lambda_T", "currency"},
                  {"p_integral", "currency"},  {"eta_penalty", "currency"}, {"v0", "currency"},
                  {"discrepancy", "currency"}, {"total_variation", "shares"}};
    if (cfg.require_liquidation && !all_liquidated) out.code = kDomainFailure;
    if (worst_rel > 1.0) out.code = kDomainFailure;
    out.body = j;

    const Market& first = markets.front();
    out.table.tree = first.tree();
    out.table.columns["X"] = position_path(first.tree(), s);
    out.table.columns["eta"] = eta_path(first, s).eta;
    return out;
}

// ---- pricing -----------------------------------------------------------

json primal_json(const PriceReport& r) {
    json j;
    j["primal_value"] = r.primal_value;
    j["primal_converged"] = r.primal_converged;
    j["primal_iterations"] = r.primal_iterations;
    j["stages"] = r.stages;
    j["last_stage_change"] = std::isnan(r.last_stage_change) ? json(nullptr) : json(r.last_stage_change);
    j["strategy"] = io::to_json(r.strategy);
    j["leaf_cost"] = r.leaf_cost;
    j["scale"] = r.scale;
    return j;
}

json dual_json(const Market& market, const PriceReport& r) {
    json j;
    j["dual_value"] = r.dual_value;
    j["init_dual_value"] = r.init_dual_value;
    j["dual_iterations"] = r.dual_iterations;
    j["dual_trace"] = r.dual_trace;
    if (r.certificate) {
        j["certificate"] = io::to_json(*r.certificate);
        const FeasibilityReport f = check_feasibility(market, *r.certificate);
        j["certificate_feasible"] = f.feasible;
        j["bound"] = f.bound;
    }
    return j;
}

const json kPriceUnits = {{"primal_value", "currency"},     {"dual_value", "currency"},
                          {"init_dual_value", "currency"},  {"gap", "currency"},
                          {"leaf_cost", "currency"},        {"scale", "currency"},
                          {"last_stage_change", "currency"}, {"dual_trace", "currency"},
                          {"oracle_value", "currency"},     {"oracle_step", "shares"},
                          {"strategy", "shares"},           {"bound", "price"},
                          {"q_transitions", "probability"}, {"M", "price"},
                          {"alpha", "price x rho (spread units)"}};

void attach_oracle(const RunConfig& cfg, const Market& m, std::span<const double> h, json& j) {
    if (cfg.trade_grid.empty()) return;
    const TradeGrid grid = io::trade_grid_from_string(cfg.trade_grid);
    const OracleResult o = brute_force_oracle(m, h, grid);
    j["oracle_value"] = o.value;
    j["oracle_step"] = grid.step;
    j["oracle_strategy"] = io::to_json(o.strategy);
}

Report cmd_price(const RunConfig& cfg) {
    const Market m = load_market(cfg);
    const auto h = io::payoff_from_spec(cfg.payoff, m.tree());
    const SolverOptions opts = solver_options(cfg);
    const PriceReport r = primal_solve(m, h, opts);
    Report out;
    json j = header(cfg);
    j.update(primal_json(r));
    j["payoff"] = h;
    j["options"] = io::to_json(opts);
    attach_oracle(cfg, m, h, j);
    j["units"] = kPriceUnits;
    out.body = j;
    out.code = r.primal_converged ? kOk : kNonConvergence;
    out.table.tree = m.tree();
    out.table.columns["X"] = position_path(m.tree(), r.strategy);
    out.table.columns["eta"] = eta_path(m, r.strategy).eta;
    return out;
}

Report cmd_gap(const RunConfig& cfg) {
    const Market m = load_market(cfg);
    const auto h = io::payoff_from_spec(cfg.payoff, m.tree());
    const SolverOptions opts = solver_options(cfg);
    const PriceReport r = gap_report(m, h, opts);
    Report out;
    json j = header(cfg);
    j.update(primal_json(r));
    j.update(dual_json(m, r));
    j["gap"] = r.gap;
    j["relative_gap"] = r.primal_value != 0.0 ? json(r.gap / std::abs(r.primal_value)) : json(nullptr);
    j["payoff"] = h;
    j["options"] = io::to_json(opts);
    attach_oracle(cfg, m, h, j);
    j["units"] = kPriceUnits;
    out.body = j;
    out.code = r.primal_converged ? kOk : kNonConvergence;
    out.table.tree = m.tree();
    out.table.columns["X"] = position_path(m.tree(), r.strategy);
    out.table.columns["eta"] = eta_path(m, r.strategy).eta;
    if (r.certificate) {
        out.table.columns["M"] = r.certificate->martingale;
        out.table.columns["alpha"] = r.certificate->alpha;
        out.table.columns["B"] = constraint_bound(m, *r.certificate);
    }
    return out;
}

Report cmd_dual_eval(const RunConfig& cfg) {
    const Market m = load_market(cfg);
    if (cfg.certificate.empty()) throw io::ParseError("--certificate is required");
    const DualCertificate c = io::certificate_from_json(io::read_json_file(cfg.certificate));
    const auto h = io::payoff_from_spec(cfg.payoff, m.tree());
    Report out;
    json j = header(cfg);
    const FeasibilityReport f = check_feasibility(m, c);
    j["feasible"] = f.feasible;
    j["worst_violation"] = f.worst_violation;
    j["worst_node"] = f.worst_node;
    j["martingale_defect"] = f.martingale_defect;
    j["bound"] = f.bound;
    j["slack"] = f.slack;
    j["scale"] = f.scale;
    j["dual_value"] = dual_objective(m, c, h);
    j["alpha_penalty"] = alpha_penalty(m, c);
    j["payoff"] = h;
    if (!cfg.strategy.empty()) {
        const TradeSchedule s = load_strategy(cfg);
        try {
            const WeakDualityReport w = weak_duality_check(m, s, m.impact().xi0, c, h);
            j["weak_duality"] = {{"margin", w.margin},
                                 {"superreplication_slack", w.superreplication_slack},
                                 {"band_slack", w.band_slack},
                                 {"square_slack", w.square_slack},
                                 {"identity_residual", w.identity_residual},
                                 {"node_band_slack", w.node_band_slack},
                                 {"scale", w.scale}};
        } catch (const SuperReplicationViolated& e) {
            j["weak_duality"] = {{"error", e.what()}};
            out.code = kDomainFailure;
        } catch (const InfeasibleCertificate& e) {
            j["weak_duality"] = {{"error", e.what()}};
            out.code = kDomainFailure;
        }
    }
    j["units"] = {{"worst_violation", "price"}, {"bound", "price"},          {"slack", "price"},
                  {"scale", "price"},           {"dual_value", "currency"},  {"alpha_penalty", "currency"},
                  {"margin", "currency"},       {"martingale_defect", "price"}};
    if (!f.feasible) out.code = kDomainFailure;
    out.body = j;
    out.table.tree = m.tree();
    out.table.columns["M"] = c.martingale;
    out.table.columns["alpha"] = c.alpha;
    out.table.columns["B"] = f.bound;
    return out;
}

Report cmd_dual_search(const RunConfig& cfg) {
    const Market m = load_market(cfg);
    const auto h = io::payoff_from_spec(cfg.payoff, m.tree());
    const SolverOptions opts = solver_options(cfg);
    const DualCertificate init = cfg.certificate.empty()
                                     ? running_max_certificate(m)
                                     : io::certificate_from_json(io::read_json_file(cfg.certificate));
    const PriceReport r = dual_ascent(m, h, init, opts);
    Report out;
    json j = header(cfg);
    j.update(dual_json(m, r));
    j["payoff"] = h;
    j["options"] = io::to_json(opts);
    j["units"] = kPriceUnits;
    out.body = j;
    out.table.tree = m.tree();
    out.table.columns["M"] = r.certificate->martingale;
    out.table.columns["alpha"] = r.certificate->alpha;
    out.table.columns["B"] = constraint_bound(m, *r.certificate);
    return out;
}

// ---- applications ------------------------------------------------------

json call_block(const CallCheck& c) {
    return json{{"xi_T", c.xi_T},
                {"P_T", c.p_T},
                {"payoff", c.payoff},
                {"max_identity_error", c.max_identity_error},
                {"identity_holds", c.identity_holds},
                {"superreplicates", c.superreplicates}};
}

Report cmd_call(const RunConfig& cfg) {
    const auto mf = load_market_file(cfg, true);
    const CallSpec call{cfg.strike};
    call.validate();
    Report out;
    json j = header(cfg);
    j["strike"] = cfg.strike;
    bool ok = true;
    if (!cfg.tree.empty()) {
        const Market m(load_tree(cfg, &*mf), mf->impact, check_mode(cfg));
        j["price"] = call_price_formula(m);
        const CallCheck c = verify_call_superreplication(m, call);
        j["scenarios"] = json::array({call_block(c)});
        ok = c.identity_holds && c.superreplicates;
        out.table.tree = m.tree();
        out.table.columns["X"] = position_path(m.tree(), buy_and_hold(m.tree(), mf->impact.x0));
    } else if (!cfg.paths.empty()) {
        const MarketSpec spec = mf->spec();
        json scen = json::array();
        std::optional<double> price;
        for (const auto& path : io::price_paths_from_csv(io::read_text_file(cfg.paths))) {
            const Market m = Market::on_path(spec, path, check_mode(cfg));
            if (!price) price = call_price_formula(m);
            const CallCheck c = verify_call_superreplication(m, call);
            ok = ok && c.identity_holds && c.superreplicates;
            scen.push_back(call_block(c));
        }
        j["price"] = *price;
        j["scenarios"] = scen;
    } else {
        if (!cfg.p0) throw io::ParseError("call needs --tree, --paths or --p0");
        j["price"] = call_price_formula(mf->spec(), *cfg.p0, check_mode(cfg));
    }
    j["units"] = {{"price", "currency"},   {"strike", "price"},  {"xi_T", "currency"}, {"P_T", "price"},
                  {"payoff", "currency"},  {"max_identity_error", "currency"}};
    out.body = j;
    out.code = ok ? kOk : kDomainFailure;
    return out;
}

Report cmd_tilt(const RunConfig& cfg) {
    const auto mf = load_market_file(cfg, false);
    const ScenarioTree tree = load_tree(cfg, mf ? &*mf : nullptr);
    std::vector<double> g(tree.grid().size(), 0.0);
    if (!cfg.g.empty()) {
        g = io::numbers_from_string(cfg.g);
        if (g.size() == 1) g.assign(tree.grid().size(), g.front());
        if (g.size() != tree.grid().size()) throw GridMismatch("--g needs one value per grid point");
    }
    const TiltResult r = tilt_to_martingale(tree, g, cfg.eps);
    const MartingaleCheck mc = is_martingale(tree, r.q, r.martingale);
    Report out;
    json j = header(cfg);
    j["g"] = g;
    j["eps"] = cfg.eps;
    j["q_transitions"] = r.q.transition;
    j["M"] = r.martingale;
    j["leaf_probabilities"] = leaf_probabilities(tree, r.q);
    j["max_deviation"] = r.max_deviation;
    j["tail_probability"] = r.tail_probability;
    j["martingale_defect"] = mc.max_defect;
    j["units"] = {{"g", "price"},
                  {"eps", "price"},
                  {"q_transitions", "probability"},
                  {"leaf_probabilities", "probability"},
                  {"M", "price"},
                  {"max_deviation", "price"},
                  {"tail_probability", "probability"},
                  {"martingale_defect", "price"}};
    out.body = j;
    out.table.tree = tree;
    out.table.columns["M"] = r.martingale;
    return out;
}

Report cmd_shadow(const RunConfig& cfg) {
    const Market m = load_market(cfg);
    ShadowCheckInput in;
    in.schedule = load_strategy(cfg);
    in.utility = io::utility_from_string(cfg.utility);
    if (!cfg.certificate.empty()) {
        const json c = io::read_json_file(cfg.certificate);
        if (!c.is_object() || !c.contains("M")) throw io::ParseError("candidate file needs an M array");
        in.martingale = io::certificate_from_json(
                            json{{"q_transitions", json::array()}, {"M", c.at("M")}, {"alpha", json::array()}})
                            .martingale;
    }
    const ShadowVerdict v = shadow_price_check(m, in);
    Report out;
    json j = header(cfg);
    j["verdict"] = v.verdict;
    j["reasons"] = v.reasons;
    j["utility"] = in.utility.name();
    j["tolerance"] = v.tolerance;
    j["searched"] = v.searched;
    j["q_transitions"] = v.q.transition;
    j["xi_T"] = v.xi_T;
    j["alpha"] = v.alpha;
    j["lambda"] = v.lambda;
    j["M"] = v.martingale;
    j["martingale_defect"] = v.martingale_defect;
    j["lower_slack"] = v.lower_slack;
    j["upper_slack"] = v.upper_slack;
    j["flat_off"] = v.flat_off;
    j["checks"] = {{"martingale", v.martingale_ok}, {"band", v.band_ok}, {"flat_off", v.flat_off_ok}};
    j["units"] = {{"tolerance", "price"},  {"xi_T", "currency"},        {"alpha", "price x rho (spread units)"},
                  {"lambda", "price"},     {"M", "price"},              {"martingale_defect", "price"},
                  {"lower_slack", "price"}, {"upper_slack", "price"},   {"flat_off", "price"},
                  {"q_transitions", "probability"}};
    out.body = j;
    out.table.tree = m.tree();
    out.table.columns["X"] = position_path(m.tree(), in.schedule);
    out.table.columns["alpha"] = v.alpha;
    if (!v.martingale.empty()) out.table.columns["M"] = v.martingale;
    out.table.columns["B"] = v.lambda;
    return out;
}

void add_inputs(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--market", cfg.market, "market JSON file");
    sub->add_option("--tree", cfg.tree, "scenario tree JSON file");
    sub->add_option("--assumptions", cfg.assumptions, "strict or relaxed kappa monotonicity check")
        ->check(CLI::IsMember({"strict", "relaxed"}));
    sub->add_option("--seed", cfg.seed, "seed for any randomized step (fixed default)");
    sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", cfg.out, "output file (default stdout)");
}

void add_solver(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--payoff", cfg.payoff, "zero | const:C | call:K | put:K | abs:K | JSON file");
    sub->add_option("--tol", cfg.tol, "relative tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "gradient iteration budget");
    sub->add_option("--options", cfg.options, "solver options JSON file");
    sub->add_option("--trade-grid", cfg.trade_grid, "lo:hi:step lattice for the brute-force oracle");
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Super-replication and duality under transient price impact", "tpi"};
    app.require_subcommand(1);

    std::map<std::string, std::function<Report(const RunConfig&)>> handlers;
    auto sub = [&](const char* name, const char* help, std::function<Report(const RunConfig&)> fn) {
        CLI::App* s = app.add_subcommand(name, help);
        add_inputs(s, cfg);
        handlers[name] = std::move(fn);
        return s;
    };

    sub("validate", "check depth/resilience assumptions", cmd_validate);
    auto* wealth = sub("wealth", "terminal cash two ways and their consistency", cmd_wealth);
    wealth->add_option("--strategy", cfg.strategy, "strategy JSON file");
    wealth->add_option("--paths", cfg.paths, "CSV price paths, one column per scenario");
    wealth->add_option("--breakdown", cfg.breakdown, "claimed breakdown JSON to compare against");
    wealth->add_flag("--require-liquidation", cfg.require_liquidation, "fail unless every scenario ends flat");

    auto* price = sub("price", "primal super-replication price", cmd_price);
    add_solver(price, cfg);
    auto* gap = sub("gap", "primal, dual and their gap", cmd_gap);
    add_solver(gap, cfg);

    auto* deval = sub("dual-eval", "evaluate a dual certificate", cmd_dual_eval);
    deval->add_option("--certificate", cfg.certificate, "certificate JSON file");
    deval->add_option("--payoff", cfg.payoff, "payoff spec");
    deval->add_option("--strategy", cfg.strategy, "optional schedule for the weak-duality check");

    auto* dsearch = sub("dual-search", "ascent on the dual objective", cmd_dual_search);
    add_solver(dsearch, cfg);
    dsearch->add_option("--certificate", cfg.certificate, "initial certificate (default: running-max)");

    auto* call = sub("call", "closed-form call price and buy-and-hold identity", cmd_call);
    call->add_option("--strike", cfg.strike, "call strike");
    call->add_option("--p0", cfg.p0, "initial price when no tree or paths are given");
    call->add_option("--paths", cfg.paths, "CSV price paths");

    auto* tilt = sub("tilt", "two-point martingale tilt", cmd_tilt);
    tilt->add_option("--g", cfg.g, "comma-separated non-increasing drift per grid point");
    tilt->add_option("--eps", cfg.eps, "tail threshold");

    auto* shadow = sub("shadow-check", "shadow-price optimality check", cmd_shadow);
    shadow->add_option("--strategy", cfg.strategy, "candidate schedule JSON file");
    shadow->add_option("--utility", cfg.utility, "exp:a | power:g | log");
    shadow->add_option("--certificate", cfg.certificate, "optional file with a candidate M array");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputFailure;
    }

    for (const auto& [name, fn] : handlers) {
        if (!app.got_subcommand(name)) continue;
        cfg.command = name;
        try {
            const Report rep = fn(cfg);
            std::string text;
            if (cfg.format == "csv") text = render_csv(rep.table);
            else text = rep.body.dump(2) + "\n";
            if (cfg.out.empty()) {
                out << text;
            } else {
                std::ofstream f(cfg.out, std::ios::binary);
                if (!f || !(f << text)) {
                    err << "error: cannot write " << cfg.out << '\n';
                    return kInputFailure;
                }
            }
            return rep.code;
        } catch (const io::ParseError& e) {
            err << "error: " << e.what() << '\n';
            return kInputFailure;
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kDomainFailure;
        }
    }
    return kInputFailure;
}

} // namespace tpi::cli
