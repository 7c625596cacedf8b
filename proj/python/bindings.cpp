#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tpi/applications.hpp"
#include "tpi/duality.hpp"
#include "tpi/errors.hpp"
#include "tpi/market.hpp"
#include "tpi/solver.hpp"
#include "tpi/strategy.hpp"
#include "tpi/tree.hpp"
#include "tpi/wealth.hpp"

namespace py = pybind11;
using namespace tpi;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Super-replication and duality under transient price impact on scenario trees";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<TerminalNotZero>(m, "TerminalNotZero", base.ptr());
    py::register_exception<NoSignChange>(m, "NoSignChange", base.ptr());
    py::register_exception<InfeasibleCertificate>(m, "InfeasibleCertificate", base.ptr());
    py::register_exception<InfeasibleInit>(m, "InfeasibleInit", base.ptr());
    py::register_exception<SuperReplicationViolated>(m, "SuperReplicationViolated", base.ptr());
    py::register_exception<InstanceTooLarge>(m, "InstanceTooLarge", base.ptr());
    py::register_exception<NotApplicable>(m, "NotApplicable", base.ptr());

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<std::vector<double>>(), py::arg("times"))
        .def_static("uniform", &TimeGrid::uniform, py::arg("horizon"), py::arg("steps"))
        .def_property_readonly("times", [](const TimeGrid& g) { return std::vector<double>(g.times().begin(), g.times().end()); })
        .def("__len__", &TimeGrid::size);

    py::class_<LiquiditySpec>(m, "LiquiditySpec")
        .def(py::init<>())
        .def_readwrite("delta", &LiquiditySpec::delta)
        .def_readwrite("r", &LiquiditySpec::r)
        .def_static("constant", &LiquiditySpec::constant, py::arg("grid"), py::arg("delta"), py::arg("r"));

    py::class_<ImpactParams>(m, "ImpactParams")
        .def(py::init([](double iota, double zeta0, double x0, double xi0) { return ImpactParams{iota, zeta0, x0, xi0}; }),
             py::arg("iota") = 0.0, py::arg("zeta0") = 0.0, py::arg("x0") = 0.0, py::arg("xi0") = 0.0)
        .def_readwrite("iota", &ImpactParams::iota)
        .def_readwrite("zeta0", &ImpactParams::zeta0)
        .def_readwrite("x0", &ImpactParams::x0)
        .def_readwrite("xi0", &ImpactParams::xi0);

    py::class_<MarketSpec>(m, "MarketSpec")
        .def(py::init([](TimeGrid g, LiquiditySpec l, ImpactParams i) { return MarketSpec{std::move(g), std::move(l), i}; }),
             py::arg("grid"), py::arg("liquidity"), py::arg("impact") = ImpactParams{});

    py::class_<TreeNode>(m, "TreeNode")
        .def(py::init([](py::object parent, std::size_t t, double p, double price, double delta, double r) {
                 return TreeNode{parent.is_none() ? kNoNode : parent.cast<std::size_t>(), t, p, price, delta, r};
             }),
             py::arg("parent"), py::arg("t_index"), py::arg("p_transition"), py::arg("price"), py::arg("delta"),
             py::arg("r"))
        .def_readonly("t_index", &TreeNode::t_index)
        .def_readonly("p_transition", &TreeNode::p_transition)
        .def_readonly("price", &TreeNode::price);

    py::class_<ScenarioTree>(m, "ScenarioTree")
        .def(py::init<TimeGrid, std::vector<TreeNode>>(), py::arg("grid"), py::arg("nodes"))
        .def_static("chain", [](TimeGrid g, std::vector<double> p, const LiquiditySpec& l) { return ScenarioTree::chain(std::move(g), p, l); })
        .def_static("multiplicative",
                    [](TimeGrid g, double p0, std::vector<double> f, std::vector<double> q, const LiquiditySpec& l) {
                        return ScenarioTree::multiplicative(std::move(g), p0, f, q, l);
                    })
        .def("__len__", &ScenarioTree::size)
        .def_property_readonly("leaves", [](const ScenarioTree& t) { return std::vector<std::size_t>(t.leaves().begin(), t.leaves().end()); })
        .def("children", [](const ScenarioTree& t, std::size_t id) { return std::vector<std::size_t>(t.children(id).begin(), t.children(id).end()); })
        .def("node", &ScenarioTree::node);

    py::enum_<AssumptionCheck>(m, "AssumptionCheck")
        .value("strict", AssumptionCheck::strict)
        .value("relaxed", AssumptionCheck::relaxed);

    py::class_<Market>(m, "Market")
        .def(py::init<ScenarioTree, ImpactParams, AssumptionCheck>(), py::arg("tree"), py::arg("impact") = ImpactParams{},
             py::arg("check") = AssumptionCheck::strict)
        .def_property_readonly("tree", &Market::tree)
        .def("rho", &Market::rho)
        .def("kappa", &Market::kappa)
        .def("v0", &Market::v0);

    py::class_<TradeSchedule>(m, "TradeSchedule")
        .def(py::init([](std::vector<double> b, std::vector<double> s, double x0) { return TradeSchedule{std::move(b), std::move(s), x0}; }),
             py::arg("buys"), py::arg("sells"), py::arg("x0") = 0.0)
        .def_readwrite("buys", &TradeSchedule::buys)
        .def_readwrite("sells", &TradeSchedule::sells)
        .def_readwrite("x0", &TradeSchedule::x0);

    py::class_<NodeMeasure>(m, "NodeMeasure")
        .def(py::init([](std::vector<double> t) { return NodeMeasure{std::move(t)}; }), py::arg("transition"))
        .def_static("reference", &NodeMeasure::reference)
        .def_readwrite("transition", &NodeMeasure::transition);

    py::class_<DualCertificate>(m, "DualCertificate")
        .def(py::init([](NodeMeasure q, std::vector<double> mart, std::vector<double> a) {
                 return DualCertificate{std::move(q), std::move(mart), std::move(a)};
             }),
             py::arg("q"), py::arg("martingale"), py::arg("alpha"))
        .def_readwrite("q", &DualCertificate::q)
        .def_readwrite("martingale", &DualCertificate::martingale)
        .def_readwrite("alpha", &DualCertificate::alpha);

    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init<>())
        .def_readwrite("tol", &SolverOptions::tol)
        .def_readwrite("max_iter", &SolverOptions::max_iter)
        .def_readwrite("smoothing_start", &SolverOptions::smoothing_start)
        .def_readwrite("smoothing_end", &SolverOptions::smoothing_end)
        .def_readwrite("smoothing_factor", &SolverOptions::smoothing_factor)
        .def_readwrite("dual_iter", &SolverOptions::dual_iter)
        .def_readwrite("inner_iter", &SolverOptions::inner_iter);

    py::class_<PriceReport>(m, "PriceReport")
        .def_readonly("primal_value", &PriceReport::primal_value)
        .def_readonly("strategy", &PriceReport::strategy)
        .def_readonly("primal_converged", &PriceReport::primal_converged)
        .def_readonly("dual_value", &PriceReport::dual_value)
        .def_readonly("certificate", &PriceReport::certificate)
        .def_readonly("gap", &PriceReport::gap)
        .def_readonly("scale", &PriceReport::scale);

    py::class_<WealthBreakdown>(m, "WealthBreakdown")
        .def_readonly("xi_T", &WealthBreakdown::xi_T)
        .def_readonly("lambda_T", &WealthBreakdown::lambda_T)
        .def_readonly("p_integral", &WealthBreakdown::p_integral)
        .def_readonly("eta_penalty", &WealthBreakdown::eta_penalty)
        .def_readonly("v0", &WealthBreakdown::v0);

    py::class_<FeasibilityReport>(m, "FeasibilityReport")
        .def_readonly("feasible", &FeasibilityReport::feasible)
        .def_readonly("worst_violation", &FeasibilityReport::worst_violation)
        .def_readonly("bound", &FeasibilityReport::bound);

    py::class_<TiltResult>(m, "TiltResult")
        .def_property_readonly("q", [](const TiltResult& r) { return r.q.transition; })
        .def_readonly("martingale", &TiltResult::martingale)
        .def_readonly("max_deviation", &TiltResult::max_deviation)
        .def_readonly("tail_probability", &TiltResult::tail_probability);

    py::class_<TradeGrid>(m, "TradeGrid")
        .def(py::init([](double lo, double hi, double step) { return TradeGrid{lo, hi, step}; }), py::arg("lo"),
             py::arg("hi"), py::arg("step"));

    py::class_<Utility>(m, "Utility")
        .def_static("exponential", &Utility::exponential, py::arg("a"))
        .def_static("power", &Utility::power, py::arg("g"))
        .def_static("logarithmic", &Utility::logarithmic)
        .def("value", &Utility::value)
        .def("marginal", &Utility::marginal)
        .def_property_readonly("name", &Utility::name);

    py::class_<ShadowVerdict>(m, "ShadowVerdict")
        .def_readonly("verdict", &ShadowVerdict::verdict)
        .def_readonly("reasons", &ShadowVerdict::reasons)
        .def_readonly("martingale", &ShadowVerdict::martingale)
        .def_readonly("alpha", &ShadowVerdict::alpha)
        .def_readonly("xi_T", &ShadowVerdict::xi_T);

    py::class_<CallCheck>(m, "CallCheck")
        .def_readonly("xi0", &CallCheck::xi0)
        .def_readonly("xi_T", &CallCheck::xi_T)
        .def_readonly("max_identity_error", &CallCheck::max_identity_error)
        .def_readonly("identity_holds", &CallCheck::identity_holds)
        .def_readonly("superreplicates", &CallCheck::superreplicates);

    m.def("terminal_cash_direct", &terminal_cash_direct, py::arg("market"), py::arg("schedule"));
    m.def("lambda_functional", &lambda_functional, py::arg("market"), py::arg("schedule"));
    m.def("consistency_check", &consistency_check, py::arg("market"), py::arg("schedule"));
    m.def("constraint_bound", &constraint_bound, py::arg("market"), py::arg("certificate"));
    m.def("check_feasibility", &check_feasibility, py::arg("market"), py::arg("certificate"));
    m.def("dual_objective",
          [](const Market& mk, const DualCertificate& c, std::vector<double> h) { return dual_objective(mk, c, h); },
          py::arg("market"), py::arg("certificate"), py::arg("payoff"));
    m.def("primal_solve",
          [](const Market& mk, std::vector<double> h, const SolverOptions& o) { return primal_solve(mk, h, o); },
          py::arg("market"), py::arg("payoff"), py::arg("options") = SolverOptions{});
    m.def("dual_ascent",
          [](const Market& mk, std::vector<double> h, const DualCertificate& c, const SolverOptions& o) {
              return dual_ascent(mk, h, c, o);
          },
          py::arg("market"), py::arg("payoff"), py::arg("init"), py::arg("options") = SolverOptions{});
    m.def("gap_report",
          [](const Market& mk, std::vector<double> h, const SolverOptions& o) { return gap_report(mk, h, o); },
          py::arg("market"), py::arg("payoff"), py::arg("options") = SolverOptions{});
    m.def("brute_force_oracle",
          [](const Market& mk, std::vector<double> h, const TradeGrid& g) { return brute_force_oracle(mk, h, g).value; },
          py::arg("market"), py::arg("payoff"), py::arg("grid"));
    m.def("call_price_formula", py::overload_cast<const MarketSpec&, double, AssumptionCheck>(&call_price_formula),
          py::arg("spec"), py::arg("p0"), py::arg("check") = AssumptionCheck::strict);
    m.def("buy_and_hold", &buy_and_hold, py::arg("tree"), py::arg("x0"));
    m.def("tilt_to_martingale",
          [](const ScenarioTree& t, std::vector<double> g, double eps) { return tilt_to_martingale(t, g, eps); },
          py::arg("tree"), py::arg("g"), py::arg("eps") = 0.0);
    m.def("verify_call_superreplication",
          [](const Market& mk, double k) { return verify_call_superreplication(mk, CallSpec{k}); }, py::arg("market"),
          py::arg("strike"));
    m.def("shadow_price_check",
          [](const Market& mk, const TradeSchedule& s, const Utility& u, std::optional<std::vector<double>> mart) {
              return shadow_price_check(mk, ShadowCheckInput{s, u, std::move(mart)});
          },
          py::arg("market"), py::arg("schedule"), py::arg("utility"), py::arg("martingale") = py::none());
    m.def("call_payoff", [](const ScenarioTree& t, double k) { return CallSpec{k}.payoff(t); }, py::arg("tree"),
          py::arg("strike"));
}
