#include "tpi/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tpi::io {

namespace {

double number(const json& j, const char* what) {
    if (!j.is_number()) throw ParseError(std::string("expected a number for ") + what);
    return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return number(j.at(key), key);
}

std::vector<double> numbers(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string("expected an array for ") + what);
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(number(v, what));
    return out;
}

std::vector<double> scalar_or_array(const json& j, const char* what) {
    if (j.is_number()) return {j.get<double>()};
    return numbers(j, what);
}

std::size_t index_value(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw ParseError(std::string("expected a node index for ") + what);
    return static_cast<std::size_t>(j.get<long long>());
}

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

double parse_double(const std::string& s, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParseError(std::string("cannot parse ") + what + " from '" + s + "'");
    }
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw ParseError(std::string("cannot parse ") + what + " from '" + s + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
}

LiquiditySpec MarketFile::liquidity_on(const TimeGrid& g) const {
    auto expand = [&](const std::vector<double>& v, const char* what) {
        if (v.size() == 1) return std::vector<double>(g.size(), v.front());
        if (v.size() != g.size()) throw GridMismatch(std::string(what) + " length differs from grid");
        return v;
    };
    return {expand(delta, "delta"), expand(r, "r")};
}

MarketSpec MarketFile::spec_on(const TimeGrid& g) const { return {g, liquidity_on(g), impact}; }

MarketSpec MarketFile::spec() const {
    if (!grid) throw ParseError("market file has no grid");
    return spec_on(*grid);
}

MarketFile market_from_json(const json& j) {
    return guarded("market", [&] {
        if (!j.is_object()) throw ParseError("market must be a JSON object");
        MarketFile m;
        if (j.contains("grid")) m.grid = TimeGrid(numbers(j.at("grid"), "grid"));
        if (!j.contains("delta")) throw ParseError("market needs delta");
        m.delta = scalar_or_array(j.at("delta"), "delta");
        m.r = j.contains("r") ? scalar_or_array(j.at("r"), "r") : std::vector<double>{0.0};
        if (m.delta.empty() || m.r.empty()) throw ParseError("delta and r must not be empty");
        m.impact.iota = number_or(j, "iota", 0.0);
        m.impact.zeta0 = number_or(j, "zeta0", 0.0);
        m.impact.x0 = number_or(j, "x0", 0.0);
        m.impact.xi0 = number_or(j, "xi0", 0.0);
        if (m.grid) m.liquidity_on(*m.grid);
        return m;
    });
}

json to_json(const MarketSpec& spec) {
    json j;
    j["grid"] = std::vector<double>(spec.grid.times().begin(), spec.grid.times().end());
    j["delta"] = spec.liquidity.delta;
    j["r"] = spec.liquidity.r;
    j["iota"] = spec.impact.iota;
    j["zeta0"] = spec.impact.zeta0;
    j["x0"] = spec.impact.x0;
    j["xi0"] = spec.impact.xi0;
    return j;
}

ScenarioTree tree_from_json(const json& j, const MarketFile* market) {
    return guarded("tree", [&] {
        if (!j.is_object() || !j.contains("nodes")) throw ParseError("tree needs a nodes array");
        const json& arr = j.at("nodes");
        if (!arr.is_array() || arr.empty()) throw ParseError("tree needs a non-empty nodes array");

        std::size_t levels = 0;
        if (j.contains("levels")) levels = index_value(j.at("levels"), "levels");
        std::optional<TimeGrid> grid;
        if (j.contains("grid")) grid = TimeGrid(numbers(j.at("grid"), "grid"));
        else if (market && market->grid) grid = market->grid;

        std::size_t max_t = 0;
        for (const auto& n : arr) max_t = std::max(max_t, index_value(n.at("t_index"), "t_index"));
        if (levels == 0) levels = grid ? grid->size() : max_t + 1;
        if (!grid) {
            std::vector<double> t(levels);
            for (std::size_t i = 0; i < levels; ++i) t[i] = static_cast<double>(i);
            grid = TimeGrid(std::move(t));
        }
        if (grid->size() != levels) throw GridMismatch("tree levels differ from grid length");

        std::optional<LiquiditySpec> liq;
        if (market) liq = market->liquidity_on(*grid);

        std::vector<TreeNode> nodes(arr.size());
        std::vector<bool> seen(arr.size(), false);
        for (const auto& n : arr) {
            const std::size_t id = index_value(n.at("id"), "id");
            if (id >= nodes.size() || seen[id]) throw ParseError("node ids must be dense and unique");
            seen[id] = true;
            TreeNode node;
            const json& parent = n.contains("parent") ? n.at("parent") : json(nullptr);
            if (parent.is_null() || (parent.is_number_integer() && parent.get<long long>() < 0)) node.parent = kNoNode;
            else node.parent = index_value(parent, "parent");
            node.t_index = index_value(n.at("t_index"), "t_index");
            node.p_transition = number_or(n, "p_transition", 1.0);
            node.price = number(n.at("P"), "P");
            if (node.t_index >= levels) throw ParseError("t_index beyond levels");
            if (n.contains("delta")) node.delta = number(n.at("delta"), "delta");
            else if (liq) node.delta = liq->delta[node.t_index];
            else throw ParseError("node without delta and no market to broadcast from");
            if (n.contains("r")) node.r = number(n.at("r"), "r");
            else if (liq) node.r = liq->r[node.t_index];
            else node.r = 0.0;
            nodes[id] = node;
        }
        return ScenarioTree(*grid, std::move(nodes));
    });
}

json to_json(const ScenarioTree& tree) {
    json j;
    j["levels"] = tree.grid().size();
    j["grid"] = std::vector<double>(tree.grid().times().begin(), tree.grid().times().end());
    json arr = json::array();
    for (std::size_t id = 0; id < tree.size(); ++id) {
        const TreeNode& n = tree.node(id);
        json o;
        o["id"] = id;
        o["parent"] = n.parent == kNoNode ? json(nullptr) : json(n.parent);
        o["t_index"] = n.t_index;
        o["p_transition"] = n.p_transition;
        o["P"] = n.price;
        o["delta"] = n.delta;
        o["r"] = n.r;
        arr.push_back(o);
    }
    j["nodes"] = arr;
    return j;
}

TradeSchedule strategy_from_json(const json& j) {
    return guarded("strategy", [&] {
        if (!j.is_object()) throw ParseError("strategy must be a JSON object");
        TradeSchedule s;
        s.buys = numbers(j.at("buys"), "buys");
        s.sells = numbers(j.at("sells"), "sells");
        s.x0 = number_or(j, "x0", 0.0);
        return s;
    });
}

json to_json(const TradeSchedule& s) {
    return json{{"buys", s.buys}, {"sells", s.sells}, {"x0", s.x0}};
}

DualCertificate certificate_from_json(const json& j) {
    return guarded("certificate", [&] {
        if (!j.is_object()) throw ParseError("certificate must be a JSON object");
        DualCertificate c;
        c.q.transition = numbers(j.at("q_transitions"), "q_transitions");
        c.martingale = numbers(j.at("M"), "M");
        c.alpha = numbers(j.at("alpha"), "alpha");
        return c;
    });
}

json to_json(const DualCertificate& c) {
    return json{{"q_transitions", c.q.transition}, {"M", c.martingale}, {"alpha", c.alpha}};
}

std::vector<double> payoff_from_spec(const std::string& spec, const ScenarioTree& tree) {
    const auto leaves = tree.leaves();
    std::vector<double> h(leaves.size(), 0.0);
    if (spec.empty() || spec == "zero") return h;
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const std::string kind = spec.substr(0, colon);
        const double v = parse_double(spec.substr(colon + 1), "payoff parameter");
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            const double p = tree.node(leaves[k]).price;
            if (kind == "const") h[k] = v;
            else if (kind == "call") h[k] = std::max(p - v, 0.0);
            else if (kind == "put") h[k] = std::max(v - p, 0.0);
            else if (kind == "abs") h[k] = std::abs(p - v);
            else throw ParseError("unknown payoff kind '" + kind + "'");
        }
        return h;
    }
    const json j = read_json_file(spec);
    return guarded("payoff", [&] {
        const json& arr = j.is_object() ? j.at("payoff") : j;
        auto v = numbers(arr, "payoff");
        if (v.size() != leaves.size()) throw GridMismatch("payoff length differs from leaf count");
        return v;
    });
}

SolverOptions options_from_json(const json& j, SolverOptions base) {
    return guarded("options", [&] {
        if (!j.is_object()) throw ParseError("options must be a JSON object");
        auto count = [&](const char* key, std::size_t& dst) {
            if (j.contains(key)) dst = index_value(j.at(key), key);
        };
        base.tol = number_or(j, "tol", base.tol);
        count("max_iter", base.max_iter);
        base.smoothing_start = number_or(j, "smoothing_start", base.smoothing_start);
        base.smoothing_end = number_or(j, "smoothing_end", base.smoothing_end);
        base.smoothing_factor = number_or(j, "smoothing_factor", base.smoothing_factor);
        count("dual_iter", base.dual_iter);
        count("inner_iter", base.inner_iter);
        base.validate();
        return base;
    });
}

json to_json(const SolverOptions& o) {
    return json{{"tol", o.tol},
                {"max_iter", o.max_iter},
                {"smoothing_start", o.smoothing_start},
                {"smoothing_end", o.smoothing_end},
                {"smoothing_factor", o.smoothing_factor},
                {"dual_iter", o.dual_iter},
                {"inner_iter", o.inner_iter}};
}

TradeGrid trade_grid_from_string(const std::string& s) {
    const auto a = s.find(':');
    const auto b = a == std::string::npos ? std::string::npos : s.find(':', a + 1);
    if (b == std::string::npos) throw ParseError("trade grid must look like lo:hi:step");
    TradeGrid g{parse_double(s.substr(0, a), "grid lo"), parse_double(s.substr(a + 1, b - a - 1), "grid hi"),
                parse_double(s.substr(b + 1), "grid step")};
    g.points();
    return g;
}

Utility utility_from_string(const std::string& s) {
    Utility u;
    if (s == "log") {
        u = Utility::logarithmic();
    } else if (s.rfind("exp:", 0) == 0) {
        u = Utility::exponential(parse_double(s.substr(4), "risk aversion"));
    } else if (s.rfind("power:", 0) == 0) {
        u = Utility::power(parse_double(s.substr(6), "power exponent"));
    } else {
        throw ParseError("utility must be exp:a, power:g or log");
    }
    u.validate();
    return u;
}

std::vector<double> numbers_from_string(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), "number list"));
    if (out.empty()) throw ParseError("empty number list");
    return out;
}

std::vector<std::vector<double>> price_paths_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string line;
    bool first = true;
    while (std::getline(ss, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
        std::vector<double> row;
        try {
            for (const auto& c : cells) row.push_back(parse_double(c, "price"));
        } catch (const ParseError&) {
            if (first) {
                first = false;
                continue;
            }
            throw;
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged price CSV");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("price CSV has no data rows");
    std::vector<std::vector<double>> paths(rows.front().size(), std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) paths[k][i] = rows[i][k];
    }
    return paths;
}

} // namespace tpi::io
