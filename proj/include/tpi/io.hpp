#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpi/applications.hpp"
#include "tpi/duality.hpp"
#include "tpi/errors.hpp"
#include "tpi/market.hpp"
#include "tpi/solver.hpp"

namespace tpi::io {

using json = nlohmann::json;

/// Unreadable file or malformed content.
class ParseError : public Error {
public:
    using Error::Error;
};

json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);

/// Market file: grid optional, delta and r scalar or per grid point.
struct MarketFile {
    std::optional<TimeGrid> grid;
    std::vector<double> delta; ///< one entry means constant
    std::vector<double> r;
    ImpactParams impact;

    /// Broadcast onto a grid; throws GridMismatch on length errors.
    LiquiditySpec liquidity_on(const TimeGrid& grid) const;
    MarketSpec spec_on(const TimeGrid& grid) const;
    /// Requires the file's own grid.
    MarketSpec spec() const;
};

MarketFile market_from_json(const json& j);
json to_json(const MarketSpec& spec);

/// {"levels", "nodes": [{id, parent, t_index, p_transition, P, delta, r}], "grid"?}.
/// Missing delta / r are taken from the market at the node's grid index.
ScenarioTree tree_from_json(const json& j, const MarketFile* market);
json to_json(const ScenarioTree& tree);

TradeSchedule strategy_from_json(const json& j);
json to_json(const TradeSchedule& s);

DualCertificate certificate_from_json(const json& j);
json to_json(const DualCertificate& c);

/// "zero", "const:C", "call:K", "put:K", "abs:K" or a JSON file holding an
/// array (or {"payoff": [...]}) in leaf order.
std::vector<double> payoff_from_spec(const std::string& spec, const ScenarioTree& tree);

SolverOptions options_from_json(const json& j, SolverOptions base = {});
json to_json(const SolverOptions& o);

/// "lo:hi:step".
TradeGrid trade_grid_from_string(const std::string& s);

/// Utility spec "exp:a", "power:g" or "log".
Utility utility_from_string(const std::string& s);

/// Comma-separated numbers.
std::vector<double> numbers_from_string(const std::string& s);

/// One column per scenario, one row per grid point; a non-numeric first
/// row is treated as a header.
std::vector<std::vector<double>> price_paths_from_csv(const std::string& text);

} // namespace tpi::io
