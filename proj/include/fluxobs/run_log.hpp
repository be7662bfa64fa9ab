#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxobs/scenario.hpp"

namespace fluxobs {

/// Column order of the per-run CSV.
const std::vector<std::string>& csv_columns();

/// Shortest text that parses back to the same double.
std::string format_double(double value);

void write_csv(std::ostream& out, const std::vector<RunRow>& rows);
std::vector<RunRow> read_csv(std::istream& in);

nlohmann::json summary_to_json(const RunSummary& summary);
nlohmann::json run_to_json(const RunLog& log, const ScenarioConfig& config);

}  // namespace fluxobs
