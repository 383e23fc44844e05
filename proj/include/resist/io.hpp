#pragma once

// JSON records for instances, bound reports and run curves; CSV helpers.
//
// Instance file layout (coordinates are 1-based on disk):
//   {"p":..,"nu":..,"H":..,"sigma":..,"q":..,"T":..,"n":..,
//    "delta":..,"mu":..,"beta":..,
//    "pieces":[{"coord":..,"sign":..,"offset":..}, ...]}
// Reals are written with the shortest representation that parses back to the
// same double, so a write/read cycle is bit-exact.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "resist/adversary.hpp"
#include "resist/solvers.hpp"

namespace resist {

using Json = nlohmann::json;

Json config_to_json(const AdversaryConfig& config);
/// Reads p, nu, H, sigma, q, T, n (q defaults to 2, n to T) and validates.
AdversaryConfig config_from_json(const Json& j);

Json instance_to_json(const Instance& instance);
Instance instance_from_json(const Json& j);

Json bounds_to_json(const BoundReport& report);

/// Columns k, F_value, residual_vs_hstar with k 1-based.
std::string run_curve_csv(const RunRecord& record, double h_star);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string to_csv(const CsvTable& table);
/// Throws DataError on ragged rows or unparsable cells.
CsvTable parse_csv(const std::string& text);

}  // namespace resist
