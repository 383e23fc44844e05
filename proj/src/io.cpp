#include "resist/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace resist {

namespace {

// Shortest round-trip decimal form of a double.
std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw DataError("cannot parse CSV cell '" + cell + "'");
  return v;
}

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace

Json config_to_json(const AdversaryConfig& c) {
  return Json{{"p", c.power}, {"nu", c.nu}, {"H", c.holder}, {"sigma", c.sigma},
              {"q", c.norm_q},  {"T", c.budget}, {"n", c.dim}};
}

AdversaryConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  AdversaryConfig c;
  c.power = require<double>(j, "p");
  c.nu = require<double>(j, "nu");
  c.holder = require<double>(j, "H");
  c.sigma = require<double>(j, "sigma");
  c.norm_q = j.contains("q") ? require<double>(j, "q") : 2.0;
  c.budget = require<int>(j, "T");
  c.dim = j.contains("n") ? require<int>(j, "n") : c.budget;
  c.validate();
  return c;
}

Json instance_to_json(const Instance& instance) {
  Json j = config_to_json(instance.config());
  j["delta"] = instance.params().delta;
  j["mu"] = instance.params().mu;
  j["beta"] = instance.params().beta;
  Json pieces = Json::array();
  for (const Piece& p : instance.chain().pieces()) {
    pieces.push_back({{"coord", p.coord + 1}, {"sign", p.sign}, {"offset", p.offset}});
  }
  j["pieces"] = std::move(pieces);
  return j;
}

Instance instance_from_json(const Json& j) {
  const AdversaryConfig config = config_from_json(j);
  InstanceParams params;
  params.delta = require<double>(j, "delta");
  params.mu = require<double>(j, "mu");
  params.beta = require<double>(j, "beta");
  Chain chain(config.dim, params.delta);
  for (const Json& p : require<Json>(j, "pieces")) {
    chain.push_back({require<Index>(p, "coord") - 1, require<int>(p, "sign"), require<double>(p, "offset")});
  }
  return Instance(config, params, std::move(chain));
}

Json bounds_to_json(const BoundReport& r) {
  Json j{{"h_star", r.h_star}, {"lower_bound", r.lower_bound}, {"value_floor", r.value_floor}};
  j["solution_bound"] = r.solution_bound ? Json(*r.solution_bound) : Json(nullptr);
  return j;
}

std::string run_curve_csv(const RunRecord& record, double h_star) {
  CsvTable t;
  t.header = {"k", "F_value", "residual_vs_hstar"};
  for (std::size_t k = 0; k < record.value_curve.size(); ++k) {
    t.rows.push_back({double(k + 1), record.value_curve[k], record.value_curve[k] - h_star});
  }
  return to_csv(t);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out.flush()) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line)) throw DataError("CSV text is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw DataError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(t.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_real(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace resist
