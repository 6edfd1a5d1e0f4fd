#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pipcli {

using nlohmann::json;

std::string sha256_hex(const std::string& data);
// Hash of the scenario after canonical serialization, so whitespace and key order do not matter.
std::string scenario_hash(const json& scenario);

// A CSV table with a header row.  Cells are preformatted strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string cell(double v);
std::string cell(long long v);
std::string cell(std::size_t v);
std::string cell(int v);
std::string cell(bool v);
std::string cell(const std::string& v);

// A complete report: the JSON document plus optional CSV tables written as <stem>[_<name>].csv.
struct Report {
  json body;
  std::vector<std::pair<std::string, Table>> tables;  // name "" writes <stem>.csv
};

// Writes <dir>/<stem>.json, the tables and <dir>/run_meta.json (the only file with a timestamp).
void write_report(const std::filesystem::path& dir, const std::string& stem, const Report& report,
                  const json& header);

std::string csv_text(const Table& t);

}  // namespace pipcli
