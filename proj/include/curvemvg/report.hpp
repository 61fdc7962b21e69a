#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace curvemvg::scene {

struct CsvTable {
  std::string name;  // file name without extension
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

// Shortest round-trip decimal form.
std::string format_number(double x);

// RFC 4180: CRLF line endings, fields quoted when they contain a comma,
// quote, CR or LF. The header row is always written.
std::string to_csv(const CsvTable& table);

struct Report {
  std::string command;
  std::string inputs_digest;
  std::map<std::string, double> metrics;
  std::map<std::string, bool> verdicts;
  nlohmann::json artifacts = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::vector<CsvTable> tables;

  void metric(const std::string& key, double value) { metrics[key] = value; }
  void verdict(const std::string& key, bool pass) { verdicts[key] = pass; }
  bool passed() const;

  // Everything except the digest itself; keys sorted, non-finite numbers as
  // strings.
  nlohmann::json body() const;
  // SHA-256 of body().dump() together with the CSV tables.
  std::string digest() const;
  nlohmann::json to_json() const;
};

std::string sha256_hex(const std::string& data);

// Writes <dir>/<name>.csv for every table. Throws Error naming the path on
// I/O failure.
void export_csv(const Report& report, const std::filesystem::path& dir);

void write_report(const Report& report, const std::filesystem::path& path);

}  // namespace curvemvg::scene
