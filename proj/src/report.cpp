#include "curvemvg/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <openssl/evp.h>

#include "curvemvg/errors.hpp"

namespace curvemvg::scene {

namespace {

nlohmann::json number_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw DimensionMismatch("CsvTable " + name + ": row width differs from header");
  }
  rows.push_back(std::move(row));
}

std::string format_number(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += quote(fields[i]);
    }
    out += "\r\n";
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out;
}

bool Report::passed() const {
  for (const auto& [key, pass] : verdicts) {
    if (!pass) return false;
  }
  return true;
}

nlohmann::json Report::body() const {
  nlohmann::json j;
  j["command"] = command;
  j["inputs_digest"] = inputs_digest;
  j["metrics"] = nlohmann::json::object();
  for (const auto& [key, value] : metrics) j["metrics"][key] = number_json(value);
  j["verdicts"] = nlohmann::json::object();
  for (const auto& [key, pass] : verdicts) j["verdicts"][key] = pass ? "pass" : "fail";
  j["artifacts"] = artifacts;
  j["warnings"] = warnings;
  j["passed"] = passed();
  return j;
}

std::string Report::digest() const {
  std::string data = body().dump();
  for (const auto& table : tables) {
    data += '\0' + table.name + '\0' + to_csv(table);
  }
  return sha256_hex(data);
}

nlohmann::json Report::to_json() const {
  nlohmann::json j = body();
  j["digest"] = digest();
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void export_csv(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(dir.string() + ": cannot create directory (" + ec.message() + ")");
  for (const auto& table : report.tables) {
    const auto path = dir / (table.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    out << to_csv(table);
    if (!out) throw Error(path.string() + ": write failed");
  }
}

void write_report(const Report& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << report.to_json().dump(2) << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace curvemvg::scene
