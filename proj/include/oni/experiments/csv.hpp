#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace oni::experiments {

using CsvValue = std::variant<std::string, long long, double>;
using CsvRecord = std::vector<CsvValue>;

struct CsvTable {
  std::vector<std::string> schema;
  std::vector<CsvRecord> records;

  /// Throws BadSpec if the record length differs from the schema.
  void add(CsvRecord record);
};

/// Shortest-exact form: "%.17g", with nan/inf spelled "nan", "inf", "-inf".
std::string format_real(double value);

/// Header line first, LF endings, fields quoted only when they contain a
/// comma, quote or newline.
std::string to_csv(const CsvTable& table);

/// Writes to_csv(table) to path; throws IoError.
void emit_csv(const CsvTable& table, const std::filesystem::path& path);

/// Splits CSV text into rows of raw fields (quotes removed). The header is
/// the first row.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

/// Inverse of format_real; throws BadSpec on malformed text.
double parse_real(const std::string& text);

}  // namespace oni::experiments
