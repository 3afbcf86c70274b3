#include "oni/experiments/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oni/errors.hpp"

namespace oni::experiments {

void CsvTable::add(CsvRecord record) {
  if (record.size() != schema.size()) {
    throw Error(ErrorCode::BadSpec, "record has " + std::to_string(record.size()) +
                                        " fields, schema has " + std::to_string(schema.size()));
  }
  records.push_back(std::move(record));
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render(const CsvValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return quote(*s);
  if (const auto* i = std::get_if<long long>(&value)) return std::to_string(*i);
  return format_real(std::get<double>(value));
}

}  // namespace

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.schema.size(); ++i) {
    if (i) out += ',';
    out += quote(table.schema[i]);
  }
  out += '\n';
  for (const auto& record : table.records) {
    for (std::size_t i = 0; i < record.size(); ++i) {
      if (i) out += ',';
      out += render(record[i]);
    }
    out += '\n';
  }
  return out;
}

void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
  const std::string text = to_csv(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool pending = false;  // something seen on the current row
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      pending = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      pending = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      pending = false;
    } else if (c != '\r') {
      field += c;
      pending = true;
    }
  }
  if (quoted) throw Error(ErrorCode::BadSpec, "unterminated quoted CSV field");
  if (pending) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

double parse_real(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw Error(ErrorCode::BadSpec, "not a real number: '" + text + "'");
  }
  return value;
}

}  // namespace oni::experiments
