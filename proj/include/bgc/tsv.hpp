#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "bgc/error.hpp"

// Tab-separated intensity tables: header "ProbeID<TAB>array...", one probe
// per LF-terminated row, dot decimals, no quoting.

namespace bgc {

class HeaderMismatch : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};

class MalformedRow : public DataFormatError {
 public:
  MalformedRow(const std::string& source, std::size_t line, const std::string& why);
  std::size_t line;
};

class NonpositiveIntensity : public DataFormatError {
 public:
  NonpositiveIntensity(const std::string& source, std::size_t line, const std::string& column, double value);
  std::size_t line;
  std::string column;
};

struct Table {
  std::string id_header = "ProbeID";
  std::vector<std::string> columns;         // array names
  std::vector<std::string> ids;             // probe ids, file order
  std::vector<std::vector<double>> values;  // values[column][row]

  std::size_t rows() const { return ids.size(); }
};

// source names the input in error messages. Line numbers count the header as 1.
Table read_table(std::istream& in, const std::string& source, bool require_positive = true);
Table read_table_file(const std::string& path, bool require_positive = true);

// Shortest round-trip decimals, so identical values give identical bytes.
void write_table(std::ostream& out, const Table& t);
void write_table_file(const std::string& path, const Table& t);

struct ArrayDataset {
  Table observed;
  Table negatives;

  std::size_t arrays() const { return observed.columns.size(); }
};

// Both files must carry the same array columns in the same order.
ArrayDataset ingest(const std::string& observed_path, const std::string& negatives_path);

// Splits on tabs, keeping empty fields.
std::vector<std::string> split_tabs(const std::string& line);

}  // namespace bgc
