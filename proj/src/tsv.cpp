#include "bgc/tsv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bgc/model_io.hpp"

namespace bgc {

MalformedRow::MalformedRow(const std::string& source, std::size_t line, const std::string& why)
    : DataFormatError(source + ": line " + std::to_string(line) + ": " + why), line(line) {}

NonpositiveIntensity::NonpositiveIntensity(const std::string& source, std::size_t line, const std::string& column,
                                           double value)
    : DataFormatError(source + ": line " + std::to_string(line) + ", column " + column +
                      ": intensity must be positive, got " + format_double(value)),
      line(line),
      column(column) {}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

Table read_table(std::istream& in, const std::string& source, bool require_positive) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw HeaderMismatch(source + ": empty file, expected a header row");
  auto head = split_tabs(line);
  if (head.size() < 2 || head[0] != "ProbeID")
    throw HeaderMismatch(source + ": header must be ProbeID followed by at least one array column");
  t.id_header = head[0];
  t.columns.assign(head.begin() + 1, head.end());
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i].empty()) throw HeaderMismatch(source + ": empty array name in header");
    for (std::size_t j = 0; j < i; ++j)
      if (t.columns[j] == t.columns[i]) throw HeaderMismatch(source + ": duplicate array column " + t.columns[i]);
  }
  t.values.resize(t.columns.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw MalformedRow(source, lineno, "empty row");
    }
    const auto f = split_tabs(line);
    if (f.size() != head.size())
      throw MalformedRow(source, lineno,
                         "expected " + std::to_string(head.size()) + " fields, found " + std::to_string(f.size()));
    if (f[0].empty()) throw MalformedRow(source, lineno, "empty probe id");
    t.ids.push_back(f[0]);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      double v;
      try {
        v = parse_double(f[c + 1]);
      } catch (const DataFormatError&) {
        throw MalformedRow(source, lineno, "column " + t.columns[c] + ": not a number: '" + f[c + 1] + "'");
      }
      if (!std::isfinite(v)) throw MalformedRow(source, lineno, "column " + t.columns[c] + ": value is not finite");
      if (require_positive && !(v > 0.0)) throw NonpositiveIntensity(source, lineno, t.columns[c], v);
      t.values[c].push_back(v);
    }
  }
  return t;
}

Table read_table_file(const std::string& path, bool require_positive) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open " + path);
  return read_table(in, path, require_positive);
}

void write_table(std::ostream& out, const Table& t) {
  out << t.id_header;
  for (const auto& c : t.columns) out << '\t' << c;
  out << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out << t.ids[r];
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << '\t' << format_double(t.values[c][r]);
    out << '\n';
  }
}

void write_table_file(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataFormatError("cannot write " + path);
  write_table(out, t);
  if (!out) throw DataFormatError("write failed: " + path);
}

ArrayDataset ingest(const std::string& observed_path, const std::string& negatives_path) {
  ArrayDataset d;
  d.observed = read_table_file(observed_path);
  d.negatives = read_table_file(negatives_path);
  if (d.observed.columns != d.negatives.columns) {
    std::string a, b;
    for (const auto& c : d.observed.columns) a += (a.empty() ? "" : ",") + c;
    for (const auto& c : d.negatives.columns) b += (b.empty() ? "" : ",") + c;
    throw HeaderMismatch("array columns differ: " + observed_path + " has [" + a + "], " + negatives_path + " has [" +
                         b + "]");
  }
  if (d.observed.rows() == 0) throw DataFormatError(observed_path + ": no probes");
  return d;
}

}  // namespace bgc
