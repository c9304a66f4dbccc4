#include "fns/csv.hpp"

#include <charconv>
#include <sstream>

#include "fns/errors.hpp"

namespace fns {

std::string csv_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string csv_number(long long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ShapeMismatch("csv row width differs from the header in " + path_);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c) out_ << ',';
    out_ << cells[c];
  }
  out_ << '\n';
  if (!out_) throw IoError("write failed on '" + path_ + "'");
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw IoError("closing '" + path_ + "' failed");
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw ValidationError("csv column '" + name + "' missing");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path + "' has no header row");
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw ValidationError("'" + path + "': row width differs from the header");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace fns
