#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace fns {

/// Shortest round-trip is not used on purpose: every real is printed with
/// 17 significant digits in the C locale so reruns diff byte for byte.
std::string csv_number(double v);
std::string csv_number(long long v);
inline std::string csv_number(int v) { return csv_number(static_cast<long long>(v)); }
inline std::string csv_number(std::uint64_t v) { return std::to_string(v); }

/// Writes a header row on construction; one writer per output path.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ValidationError when missing.
  std::size_t column(const std::string& name) const;
};

/// Plain comma-separated reader (no quoting; the writer never quotes).
CsvTable read_csv(const std::string& path);

}  // namespace fns
