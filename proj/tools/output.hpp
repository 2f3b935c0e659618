#ifndef ROTSTAR_TOOLS_OUTPUT_HPP
#define ROTSTAR_TOOLS_OUTPUT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace rotstar::cli {

// Units are in G = 1 code units: L length, M mass, U = M/L potential.
struct Column {
  std::string name;
  std::string unit;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<Column> columns);
  void add_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_.size(); }
  // header "name [unit],..." then one line per row, 17 significant digits
  std::string str() const;

 private:
  std::vector<Column> cols_;
  std::vector<std::vector<double>> rows_;
};

std::string format_number(double v);

// temp file next to the target, then rename
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace rotstar::cli

#endif
