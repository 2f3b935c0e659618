#include "output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rotstar::cli {

CsvTable::CsvTable(std::vector<Column> columns) : cols_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<double>& values) {
  if (values.size() != cols_.size()) throw std::logic_error("CsvTable: row width does not match the header");
  rows_.push_back(values);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvTable::str() const {
  std::string s;
  for (std::size_t j = 0; j < cols_.size(); ++j) {
    if (j) s += ',';
    s += cols_[j].name + " [" + cols_[j].unit + "]";
  }
  s += '\n';
  for (const auto& row : rows_) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) s += ',';
      s += format_number(row[j]);
    }
    s += '\n';
  }
  return s;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rotstar::cli
