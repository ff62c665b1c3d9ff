#ifndef RBETEL_CSV_HPP_
#define RBETEL_CSV_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbetel {

// Minimal CSV table: comma separated, header row required, '.' decimal
// point, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    throw std::invalid_argument("csv: no column named '" + name + "'");
  }

  Eigen::VectorXd numeric(const std::string& name) const {
    const int j = column(name);
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string& cell = rows[i][static_cast<std::size_t>(j)];
      std::size_t pos = 0;
      double val = 0.0;
      try {
        val = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw std::invalid_argument("csv: cell '" + cell + "' in column '" + name +
                                    "' is not numeric");
      }
      if (pos != cell.size())
        throw std::invalid_argument("csv: cell '" + cell + "' in column '" + name +
                                    "' is not numeric");
      v[static_cast<Eigen::Index>(i)] = val;
    }
    return v;
  }

  std::vector<std::string> strings(const std::string& name) const {
    const int j = column(name);
    std::vector<std::string> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r[static_cast<std::size_t>(j)]);
    return v;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: '" + path + "' is empty");
  t.header = detail::split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error("csv: ragged row in '" + path + "'");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns, int precision = 17) {
  if (!columns.empty())
    for (const auto& c : columns)
      if (c.size() != columns.front().size())
        throw std::invalid_argument("csv: column length mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  out << std::setprecision(precision);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  if (columns.empty()) return;
  for (std::size_t i = 0; i < columns.front().size(); ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j][i];
    out << '\n';
  }
}

} // namespace rbetel

#endif // RBETEL_CSV_HPP_
