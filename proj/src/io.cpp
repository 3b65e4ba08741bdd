#include "mhgmm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mhgmm/errors.hpp"

namespace mhgmm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvOptions& options) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  bool skipped_header = !options.header;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    auto fields = split_fields(line);
    if (options.labels) {
      if (fields.size() < 2) throw DataError("line " + std::to_string(line_no) + ": missing label column");
      int label = 0;
      if (!parse_int(fields.back(), label) || label < 1)
        throw DataError("line " + std::to_string(line_no) + ": labels must be positive integers");
      labels.push_back(label - 1);
      fields.pop_back();
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
                      std::to_string(fields.size()));
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j)
      if (!parse_double(fields[j], row[j]) || !std::isfinite(row[j]))
        throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(j + 1) +
                        ": not a finite number: '" + fields[j] + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("CSV input contains no observations");
  Dataset ds;
  ds.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  if (options.labels) ds.labels = std::move(labels);
  ds.provenance = "csv";
  ds.validate();
  return ds;
}

Dataset read_csv_file(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Dataset ds = read_csv(in, options);
  ds.provenance = path;
  return ds;
}

void write_csv(std::ostream& out, const Dataset& dataset, const CsvOptions& options, const Clustering* clusters) {
  const bool with_labels = options.labels && dataset.labels.has_value();
  out << std::setprecision(17);
  if (options.header) {
    for (int j = 0; j < dataset.d(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
    if (with_labels) out << ",label";
    if (clusters) out << ",cluster";
    out << '\n';
  }
  for (int i = 0; i < dataset.n(); ++i) {
    for (int j = 0; j < dataset.d(); ++j) out << (j ? "," : "") << dataset.values(i, j);
    if (with_labels) out << ',' << ((*dataset.labels)[i] + 1);
    if (clusters) out << ',' << (clusters->labels.at(i) + 1);
    out << '\n';
  }
}

std::vector<int> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<int> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_fields(t);
    int v = 0;
    if (!parse_int(fields.back(), v)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw DataError(path + ": non-integer label '" + fields.back() + "'");
    }
    first = false;
    out.push_back(v);
  }
  if (out.empty()) throw DataError(path + ": no labels found");
  return out;
}

}  // namespace mhgmm
