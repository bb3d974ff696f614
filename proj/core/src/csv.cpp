#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dcrr/datagen.hpp"
#include "dcrr/errors.hpp"

namespace dcrr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto cell = std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    cells.emplace_back(trim(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
         cell == "null" || cell == "NULL";
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

CsvData load_csv(const std::filesystem::path& path, std::string_view response_column, bool center) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open CSV file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw IngestionError("CSV file " + path.string() + " is empty");
  const std::vector<std::string> header = split_line(line);

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw IngestionError("CSV line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " fields, header has " +
                           std::to_string(header.size()));
    rows.push_back(std::move(cells));
  }

  std::optional<std::size_t> response;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == response_column) response = c;
  if (!response) throw IngestionError("response column '" + std::string(response_column) + "' not found");

  std::vector<bool> numeric(header.size(), true);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < header.size(); ++c)
      if (numeric[c] && !is_missing(row[c]) && !parse_number(row[c])) numeric[c] = false;
  if (!numeric[*response]) throw IngestionError("response column '" + std::string(response_column) + "' is not numeric");

  CsvData out;
  std::vector<std::size_t> features;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *response) continue;
    if (numeric[c]) {
      features.push_back(c);
      out.feature_names.push_back(header[c]);
    } else {
      out.dropped_columns.push_back(header[c]);
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    bool complete = !is_missing(rows[r][*response]);
    for (auto c : features) complete = complete && !is_missing(rows[r][c]);
    if (complete)
      kept.push_back(r);
    else
      ++out.dropped_rows;
  }
  if (kept.empty()) throw IngestionError("no complete numeric rows in " + path.string());

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto p = static_cast<Eigen::Index>(features.size());
  out.X.resize(n, p);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[kept[static_cast<std::size_t>(i)]];
    out.y[i] = *parse_number(row[*response]);
    for (Eigen::Index j = 0; j < p; ++j) out.X(i, j) = *parse_number(row[features[static_cast<std::size_t>(j)]]);
  }

  if (center) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const bool constant = (out.X.col(j).array() == out.X(0, j)).all();
      if (constant) {
        out.X.col(j).setZero();
        out.constant_columns.push_back(out.feature_names[static_cast<std::size_t>(j)]);
      } else {
        out.X.col(j).array() -= out.X.col(j).mean();
      }
    }
  }
  return out;
}

}  // namespace dcrr
