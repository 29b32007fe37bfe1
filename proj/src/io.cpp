#include "tupi/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "tupi/error.hpp"

namespace tupi {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

// Numeric rows of a CSV file; a non-numeric first line is taken as a header.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split(line);
    std::vector<double> row;
    row.reserve(cells.size());
    bool numeric = true;
    for (auto c : cells) {
      double v = 0.0;
      if (!parse_number(c, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    const bool header = first_content && !numeric;
    first_content = false;
    if (header) continue;
    if (!numeric) throw ParseError(where(path, line_no) + ": non-numeric cell");
    for (double v : row) {
      if (!std::isfinite(v)) throw ParseError(where(path, line_no) + ": non-finite value");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(where(path, line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " columns, found " +
                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");
  return rows;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FeatureSet ingest_features(const std::filesystem::path& path) {
  const auto rows = read_table(path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return FeatureSet(path.stem().string(), std::move(m));
}

Predictions ingest_predictions(const std::filesystem::path& path) {
  const auto rows = read_table(path);
  if (rows[0].size() != 1) {
    throw ParseError(path.string() + ": predictions must have a single column");
  }
  Predictions p(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) p(static_cast<Eigen::Index>(i)) = rows[i][0];
  return p;
}

RankPairs ingest_pairs(const std::filesystem::path& path, std::optional<std::size_t> n) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  RankPairs pairs;
  std::set<RankPair> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split(line);
    std::size_t idx[2] = {0, 0};
    bool ok = cells.size() == 2;
    for (std::size_t c = 0; ok && c < 2; ++c) {
      const auto cell = cells[c];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), idx[c]);
      ok = !cell.empty() && ec == std::errc() && ptr == cell.data() + cell.size();
    }
    if (!ok) {
      if (pairs.empty() && line_no == 1) continue;  // header
      throw ParseError(where(path, line_no) + ": expected 'q,r' with non-negative integers");
    }
    const RankPair p{idx[0], idx[1]};
    if (p.q == p.r) throw ParseError(where(path, line_no) + ": pair compares an index to itself");
    if (n && (p.q >= *n || p.r >= *n)) {
      throw ParseError(where(path, line_no) + ": index out of range for " + std::to_string(*n) +
                       " instances");
    }
    if (!seen.insert(p).second) throw ParseError(where(path, line_no) + ": duplicate pair");
    pairs.push_back(p);
  }
  if (pairs.empty()) throw ParseError(path.string() + ": no pairs");
  return pairs;
}

void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  std::string out;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.dims(); ++j) {
      if (j) out += ',';
      out += format_double(features.values(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_predictions(const std::filesystem::path& path, const Predictions& p) {
  std::string out;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out += format_double(p(i));
    out += '\n';
  }
  write_text(path, out);
}

void write_pairs(const std::filesystem::path& path, const RankPairs& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += std::to_string(p.q) + "," + std::to_string(p.r) + "\n";
  }
  write_text(path, out);
}

}  // namespace tupi
