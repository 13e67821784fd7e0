#include "hetknock/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "hetknock/errors.hpp"

namespace hetknock {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

// "x12" -> 12, or 0 if the name does not match prefix + positive integer.
int column_number(const std::string& name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return 0;
  int value = 0;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value <= 0) return 0;
  return value;
}

double parse_double(const std::string& field, std::size_t line_no, std::size_t col) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    fail(ErrorCode::ParseError, "bad number '" + field + "' at line " +
                                    std::to_string(line_no) + ", column " + std::to_string(col + 1));
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorCode::NonFiniteValue, "unformattable double");
  return std::string(buf, ptr);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "empty file " + path);
  const std::vector<std::string> header = split_line(line);

  // Map header names onto slots: x<j>, xk<j>, y.
  const int ncols = static_cast<int>(header.size());
  std::vector<int> x_of(header.size(), 0), xk_of(header.size(), 0);
  int y_col = -1;
  int p = 0, pk = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "y") {
      if (y_col >= 0) fail(ErrorCode::ParseError, "duplicate column y");
      y_col = static_cast<int>(c);
      continue;
    }
    if (int k = column_number(name, "xk"); k > 0) {
      xk_of[c] = k;
      pk = std::max(pk, k);
      continue;
    }
    if (int k = column_number(name, "x"); k > 0) {
      x_of[c] = k;
      p = std::max(p, k);
      continue;
    }
    fail(ErrorCode::ParseError, "unexpected column '" + name + "'");
  }
  if (y_col < 0) fail(ErrorCode::ParseError, "missing column y");
  if (p == 0) fail(ErrorCode::ParseError, "no feature columns x1..xp");

  std::vector<int> seen_x(static_cast<std::size_t>(p), 0);
  std::vector<int> seen_xk(static_cast<std::size_t>(pk), 0);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (x_of[c] > 0 && ++seen_x[static_cast<std::size_t>(x_of[c] - 1)] > 1)
      fail(ErrorCode::ParseError, "duplicate column " + header[c]);
    if (xk_of[c] > 0 && ++seen_xk[static_cast<std::size_t>(xk_of[c] - 1)] > 1)
      fail(ErrorCode::ParseError, "duplicate column " + header[c]);
  }
  for (int j = 0; j < p; ++j)
    if (seen_x[static_cast<std::size_t>(j)] == 0)
      fail(ErrorCode::ParseError, "missing column x" + std::to_string(j + 1));
  if (pk > 0) {
    if (pk != p) fail(ErrorCode::ParseError, "knockoff columns do not match feature count");
    for (int j = 0; j < pk; ++j)
      if (seen_xk[static_cast<std::size_t>(j)] == 0)
        fail(ErrorCode::ParseError, "missing column xk" + std::to_string(j + 1));
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (static_cast<int>(fields.size()) != ncols)
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " +
                                      std::to_string(fields.size()) + " fields, expected " +
                                      std::to_string(ncols));
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) row[c] = parse_double(fields[c], line_no, c);
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Dataset ds;
  ds.x.resize(n, p);
  ds.y.resize(n);
  if (pk > 0) ds.x_knock.emplace(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<int>(c) == y_col) ds.y(i) = row[c];
      else if (x_of[c] > 0) ds.x(i, x_of[c] - 1) = row[c];
      else ds.x_knock.value()(i, xk_of[c] - 1) = row[c];
    }
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ostringstream out;
  const auto p = ds.p();
  for (Eigen::Index j = 0; j < p; ++j) out << "x" << (j + 1) << ",";
  if (ds.x_knock)
    for (Eigen::Index j = 0; j < p; ++j) out << "xk" << (j + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out << format_double(ds.x(i, j)) << ",";
    if (ds.x_knock)
      for (Eigen::Index j = 0; j < p; ++j) out << format_double((*ds.x_knock)(i, j)) << ",";
    out << format_double(ds.y(i)) << "\n";
  }
  write_file_atomic(path, out.str());
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace hetknock
