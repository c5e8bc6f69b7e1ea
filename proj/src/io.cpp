#include "kronic/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "kronic/error.hpp"

namespace kronic::io {

std::string format_double(double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) { throw InvalidArgument("format_double: conversion failed"); }
  return std::string(buf, ptr);
}

Eigen::Index CsvTable::column(const std::string & name) const
{
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) { return static_cast<Eigen::Index>(i); }
  }
  throw InvalidArgument("CSV has no column '" + name + "'");
}

bool CsvTable::has_column(const std::string & name) const
{
  return std::find(header.begin(), header.end(), name) != header.end();
}

void write_csv(const std::filesystem::path & path, const CsvTable & table)
{
  if (static_cast<Eigen::Index>(table.header.size()) != table.values.cols()) {
    throw InvalidArgument("write_csv: header and data widths differ");
  }
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw InvalidArgument("cannot open '" + path.string() + "' for writing"); }
  for (std::size_t i = 0; i < table.header.size(); ++i) { out << (i ? "," : "") << table.header[i]; }
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) { out << (c ? "," : "") << format_double(table.values(r, c)); }
    out << '\n';
  }
  if (!out) { throw InvalidArgument("write to '" + path.string() + "' failed"); }
}

CsvTable read_csv(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw InvalidArgument("cannot open '" + path.string() + "'"); }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) { throw InvalidArgument("'" + path.string() + "' is empty"); }
  if (!line.empty() && line.back() == '\r') { line.pop_back(); }
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) { table.header.push_back(cell); }
  }
  const auto width = table.header.size();
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    std::size_t cols = 0;
    const char * p = line.data();
    const char * end = line.data() + line.size();
    while (p <= end) {
      const char * comma = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc{} || ptr != comma) {
        throw InvalidArgument("'" + path.string() + "' row " + std::to_string(rows + 2) + ": bad number");
      }
      flat.push_back(v);
      ++cols;
      p = comma + 1;
      if (comma == end) { break; }
    }
    if (cols != width) {
      throw InvalidArgument("'" + path.string() + "' row " + std::to_string(rows + 2) + " has " + std::to_string(cols) +
                            " fields, header has " + std::to_string(width));
    }
    ++rows;
  }
  table.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
    flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  return table;
}

CsvTable trajectory_table(const TrajectoryDataset & data)
{
  data.validate();
  const auto m = data.samples();
  const auto n = data.state_dim();
  const auto q = data.inputs ? data.inputs->cols() : 0;
  const auto nd = data.derivatives ? n : 0;
  CsvTable t;
  t.header.emplace_back("t");
  for (Eigen::Index i = 1; i <= n; ++i) { t.header.push_back("x" + std::to_string(i)); }
  for (Eigen::Index i = 1; i <= nd; ++i) { t.header.push_back("dx" + std::to_string(i)); }
  for (Eigen::Index i = 1; i <= q; ++i) { t.header.push_back("u" + std::to_string(i)); }
  t.values.resize(m, 1 + n + nd + q);
  t.values.col(0) = data.times;
  t.values.middleCols(1, n) = data.states;
  if (nd) { t.values.middleCols(1 + n, n) = *data.derivatives; }
  if (q) { t.values.middleCols(1 + n + nd, q) = *data.inputs; }
  return t;
}

TrajectoryDataset trajectory_from_table(const CsvTable & table)
{
  if (table.header.empty() || table.header[0] != "t") { throw InvalidArgument("trajectory CSV must start with column t"); }
  Eigen::Index n = 0, nd = 0, q = 0;
  std::size_t c = 1;
  auto take = [&](const std::string & prefix, Eigen::Index & count) {
    while (c < table.header.size() && table.header[c] == prefix + std::to_string(count + 1)) {
      ++count;
      ++c;
    }
  };
  take("x", n);
  take("dx", nd);
  take("u", q);
  if (c != table.header.size()) { throw InvalidArgument("trajectory CSV: unexpected column '" + table.header[c] + "'"); }
  if (n == 0) { throw InvalidArgument("trajectory CSV has no state columns"); }
  if (nd != 0 && nd != n) { throw InvalidArgument("trajectory CSV: derivative columns must match state columns"); }

  TrajectoryDataset d;
  d.times = table.values.col(0);
  d.states = table.values.middleCols(1, n);
  if (nd) {
    d.derivatives = table.values.middleCols(1 + n, n);
    d.derivative_source = DerivativeSource::external;
  }
  if (q) { d.inputs = table.values.middleCols(1 + n + nd, q); }
  d.validate();
  return d;
}

void write_trajectory_csv(const std::filesystem::path & path, const TrajectoryDataset & data)
{
  write_csv(path, trajectory_table(data));
}

TrajectoryDataset read_trajectory_csv(const std::filesystem::path & path) { return trajectory_from_table(read_csv(path)); }

CsvTable closed_loop_table(const ClosedLoopResult & r)
{
  const auto m = r.times.size();
  const auto n = r.states.cols();
  const auto q = r.inputs.cols();
  const auto d = r.coordinates.cols();
  CsvTable t;
  t.header.emplace_back("t");
  for (Eigen::Index i = 1; i <= n; ++i) { t.header.push_back("x" + std::to_string(i)); }
  for (Eigen::Index i = 1; i <= q; ++i) { t.header.push_back("u" + std::to_string(i)); }
  for (Eigen::Index i = 1; i <= d; ++i) { t.header.push_back("C" + std::to_string(i)); }
  t.header.emplace_back("cost");
  t.values.resize(m, 2 + n + q + d);
  t.values.col(0) = r.times;
  t.values.middleCols(1, n) = r.states;
  t.values.middleCols(1 + n, q) = r.inputs;
  t.values.middleCols(1 + n + q, d) = r.coordinates;
  t.values.col(1 + n + q + d) = r.cost;
  return t;
}

void write_closed_loop_csv(const std::filesystem::path & path, const ClosedLoopResult & r)
{
  write_csv(path, closed_loop_table(r));
}

void write_json(const std::filesystem::path & path, const nlohmann::json & j)
{
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw InvalidArgument("cannot open '" + path.string() + "' for writing"); }
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw InvalidArgument("cannot open '" + path.string() + "'"); }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error & e) {
    throw InvalidArgument("'" + path.string() + "': " + e.what());
  }
}

std::string fnv1a_hex(const std::string & s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kronic::io
