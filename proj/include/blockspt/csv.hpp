#pragma once

// CSV emission with a fixed, versioned column schema. Every row carries the
// shape, sweep coordinates, optimizer parameters, and seed that produced its
// value, so any row can be recomputed from the file alone. Formatting goes
// through snprintf with fixed precision, making re-runs byte-identical.

#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockspt {

/// Bumped whenever a column is appended (columns are never removed or
/// reordered, so downstream readers keyed on names stay valid).
inline constexpr int kCsvSchemaVersion = 1;

inline constexpr const char* kCsvHeader =
    "quantity,d,k,n,M,alpha,beta,eps,value,ci_low,ci_high,param_c3s,"
    "param_gammas,param_lambda,param_t1,seed,schema_version";

struct CsvRow {
  std::string quantity;
  std::optional<long long> d, k, n, m;
  std::optional<double> alpha, beta, eps;
  std::optional<double> value, ci_low, ci_high;
  std::optional<double> param_c3s, param_gammas, param_lambda, param_t1;
  std::optional<unsigned long long> seed;
};

namespace detail {

inline std::string csv_num(const std::optional<double>& v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", *v);
  return buf;
}

inline std::string csv_int(const std::optional<long long>& v) {
  return v ? std::to_string(*v) : std::string{};
}

}  // namespace detail

inline std::string format_csv_row(const CsvRow& r) {
  using detail::csv_int;
  using detail::csv_num;
  std::string line;
  line.reserve(160);
  line += r.quantity;
  line += ',';
  line += csv_int(r.d);
  line += ',';
  line += csv_int(r.k);
  line += ',';
  line += csv_int(r.n);
  line += ',';
  line += csv_int(r.m);
  line += ',';
  line += csv_num(r.alpha);
  line += ',';
  line += csv_num(r.beta);
  line += ',';
  line += csv_num(r.eps);
  line += ',';
  line += csv_num(r.value);
  line += ',';
  line += csv_num(r.ci_low);
  line += ',';
  line += csv_num(r.ci_high);
  line += ',';
  line += csv_num(r.param_c3s);
  line += ',';
  line += csv_num(r.param_gammas);
  line += ',';
  line += csv_num(r.param_lambda);
  line += ',';
  line += csv_num(r.param_t1);
  line += ',';
  line += r.seed ? std::to_string(*r.seed) : std::string{};
  line += ',';
  line += std::to_string(kCsvSchemaVersion);
  return line;
}

/// Writes header + rows. Rows must already be in their final (sweep-key)
/// order; this function never reorders.
inline void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << kCsvHeader << '\n';
  for (const CsvRow& r : rows) out << format_csv_row(r) << '\n';
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace blockspt
