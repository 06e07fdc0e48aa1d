#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rntr/experiments.hpp"

namespace rntr::cli {

/// Bad flags, unreadable files or malformed input; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

/// Shortest text that parses back to the same double ("NA" for NaN).
std::string format_double(double v);

/// Reads a headed numeric CSV; throws UsageError naming the path and line.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Matrix& data, const std::vector<std::string>& header);
std::vector<std::string> default_header(Eigen::Index d);

struct Normalization {
  Vector means;
  Vector sds;

  /// Column z-scores with divisor m - 1; throws UsageError on a constant column.
  static Normalization fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct ModelMeta {
  std::string solver;
  int iterations = 0;
  double time_s = 0.0;
  std::string termination;
};

struct ModelFile {
  GmmParams params;
  std::optional<Normalization> normalization;
  ModelMeta meta;
};

nlohmann::json model_to_json(const GmmParams& params, const std::optional<Normalization>& norm,
                             const ModelMeta& meta);
/// Throws UsageError on a malformed document.
ModelFile model_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// Line and column (1-based) of a byte offset.
std::pair<int, int> line_column(const std::string& text, std::size_t offset);

/// Parses a suite document; `name` prefixes error messages as name:line:col.
BenchmarkSuite parse_suite(const std::string& text, const std::string& name);

/// Benchmark tables. With `deterministic` set, time columns read "NA".
std::string summary_csv(const BenchmarkResult& res, bool deterministic);
std::string raw_csv(const BenchmarkResult& res, bool deterministic);
std::string timings_csv(const BenchmarkResult& res);
std::string trace_csv(const std::vector<IterRecord>& trace);
std::string density_table_csv(const DensityResult& res, bool deterministic);
std::string density_grid_csv(const DensityResult& res);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rntr::cli
