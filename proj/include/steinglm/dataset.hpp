#ifndef STEINGLM_DATASET_HPP
#define STEINGLM_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "steinglm/matrix.hpp"

namespace steinglm {

enum class ColumnKind { Numeric, Categorical, Response };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
};

enum class Task { Regression, BinaryClassification };

Task task_from_string(const std::string& s);
std::string to_string(Task t);

/// Typed columns after CSV parsing; rows with missing cells already dropped.
struct RawTable {
  std::vector<ColumnSchema> schema;
  std::vector<std::vector<double>> numeric_cols;       // parallel to schema; empty unless numeric/response
  std::vector<std::vector<std::string>> string_cols;   // parallel to schema; empty unless categorical
  std::size_t n_rows = 0;
  std::size_t dropped_rows = 0;
};

/// Feature matrix after one-hot expansion, before standardization.
struct EncodedTable {
  DenseMatrix x;
  std::vector<double> y;
  std::vector<std::string> feature_names;  // categorical columns become name=level
  std::vector<std::string> warnings;
};

struct StandardizationParams {
  std::vector<double> means;
  std::vector<double> stds;  // population std-dev over the fit rows
};

struct ResponseScale {
  double min = 0.0;
  double max = 1.0;
};

struct Dataset {
  DenseMatrix x;              // standardized features, all rows
  std::vector<double> y;      // regression: scaled to [0,1] on fit rows; classification: {0,1}
  Task task = Task::Regression;
  std::vector<std::string> feature_names;
  StandardizationParams standardization;
  ResponseScale response_scale;
  std::vector<std::string> warnings;
};

struct Split {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  std::uint64_t seed = 0;
};

/// Parse a comma-separated UTF-8 file with a header row that must match the
/// schema names in order. Missing tokens: empty string, "?", "NA". Rows with
/// any missing cell are dropped and counted.
RawTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema);

/// One-hot expansion of categorical columns using the levels observed on
/// fit_indices (sorted lexicographically). Levels unseen at fit time encode
/// as all-zero rows with a warning.
EncodedTable encode_columns(const RawTable& raw, const std::vector<std::size_t>& fit_indices);

/// Full preprocessing: encode, standardize each feature to zero mean / unit
/// variance on the fit rows, drop zero-variance features with a warning, and
/// (regression only) scale the response to [0,1] by the fit-row min/max.
Dataset preprocess(const RawTable& raw, Task task, const std::vector<std::size_t>& fit_indices);

/// 20% test; of the remainder, 20% validation and 80% training.
/// Deterministic Fisher-Yates shuffle under `seed`.
Split make_split(std::size_t n, std::uint64_t seed);

DenseMatrix take_rows(const DenseMatrix& x, const std::vector<std::size_t>& idx);
std::vector<double> take(const std::vector<double>& v, const std::vector<std::size_t>& idx);

/// Inverse of the regression response scaling.
double unscale_response(const ResponseScale& s, double y01);

}  // namespace steinglm

#endif
