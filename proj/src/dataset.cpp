#include "steinglm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "steinglm/rng.hpp"

namespace steinglm {

Task task_from_string(const std::string& s) {
  if (s == "regression") return Task::Regression;
  if (s == "binary-classification" || s == "classification")
    return Task::BinaryClassification;
  throw std::invalid_argument("unknown task: " + s);
}

std::string to_string(Task t) {
  return t == Task::Regression ? "regression" : "binary-classification";
}

namespace {

bool is_missing(const std::string& tok) {
  return tok.empty() || tok == "?" || tok == "NA";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace and a possible trailing CR.
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_numeric(const std::string& tok, const std::string& column, std::size_t row) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size())
    throw std::runtime_error("load_csv: unparsable numeric cell '" + tok + "' in column '" +
                             column + "' at data row " + std::to_string(row + 1));
  return v;
}

}  // namespace

RawTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema) {
  std::size_t n_response = 0;
  for (const auto& c : schema)
    if (c.kind == ColumnKind::Response) ++n_response;
  if (n_response != 1)
    throw std::invalid_argument("load_csv: schema must contain exactly one response column");

  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
  const auto header = split_line(line);
  if (header.size() != schema.size())
    throw std::runtime_error("load_csv: header has " + std::to_string(header.size()) +
                             " columns, schema expects " + std::to_string(schema.size()));
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (header[j] != schema[j].name)
      throw std::runtime_error("load_csv: header column '" + header[j] +
                               "' does not match schema column '" + schema[j].name + "'");

  RawTable raw;
  raw.schema = schema;
  raw.numeric_cols.resize(schema.size());
  raw.string_cols.resize(schema.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto cells = split_line(line);
    if (cells.size() != schema.size())
      throw std::runtime_error("load_csv: row " + std::to_string(row + 1) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(schema.size()));
    bool missing = false;
    for (const auto& c : cells)
      if (is_missing(c)) {
        missing = true;
        break;
      }
    if (missing) {
      ++raw.dropped_rows;
      ++row;
      continue;
    }
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].kind == ColumnKind::Categorical)
        raw.string_cols[j].push_back(cells[j]);
      else
        raw.numeric_cols[j].push_back(parse_numeric(cells[j], schema[j].name, row));
    }
    ++raw.n_rows;
    ++row;
  }
  if (raw.n_rows == 0) throw std::runtime_error("load_csv: no usable data rows in " + path);
  return raw;
}

EncodedTable encode_columns(const RawTable& raw, const std::vector<std::size_t>& fit_indices) {
  if (fit_indices.empty())
    throw std::invalid_argument("encode_columns: fit_indices must be non-empty");
  for (std::size_t i : fit_indices)
    if (i >= raw.n_rows) throw std::invalid_argument("encode_columns: fit index out of range");

  EncodedTable enc;

  // Column layout: numeric columns pass through, categorical expand to
  // one indicator per fit-row level (full set, lexicographic order).
  struct ColPlan {
    std::size_t src;
    bool categorical;
    std::vector<std::string> levels;
  };
  std::vector<ColPlan> plan;
  std::size_t width = 0;
  for (std::size_t j = 0; j < raw.schema.size(); ++j) {
    if (raw.schema[j].kind == ColumnKind::Response) continue;
    if (raw.schema[j].kind == ColumnKind::Categorical) {
      std::set<std::string> levels;
      for (std::size_t i : fit_indices) levels.insert(raw.string_cols[j][i]);
      ColPlan p{j, true, {levels.begin(), levels.end()}};
      for (const auto& lv : p.levels)
        enc.feature_names.push_back(raw.schema[j].name + "=" + lv);
      width += p.levels.size();
      plan.push_back(std::move(p));
    } else {
      enc.feature_names.push_back(raw.schema[j].name);
      plan.push_back({j, false, {}});
      width += 1;
    }
  }

  enc.x = DenseMatrix(raw.n_rows, width);
  std::set<std::string> unseen;
  for (std::size_t i = 0; i < raw.n_rows; ++i) {
    std::size_t c = 0;
    for (const auto& p : plan) {
      if (!p.categorical) {
        enc.x(i, c++) = raw.numeric_cols[p.src][i];
        continue;
      }
      const std::string& v = raw.string_cols[p.src][i];
      auto it = std::lower_bound(p.levels.begin(), p.levels.end(), v);
      if (it != p.levels.end() && *it == v)
        enc.x(i, c + static_cast<std::size_t>(it - p.levels.begin())) = 1.0;
      else
        unseen.insert(raw.schema[p.src].name + "=" + v);
      c += p.levels.size();
    }
  }
  for (const auto& u : unseen)
    enc.warnings.push_back("categorical level unseen in fit rows, encoded all-zero: " + u);

  for (std::size_t j = 0; j < raw.schema.size(); ++j)
    if (raw.schema[j].kind == ColumnKind::Response) enc.y = raw.numeric_cols[j];
  return enc;
}

Dataset preprocess(const RawTable& raw, Task task, const std::vector<std::size_t>& fit_indices) {
  EncodedTable enc = encode_columns(raw, fit_indices);

  const std::size_t n = enc.x.rows;
  const double fit_n = static_cast<double>(fit_indices.size());

  // Per-feature mean and population std over the fit rows.
  std::vector<double> mean(enc.x.cols, 0.0), var(enc.x.cols, 0.0);
  for (std::size_t i : fit_indices)
    for (std::size_t j = 0; j < enc.x.cols; ++j) mean[j] += enc.x(i, j);
  for (double& m : mean) m /= fit_n;
  for (std::size_t i : fit_indices)
    for (std::size_t j = 0; j < enc.x.cols; ++j) {
      const double d = enc.x(i, j) - mean[j];
      var[j] += d * d;
    }
  for (double& v : var) v /= fit_n;

  Dataset ds;
  ds.task = task;
  ds.warnings = enc.warnings;

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < enc.x.cols; ++j) {
    if (var[j] < 1e-24) {
      ds.warnings.push_back("zero-variance feature dropped: " + enc.feature_names[j]);
      continue;
    }
    keep.push_back(j);
  }
  if (keep.empty()) throw std::runtime_error("preprocess: all features have zero variance");

  ds.x = DenseMatrix(n, keep.size());
  ds.standardization.means.resize(keep.size());
  ds.standardization.stds.resize(keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const std::size_t j = keep[c];
    const double sd = std::sqrt(var[j]);
    ds.feature_names.push_back(enc.feature_names[j]);
    ds.standardization.means[c] = mean[j];
    ds.standardization.stds[c] = sd;
    for (std::size_t i = 0; i < n; ++i) ds.x(i, c) = (enc.x(i, j) - mean[j]) / sd;
  }

  ds.y = enc.y;
  if (task == Task::Regression) {
    double lo = enc.y[fit_indices[0]], hi = lo;
    for (std::size_t i : fit_indices) {
      lo = std::min(lo, enc.y[i]);
      hi = std::max(hi, enc.y[i]);
    }
    if (hi <= lo) throw std::runtime_error("preprocess: constant response on fit rows");
    ds.response_scale = {lo, hi};
    for (double& v : ds.y) v = (v - lo) / (hi - lo);
  } else {
    for (double v : ds.y)
      if (v != 0.0 && v != 1.0)
        throw std::runtime_error("preprocess: classification response must be 0/1, got " +
                                 std::to_string(v));
    ds.response_scale = {0.0, 1.0};
  }
  return ds;
}

Split make_split(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("make_split: need at least 10 rows");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(mix64(seed) ^ 0x5f5d0a7ab241c2bbull);
  rng.shuffle(perm);

  const std::size_t n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  const std::size_t n_rest = n - n_test;
  const std::size_t n_val =
      static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n_rest)));
  const std::size_t n_train = n_rest - n_val;
  if (n_test == 0 || n_val == 0 || n_train == 0)
    throw std::invalid_argument("make_split: n too small for non-empty splits");

  Split s;
  s.seed = seed;
  s.test_idx.assign(perm.begin(), perm.begin() + n_test);
  s.val_idx.assign(perm.begin() + n_test, perm.begin() + n_test + n_val);
  s.train_idx.assign(perm.begin() + n_test + n_val, perm.end());
  return s;
}

DenseMatrix take_rows(const DenseMatrix& x, const std::vector<std::size_t>& idx) {
  DenseMatrix out(idx.size(), x.cols);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(idx[i], j);
  return out;
}

std::vector<double> take(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

double unscale_response(const ResponseScale& s, double y01) {
  return s.min + y01 * (s.max - s.min);
}

}  // namespace steinglm
