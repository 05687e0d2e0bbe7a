#pragma once

// Discrete data matrices with a designated class column: CSV ingestion,
// 1-D K-means discretization, stratified orderings and half splits.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pnb/error.hpp"
#include "pnb/random.hpp"

namespace pnb {

inline constexpr const char* kMissingLabel = "<missing>";

enum class VariableKind { discrete, continuous };

struct Variable {
  std::string name;
  /// Kind of the source column. Continuous columns are stored discretized;
  /// `centroids` then holds the sorted bin centres.
  VariableKind kind = VariableKind::discrete;
  std::vector<std::string> categories;
  std::vector<double> centroids;

  std::size_t cardinality() const { return categories.size(); }
};

struct Schema {
  std::vector<Variable> variables;
  std::size_t class_index = 0;

  std::size_t n_features() const { return variables.size() - 1; }

  /// Column index of feature j (features are all non-class columns in order).
  std::size_t feature_column(std::size_t j) const { return j < class_index ? j : j + 1; }

  const Variable& class_variable() const { return variables[class_index]; }
  const Variable& feature(std::size_t j) const { return variables[feature_column(j)]; }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < n_features(); ++j) names.push_back(feature(j).name);
    return names;
  }

  void validate() const {
    if (variables.empty()) throw Error("schema has no variables");
    if (class_index >= variables.size()) throw Error("class index out of range");
    if (variables[class_index].kind != VariableKind::discrete) {
      throw Error("class variable must be discrete");
    }
    for (const auto& v : variables) {
      if (v.categories.empty()) throw Error("variable '" + v.name + "' has no categories");
      auto sorted = v.categories;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error("variable '" + v.name + "' has duplicate category labels");
      }
    }
  }
};

/// One data row split into its class value and its feature values.
struct RowView {
  std::uint32_t cls;
  std::span<const std::uint32_t> features;
};

/// A row permutation: position p of the ordered data holds row perm[p].
struct Ordering {
  std::vector<std::size_t> perm;

  static Ordering identity(std::size_t n) {
    Ordering ord;
    ord.perm.resize(n);
    std::iota(ord.perm.begin(), ord.perm.end(), std::size_t{0});
    return ord;
  }

  bool is_valid_for(std::size_t n) const {
    if (perm.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (std::size_t r : perm) {
      if (r >= n || seen[r]) return false;
      seen[r] = true;
    }
    return true;
  }
};

/// Immutable N x n matrix of category indices. The schema is shared, so
/// splits and reorderings keep the full-data category universe.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::shared_ptr<const Schema> schema, std::vector<std::uint32_t> classes,
          std::vector<std::uint32_t> features)
      : schema_(std::move(schema)), classes_(std::move(classes)), features_(std::move(features)) {
    if (!schema_) throw Error("dataset without schema");
    schema_->validate();
    const std::size_t n = schema_->n_features();
    if (features_.size() != classes_.size() * n) throw Error("feature matrix has wrong size");
    const std::size_t k = schema_->class_variable().cardinality();
    for (auto c : classes_) {
      if (c >= k) throw Error("class value out of range");
    }
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (features_[i * n + j] >= schema_->feature(j).cardinality()) {
          throw Error("value of feature '" + schema_->feature(j).name + "' out of range");
        }
      }
    }
  }

  std::size_t size() const { return classes_.size(); }
  bool empty() const { return classes_.empty(); }
  std::size_t n_features() const { return schema_->n_features(); }

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& shared_schema() const { return schema_; }

  std::size_t class_cardinality() const { return schema_->class_variable().cardinality(); }
  std::size_t feature_cardinality(std::size_t j) const { return schema_->feature(j).cardinality(); }

  std::uint32_t class_value(std::size_t i) const { return classes_[i]; }
  std::span<const std::uint32_t> features(std::size_t i) const {
    const std::size_t n = n_features();
    return std::span<const std::uint32_t>(features_).subspan(i * n, n);
  }
  std::uint32_t feature(std::size_t i, std::size_t j) const { return features_[i * n_features() + j]; }
  RowView row(std::size_t i) const { return {classes_[i], features(i)}; }

  const std::vector<std::uint32_t>& class_column() const { return classes_; }

  /// Rows picked by index, in the given order (indices may repeat).
  Dataset select_rows(std::span<const std::size_t> rows) const {
    const std::size_t n = n_features();
    std::vector<std::uint32_t> cls;
    std::vector<std::uint32_t> feat;
    cls.reserve(rows.size());
    feat.reserve(rows.size() * n);
    for (std::size_t r : rows) {
      if (r >= size()) throw Error("row index out of range");
      cls.push_back(classes_[r]);
      auto f = features(r);
      feat.insert(feat.end(), f.begin(), f.end());
    }
    return Dataset(schema_, std::move(cls), std::move(feat));
  }

  Dataset reordered(const Ordering& ord) const {
    if (!ord.is_valid_for(size())) throw Error("ordering is not a permutation of the rows");
    return select_rows(ord.perm);
  }

  Dataset with_class_column(std::vector<std::uint32_t> classes) const {
    if (classes.size() != size()) throw Error("class column has wrong length");
    return Dataset(schema_, std::move(classes), features_);
  }

  Dataset with_feature_column(std::size_t j, std::span<const std::uint32_t> values) const {
    if (j >= n_features()) throw Error("feature index out of range");
    if (values.size() != size()) throw Error("feature column has wrong length");
    auto feat = features_;
    for (std::size_t i = 0; i < size(); ++i) feat[i * n_features() + j] = values[i];
    return Dataset(schema_, classes_, std::move(feat));
  }

 private:
  std::shared_ptr<const Schema> schema_;
  std::vector<std::uint32_t> classes_;
  std::vector<std::uint32_t> features_;
};

// ---------------------------------------------------------------------------
// Discretization

struct Discretization {
  std::vector<std::uint32_t> labels;
  std::vector<double> centroids;
};

/// One-dimensional K-means. Centroids start at k evenly spaced quantiles of
/// the sorted values; Lloyd iterations run until the assignment is stable.
/// Returned centroids are ascending, so labels are monotone in the value.
/// With fewer than k distinct values, every distinct value gets its own bin.
inline Discretization discretize_column(std::span<const double> values, std::size_t k,
                                        std::uint64_t seed) {
  if (k == 0) throw Error("bin count must be at least 1");
  if (values.empty()) throw Error("cannot discretize an empty column");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("non-finite value in continuous column");
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> centroids;
  if (distinct.size() <= k) {
    centroids = distinct;
  } else {
    const std::size_t n = sorted.size();
    for (std::size_t b = 0; b < k; ++b) {
      centroids.push_back(sorted[std::min(n - 1, (2 * b + 1) * n / (2 * k))]);
    }
    // Heavily repeated values can make quantiles coincide; replace the
    // duplicates with seeded draws from the unused distinct values.
    std::sort(centroids.begin(), centroids.end());
    centroids.erase(std::unique(centroids.begin(), centroids.end()), centroids.end());
    if (centroids.size() < k) {
      std::vector<double> unused;
      std::set_difference(distinct.begin(), distinct.end(), centroids.begin(), centroids.end(),
                          std::back_inserter(unused));
      Rng rng(seed);
      rng.shuffle(std::span<double>(unused));
      for (std::size_t i = 0; centroids.size() < k; ++i) centroids.push_back(unused[i]);
      std::sort(centroids.begin(), centroids.end());
    }

    // Lloyd iterations on the sorted values. Ties go to the lower centroid.
    std::vector<std::size_t> assign(n, 0);
    for (int iter = 0; iter < 1000; ++iter) {
      bool changed = iter == 0;
      std::size_t c = 0;
      for (std::size_t i = 0; i < n; ++i) {
        while (c + 1 < centroids.size() &&
               std::abs(sorted[i] - centroids[c + 1]) < std::abs(sorted[i] - centroids[c])) {
          ++c;
        }
        if (assign[i] != c) {
          assign[i] = c;
          changed = true;
        }
      }
      if (!changed) break;
      std::vector<double> sum(centroids.size(), 0.0);
      std::vector<std::size_t> count(centroids.size(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        sum[assign[i]] += sorted[i];
        ++count[assign[i]];
      }
      std::vector<double> next;
      for (std::size_t b = 0; b < centroids.size(); ++b) {
        if (count[b] > 0) next.push_back(sum[b] / static_cast<double>(count[b]));
      }
      std::sort(next.begin(), next.end());
      centroids = std::move(next);
    }
  }

  Discretization out;
  out.centroids = centroids;
  out.labels.reserve(values.size());
  for (double v : values) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < centroids.size(); ++b) {
      if (std::abs(v - centroids[b]) < std::abs(v - centroids[best])) best = b;
    }
    out.labels.push_back(static_cast<std::uint32_t>(best));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct LoadOptions {
  std::vector<std::string> missing_markers{"?", ""};
  /// K-means bin count for continuous columns; 0 keeps every column categorical.
  std::size_t bins = 5;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    cells.emplace_back(trim(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_centroid(double c) {
  std::ostringstream os;
  os.precision(6);
  os << "~" << c;
  return os.str();
}

}  // namespace detail

/// Column name, or a zero-based index when no header name matches.
inline std::size_t resolve_column(const std::vector<std::string>& header, const std::string& column) {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == column) return c;
  }
  if (!column.empty() && std::all_of(column.begin(), column.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    const std::size_t idx = std::stoul(column);
    if (idx < header.size()) return idx;
  }
  throw Error("class column absent: '" + column + "'");
}

/// Parses CSV text: header line, comma-separated cells. Discrete categories
/// are indexed in first-appearance order; missing markers map to a trailing
/// "<missing>" category. Continuous columns (every non-missing cell numeric,
/// never the class column) are discretized with `options.bins` bins.
inline Dataset read_csv(std::istream& in, const std::string& class_column,
                        const LoadOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV input (no header)");
  const auto header = detail::split_csv_line(line);
  const std::size_t n_cols = header.size();
  const std::size_t class_index = resolve_column(header, class_column);

  std::vector<std::vector<std::string>> cells(n_cols);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto row = detail::split_csv_line(line);
    if (row.size() != n_cols) {
      throw Error("ragged row at line " + std::to_string(line_no) + ": expected " +
                  std::to_string(n_cols) + " cells, found " + std::to_string(row.size()));
    }
    for (std::size_t c = 0; c < n_cols; ++c) cells[c].push_back(std::move(row[c]));
  }
  const std::size_t n_rows = cells[0].size();
  if (n_rows == 0) throw Error("CSV has zero data rows");

  auto is_missing = [&](const std::string& s) {
    return std::find(options.missing_markers.begin(), options.missing_markers.end(), s) !=
           options.missing_markers.end();
  };

  auto schema = std::make_shared<Schema>();
  schema->class_index = class_index;
  std::vector<std::vector<std::uint32_t>> codes(n_cols, std::vector<std::uint32_t>(n_rows));

  for (std::size_t c = 0; c < n_cols; ++c) {
    Variable var;
    var.name = header[c];
    const auto& col = cells[c];

    bool continuous = options.bins > 0 && c != class_index;
    bool any_present = false;
    std::vector<double> numeric;
    if (continuous) {
      for (const auto& s : col) {
        if (is_missing(s)) continue;
        any_present = true;
        auto v = detail::parse_decimal(s);
        if (!v) {
          continuous = false;
          break;
        }
        numeric.push_back(*v);
      }
      continuous = continuous && any_present;
    }

    bool has_missing = false;
    if (continuous) {
      var.kind = VariableKind::continuous;
      const auto disc = discretize_column(numeric, options.bins, derive_seed(options.seed, c));
      var.centroids = disc.centroids;
      for (double centre : disc.centroids) var.categories.push_back(detail::format_centroid(centre));
      const auto missing_code = static_cast<std::uint32_t>(var.categories.size());
      std::size_t next = 0;
      for (std::size_t r = 0; r < n_rows; ++r) {
        if (is_missing(col[r])) {
          codes[c][r] = missing_code;
          has_missing = true;
        } else {
          codes[c][r] = disc.labels[next++];
        }
      }
    } else {
      std::vector<std::pair<std::string, std::uint32_t>> index;  // small alphabets
      std::vector<std::size_t> missing_rows;
      for (std::size_t r = 0; r < n_rows; ++r) {
        if (is_missing(col[r])) {
          missing_rows.push_back(r);
          continue;
        }
        auto it = std::find_if(index.begin(), index.end(), [&](const auto& p) { return p.first == col[r]; });
        if (it == index.end()) {
          index.emplace_back(col[r], static_cast<std::uint32_t>(var.categories.size()));
          var.categories.push_back(col[r]);
          codes[c][r] = index.back().second;
        } else {
          codes[c][r] = it->second;
        }
      }
      has_missing = !missing_rows.empty();
      for (std::size_t r : missing_rows) codes[c][r] = static_cast<std::uint32_t>(var.categories.size());
    }
    if (has_missing) {
      if (std::find(var.categories.begin(), var.categories.end(), kMissingLabel) != var.categories.end()) {
        throw Error("column '" + var.name + "' already uses the label " + kMissingLabel);
      }
      var.categories.emplace_back(kMissingLabel);
    }
    schema->variables.push_back(std::move(var));
  }

  std::vector<std::uint32_t> classes = std::move(codes[class_index]);
  std::vector<std::uint32_t> features;
  features.reserve(n_rows * (n_cols - 1));
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c != class_index) features.push_back(codes[c][r]);
    }
  }
  return Dataset(std::move(schema), std::move(classes), std::move(features));
}

inline Dataset load_csv(const std::string& path, const std::string& class_column,
                        const LoadOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file: " + path);
  return read_csv(in, class_column, options);
}

/// Writes the dataset as CSV using category labels, columns in schema order.
inline void write_csv(std::ostream& out, const Dataset& data) {
  const auto& schema = data.schema();
  for (std::size_t c = 0; c < schema.variables.size(); ++c) {
    out << (c ? "," : "") << schema.variables[c].name;
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < schema.variables.size(); ++c) {
      std::uint32_t code;
      if (c == schema.class_index) {
        code = data.class_value(i);
      } else {
        code = data.feature(i, c < schema.class_index ? c : c - 1);
      }
      out << (c ? "," : "") << schema.variables[c].categories[code];
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Orderings and splits

/// Seeded stratified permutation. Rows are grouped by class, each group is
/// shuffled, and groups are interleaved so that after m rows every class c
/// has been drawn within one row of m * N_c / N. At each position the class
/// with the largest deficit m * N_c - N * taken_c goes next; ties are broken
/// by a seeded class priority.
inline Ordering stratified_order(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  const std::size_t k = data.class_cardinality();
  Rng rng(seed);

  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t i = 0; i < n; ++i) groups[data.class_value(i)].push_back(i);
  for (auto& g : groups) rng.shuffle(std::span<std::size_t>(g));

  std::vector<std::size_t> priority(k);
  std::iota(priority.begin(), priority.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(priority));
  std::vector<std::size_t> rank(k);
  for (std::size_t p = 0; p < k; ++p) rank[priority[p]] = p;

  Ordering ord;
  ord.perm.reserve(n);
  std::vector<std::size_t> taken(k, 0);
  for (std::size_t m = 1; m <= n; ++m) {
    std::size_t best = k;
    long long best_deficit = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (taken[c] == groups[c].size()) continue;
      const long long deficit = static_cast<long long>(m * groups[c].size()) -
                                static_cast<long long>(n * taken[c]);
      if (best == k || deficit > best_deficit || (deficit == best_deficit && rank[c] < rank[best])) {
        best = c;
        best_deficit = deficit;
      }
    }
    ord.perm.push_back(groups[best][taken[best]++]);
  }
  return ord;
}

/// First ceil(N/2) rows of the ordering form the training half.
inline std::pair<Dataset, Dataset> split_half(const Dataset& data, const Ordering& ord) {
  if (data.size() < 2) throw Error("need at least 2 rows to split");
  if (!ord.is_valid_for(data.size())) throw Error("ordering is not a permutation of the rows");
  const std::size_t n_train = (data.size() + 1) / 2;
  std::span<const std::size_t> perm(ord.perm);
  return {data.select_rows(perm.first(n_train)), data.select_rows(perm.subspan(n_train))};
}

/// Stratified subsample: the first `size` rows of a stratified ordering.
/// Returns the data unchanged when `size` >= N.
inline Dataset stratified_subsample(const Dataset& data, std::size_t size, std::uint64_t seed) {
  if (size >= data.size()) return data;
  const auto ord = stratified_order(data, seed);
  return data.select_rows(std::span<const std::size_t>(ord.perm).first(size));
}

/// Number of distinct class values actually present.
inline std::size_t observed_class_count(const Dataset& data) {
  std::vector<bool> seen(data.class_cardinality(), false);
  for (auto c : data.class_column()) seen[c] = true;
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

}  // namespace pnb
