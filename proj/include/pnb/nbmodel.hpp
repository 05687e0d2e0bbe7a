#pragma once

// Pruned Naive Bayes: the class is the only parent, and a structure picks
// which features receive the class -> feature arc. Unselected features stay
// in the joint model as parentless nodes. All parameters carry uniform
// Dirichlet (alpha = 1) priors.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pnb/dataset.hpp"
#include "pnb/error.hpp"
#include "pnb/logmath.hpp"

namespace pnb {

inline constexpr std::size_t kMaxStructureFeatures = 63;

/// Feature subset, stored as a bit pattern: bit j set = feature j selected.
class Structure {
 public:
  Structure() = default;
  Structure(std::size_t n_features, std::uint64_t mask) : n_features_(n_features), mask_(mask) {
    if (n_features > kMaxStructureFeatures) throw Error("too many features for a structure");
    if (n_features < 64 && (mask >> n_features) != 0) {
      throw Error("structure selects a feature index >= " + std::to_string(n_features));
    }
  }

  static Structure empty(std::size_t n_features) { return Structure(n_features, 0); }
  static Structure full(std::size_t n_features) {
    return Structure(n_features, n_features == 0 ? 0 : (~std::uint64_t{0} >> (64 - n_features)));
  }
  static Structure from_indices(std::size_t n_features, std::span<const std::size_t> indices) {
    std::uint64_t mask = 0;
    for (auto j : indices) {
      if (j >= n_features) throw Error("feature index out of range");
      mask |= std::uint64_t{1} << j;
    }
    return Structure(n_features, mask);
  }

  std::size_t n_features() const { return n_features_; }
  std::uint64_t mask() const { return mask_; }
  bool contains(std::size_t j) const { return (mask_ >> j) & 1U; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask_)); }
  bool is_subset_of(const Structure& other) const { return (mask_ & ~other.mask_) == 0; }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_features_; ++j) {
      if (contains(j)) out.push_back(j);
    }
    return out;
  }

  friend bool operator==(const Structure&, const Structure&) = default;

 private:
  std::size_t n_features_ = 0;
  std::uint64_t mask_ = 0;
};

/// Comma-separated feature names of the structure, in feature order.
inline std::string structure_names(const Structure& m, const Schema& schema) {
  std::string out;
  for (auto j : m.indices()) {
    if (!out.empty()) out += ',';
    out += schema.feature(j).name;
  }
  return out;
}

/// Accepts either a canonical integer (bit j = feature j) or a
/// comma-separated list of feature names. An empty string is the empty set.
inline Structure parse_structure(const std::string& text, const Schema& schema) {
  const std::size_t n = schema.n_features();
  if (text.empty()) return Structure::empty(n);
  if (std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    std::uint64_t mask = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), mask);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw UsageError("structure integer out of range: " + text);
    }
    if (n < 64 && (mask >> n) != 0) {
      throw UsageError("structure " + text + " selects features beyond the " + std::to_string(n) +
                       " available");
    }
    return Structure(n, mask);
  }
  std::vector<std::size_t> idx;
  for (const auto& name : detail::split_csv_line(text)) {
    std::size_t j = 0;
    while (j < n && schema.feature(j).name != name) ++j;
    if (j == n) throw UsageError("unknown feature name in structure: '" + name + "'");
    idx.push_back(j);
  }
  return Structure::from_indices(n, idx);
}

// ---------------------------------------------------------------------------
// Sufficient statistics

using Count = std::int64_t;

struct SuffStats {
  Structure structure;
  std::vector<std::size_t> feature_cards;
  std::vector<Count> class_counts;             // N_c
  std::vector<std::vector<Count>> cond_counts;  // per feature: K x r_j row-major, empty if unselected
  std::vector<std::vector<Count>> marg_counts;  // per feature: r_j
  Count total = 0;

  std::size_t n_classes() const { return class_counts.size(); }

  Count cond(std::size_t j, std::size_t c, std::size_t v) const {
    return cond_counts[j][c * feature_cards[j] + v];
  }

  friend bool operator==(const SuffStats&, const SuffStats&) = default;
};

/// Zero tables shaped for `schema` and `m`.
inline SuffStats empty_stats(const Schema& schema, const Structure& m) {
  if (m.n_features() != schema.n_features()) throw Error("structure/schema feature count mismatch");
  SuffStats s;
  s.structure = m;
  const std::size_t k = schema.class_variable().cardinality();
  s.class_counts.assign(k, 0);
  s.feature_cards.resize(schema.n_features());
  s.cond_counts.resize(schema.n_features());
  s.marg_counts.resize(schema.n_features());
  for (std::size_t j = 0; j < schema.n_features(); ++j) {
    const std::size_t r = schema.feature(j).cardinality();
    s.feature_cards[j] = r;
    s.marg_counts[j].assign(r, 0);
    if (m.contains(j)) s.cond_counts[j].assign(k * r, 0);
  }
  return s;
}

enum class Direction { add, remove };

namespace detail {

inline void check_row(const SuffStats& s, const RowView& row) {
  if (row.cls >= s.n_classes()) throw Error("class value out of range");
  if (row.features.size() != s.feature_cards.size()) throw Error("row has wrong number of features");
  for (std::size_t j = 0; j < row.features.size(); ++j) {
    if (row.features[j] >= s.feature_cards[j]) throw Error("feature value out of range");
  }
}

inline void check_features(const SuffStats& s, std::span<const std::uint32_t> u, const Structure& m) {
  if (u.size() != s.feature_cards.size()) throw Error("feature vector has wrong length");
  if (!m.is_subset_of(s.structure)) throw Error("structure selects features the statistics do not track");
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (m.contains(j) && u[j] >= s.feature_cards[j]) throw Error("feature value out of range");
  }
}

}  // namespace detail

/// Adds or removes one row. Removing a row that was never added throws and
/// leaves the statistics unchanged.
inline void update_stats(SuffStats& s, const RowView& row, Direction direction) {
  detail::check_row(s, row);
  const auto c = row.cls;
  if (direction == Direction::remove) {
    bool ok = s.total > 0 && s.class_counts[c] > 0;
    for (std::size_t j = 0; ok && j < row.features.size(); ++j) {
      const auto v = row.features[j];
      ok = s.marg_counts[j][v] > 0 && (!s.structure.contains(j) || s.cond(j, c, v) > 0);
    }
    if (!ok) throw Error("removing row would drive a count negative");
  }
  const Count delta = direction == Direction::add ? 1 : -1;
  s.total += delta;
  s.class_counts[c] += delta;
  for (std::size_t j = 0; j < row.features.size(); ++j) {
    const auto v = row.features[j];
    s.marg_counts[j][v] += delta;
    if (s.structure.contains(j)) s.cond_counts[j][c * s.feature_cards[j] + v] += delta;
  }
}

inline SuffStats collect_stats(const Dataset& train, const Structure& m) {
  auto s = empty_stats(train.schema(), m);
  for (std::size_t i = 0; i < train.size(); ++i) update_stats(s, train.row(i), Direction::add);
  return s;
}

// ---------------------------------------------------------------------------
// Predictive distributions

/// Distribution over class values, kept in both linear and log form so log
/// losses of small probabilities stay accurate.
struct ClassDistribution {
  std::vector<double> probs;
  std::vector<double> log_probs;
  /// Set by plug-in predictives whose class scores were all zero.
  bool degenerate = false;

  std::size_t size() const { return probs.size(); }

  /// Most probable class; ties go to the lowest index.
  std::uint32_t argmax() const {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
      if (log_probs[c] > log_probs[best]) best = c;
    }
    return static_cast<std::uint32_t>(best);
  }

  static ClassDistribution from_log_scores(std::vector<double> scores) {
    ClassDistribution d;
    const double norm = log_sum_exp(scores);
    if (norm == kNegInf) {
      const double uniform = -std::log(static_cast<double>(scores.size()));
      d.log_probs.assign(scores.size(), uniform);
      d.probs.assign(scores.size(), 1.0 / static_cast<double>(scores.size()));
      d.degenerate = true;
      return d;
    }
    d.log_probs = std::move(scores);
    d.probs.resize(d.log_probs.size());
    for (std::size_t c = 0; c < d.log_probs.size(); ++c) {
      d.log_probs[c] -= norm;
      d.probs[c] = std::exp(d.log_probs[c]);
    }
    return d;
  }
};

namespace detail {

/// log[(count + 1) / (total + r)]: Laplace-smoothed predictive of one cell.
inline double smoothed(Count count, Count total, std::size_t r) {
  return std::log(static_cast<double>(count + 1) / static_cast<double>(total + static_cast<Count>(r)));
}

/// Unnormalized log P(c, u_selected | past) for every class c.
inline std::vector<double> joint_class_scores(const SuffStats& s, std::span<const std::uint32_t> u,
                                              const Structure& m) {
  const std::size_t k = s.n_classes();
  std::vector<double> scores(k);
  for (std::size_t c = 0; c < k; ++c) {
    double acc = smoothed(s.class_counts[c], s.total, k);
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (m.contains(j)) acc += smoothed(s.cond(j, c, u[j]), s.class_counts[c], s.feature_cards[j]);
    }
    scores[c] = acc;
  }
  return scores;
}

/// log prod_{j not in m} P(u_j | past): parentless feature terms.
inline double unselected_marginal_term(const SuffStats& s, std::span<const std::uint32_t> u,
                                       const Structure& m) {
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!m.contains(j)) acc += smoothed(s.marg_counts[j][u[j]], s.total, s.feature_cards[j]);
  }
  return acc;
}

}  // namespace detail

/// Bayesian class predictive with posterior-mean parameters:
/// P(c | u) proportional to (N_c+1)/(N+K) * prod_{j in m} (N_{c,j,u_j}+1)/(N_c+r_j).
inline ClassDistribution class_predictive(const SuffStats& s, std::span<const std::uint32_t> u,
                                          const Structure& m) {
  detail::check_features(s, u, m);
  return ClassDistribution::from_log_scores(detail::joint_class_scores(s, u, m));
}

/// log P(row | past) for the whole row: class term, selected-feature
/// conditionals given the row's class, and unselected-feature marginals.
inline double row_log_marginal_predictive(const SuffStats& s, const RowView& row, const Structure& m) {
  detail::check_row(s, row);
  detail::check_features(s, row.features, m);
  const std::size_t k = s.n_classes();
  const auto c = row.cls;
  double acc = detail::smoothed(s.class_counts[c], s.total, k);
  for (std::size_t j = 0; j < row.features.size(); ++j) {
    if (m.contains(j)) {
      acc += detail::smoothed(s.cond(j, c, row.features[j]), s.class_counts[c], s.feature_cards[j]);
    }
  }
  return acc + detail::unselected_marginal_term(s, row.features, m);
}

/// log P(u | past) with the class summed out.
inline double feature_log_predictive(const SuffStats& s, std::span<const std::uint32_t> u,
                                     const Structure& m) {
  detail::check_features(s, u, m);
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] >= s.feature_cards[j]) throw Error("feature value out of range");
  }
  const auto scores = detail::joint_class_scores(s, u, m);
  return log_sum_exp(scores) + detail::unselected_marginal_term(s, u, m);
}

// ---------------------------------------------------------------------------
// Plug-in (posterior-mode) parameters

struct PluginParameters {
  std::vector<double> class_probs;
  std::vector<std::vector<double>> cond_probs;  // per feature: K x r_j, empty if unselected
  std::vector<std::vector<double>> marg_probs;  // per feature: r_j, empty if selected
  std::vector<std::size_t> feature_cards;
};

namespace detail {

inline std::vector<double> normalize_or_uniform(std::span<const Count> counts) {
  Count sum = 0;
  for (auto c : counts) sum += c;
  std::vector<double> out(counts.size());
  for (std::size_t v = 0; v < counts.size(); ++v) {
    out[v] = sum == 0 ? 1.0 / static_cast<double>(counts.size())
                      : static_cast<double>(counts[v]) / static_cast<double>(sum);
  }
  return out;
}

}  // namespace detail

/// Posterior mode under the uniform prior = empirical frequencies. Rows with
/// no observations fall back to uniform.
inline PluginParameters plugin_params(const SuffStats& s, const Structure& m) {
  if (!m.is_subset_of(s.structure)) throw Error("structure selects features the statistics do not track");
  PluginParameters p;
  const std::size_t k = s.n_classes();
  p.feature_cards = s.feature_cards;
  p.class_probs = detail::normalize_or_uniform(s.class_counts);
  p.cond_probs.resize(s.feature_cards.size());
  p.marg_probs.resize(s.feature_cards.size());
  for (std::size_t j = 0; j < s.feature_cards.size(); ++j) {
    const std::size_t r = s.feature_cards[j];
    if (m.contains(j)) {
      p.cond_probs[j].reserve(k * r);
      for (std::size_t c = 0; c < k; ++c) {
        const auto row = detail::normalize_or_uniform(std::span<const Count>(s.cond_counts[j]).subspan(c * r, r));
        p.cond_probs[j].insert(p.cond_probs[j].end(), row.begin(), row.end());
      }
    } else {
      p.marg_probs[j] = detail::normalize_or_uniform(s.marg_counts[j]);
    }
  }
  return p;
}

/// P(c | u) proportional to class_probs[c] * prod_{j in m} cond_probs[j][c][u_j].
/// When every class scores zero the result is uniform and flagged degenerate.
inline ClassDistribution plugin_class_predictive(const PluginParameters& p, std::span<const std::uint32_t> u,
                                                 const Structure& m) {
  if (u.size() != p.feature_cards.size()) throw Error("feature vector has wrong length");
  const std::size_t k = p.class_probs.size();
  std::vector<double> scores(k);
  for (std::size_t c = 0; c < k; ++c) {
    double acc = std::log(p.class_probs[c]);
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (!m.contains(j)) continue;
      if (p.cond_probs[j].empty()) throw Error("structure selects features the parameters do not cover");
      if (u[j] >= p.feature_cards[j]) throw Error("feature value out of range");
      acc += std::log(p.cond_probs[j][c * p.feature_cards[j] + u[j]]);
    }
    scores[c] = acc;
  }
  return ClassDistribution::from_log_scores(std::move(scores));
}

}  // namespace pnb
