#pragma once

// Model-selection criteria for pruned Naive Bayes structures. Every score is
// a natural-log quantity where larger is better; loss-based criteria return
// the negated mean per-row loss.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pnb/dataset.hpp"
#include "pnb/error.hpp"
#include "pnb/logmath.hpp"
#include "pnb/loss.hpp"
#include "pnb/nbmodel.hpp"
#include "pnb/random.hpp"

namespace pnb {

/// Extended real; -inf sorts below every finite value.
struct Score {
  double value = 0.0;

  bool is_finite() const { return std::isfinite(value); }
  friend auto operator<=>(const Score&, const Score&) = default;
};

enum class CriterionKind { uevi, sevi_approx, sevi_exact, preq, loocv, kfold, trloss, bic };

struct CriterionSpec {
  CriterionKind kind = CriterionKind::uevi;
  /// Selection loss for looCV, k-fold and TRloss. Unset means "follow the
  /// evaluation loss" in experiments; scoring requires it to be set.
  std::optional<LossKind> loss;
  std::size_t folds = 10;
  /// 1 = single pass; more = averaged over seeded stratified orderings.
  std::size_t orderings = 1;
  std::uint64_t seed = 0;
  /// Upper bound on K^N for the exact supervised evidence.
  std::uint64_t exact_budget = std::uint64_t{1} << 20;

  bool uses_loss() const {
    return kind == CriterionKind::loocv || kind == CriterionKind::kfold || kind == CriterionKind::trloss;
  }
};

inline constexpr std::string_view kCriterionNames =
    "uevi, sevi-approx, sevi-exact, preq, preq10, loocv, fcv, fcv10, trloss, bic";

/// Parses a CLI criterion name, optionally suffixed ":01" or ":log" to pin
/// the selection loss of looCV, k-fold and TRloss.
inline CriterionSpec parse_criterion(std::string_view text) {
  CriterionSpec spec;
  std::string_view name = text;
  std::optional<LossKind> loss;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    name = text.substr(0, colon);
    loss = parse_loss(text.substr(colon + 1));
  }
  if (name == "uevi") {
    spec.kind = CriterionKind::uevi;
  } else if (name == "sevi-approx") {
    spec.kind = CriterionKind::sevi_approx;
  } else if (name == "sevi-exact") {
    spec.kind = CriterionKind::sevi_exact;
  } else if (name == "preq") {
    spec.kind = CriterionKind::preq;
  } else if (name == "preq10") {
    spec.kind = CriterionKind::preq;
    spec.orderings = 10;
  } else if (name == "loocv") {
    spec.kind = CriterionKind::loocv;
  } else if (name == "fcv") {
    spec.kind = CriterionKind::kfold;
  } else if (name == "fcv10") {
    spec.kind = CriterionKind::kfold;
    spec.orderings = 10;
  } else if (name == "trloss") {
    spec.kind = CriterionKind::trloss;
  } else if (name == "bic") {
    spec.kind = CriterionKind::bic;
  } else {
    throw UsageError("unknown criterion '" + std::string(text) + "' (valid: " + std::string(kCriterionNames) + ")");
  }
  if (loss && !spec.uses_loss()) {
    throw UsageError("criterion '" + std::string(name) + "' takes no loss suffix");
  }
  spec.loss = loss;
  return spec;
}

/// Canonical CLI name of the spec (round-trips through parse_criterion for
/// default fold counts).
inline std::string criterion_name(const CriterionSpec& spec) {
  std::string name;
  const bool starred = spec.orderings > 1;
  switch (spec.kind) {
    case CriterionKind::uevi: name = "uevi"; break;
    case CriterionKind::sevi_approx: name = "sevi-approx"; break;
    case CriterionKind::sevi_exact: name = "sevi-exact"; break;
    case CriterionKind::preq: name = starred ? "preq" + std::to_string(spec.orderings) : "preq"; break;
    case CriterionKind::loocv: name = "loocv"; break;
    case CriterionKind::kfold: name = starred ? "fcv" + std::to_string(spec.orderings) : "fcv"; break;
    case CriterionKind::trloss: name = "trloss"; break;
    case CriterionKind::bic: name = "bic"; break;
  }
  if (spec.loss && spec.uses_loss()) name += ":" + std::string(loss_name(*spec.loss));
  return name;
}

namespace detail {

inline void check_ordering(const Dataset& train, const Ordering& ord) {
  if (!ord.is_valid_for(train.size())) throw Error("ordering is not a permutation of the training rows");
}

inline double mean_negated(double loss_sum, std::size_t n) {
  return 0.0 - loss_sum / static_cast<double>(n);
}

/// Sum of per-row terms in ascending order, so the result depends only on
/// the multiset of terms and not on row order.
inline double canonical_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double x : terms) sum += x;
  return sum;
}

}  // namespace detail

/// Closed-form log evidence of the joint data with every Dirichlet integrated
/// out: the class node, one multinomial per (selected feature, class value)
/// and, unless `with_unselected` is false, one parentless multinomial per
/// unselected feature.
inline double log_evidence(const SuffStats& s, bool with_unselected = true) {
  const std::size_t k = s.n_classes();
  double acc = log_dirichlet_evidence(s.class_counts);
  for (std::size_t j = 0; j < s.feature_cards.size(); ++j) {
    const std::size_t r = s.feature_cards[j];
    if (s.structure.contains(j)) {
      std::span<const Count> table(s.cond_counts[j]);
      for (std::size_t c = 0; c < k; ++c) acc += log_dirichlet_evidence(table.subspan(c * r, r));
    } else if (with_unselected) {
      acc += log_dirichlet_evidence(s.marg_counts[j]);
    }
  }
  return acc;
}

/// Unsupervised marginal likelihood log P(D | M).
inline Score score_uevi(const Dataset& train, const Structure& m) {
  return {log_evidence(collect_stats(train, m))};
}

/// Supervised prequential score: sum of log P(v_i | v^{i-1}, u^i) along `ord`.
inline Score score_preq(const Dataset& train, const Structure& m, const Ordering& ord) {
  detail::check_ordering(train, ord);
  auto stats = empty_stats(train.schema(), m);
  double acc = 0.0;
  for (std::size_t r : ord.perm) {
    const auto row = train.row(r);
    acc += class_predictive(stats, row.features, m).log_probs[row.cls];
    update_stats(stats, row, Direction::add);
  }
  return {acc};
}

/// Mean of score_preq over `orderings` stratified orderings seeded from `seed`.
inline Score score_preq_avg(const Dataset& train, const Structure& m, std::size_t orderings, std::uint64_t seed) {
  if (orderings == 0) throw Error("need at least one ordering");
  double acc = 0.0;
  for (std::size_t t = 0; t < orderings; ++t) {
    acc += score_preq(train, m, stratified_order(train, derive_seed(seed, t))).value;
  }
  return {acc / static_cast<double>(orderings)};
}

/// The complementary factor: sum of log P(u_i | v^{i-1}, u^{i-1}) with the
/// class of row i summed out.
inline Score feature_prequential(const Dataset& train, const Structure& m, const Ordering& ord) {
  detail::check_ordering(train, ord);
  auto stats = empty_stats(train.schema(), m);
  double acc = 0.0;
  for (std::size_t r : ord.perm) {
    const auto row = train.row(r);
    if (!row.features.empty()) acc += feature_log_predictive(stats, row.features, m);
    update_stats(stats, row, Direction::add);
  }
  return {acc};
}

/// Negated mean leave-one-out loss of the Bayesian class predictive.
inline Score score_loocv(const Dataset& train, const Structure& m, LossKind loss) {
  const std::size_t n = train.size();
  if (n < 2) throw Error("leave-one-out needs at least 2 rows");
  auto stats = collect_stats(train, m);
  std::vector<double> per_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train.row(i);
    update_stats(stats, row, Direction::remove);
    per_row[i] = loss_of(class_predictive(stats, row.features, m), row.cls, loss);
    update_stats(stats, row, Direction::add);
  }
  return {detail::mean_negated(detail::canonical_sum(std::move(per_row)), n)};
}

/// k-fold cross-validation over contiguous blocks of `ord`. The first N mod k
/// folds hold one extra row. With k = N this reproduces score_loocv bit for
/// bit (same per-row losses, same summation).
inline Score score_kfold_ordered(const Dataset& train, const Structure& m, const Ordering& ord, std::size_t k,
                                 LossKind loss) {
  const std::size_t n = train.size();
  if (k < 2 || k > n) throw Error("fold count must satisfy 2 <= k <= N");
  detail::check_ordering(train, ord);
  auto stats = collect_stats(train, m);
  std::vector<double> per_row(n);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = n / k + (f < n % k ? 1 : 0);
    const std::span<const std::size_t> fold = std::span<const std::size_t>(ord.perm).subspan(start, len);
    for (std::size_t r : fold) update_stats(stats, train.row(r), Direction::remove);
    for (std::size_t r : fold) {
      const auto row = train.row(r);
      per_row[r] = loss_of(class_predictive(stats, row.features, m), row.cls, loss);
    }
    for (std::size_t r : fold) update_stats(stats, train.row(r), Direction::add);
    start += len;
  }
  return {detail::mean_negated(detail::canonical_sum(std::move(per_row)), n)};
}

/// Mean k-fold score over `orderings` stratified orderings seeded from `seed`.
inline Score score_kfold(const Dataset& train, const Structure& m, std::size_t k, LossKind loss,
                         std::size_t orderings, std::uint64_t seed) {
  if (orderings == 0) throw Error("need at least one ordering");
  if (k < 2 || k > train.size()) throw Error("fold count must satisfy 2 <= k <= N");
  double acc = 0.0;
  for (std::size_t t = 0; t < orderings; ++t) {
    acc += score_kfold_ordered(train, m, stratified_order(train, derive_seed(seed, t)), k, loss).value;
  }
  return {acc / static_cast<double>(orderings)};
}

/// Negated mean training-set loss of the plug-in (posterior-mode) predictive.
inline Score score_trloss(const Dataset& train, const Structure& m, LossKind loss) {
  const std::size_t n = train.size();
  if (n == 0) return {0.0};
  const auto params = plugin_params(collect_stats(train, m), m);
  std::vector<double> per_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = train.row(i);
    per_row[i] = loss_of(plugin_class_predictive(params, row.features, m), row.cls, loss);
  }
  return {detail::mean_negated(detail::canonical_sum(std::move(per_row)), n)};
}

/// Plug-in supervised log-likelihood sum_i log P(v_i | u_i, theta_hat).
/// Accumulated as N times the mean, so it equals N * score_trloss(log)
/// exactly, including the -inf case.
inline Score score_sevi_approx(const Dataset& train, const Structure& m) {
  if (train.empty()) return {0.0};
  return {static_cast<double>(train.size()) * score_trloss(train, m, LossKind::log).value};
}

/// Exact supervised log evidence log P(v^N | u^N, M): the joint evidence
/// divided by its sum over all K^N class columns. Small instances only.
/// Unselected-feature terms do not depend on the class column and cancel
/// between numerator and denominator, so they are left out of both.
inline Score score_sevi_exact(const Dataset& train, const Structure& m,
                              std::uint64_t budget = std::uint64_t{1} << 20) {
  const std::size_t n = train.size();
  const std::size_t k = train.class_cardinality();
  std::uint64_t configs = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (configs > budget / k) {
      throw Error("exact supervised evidence needs K^N <= " + std::to_string(budget) + " class configurations");
    }
    configs *= k;
  }
  const double numerator = log_evidence(collect_stats(train, m), false);

  std::vector<double> terms;
  terms.reserve(configs);
  std::vector<std::uint32_t> column(n, 0);
  for (std::uint64_t cfg = 0; cfg < configs; ++cfg) {
    auto stats = empty_stats(train.schema(), m);
    for (std::size_t i = 0; i < n; ++i) update_stats(stats, {column[i], train.features(i)}, Direction::add);
    terms.push_back(log_evidence(stats, false));
    for (std::size_t i = 0; i < n; ++i) {  // mixed-radix increment
      if (++column[i] < k) break;
      column[i] = 0;
    }
  }
  std::sort(terms.begin(), terms.end());  // row-order independent summation
  return {numerator - log_sum_exp(terms)};
}

/// Free-parameter count of the joint model.
inline std::size_t bic_dimension(const Schema& schema, const Structure& m) {
  const std::size_t k = schema.class_variable().cardinality();
  std::size_t d = k - 1;
  for (std::size_t j = 0; j < schema.n_features(); ++j) {
    const std::size_t r = schema.feature(j).cardinality();
    d += m.contains(j) ? k * (r - 1) : r - 1;
  }
  return d;
}

/// Schwarz criterion on the joint likelihood: log P(D | theta_hat, M) - (d/2) ln N.
inline Score score_bic(const Dataset& train, const Structure& m) {
  const std::size_t n = train.size();
  if (n == 0) throw Error("BIC needs at least 1 row");
  const auto s = collect_stats(train, m);
  auto xlogx_ratio = [](Count count, Count total) {
    return count == 0 ? 0.0 : static_cast<double>(count) * std::log(static_cast<double>(count) / static_cast<double>(total));
  };
  const std::size_t k = s.n_classes();
  double ll = 0.0;
  for (auto nc : s.class_counts) ll += xlogx_ratio(nc, s.total);
  for (std::size_t j = 0; j < s.feature_cards.size(); ++j) {
    const std::size_t r = s.feature_cards[j];
    if (m.contains(j)) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t v = 0; v < r; ++v) ll += xlogx_ratio(s.cond(j, c, v), s.class_counts[c]);
      }
    } else {
      for (auto nv : s.marg_counts[j]) ll += xlogx_ratio(nv, s.total);
    }
  }
  const double penalty = 0.5 * static_cast<double>(bic_dimension(train.schema(), m)) * std::log(static_cast<double>(n));
  return {ll - penalty};
}

/// Scores one structure under `spec`. Single-ordering PREQ runs along the
/// data's own row order (the training half is already stratified).
inline Score evaluate(const Dataset& train, const Structure& m, const CriterionSpec& spec) {
  auto required_loss = [&] {
    if (!spec.loss) throw Error("criterion " + criterion_name(spec) + " needs a selection loss");
    return *spec.loss;
  };
  switch (spec.kind) {
    case CriterionKind::uevi: return score_uevi(train, m);
    case CriterionKind::sevi_approx: return score_sevi_approx(train, m);
    case CriterionKind::sevi_exact: return score_sevi_exact(train, m, spec.exact_budget);
    case CriterionKind::preq:
      return spec.orderings == 1 ? score_preq(train, m, Ordering::identity(train.size()))
                                 : score_preq_avg(train, m, spec.orderings, spec.seed);
    case CriterionKind::loocv: return score_loocv(train, m, required_loss());
    case CriterionKind::kfold:
      return score_kfold(train, m, spec.folds, required_loss(), spec.orderings, spec.seed);
    case CriterionKind::trloss: return score_trloss(train, m, required_loss());
    case CriterionKind::bic: return score_bic(train, m);
  }
  throw Error("unhandled criterion kind");
}

}  // namespace pnb
