#pragma once

// The repeated train/test protocol: stratified ordering, half split,
// exhaustive selection per criterion, held-out losses, and relative
// prediction gains against full Naive Bayes.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pnb/criteria.hpp"
#include "pnb/dataset.hpp"
#include "pnb/error.hpp"
#include "pnb/loss.hpp"
#include "pnb/nbmodel.hpp"
#include "pnb/random.hpp"
#include "pnb/search.hpp"

namespace pnb {

/// Mean held-out loss of the Bayesian predictive trained on `train`.
inline double evaluate_loss(const Structure& m, const Dataset& train, const Dataset& test, LossKind loss) {
  if (train.n_features() != test.n_features() || train.class_cardinality() != test.class_cardinality()) {
    throw Error("train and test schemas differ");
  }
  if (test.empty()) throw Error("empty test set");
  const auto stats = collect_stats(train, m);
  double sum = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = test.row(i);
    sum += loss_of(class_predictive(stats, row.features, m), row.cls, loss);
  }
  return sum / static_cast<double>(test.size());
}

/// 100 * (baseline - method) / baseline; not available for baseline <= 0.
inline std::optional<double> relative_prediction_gain(double method_loss, double baseline_loss) {
  if (!(baseline_loss > 0.0)) return std::nullopt;
  return 100.0 * (baseline_loss - method_loss) / baseline_loss;
}

struct LossPair {
  double zero_one = 0.0;
  double log = 0.0;

  double get(LossKind k) const { return k == LossKind::zero_one ? zero_one : log; }
};

/// Held-out losses of every structure for one train/test split. The per-row
/// arithmetic matches evaluate_loss term for term, so both give identical
/// values; the table just shares the count lookups across structures.
class TestLossTable {
 public:
  TestLossTable(const Dataset& train, const Dataset& test)
      : n_features_(train.n_features()), n_classes_(train.class_cardinality()), truth_(test.class_column()) {
    if (test.empty()) throw Error("empty test set");
    if (test.n_features() != n_features_) throw Error("train and test schemas differ");
    const auto full = Structure::full(n_features_);
    const auto stats = collect_stats(train, full);
    const std::size_t n = test.size();
    class_terms_.resize(n_classes_);
    for (std::size_t c = 0; c < n_classes_; ++c) {
      class_terms_[c] = detail::smoothed(stats.class_counts[c], stats.total, n_classes_);
    }
    feature_terms_.resize(n * n_classes_ * n_features_);
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = test.features(i);
      for (std::size_t c = 0; c < n_classes_; ++c) {
        for (std::size_t j = 0; j < n_features_; ++j) {
          feature_terms_[(i * n_classes_ + c) * n_features_ + j] =
              detail::smoothed(stats.cond(j, c, u[j]), stats.class_counts[c], stats.feature_cards[j]);
        }
      }
    }
  }

  LossPair losses(const Structure& m) const {
    const std::size_t n = truth_.size();
    double sum01 = 0.0;
    double sumlog = 0.0;
    std::vector<double> scores(n_classes_);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < n_classes_; ++c) {
        double acc = class_terms_[c];
        const double* terms = &feature_terms_[(i * n_classes_ + c) * n_features_];
        for (std::size_t j = 0; j < n_features_; ++j) {
          if (m.contains(j)) acc += terms[j];
        }
        scores[c] = acc;
      }
      const auto dist = ClassDistribution::from_log_scores(scores);
      sum01 += loss_of(dist, truth_[i], LossKind::zero_one);
      sumlog += loss_of(dist, truth_[i], LossKind::log);
    }
    return {sum01 / static_cast<double>(n), sumlog / static_cast<double>(n)};
  }

 private:
  std::size_t n_features_;
  std::size_t n_classes_;
  std::vector<std::uint32_t> truth_;
  std::vector<double> class_terms_;
  std::vector<double> feature_terms_;  // [test row][class][feature]
};

struct ExperimentConfig {
  std::vector<CriterionSpec> criteria;
  std::size_t repetitions = 50;
  std::size_t sample_size = 500;
  std::uint64_t seed = 0;
  /// Draw a fresh subsample per repetition instead of once per dataset.
  bool redraw_sample = false;
  std::size_t workers = 1;
  std::size_t max_features = kDefaultMaxFeatures;
};

/// The structure a criterion picked for one evaluation loss, its training
/// score, and its held-out loss under that same loss.
struct ColumnSelection {
  Structure structure;
  Score score;
  double test_loss = 0.0;
};

struct CriterionResult {
  std::string criterion;
  ColumnSelection zero_one;
  ColumnSelection log;

  const ColumnSelection& column(LossKind k) const { return k == LossKind::zero_one ? zero_one : log; }
};

struct Bound {
  Structure structure;
  double loss = 0.0;
};

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<CriterionResult> criteria;
  LossPair baseline;
  /// Best and worst held-out loss over all structures, per loss.
  Bound oracle_01, oracle_log, worst_01, worst_log;

  const Bound& oracle(LossKind k) const { return k == LossKind::zero_one ? oracle_01 : oracle_log; }
  const Bound& worst(LossKind k) const { return k == LossKind::zero_one ? worst_01 : worst_log; }
};

struct Aggregate {
  std::string name;
  double mean_loss_01 = 0.0;
  double mean_loss_log = 0.0;
  std::optional<double> gain_01;
  std::optional<double> gain_log;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t n_rows = 0;
  std::size_t n_sampled = 0;
  std::vector<RepetitionResult> repetitions;
  /// One row per criterion in config order, then "baseline" and "oracle".
  std::vector<Aggregate> aggregates;
};

namespace detail {

inline constexpr LossKind kLosses[] = {LossKind::zero_one, LossKind::log};

inline RepetitionResult run_repetition(const Dataset& sample, const ExperimentConfig& config, std::size_t r,
                                       std::uint64_t rep_seed) {
  RepetitionResult rep;
  rep.index = r;
  rep.seed = rep_seed;
  const auto [train, test] = split_half(sample, stratified_order(sample, derive_seed(rep_seed, 0)));
  rep.n_train = train.size();
  rep.n_test = test.size();

  const TestLossTable losses(train, test);
  const SearchOptions search{1, config.max_features};
  const auto structures = enumerate_structures(train.n_features(), config.max_features);
  std::vector<LossPair> all(structures.size());
  for (std::size_t s = 0; s < structures.size(); ++s) all[s] = losses.losses(structures[s]);

  rep.baseline = all.back();  // the full subset is last in canonical order
  for (LossKind k : kLosses) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t s = 1; s < all.size(); ++s) {
      if (all[s].get(k) < all[lo].get(k)) lo = s;
      if (all[s].get(k) > all[hi].get(k)) hi = s;
    }
    Bound& oracle = k == LossKind::zero_one ? rep.oracle_01 : rep.oracle_log;
    Bound& worst = k == LossKind::zero_one ? rep.worst_01 : rep.worst_log;
    oracle = {structures[lo], all[lo].get(k)};
    worst = {structures[hi], all[hi].get(k)};
  }

  for (const auto& base_spec : config.criteria) {
    CriterionResult result;
    result.criterion = criterion_name(base_spec);
    auto spec = base_spec;
    spec.seed = derive_seed(rep_seed, stable_hash(result.criterion));
    // Small samples: k-fold degrades toward leave-one-out instead of failing.
    if (spec.kind == CriterionKind::kfold) spec.folds = std::min(spec.folds, train.size());
    auto pick = [&](const CriterionSpec& s, LossKind k) {
      const auto sel = select_best(train, s, search);
      return ColumnSelection{sel.best, sel.score, all[sel.best.mask()].get(k)};
    };
    if (spec.uses_loss() && !spec.loss) {
      for (LossKind k : kLosses) {
        auto per_loss = spec;
        per_loss.loss = k;
        (k == LossKind::zero_one ? result.zero_one : result.log) = pick(per_loss, k);
      }
    } else {
      const auto sel = select_best(train, spec, search);
      const auto& pair = all[sel.best.mask()];
      result.zero_one = {sel.best, sel.score, pair.zero_one};
      result.log = {sel.best, sel.score, pair.log};
    }
    rep.criteria.push_back(std::move(result));
  }
  return rep;
}

}  // namespace detail

/// Runs the full protocol. Repetitions run in parallel; the report depends
/// only on (data, config), never on the worker count.
inline ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& config) {
  if (config.repetitions == 0) throw Error("need at least one repetition");
  if (observed_class_count(data) < 2) throw Error("data must contain at least 2 classes");
  {
    std::set<std::string> names;
    for (const auto& c : config.criteria) {
      if (!names.insert(criterion_name(c)).second) throw Error("duplicate criterion " + criterion_name(c));
    }
  }
  enumerate_structures(data.n_features(), config.max_features);  // validates the cap up front

  ExperimentReport report;
  report.config = config;
  report.n_rows = data.size();
  const std::uint64_t sample_stream = stable_hash("subsample");
  const Dataset fixed_sample = config.redraw_sample
                                   ? Dataset()
                                   : stratified_subsample(data, config.sample_size, derive_seed(config.seed, sample_stream));
  report.n_sampled = std::min(config.sample_size, data.size());
  if (report.n_sampled < 2) throw Error("sample too small to split");

  report.repetitions.resize(config.repetitions);
  parallel_for(config.repetitions, config.workers, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(config.seed, r);
    if (config.redraw_sample) {
      const auto sample = stratified_subsample(data, config.sample_size, derive_seed(rep_seed, sample_stream));
      report.repetitions[r] = detail::run_repetition(sample, config, r, rep_seed);
    } else {
      report.repetitions[r] = detail::run_repetition(fixed_sample, config, r, rep_seed);
    }
  });

  const double reps = static_cast<double>(config.repetitions);
  auto aggregate = [&](std::string name, auto&& loss_of_rep) {
    Aggregate a;
    a.name = std::move(name);
    for (const auto& rep : report.repetitions) {
      a.mean_loss_01 += loss_of_rep(rep, LossKind::zero_one);
      a.mean_loss_log += loss_of_rep(rep, LossKind::log);
    }
    a.mean_loss_01 /= reps;
    a.mean_loss_log /= reps;
    return a;
  };
  for (std::size_t c = 0; c < config.criteria.size(); ++c) {
    report.aggregates.push_back(aggregate(criterion_name(config.criteria[c]), [c](const RepetitionResult& rep, LossKind k) {
      return rep.criteria[c].column(k).test_loss;
    }));
  }
  report.aggregates.push_back(
      aggregate("baseline", [](const RepetitionResult& rep, LossKind k) { return rep.baseline.get(k); }));
  report.aggregates.push_back(
      aggregate("oracle", [](const RepetitionResult& rep, LossKind k) { return rep.oracle(k).loss; }));

  const auto& base = report.aggregates[config.criteria.size()];
  const double base01 = base.mean_loss_01;
  const double baselog = base.mean_loss_log;
  for (auto& a : report.aggregates) {
    a.gain_01 = relative_prediction_gain(a.mean_loss_01, base01);
    a.gain_log = relative_prediction_gain(a.mean_loss_log, baselog);
  }
  return report;
}

}  // namespace pnb
