#include <gtest/gtest.h>

#include <cmath>

#include "pnb/criteria.hpp"
#include "test_support.hpp"

using namespace pnb;
using pnb::testing::class_only;
using pnb::testing::make_data;

namespace {

const Structure kNone0 = Structure(0, 0);
const Structure kSel1 = Structure(1, 1);
const Structure kUnsel1 = Structure(1, 0);

Dataset three_rows() { return make_data(2, {2}, {{0, 0}, {0, 0}, {1, 1}}); }
Dataset two_rows() { return make_data(2, {2}, {{0, 0}, {1, 1}}); }

}  // namespace

TEST(Uevi, GoldenValues) {
  EXPECT_NEAR(score_uevi(class_only(2, {0, 1, 0}), kNone0).value, std::log(1.0 / 12.0), 1e-12);
  EXPECT_NEAR(score_uevi(two_rows(), kSel1).value, std::log(1.0 / 24.0), 1e-12);
  EXPECT_NEAR(score_uevi(two_rows(), kUnsel1).value, std::log(1.0 / 36.0), 1e-12);
  EXPECT_EQ(score_uevi(make_data(2, {2}, {}), kSel1).value, 0.0);
}

TEST(Uevi, MatchesFactorialOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 25, 4, 3);
    const double oracle = static_cast<double>(
        std::log(pnb::testing::joint_probability(inst.data, inst.data.class_column(), inst.structure.mask())));
    EXPECT_NEAR(score_uevi(inst.data, inst.structure).value, oracle, 1e-9);
  }
}

TEST(Preq, GoldenValues) {
  const auto cls = class_only(2, {0, 1, 0});
  EXPECT_NEAR(score_preq(cls, kNone0, Ordering::identity(3)).value, std::log(1.0 / 12.0), 1e-12);
  const auto d = make_data(2, {2}, {{0, 0}, {1, 1}, {0, 0}});
  EXPECT_NEAR(score_preq(d, kSel1, Ordering::identity(3)).value, std::log(1.0 / 7.0), 1e-12);
  EXPECT_EQ(score_preq(class_only(2, {}), kNone0, Ordering::identity(0)).value, 0.0);
  EXPECT_THROW(score_preq(d, kSel1, Ordering::identity(2)), Error);
}

TEST(Preq, DependsOnTheOrdering) {
  const auto d = three_rows();
  EXPECT_NEAR(score_preq(d, kSel1, Ordering::identity(3)).value, std::log(8.0 / 55.0), 1e-12);
  EXPECT_NEAR(score_preq(d, kSel1, Ordering{{2, 1, 0}}).value, std::log(1.0 / 7.0), 1e-12);
}

TEST(PreqAvg, DegenerateAverageAndDeterminism) {
  const auto d = make_data(2, {2}, {{0, 0}, {1, 1}, {0, 0}, {1, 0}, {0, 1}});
  const auto single = score_preq_avg(d, kSel1, 1, 42);
  const auto ord = stratified_order(d, derive_seed(42, 0));
  EXPECT_EQ(single.value, score_preq(d, kSel1, ord).value);
  EXPECT_EQ(score_preq_avg(d, kSel1, 10, 9).value, score_preq_avg(d, kSel1, 10, 9).value);
  EXPECT_THROW(score_preq_avg(d, kSel1, 0, 9), Error);
}

TEST(PreqAvg, NoSelectedFeaturesEqualsClassEvidence) {
  const auto d = make_data(3, {2, 2}, {{0, 1, 0}, {1, 1, 2}, {0, 0, 1}, {1, 0, 0}, {1, 1, 2}, {0, 1, 1}});
  const auto none = Structure(2, 0);
  std::vector<std::vector<std::uint32_t>> cls_rows;
  for (auto c : d.class_column()) cls_rows.push_back({c});
  const double class_evidence = score_uevi(make_data(3, {}, cls_rows), kNone0).value;
  EXPECT_NEAR(score_preq_avg(d, none, 10, 3).value, class_evidence, 1e-12);
}

TEST(FeaturePrequential, GoldenValuesAndIdentity) {
  const auto d = two_rows();
  const auto ord = Ordering::identity(2);
  EXPECT_NEAR(feature_prequential(d, kSel1, ord).value, std::log(7.0 / 36.0), 1e-12);
  EXPECT_EQ(feature_prequential(class_only(2, {0, 1}), kNone0, ord).value, 0.0);
  EXPECT_NEAR(score_preq(d, kSel1, ord).value, std::log(3.0 / 14.0), 1e-12);
  EXPECT_NEAR(score_preq(d, kSel1, ord).value + feature_prequential(d, kSel1, ord).value,
              score_uevi(d, kSel1).value, 1e-12);
}

TEST(Loocv, GoldenValues) {
  const auto cls = class_only(2, {0, 1, 0});
  EXPECT_NEAR(score_loocv(cls, kNone0, LossKind::log).value, -std::log(16.0) / 3.0, 1e-12);
  EXPECT_NEAR(score_loocv(cls, kNone0, LossKind::zero_one).value, -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(score_loocv(class_only(2, {0, 0}), kNone0, LossKind::log).value, -std::log(1.5), 1e-12);
  EXPECT_THROW(score_loocv(class_only(2, {0}), kNone0, LossKind::log), Error);
}

TEST(Kfold, GoldenValues) {
  const auto cls = class_only(2, {0, 1, 0, 1});
  EXPECT_NEAR(score_kfold_ordered(cls, kNone0, Ordering::identity(4), 2, LossKind::log).value, -std::log(2.0),
              1e-12);
  EXPECT_THROW(score_kfold_ordered(cls, kNone0, Ordering::identity(4), 1, LossKind::log), Error);
  EXPECT_THROW(score_kfold_ordered(cls, kNone0, Ordering::identity(4), 5, LossKind::log), Error);
  EXPECT_EQ(score_kfold(cls, kNone0, 2, LossKind::log, 10, 4).value,
            score_kfold(cls, kNone0, 2, LossKind::log, 10, 4).value);
}

TEST(Kfold, FoldsOfSizeOneReproduceLoocv) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 30, 4, 3, 2);
    for (LossKind loss : {LossKind::log, LossKind::zero_one}) {
      EXPECT_EQ(score_kfold(inst.data, inst.structure, inst.data.size(), loss, 1, rng.next()).value,
                score_loocv(inst.data, inst.structure, loss).value);
    }
  }
}

TEST(SeviApprox, GoldenValues) {
  EXPECT_EQ(score_sevi_approx(three_rows(), kSel1).value, 0.0);
  const auto d = make_data(2, {2}, {{0, 0}, {0, 1}});
  EXPECT_NEAR(score_sevi_approx(d, kSel1).value, 2.0 * std::log(0.5), 1e-12);
  EXPECT_EQ(score_sevi_approx(make_data(2, {2}, {}), kSel1).value, 0.0);
}

TEST(SeviExact, GoldenValue) {
  EXPECT_NEAR(score_sevi_exact(two_rows(), kSel1).value, std::log(3.0 / 14.0), 1e-12);
}

TEST(SeviExact, NormalizesOverClassColumns) {
  const auto base = make_data(2, {2, 2}, {{0, 1, 0}, {1, 1, 1}, {0, 0, 1}, {1, 0, 0}});
  for (std::uint64_t mask = 0; mask < 4; ++mask) {
    const Structure m(2, mask);
    double total = 0;
    pnb::testing::for_each_class_column(4, 2, [&](const std::vector<std::uint32_t>& col) {
      total += std::exp(score_sevi_exact(base.with_class_column(col), m).value);
    });
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(SeviExact, BudgetGuard) {
  const auto d = class_only(2, std::vector<std::uint32_t>(21, 0));
  EXPECT_THROW(score_sevi_exact(d, kNone0), Error);
  EXPECT_THROW(score_sevi_exact(class_only(2, {0, 1, 0}), kNone0, 4), Error);
  EXPECT_NO_THROW(score_sevi_exact(class_only(2, {0, 1, 0}), kNone0, 8));
}

TEST(Trloss, GoldenValues) {
  EXPECT_EQ(score_trloss(three_rows(), kSel1, LossKind::log).value, 0.0);
  EXPECT_EQ(score_trloss(three_rows(), kSel1, LossKind::zero_one).value, 0.0);
  EXPECT_EQ(score_trloss(make_data(2, {2}, {}), kSel1, LossKind::log).value, 0.0);
}

TEST(Bic, GoldenValuesAndDimension) {
  const double expected = std::log(4.0 / 27.0) - 1.5 * std::log(3.0);
  EXPECT_NEAR(score_bic(three_rows(), kSel1).value, expected, 1e-12);
  EXPECT_NEAR(expected, -3.5574, 1e-4);
  const auto two = make_data(2, {2, 2}, {{0, 0, 0}});
  EXPECT_EQ(bic_dimension(two.schema(), Structure(2, 1)), 4u);
  // N = 1: penalty vanishes, the plug-in likelihood of one row is 1.
  EXPECT_EQ(score_bic(two, Structure(2, 1)).value, 0.0);
  EXPECT_THROW(score_bic(make_data(2, {2}, {}), kSel1), Error);
}

TEST(CriterionNames, ParseAndRoundTrip) {
  for (const char* name : {"uevi", "sevi-approx", "sevi-exact", "preq", "preq10", "loocv", "fcv", "fcv10", "trloss",
                           "bic", "loocv:01", "fcv10:log"}) {
    EXPECT_EQ(criterion_name(parse_criterion(name)), name);
  }
  EXPECT_EQ(parse_criterion("preq10").orderings, 10u);
  EXPECT_EQ(parse_criterion("fcv").folds, 10u);
  EXPECT_THROW(parse_criterion("magic"), UsageError);
  EXPECT_THROW(parse_criterion("uevi:log"), UsageError);
  EXPECT_THROW(parse_criterion("loocv:abs"), UsageError);
}

TEST(Evaluate, DispatchesAndRequiresLoss) {
  const auto d = three_rows();
  auto spec = parse_criterion("loocv");
  EXPECT_THROW(evaluate(d, kSel1, spec), Error);
  spec.loss = LossKind::log;
  EXPECT_EQ(evaluate(d, kSel1, spec).value, score_loocv(d, kSel1, LossKind::log).value);
  EXPECT_EQ(evaluate(d, kSel1, parse_criterion("preq")).value, score_preq(d, kSel1, Ordering::identity(3)).value);
  EXPECT_EQ(evaluate(d, kSel1, parse_criterion("bic")).value, score_bic(d, kSel1).value);
}

// ---------------------------------------------------------------------------
// Properties

TEST(Properties, OrderingInvariance) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 10, 3, 3, 2);
    const auto perm = inst.data.reordered(pnb::testing::random_ordering(rng, inst.data.size()));
    const auto& m = inst.structure;
    EXPECT_EQ(score_uevi(inst.data, m).value, score_uevi(perm, m).value);
    EXPECT_EQ(score_bic(inst.data, m).value, score_bic(perm, m).value);
    EXPECT_EQ(score_sevi_exact(inst.data, m).value, score_sevi_exact(perm, m).value);
    EXPECT_EQ(score_loocv(inst.data, m, LossKind::log).value, score_loocv(perm, m, LossKind::log).value);
    EXPECT_EQ(score_loocv(inst.data, m, LossKind::zero_one).value, score_loocv(perm, m, LossKind::zero_one).value);
    EXPECT_EQ(score_sevi_approx(inst.data, m).value, score_sevi_approx(perm, m).value);
    EXPECT_EQ(score_trloss(inst.data, m, LossKind::zero_one).value, score_trloss(perm, m, LossKind::zero_one).value);
  }
}

TEST(Properties, SupervisedScoresIgnoreUnselectedColumns) {
  Rng rng(78);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = pnb::testing::random_instance(rng, 10, 3, 3, 2);
    const std::size_t n = inst.data.n_features();
    if (n == 0 || inst.structure.size() == n) continue;
    std::size_t j = 0;
    while (inst.structure.contains(j)) ++j;
    std::vector<std::uint32_t> col(inst.data.size());
    for (auto& v : col) v = static_cast<std::uint32_t>(rng.below(inst.data.feature_cardinality(j)));
    const auto other = inst.data.with_feature_column(j, col);
    const auto& m = inst.structure;
    const auto ord = Ordering::identity(inst.data.size());
    EXPECT_EQ(score_preq(inst.data, m, ord).value, score_preq(other, m, ord).value);
    EXPECT_EQ(score_loocv(inst.data, m, LossKind::log).value, score_loocv(other, m, LossKind::log).value);
    EXPECT_EQ(score_sevi_exact(inst.data, m).value, score_sevi_exact(other, m).value);
    EXPECT_EQ(score_sevi_approx(inst.data, m).value, score_sevi_approx(other, m).value);
    EXPECT_EQ(score_trloss(inst.data, m, LossKind::zero_one).value, score_trloss(other, m, LossKind::zero_one).value);
  }
}

TEST(Properties, TrlossTimesNEqualsSeviApprox) {
  Rng rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 40, 4, 3);
    const double n = static_cast<double>(inst.data.size());
    EXPECT_EQ(n * score_trloss(inst.data, inst.structure, LossKind::log).value,
              score_sevi_approx(inst.data, inst.structure).value);
  }
}
