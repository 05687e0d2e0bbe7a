#include <gtest/gtest.h>

#include <cmath>

#include "pnb/criteria.hpp"
#include "pnb/nbmodel.hpp"
#include "test_support.hpp"

using namespace pnb;
using pnb::testing::make_data;

namespace {

// (u, v) = (0,0), (0,0), (1,1): the running example of the nbmodel tests.
Dataset three_rows() { return make_data(2, {2}, {{0, 0}, {0, 0}, {1, 1}}); }

const std::vector<std::uint32_t> kU0{0};

}  // namespace

TEST(Structure, CanonicalMask) {
  const auto m = Structure::from_indices(3, std::vector<std::size_t>{0, 2});
  EXPECT_EQ(m.mask(), 5u);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.indices(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(Structure::full(3).mask(), 7u);
  EXPECT_EQ(Structure::full(0).mask(), 0u);
  EXPECT_THROW(Structure(2, 4), Error);
}

TEST(Structure, ParsesIntegersAndNames) {
  const auto d = make_data(2, {2, 2, 2}, {{0, 0, 0, 0}});
  EXPECT_EQ(parse_structure("5", d.schema()).indices(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(parse_structure("f2,f0", d.schema()).mask(), 5u);
  EXPECT_EQ(parse_structure("", d.schema()).mask(), 0u);
  EXPECT_THROW(parse_structure("8", d.schema()), UsageError);
  EXPECT_THROW(parse_structure("nope", d.schema()), UsageError);
  EXPECT_EQ(structure_names(Structure(3, 5), d.schema()), "f0,f2");
}

TEST(CollectStats, EmptyData) {
  const auto d = make_data(2, {2}, {});
  const auto s = collect_stats(d, Structure(1, 1));
  EXPECT_EQ(s.total, 0);
  EXPECT_EQ(s.class_counts, (std::vector<Count>{0, 0}));
  EXPECT_EQ(s.cond_counts[0], (std::vector<Count>{0, 0, 0, 0}));
}

TEST(CollectStats, DirectTally) {
  const auto s = collect_stats(three_rows(), Structure(1, 1));
  EXPECT_EQ(s.class_counts, (std::vector<Count>{2, 1}));
  EXPECT_EQ(s.cond_counts[0], (std::vector<Count>{2, 0, 0, 1}));
  EXPECT_EQ(s.marg_counts[0], (std::vector<Count>{2, 1}));
  EXPECT_EQ(s.total, 3);
  // Unselected features keep only their marginal table.
  const auto s0 = collect_stats(three_rows(), Structure(1, 0));
  EXPECT_TRUE(s0.cond_counts[0].empty());
  EXPECT_EQ(s0.marg_counts[0], (std::vector<Count>{2, 1}));
}

TEST(CollectStats, BatchEqualsRowByRowReplay) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 30, 4, 3);
    auto s = empty_stats(inst.data.schema(), inst.structure);
    for (std::size_t i = 0; i < inst.data.size(); ++i) update_stats(s, inst.data.row(i), Direction::add);
    EXPECT_EQ(s, collect_stats(inst.data, inst.structure));
  }
}

TEST(UpdateStats, AddThenRemoveIsIdentity) {
  const auto d = three_rows();
  const auto m = Structure(1, 1);
  const auto original = collect_stats(d, m);
  auto s = original;
  update_stats(s, d.row(2), Direction::add);
  update_stats(s, d.row(2), Direction::remove);
  EXPECT_EQ(s, original);
}

TEST(UpdateStats, SingleTallyAndNegativeGuard) {
  const auto d = make_data(2, {2}, {{1, 0}});
  auto s = empty_stats(d.schema(), Structure(1, 1));
  EXPECT_THROW(update_stats(s, d.row(0), Direction::remove), Error);
  EXPECT_EQ(s.total, 0);
  update_stats(s, d.row(0), Direction::add);
  EXPECT_EQ(s.class_counts, (std::vector<Count>{1, 0}));
  EXPECT_EQ(s.cond(0, 0, 1), 1);
}

TEST(ClassPredictive, UniformUnderEmptyStats) {
  const auto d = make_data(3, {2}, {});
  const auto dist = class_predictive(collect_stats(d, Structure(1, 1)), kU0, Structure(1, 1));
  for (double p : dist.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(ClassPredictive, SmoothedProductMatchesQuadrature) {
  const auto dist = class_predictive(collect_stats(three_rows(), Structure(1, 1)), kU0, Structure(1, 1));
  EXPECT_NEAR(dist.probs[0], 27.0 / 35.0, 1e-12);
  EXPECT_NEAR(dist.probs[1], 8.0 / 35.0, 1e-12);

  // Oracle: integrate P(c, u=0 | theta) against the posterior over the class
  // and both conditional parameters. The integrals factor into 1-D pieces.
  using pnb::testing::beta_integral;
  // counts: class (2,1); u|c=0 (2,0); u|c=1 (0,1).
  const double c0 = beta_integral(3, 1) / beta_integral(2, 1) * beta_integral(3, 0) / beta_integral(2, 0);
  const double c1 = beta_integral(2, 2) / beta_integral(2, 1) * beta_integral(1, 1) / beta_integral(0, 1);
  EXPECT_NEAR(dist.probs[0], c0 / (c0 + c1), 1e-8);
}

TEST(ClassPredictive, IgnoresUnselectedColumns) {
  const auto with_extra = make_data(2, {2, 3}, {{0, 2, 0}, {0, 1, 0}, {1, 0, 1}});
  const auto m = Structure(2, 1);
  const std::vector<std::uint32_t> u{0, 2};
  const std::vector<std::uint32_t> u_other{0, 0};
  const auto a = class_predictive(collect_stats(with_extra, m), u, m);
  const auto b = class_predictive(collect_stats(with_extra, m), u_other, m);
  EXPECT_NEAR(a.probs[0], 27.0 / 35.0, 1e-12);
  EXPECT_EQ(a.probs, b.probs);
}

TEST(ClassPredictive, SumsToOneAndRejectsOutOfRange) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 25, 4, 3);
    if (inst.data.empty()) continue;
    const auto s = collect_stats(inst.data, inst.structure);
    const auto dist = class_predictive(s, inst.data.features(0), inst.structure);
    double sum = 0;
    for (double p : dist.probs) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  const std::vector<std::uint32_t> bad{2};
  EXPECT_THROW(class_predictive(collect_stats(three_rows(), Structure(1, 1)), bad, Structure(1, 1)), Error);
}

TEST(RowLogMarginalPredictive, Examples) {
  const auto d = make_data(2, {2}, {{0, 0}, {1, 1}});
  const auto m = Structure(1, 1);
  auto s = empty_stats(d.schema(), m);
  EXPECT_NEAR(row_log_marginal_predictive(s, d.row(1), m), std::log(0.25), 1e-15);
  update_stats(s, d.row(0), Direction::add);
  EXPECT_NEAR(row_log_marginal_predictive(s, d.row(1), m), std::log(1.0 / 6.0), 1e-15);
}

TEST(RowLogMarginalPredictive, NormalizesOverAllRows) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 12, 3, 3);
    const auto s = collect_stats(inst.data, inst.structure);
    const std::size_t n = inst.data.n_features();
    // Enumerate every (u, v) in the schema's universe.
    std::vector<std::uint32_t> u(n, 0);
    double total = 0.0;
    while (true) {
      for (std::uint32_t c = 0; c < inst.data.class_cardinality(); ++c) {
        total += std::exp(row_log_marginal_predictive(s, {c, u}, inst.structure));
      }
      std::size_t j = 0;
      while (j < n && ++u[j] == inst.data.feature_cardinality(j)) u[j++] = 0;
      if (j == n) break;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(RowLogMarginalPredictive, SequentialProductIsOrderingInvariant) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = pnb::testing::random_instance(rng, 20, 3, 3);
    auto chain = [&](const Ordering& ord) {
      auto s = empty_stats(inst.data.schema(), inst.structure);
      double acc = 0;
      for (auto r : ord.perm) {
        acc += row_log_marginal_predictive(s, inst.data.row(r), inst.structure);
        update_stats(s, inst.data.row(r), Direction::add);
      }
      return acc;
    };
    const double a = chain(Ordering::identity(inst.data.size()));
    const double b = chain(pnb::testing::random_ordering(rng, inst.data.size()));
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(PluginParams, MaximumLikelihoodFrequencies) {
  const auto m = Structure(1, 1);
  const auto p = plugin_params(collect_stats(three_rows(), m), m);
  EXPECT_NEAR(p.class_probs[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.class_probs[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p.cond_probs[0][0], 1.0);
  EXPECT_EQ(p.cond_probs[0][1], 0.0);
}

TEST(PluginParams, UniformFallbacks) {
  const auto empty = make_data(2, {3}, {});
  const auto m = Structure(1, 1);
  const auto p = plugin_params(collect_stats(empty, m), m);
  EXPECT_EQ(p.class_probs, (std::vector<double>{0.5, 0.5}));
  // Class 1 never observed: its conditional row is uniform.
  const auto only0 = make_data(2, {3}, {{1, 0}});
  const auto q = plugin_params(collect_stats(only0, m), m);
  for (std::size_t v = 0; v < 3; ++v) EXPECT_NEAR(q.cond_probs[0][3 + v], 1.0 / 3.0, 1e-15);
}

TEST(PluginClassPredictive, DeterministicConditionalAndDegeneracy) {
  const auto m = Structure(1, 1);
  const auto p = plugin_params(collect_stats(three_rows(), m), m);
  const auto dist = plugin_class_predictive(p, kU0, m);
  EXPECT_EQ(dist.probs[0], 1.0);
  EXPECT_EQ(dist.probs[1], 0.0);
  EXPECT_FALSE(dist.degenerate);

  const auto empty = make_data(2, {2}, {});
  const auto pe = plugin_class_predictive(plugin_params(collect_stats(empty, m), m), kU0, m);
  EXPECT_EQ(pe.probs, (std::vector<double>{0.5, 0.5}));

  // u = 2 was never seen with any class.
  const auto three = make_data(2, {3}, {{0, 0}, {1, 1}});
  const std::vector<std::uint32_t> unseen{2};
  const auto deg = plugin_class_predictive(plugin_params(collect_stats(three, m), m), unseen, m);
  EXPECT_TRUE(deg.degenerate);
  EXPECT_EQ(deg.probs, (std::vector<double>{0.5, 0.5}));
}
