#pragma once

// Exhaustive search over all 2^n feature subsets.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pnb/criteria.hpp"
#include "pnb/dataset.hpp"
#include "pnb/error.hpp"
#include "pnb/nbmodel.hpp"

namespace pnb {

inline constexpr std::size_t kDefaultMaxFeatures = 14;
inline constexpr std::size_t kHardMaxFeatures = 20;  // 2^20 structures

inline std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Every subset of n features, in ascending order of the bit pattern.
inline std::vector<Structure> enumerate_structures(std::size_t n_features,
                                                   std::size_t max_features = kDefaultMaxFeatures) {
  if (n_features > max_features) {
    throw Error(std::to_string(n_features) + " features exceed the exhaustive-search cap of " +
                std::to_string(max_features) + " (raise the cap to override)");
  }
  if (n_features > kHardMaxFeatures) throw Error("exhaustive search is limited to 2^20 structures");
  const std::uint64_t count = std::uint64_t{1} << n_features;
  std::vector<Structure> out;
  out.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) out.emplace_back(n_features, mask);
  return out;
}

/// Runs fn(i) for i in [0, count) on `workers` threads using static
/// contiguous chunks. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ScoreEntry {
  Structure structure;
  Score score;
};

/// One score per enumerated structure, in canonical order.
struct ScoreTable {
  CriterionSpec criterion;
  std::vector<ScoreEntry> entries;
};

/// True when `a` should be preferred over `b`: higher score, then fewer
/// selected features, then the smaller canonical integer.
inline bool better_entry(const ScoreEntry& a, const ScoreEntry& b) {
  if (a.score.value != b.score.value) return a.score.value > b.score.value;
  if (a.structure.size() != b.structure.size()) return a.structure.size() < b.structure.size();
  return a.structure.mask() < b.structure.mask();
}

struct Selection {
  Structure best;
  Score score;
  ScoreTable table;
  /// Every structure scored -inf; `best` is then the empty structure.
  bool degenerate = false;
};

struct SearchOptions {
  std::size_t workers = 1;
  std::size_t max_features = kDefaultMaxFeatures;
};

inline Selection select_best(const Dataset& train, const CriterionSpec& spec, const SearchOptions& options = {}) {
  if (train.empty()) throw Error("cannot select a structure from empty training data");
  const auto structures = enumerate_structures(train.n_features(), options.max_features);
  Selection out;
  out.table.criterion = spec;
  out.table.entries.resize(structures.size());
  parallel_for(structures.size(), options.workers, [&](std::size_t i) {
    out.table.entries[i] = {structures[i], evaluate(train, structures[i], spec)};
  });

  const ScoreEntry* best = &out.table.entries.front();
  for (const auto& e : out.table.entries) {
    if (better_entry(e, *best)) best = &e;
  }
  out.best = best->structure;
  out.score = best->score;
  if (best->score.value == kNegInf) {
    out.degenerate = true;
    out.best = Structure::empty(train.n_features());
  }
  return out;
}

/// The `count` best entries in preference order.
inline std::vector<ScoreEntry> top_entries(const ScoreTable& table, std::size_t count) {
  auto sorted = table.entries;
  std::sort(sorted.begin(), sorted.end(), better_entry);
  if (sorted.size() > count) sorted.resize(count);
  return sorted;
}

}  // namespace pnb
