#pragma once

// Pinned synthetic data: a class column, features that copy the class
// through a noisy channel, and features independent of everything.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pnb/dataset.hpp"
#include "pnb/random.hpp"

namespace pnb {

struct SyntheticSpec {
  std::size_t rows = 400;
  std::size_t classes = 2;
  std::size_t informative = 3;
  std::size_t noise = 3;
  std::size_t cardinality = 2;
  /// Probability that an informative feature copies (class mod cardinality);
  /// otherwise its value is uniform.
  double signal = 0.6;
  std::uint64_t seed = 1;
};

/// Features are named i0..i{informative-1} then n0..n{noise-1}; the class
/// column is the last column, named "cls".
inline Dataset make_synthetic(const SyntheticSpec& spec) {
  auto schema = std::make_shared<Schema>();
  const std::size_t n_features = spec.informative + spec.noise;
  auto categories = [](std::size_t r) {
    std::vector<std::string> out;
    for (std::size_t v = 0; v < r; ++v) out.push_back(std::to_string(v));
    return out;
  };
  for (std::size_t j = 0; j < n_features; ++j) {
    const std::string name = j < spec.informative ? "i" + std::to_string(j) : "n" + std::to_string(j - spec.informative);
    schema->variables.push_back({name, VariableKind::discrete, categories(spec.cardinality), {}});
  }
  schema->variables.push_back({"cls", VariableKind::discrete, categories(spec.classes), {}});
  schema->class_index = n_features;

  Rng rng(spec.seed);
  std::vector<std::uint32_t> classes(spec.rows);
  std::vector<std::uint32_t> features(spec.rows * n_features);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    const auto c = static_cast<std::uint32_t>(rng.below(spec.classes));
    classes[i] = c;
    for (std::size_t j = 0; j < n_features; ++j) {
      const bool copy = j < spec.informative && rng.uniform() < spec.signal;
      features[i * n_features + j] = copy ? static_cast<std::uint32_t>(c % spec.cardinality)
                                          : static_cast<std::uint32_t>(rng.below(spec.cardinality));
    }
  }
  return Dataset(std::move(schema), std::move(classes), std::move(features));
}

}  // namespace pnb
