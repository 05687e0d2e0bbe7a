#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace pnb {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) over the span; -inf for an empty span or all -inf terms.
inline double log_sum_exp(std::span<const double> terms) {
  if (terms.empty()) return kNegInf;
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (peak == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

/// log of the Dirichlet-multinomial evidence of one count vector under a
/// uniform (alpha = 1) prior: log[(r-1)! / (n+r-1)!] + sum_v log(n_v!).
template <typename Counts>
double log_dirichlet_evidence(const Counts& counts) {
  long long n = 0;
  double sum = 0.0;
  for (auto c : counts) {
    n += c;
    sum += std::lgamma(static_cast<double>(c) + 1.0);
  }
  const double r = static_cast<double>(std::size(counts));
  return std::lgamma(r) - std::lgamma(static_cast<double>(n) + r) + sum;
}

}  // namespace pnb
