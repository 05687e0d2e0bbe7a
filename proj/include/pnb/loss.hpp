#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pnb/error.hpp"
#include "pnb/nbmodel.hpp"

namespace pnb {

enum class LossKind { zero_one, log };

inline std::string_view loss_name(LossKind loss) { return loss == LossKind::zero_one ? "01" : "log"; }

inline LossKind parse_loss(std::string_view text) {
  if (text == "01" || text == "zero_one" || text == "0/1") return LossKind::zero_one;
  if (text == "log") return LossKind::log;
  throw UsageError("unknown loss '" + std::string(text) + "' (valid: 01, log)");
}

/// 0/1 loss of the argmax prediction (ties to the lowest class index), or
/// -ln p(truth) in nats.
inline double loss_of(const ClassDistribution& dist, std::uint32_t truth, LossKind loss) {
  if (truth >= dist.size()) throw Error("true class out of range");
  if (loss == LossKind::zero_one) return dist.argmax() == truth ? 0.0 : 1.0;
  return -dist.log_probs[truth];
}

}  // namespace pnb
