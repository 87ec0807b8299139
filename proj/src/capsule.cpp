#include "ctxd/capsule.hpp"

#include "ctxd/error.hpp"

namespace ctxd {

std::string_view to_string(PatternType type) {
  switch (type) {
    case PatternType::reasoning: return "reasoning";
    case PatternType::task_sop: return "task_sop";
    case PatternType::context_case: return "context_case";
  }
  return "reasoning";
}

PatternType pattern_type_from_string(std::string_view text) {
  if (text == "reasoning") return PatternType::reasoning;
  if (text == "task_sop") return PatternType::task_sop;
  if (text == "context_case") return PatternType::context_case;
  fail(ErrorCode::invalid_argument, "unknown pattern type '" + std::string(text) + "'");
}

std::string_view to_string(CapsuleState state) {
  switch (state) {
    case CapsuleState::needs_review: return "needs_review";
    case CapsuleState::active: return "active";
    case CapsuleState::disabled: return "disabled";
  }
  return "active";
}

CapsuleState capsule_state_from_string(std::string_view text) {
  if (text == "needs_review") return CapsuleState::needs_review;
  if (text == "active") return CapsuleState::active;
  if (text == "disabled") return CapsuleState::disabled;
  fail(ErrorCode::invalid_argument, "unknown capsule state '" + std::string(text) + "'");
}

}  // namespace ctxd
