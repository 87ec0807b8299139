#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ctxd {

enum class PatternType { reasoning, task_sop, context_case };
enum class CapsuleState { needs_review, active, disabled };

std::string_view to_string(PatternType type);
PatternType pattern_type_from_string(std::string_view text);
std::string_view to_string(CapsuleState state);
CapsuleState capsule_state_from_string(std::string_view text);

/// A reusable pattern extracted from conversation nodes.
struct PatternCapsule {
  std::string id;
  PatternType type = PatternType::reasoning;
  std::string name;
  std::string instruction;
  std::string example;
  bool requires_human_review = false;
  CapsuleState state = CapsuleState::active;
  std::vector<std::string> source_nodes;
  std::int64_t created_at = 0;
  std::int64_t activated_at = 0;  // last activation tick; orders the appendix

  bool operator==(const PatternCapsule&) const = default;
};

}  // namespace ctxd
