#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/graph.hpp"

namespace ctxd {

enum class PrimaryAction { continue_, branch, return_parent };
enum class AssetAction { none, extract_reasoning, extract_task_sop };

std::string_view to_string(PrimaryAction action);
std::string_view to_string(AssetAction action);
PrimaryAction primary_action_from_string(std::string_view text);
AssetAction asset_action_from_string(std::string_view text);

struct StructureDecision {
  PrimaryAction primary_action = PrimaryAction::continue_;
  AssetAction asset_action = AssetAction::none;
  double confidence = 0.0;
  std::string reason;
  std::string asset_reason;
  bool show_suggestion = false;

  /// (continue, none) never becomes a suggestion.
  [[nodiscard]] bool is_noop() const {
    return primary_action == PrimaryAction::continue_ && asset_action == AssetAction::none;
  }

  bool operator==(const StructureDecision&) const = default;
};

/// Strict parse of the structure agent's six-field JSON object. Anything
/// else (missing or extra keys, wrong types, unknown tokens, confidence
/// outside [0,1], asset_reason inconsistent with asset_action) throws
/// Error(parse_error). Nothing is coerced.
StructureDecision parse_structure_decision(std::string_view raw);

std::string serialize_structure_decision(const StructureDecision& decision);

enum class SuggestionState { pending, accepted, rejected, ignored };

std::string_view to_string(SuggestionState state);
SuggestionState suggestion_state_from_string(std::string_view text);

struct Suggestion {
  std::string id;
  StructureDecision decision;
  std::string anchor_node;  // assistant node of the turn that produced it
  PathRef path;             // base path when it was produced
  SuggestionState state = SuggestionState::pending;
  std::int64_t created_at = 0;
  std::optional<std::string> resolution;  // why it left pending

  bool operator==(const Suggestion&) const = default;
};

/// Holds every suggestion of a project; at most one is pending.
class SuggestionBook {
 public:
  [[nodiscard]] const std::vector<Suggestion>& all() const { return items_; }
  [[nodiscard]] const Suggestion* pending() const;
  [[nodiscard]] const Suggestion* find(std::string_view id) const;

  /// Fails with conflict while another suggestion is pending.
  const Suggestion& open(std::string id, StructureDecision decision, std::string anchor_node,
                         PathRef path, std::int64_t now);
  /// pending -> accepted | rejected | ignored. Anything else is a conflict.
  const Suggestion& resolve(std::string_view id, SuggestionState to,
                            std::optional<std::string> resolution = std::nullopt);

  std::uint64_t next_ordinal = 1;

  bool operator==(const SuggestionBook&) const = default;

 private:
  friend struct SuggestionBookAccess;
  std::vector<Suggestion> items_;
};

struct SuggestionBookAccess {
  static std::vector<Suggestion>& items(SuggestionBook& b) { return b.items_; }
};

}  // namespace ctxd
