#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/capsule.hpp"
#include "ctxd/graph.hpp"
#include "ctxd/llm.hpp"

namespace ctxd {

/// The four content keys an extraction agent must return.
struct ExtractedPattern {
  std::string name;
  bool requires_human_review = false;
  std::string instruction;
  std::string example;
  bool operator==(const ExtractedPattern&) const = default;
};

/// Exactly the keys name, requires_human_review, instruction, example with
/// string/boolean/string/string values; anything else is a parse_error.
ExtractedPattern parse_extraction(std::string_view raw);

struct PatternEdits {
  std::optional<std::string> name;
  std::optional<std::string> instruction;
  std::optional<std::string> example;
};

class PatternStore {
 public:
  [[nodiscard]] const std::vector<PatternCapsule>& all() const { return capsules_; }
  [[nodiscard]] const PatternCapsule* find(std::string_view id) const;
  [[nodiscard]] const PatternCapsule& get(std::string_view id) const;

  /// Stores a fresh capsule: needs_review when the model asked for review,
  /// otherwise active right away.
  const PatternCapsule& add(std::string id, PatternType type, ExtractedPattern content,
                            std::vector<std::string> source_nodes, std::int64_t now);
  const PatternCapsule& review(std::string_view id, const PatternEdits& edits, bool approve,
                               std::int64_t now);
  const PatternCapsule& set_enabled(std::string_view id, bool enabled, std::int64_t now);

  /// Only active capsules, in activation order.
  [[nodiscard]] std::vector<PatternCapsule> active_in_activation_order() const;

  /// JSON array of {type, state, name, requires_human_review, instruction, example}.
  [[nodiscard]] std::string export_json() const;
  /// Adds every capsule of an export document under fresh ids. Capsules that
  /// require review re-enter this project as needs_review.
  std::vector<std::string> import_json(std::string_view json_text,
                                       const std::function<std::string()>& next_id,
                                       std::int64_t now);

  bool operator==(const PatternStore&) const = default;

 private:
  friend struct PatternStoreAccess;
  PatternCapsule& mutable_get(std::string_view id);
  std::vector<PatternCapsule> capsules_;
};

struct PatternStoreAccess {
  static std::vector<PatternCapsule>& capsules(PatternStore& s) { return s.capsules_; }
};

/// Renders the transcript of `node_ids`, asks the backend (JSON mode) with
/// the extraction prompt for `type`, validates and stores the capsule.
/// Nothing is stored when the response is rejected.
const PatternCapsule& extract_pattern(PatternStore& store, LlmBackend& backend,
                                      const ConversationTopology& topology, PatternType type,
                                      std::span<const std::string> node_ids,
                                      std::string capsule_id, std::int64_t now);

}  // namespace ctxd
