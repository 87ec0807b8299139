#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/graph.hpp"
#include "ctxd/llm.hpp"

namespace ctxd {

enum class TraceKind {
  suggestion_accepted,
  suggestion_rejected,
  suggestion_ignored_explicit,
  suggestion_ignored_superseded,
  manual_branch,
  manual_return,
  manual_include,
  manual_exclude,
  manual_delete,
  manual_mainline_change,
  manual_edit,
  extraction_requested,
  capsule_reviewed,
};

std::string_view to_string(TraceKind kind);
TraceKind trace_kind_from_string(std::string_view text);

struct QaPair {
  std::string user;
  std::string assistant;
  bool operator==(const QaPair&) const = default;
};

struct TraceEvent {
  std::string id;
  TraceKind kind = TraceKind::manual_branch;
  std::vector<std::string> subjects;
  std::vector<QaPair> compressed_context;
  std::string detail;
  std::int64_t created_at = 0;
  bool operator==(const TraceEvent&) const = default;
};

inline constexpr std::size_t kDefaultTracePairs = 3;
inline constexpr std::size_t kTraceContentLimit = 280;

/// The last `pairs` user->assistant pairs along `visible`, each side cut to
/// `max_chars` code points.
std::vector<QaPair> compress_context(const ConversationTopology& topology,
                                     std::span<const std::string> visible,
                                     std::size_t pairs = kDefaultTracePairs,
                                     std::size_t max_chars = kTraceContentLimit);

/// Append-only, ordered by created_at.
class TraceLog {
 public:
  [[nodiscard]] const std::vector<TraceEvent>& events() const { return events_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }

  const TraceEvent& append(TraceEvent event);

  /// One compact JSON object per line, in log order.
  [[nodiscard]] std::string export_jsonl() const;
  static std::vector<TraceEvent> parse_jsonl(std::string_view text);

  bool operator==(const TraceLog&) const = default;

 private:
  std::vector<TraceEvent> events_;
};

enum class Lifecycle { cold_start, learning, ready };

std::string_view to_string(Lifecycle lifecycle);
Lifecycle lifecycle_from_string(std::string_view text);

struct Generalization {
  std::string claim;
  std::string evidence_strength;
  bool operator==(const Generalization&) const = default;
};

struct UserModel {
  Lifecycle lifecycle = Lifecycle::cold_start;
  std::vector<Generalization> generalizations;
  std::vector<std::string> supporting_examples;  // compact JSON per example
  std::int64_t updated_at = 0;
  std::string raw_json;  // exactly what the model emitted
  bool operator==(const UserModel&) const = default;
};

/// Validates lifecycle plus the generalizations / supporting_examples arrays;
/// other fields are kept only inside raw_json.
UserModel parse_user_model(std::string_view raw, std::int64_t now);
UserModel cold_start_model(std::int64_t now);

struct UserModelState {
  std::optional<UserModel> model;
  std::size_t consumed_traces = 0;  // trace count folded into `model`
  bool operator==(const UserModelState&) const = default;
};

struct UserModelUpdate {
  bool called_backend = false;
  bool changed = false;
  std::optional<std::string> error;
};

/// The user message for the user-model agent: the prior model and the trace
/// events it has not seen yet.
std::string build_user_model_message(const std::optional<UserModel>& prior,
                                     std::span<const TraceEvent> fresh);

/// No traces: stores a cold-start model without a backend call. No new
/// traces: no-op. Otherwise one JSON-mode call; a bad response keeps the
/// prior model and is reported in `error`.
UserModelUpdate update_user_model(UserModelState& state, const TraceLog& traces,
                                  LlmBackend& backend, std::int64_t now);

}  // namespace ctxd
