#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/llm.hpp"
#include "ctxd/project.hpp"

namespace ctxd {

struct RuntimeConfig {
  bool user_model_enabled = false;     // inject the user model into the structure prompt
  std::size_t user_model_debounce = 5; // new traces needed before a model refresh
  std::size_t trace_pairs = kDefaultTracePairs;

  /// CTXD_USER_MODEL_ENABLED (1/true/on/yes).
  static RuntimeConfig from_env();
};

struct TurnResult {
  std::string user_node;
  std::string assistant_node;
  std::optional<Suggestion> suggestion;
  std::optional<std::string> superseded;  // suggestion marked ignored by this turn
  std::optional<std::string> structure_error;
  AssembledContext assembled;
  AssembledContext structure_input;  // same messages, structure system text
};

enum class SuggestionResponse { accept, reject, ignore };

std::string_view to_string(SuggestionResponse r);
SuggestionResponse suggestion_response_from_string(std::string_view text);

struct ResponseEffect {
  Suggestion suggestion;
  std::optional<std::string> branch_id;
  std::optional<std::string> capsule_id;
  std::optional<PathRef> base_path;
  bool stale = false;
};

struct TransitionResult {
  PathRef from;
  PathRef to;
  std::optional<std::string> mainline_summary;
  std::vector<std::string> summarized_branches;  // branches marked completed
  std::vector<std::string> errors;               // memory failures, logged
};

enum class ScopeOp { include, exclude, revert };
ScopeOp scope_op_from_string(std::string_view text);

enum class HistoryOp { undo, redo, reset };
HistoryOp history_op_from_string(std::string_view text);

/// Runs the agents against one project. Holds no per-project state; the
/// caller serializes calls that touch the same project.
class AgentRuntime {
 public:
  AgentRuntime(LlmBackend& backend, RuntimeConfig config = {});

  [[nodiscard]] const RuntimeConfig& config() const { return config_; }
  [[nodiscard]] LlmBackend& backend() const { return backend_; }

  /// One conversational turn on the scope's base path. With `from_node`
  /// the visible path is cut after that node for this turn and the skipped
  /// nodes are excluded afterwards.
  TurnResult run_turn(Project& p, const std::string& user_text,
                      const std::optional<std::string>& from_node = std::nullopt);

  ResponseEffect respond_to_suggestion(Project& p, const std::string& suggestion_id,
                                       SuggestionResponse action);

  TransitionResult transition_path(Project& p, const PathRef& target);

  // Manual structural operations. Each records exactly one trace event.
  std::string branch_from(Project& p, const std::string& node_id,
                          std::optional<std::string> intent,
                          const std::optional<PathRef>& parent = std::nullopt);
  std::string rebranch_from(Project& p, const std::string& node_id,
                            std::optional<std::string> intent = std::nullopt);
  DeletionReport delete_nodes(Project& p, std::span<const std::string> ids);
  void edit_node(Project& p, const std::string& node_id, std::string content);
  void set_mainline(Project& p, const std::optional<std::string>& start,
                    const std::optional<std::string>& end);
  RevertOutcome apply_scope(Project& p, ScopeOp op, std::span<const std::string> ids);

  /// Journal navigation. Not a structural signal, so not traced.
  void history(Project& p, HistoryOp op);
  void set_layout(Project& p, const std::string& node_id, std::optional<LayoutPos> pos);

  const PatternCapsule& extract(Project& p, PatternType type, std::span<const std::string> ids);
  const PatternCapsule& review(Project& p, const std::string& capsule_id, const PatternEdits& edits,
                               bool approve);
  const PatternCapsule& set_enabled(Project& p, const std::string& capsule_id, bool enabled);
  std::vector<std::string> import_patterns(Project& p, std::string_view json_text);

  /// Refreshes the user model when enough traces accumulated (or always
  /// with `force`). Failures keep the prior model.
  UserModelUpdate refresh_user_model(Project& p, bool force = false);

  /// Prompt facts for the project's current scope.
  [[nodiscard]] PromptInputs prompt_inputs(const Project& p) const;
  [[nodiscard]] ExecutionContext execution_context(const Project& p) const;

 private:
  const TraceEvent& record(Project& p, TraceKind kind, std::vector<std::string> subjects,
                           std::string detail = {});
  std::optional<std::string> summarize(MemoryPromptKind kind, const ConversationTopology& t,
                                       std::span<const std::string> node_ids,
                                       std::vector<std::string>& errors);
  void enter(Project& p, const PathRef& target, TransitionResult& out);
  void fix_scope(Project& p);

  LlmBackend& backend_;
  RuntimeConfig config_;
};

}  // namespace ctxd
