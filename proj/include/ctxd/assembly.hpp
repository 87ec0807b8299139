#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/graph.hpp"
#include "ctxd/prompts.hpp"

namespace ctxd {

/// The active perspective on a topology. Include and exclude keep the two
/// override sets disjoint.
struct ContextScopeState {
  PathRef base_path;
  std::set<std::string> excluded_nodes;
  std::set<std::string> included_nodes;
  std::optional<std::string> truncate_at;

  void include(std::span<const std::string> ids);
  void exclude(std::span<const std::string> ids);

  bool operator==(const ContextScopeState&) const = default;
};

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct EffectiveContext {
  std::vector<ContextNode> nodes;            // unordered; see order_and_render
  std::vector<std::string> ignored_includes; // included ids no longer in the topology
};

struct AssembledContext {
  std::string system_text;
  std::vector<ChatMessage> messages;  // history, then the final user turn
  std::string final_user_turn;
  bool operator==(const AssembledContext&) const = default;
};

/// Default visibility for a base path before overrides. The branch-mode
/// result is the mainline up to the root anchor, each intermediate segment
/// up to the next anchor, then the current segment; anchors are inclusive.
std::vector<std::string> resolve_visible_path(const ConversationTopology& topology,
                                              const PathRef& base_path,
                                              const std::optional<std::string>& truncate_at = std::nullopt);

/// (visible minus excluded) union included, placeholders dropped.
EffectiveContext apply_scope_overrides(const ConversationTopology& topology,
                                       std::span<const std::string> visible,
                                       const ContextScopeState& scope);

/// Sort by (created_at, seq) and append the new user turn.
std::vector<ChatMessage> order_and_render(std::vector<ContextNode> effective,
                                          std::string_view new_user_text);

AssembledContext assemble(const ConversationTopology& topology, const ContextScopeState& scope,
                          std::string_view new_user_text, const PromptInputs& inputs);

/// Whether the node currently contributes to the effective context.
bool is_active(const ConversationTopology& topology, const ContextScopeState& scope,
               std::string_view node_id);

/// Toggles each node's activation state. Returns the ids that became active
/// and those that became inactive.
struct RevertOutcome {
  std::vector<std::string> activated;
  std::vector<std::string> deactivated;
};
RevertOutcome revert(const ConversationTopology& topology, ContextScopeState& scope,
                     std::span<const std::string> ids);

}  // namespace ctxd
