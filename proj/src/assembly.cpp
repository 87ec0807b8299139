#include "ctxd/assembly.hpp"

#include <algorithm>
#include <unordered_set>

#include "ctxd/error.hpp"

namespace ctxd {

void ContextScopeState::include(std::span<const std::string> ids) {
  for (const auto& id : ids) {
    excluded_nodes.erase(id);
    included_nodes.insert(id);
  }
}

void ContextScopeState::exclude(std::span<const std::string> ids) {
  for (const auto& id : ids) {
    included_nodes.erase(id);
    excluded_nodes.insert(id);
  }
}

namespace {

// Appends seq[from..] up to and including `stop` (or to the end).
void emit_until(std::vector<std::string>& out, const std::vector<std::string>& seq,
                std::size_t from, const std::string* stop) {
  for (std::size_t i = from; i < seq.size(); ++i) {
    out.push_back(seq[i]);
    if (stop != nullptr && seq[i] == *stop) return;
  }
  if (stop != nullptr) fail(ErrorCode::internal, "anchor '" + *stop + "' not found on its parent path");
}

}  // namespace

std::vector<std::string> resolve_visible_path(const ConversationTopology& topology,
                                              const PathRef& base_path,
                                              const std::optional<std::string>& truncate_at) {
  std::vector<std::string> out;
  const auto& ml = topology.mainline();
  auto pos = [&](const std::string& id) {
    return static_cast<std::size_t>(std::find(ml.begin(), ml.end(), id) - ml.begin());
  };
  const std::size_t start = topology.mainline_start().empty() ? 0 : pos(topology.mainline_start());

  if (base_path.is_mainline()) {
    if (!ml.empty()) {
      const std::string& end = topology.mainline_end();
      emit_until(out, ml, start, end.empty() ? nullptr : &end);
    }
  } else {
    auto chain = topology.chain(base_path);
    std::reverse(chain.begin(), chain.end());  // root first
    const std::string& root_anchor = chain.front()->anchor;
    // An anchor before the window start contributes no mainline nodes.
    if (pos(root_anchor) >= start) emit_until(out, ml, start, &root_anchor);
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      emit_until(out, chain[k]->segment, 0, &chain[k + 1]->anchor);
    }
    const auto& tail = chain.back()->segment;
    out.insert(out.end(), tail.begin(), tail.end());
  }

  if (truncate_at) {
    auto it = std::find(out.begin(), out.end(), *truncate_at);
    if (it == out.end()) {
      fail(ErrorCode::invalid_argument,
           "truncation node '" + *truncate_at + "' is not on the visible path");
    }
    out.erase(it + 1, out.end());
  }
  return out;
}

EffectiveContext apply_scope_overrides(const ConversationTopology& topology,
                                       std::span<const std::string> visible,
                                       const ContextScopeState& scope) {
  EffectiveContext eff;
  std::unordered_set<std::string> seen;
  auto take = [&](const std::string& id) {
    const auto* n = topology.find_node(id);
    if (n == nullptr || n->placeholder || !seen.insert(id).second) return;
    eff.nodes.push_back(*n);
  };
  for (const auto& id : visible) {
    if (!scope.excluded_nodes.contains(id)) take(id);
  }
  for (const auto& id : scope.included_nodes) {
    if (topology.find_node(id) == nullptr) {
      eff.ignored_includes.push_back(id);
    } else {
      take(id);
    }
  }
  return eff;
}

std::vector<ChatMessage> order_and_render(std::vector<ContextNode> effective,
                                          std::string_view new_user_text) {
  std::sort(effective.begin(), effective.end(), [](const ContextNode& a, const ContextNode& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.seq < b.seq;
  });
  std::vector<ChatMessage> out;
  out.reserve(effective.size() + 1);
  for (auto& n : effective) out.push_back({n.role, std::move(n.content)});
  out.push_back({Role::user, std::string(new_user_text)});
  return out;
}

AssembledContext assemble(const ConversationTopology& topology, const ContextScopeState& scope,
                          std::string_view new_user_text, const PromptInputs& inputs) {
  auto visible = resolve_visible_path(topology, scope.base_path, scope.truncate_at);
  auto effective = apply_scope_overrides(topology, visible, scope);
  AssembledContext ctx;
  ctx.system_text = build_conversation_system(inputs);
  ctx.messages = order_and_render(std::move(effective.nodes), new_user_text);
  ctx.final_user_turn = std::string(new_user_text);
  return ctx;
}

bool is_active(const ConversationTopology& topology, const ContextScopeState& scope,
               std::string_view node_id) {
  const std::string id(node_id);
  if (scope.included_nodes.contains(id)) return true;
  if (scope.excluded_nodes.contains(id)) return false;
  auto visible = resolve_visible_path(topology, scope.base_path, scope.truncate_at);
  return std::find(visible.begin(), visible.end(), id) != visible.end();
}

RevertOutcome revert(const ConversationTopology& topology, ContextScopeState& scope,
                     std::span<const std::string> ids) {
  auto visible = resolve_visible_path(topology, scope.base_path, scope.truncate_at);
  std::unordered_set<std::string> visible_set(visible.begin(), visible.end());
  RevertOutcome outcome;
  for (const auto& id : ids) {
    (void)topology.node(id);  // throws not_found
    bool active = scope.included_nodes.contains(id) ||
                  (!scope.excluded_nodes.contains(id) && visible_set.contains(id));
    // Dropping an override is enough when the default already has the
    // wanted state; otherwise add the opposite override.
    const bool visible_default = visible_set.contains(id);
    if (active) {
      scope.included_nodes.erase(id);
      if (visible_default) scope.excluded_nodes.insert(id);
      outcome.deactivated.push_back(id);
    } else {
      scope.excluded_nodes.erase(id);
      if (!visible_default) scope.included_nodes.insert(id);
      outcome.activated.push_back(id);
    }
  }
  return outcome;
}

}  // namespace ctxd
