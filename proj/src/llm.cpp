#include "ctxd/llm.hpp"

#include "ctxd/error.hpp"

namespace ctxd {

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::conversation: return "conversation";
    case AgentRole::structure: return "structure";
    case AgentRole::memory: return "memory";
    case AgentRole::extraction: return "extraction";
    case AgentRole::user_model: return "user_model";
  }
  return "conversation";
}

AgentRole agent_role_from_string(std::string_view text) {
  for (auto r : {AgentRole::conversation, AgentRole::structure, AgentRole::memory,
                 AgentRole::extraction, AgentRole::user_model}) {
    if (to_string(r) == text) return r;
  }
  fail(ErrorCode::invalid_argument, "unknown agent role '" + std::string(text) + "'");
}

bool wants_json(AgentRole role) {
  return role == AgentRole::structure || role == AgentRole::extraction ||
         role == AgentRole::user_model;
}

LlmRequest make_request(AgentRole role, std::string system_text, std::vector<ChatMessage> messages) {
  return LlmRequest{std::move(system_text), std::move(messages), wants_json(role), role};
}

}  // namespace ctxd
