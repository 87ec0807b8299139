#include "ctxd/prompts.hpp"

#include <map>

#include "ctxd/error.hpp"
#include "ctxd/prompt_resources.hpp"

namespace ctxd {
namespace {

// Resource files end with a newline; prompts do not.
std::string_view resource(std::string_view name) {
  auto text = detail::find_prompt_resource(name);
  if (!text) fail(ErrorCode::internal, "missing prompt resource '" + std::string(name) + "'");
  auto view = *text;
  if (!view.empty() && view.back() == '\n') view.remove_suffix(1);
  return view;
}

// Single pass: substituted values are never rescanned for {keys}.
std::string fill(std::string_view tpl, const std::map<std::string_view, std::string_view>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      auto close = tpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = vars.find(tpl.substr(i + 1, close - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tpl[i++];
  }
  return out;
}

bool non_empty(const std::optional<std::string>& s) { return s && !s->empty(); }

}  // namespace

std::string_view to_string(ConversationMode mode) {
  return mode == ConversationMode::mainline ? "mainline" : "branch";
}

ConversationCase select_conversation_case(ConversationMode mode, bool has_branch_summaries,
                                          bool has_mainline_summary) {
  if (mode == ConversationMode::mainline) {
    return has_branch_summaries ? ConversationCase::mainline_with_summaries
                                : ConversationCase::mainline_plain;
  }
  return has_mainline_summary ? ConversationCase::branch_with_status
                              : ConversationCase::branch_plain;
}

std::string build_conversation_system(const PromptInputs& inputs) {
  if (inputs.mode == ConversationMode::branch && !non_empty(inputs.anchor_node_id)) {
    fail(ErrorCode::invalid_argument, "branch mode requires an anchor node id");
  }
  std::string out(resource("conversation_preamble"));
  const auto which = select_conversation_case(inputs.mode, !inputs.branch_summaries.empty(),
                                              non_empty(inputs.mainline_summary));
  switch (which) {
    case ConversationCase::mainline_plain:
      break;
    case ConversationCase::mainline_with_summaries:
      out += "\n\n";
      out += resource("conversation_completed_branches");
      for (const auto& s : inputs.branch_summaries) {
        out += "\n- ";
        out += s;
      }
      break;
    case ConversationCase::branch_with_status:
    case ConversationCase::branch_plain:
      out += "\n\n";
      out += fill(resource("conversation_subtask_branch"), {{"anchor_node_id", *inputs.anchor_node_id}});
      if (which == ConversationCase::branch_with_status) {
        out += "\n\n";
        out += fill(resource("conversation_context_status"),
                    {{"mainline_summary", *inputs.mainline_summary}});
      }
      break;
  }
  if (!inputs.enabled_patterns.empty()) {
    out += "\n\n";
    out += render_pattern_appendix(inputs.enabled_patterns);
  }
  return out;
}

std::string render_pattern_appendix(std::span<const PatternCapsule> patterns) {
  std::string out;
  for (const auto& p : patterns) {
    if (p.state != CapsuleState::active) {
      fail(ErrorCode::invalid_argument, "capsule '" + p.id + "' is not active");
    }
    if (!out.empty()) out += "\n\n";
    out += fill(resource("pattern_block"), {{"type", to_string(p.type)},
                                            {"name", p.name},
                                            {"instruction", p.instruction},
                                            {"example", p.example}});
  }
  return out;
}

std::string build_structure_prompt(const std::optional<ExecutionContext>& exec_ctx,
                                   const std::optional<std::string>& user_model_json) {
  std::string out(resource("structure_body"));
  if (exec_ctx) {
    const auto& c = *exec_ctx;
    out += "\n\nExecution context:";
    out += "\nCurrent mode: " + std::string(to_string(c.mode)) + ".";
    out += "\nBranch depth: " + std::to_string(c.branch_depth) + ".";
    if (c.branch_intent) out += "\nCurrent branch intent: " + *c.branch_intent;
    if (c.parent_tldr) out += "\nParent context TLDR: " + *c.parent_tldr;
    if (c.mainline_tldr) out += "\nMainline TLDR: " + *c.mainline_tldr;
    if (c.total_branches) out += "\nTotal branches in project: " + std::to_string(*c.total_branches) + ".";
    if (c.active_branches) out += "\nActive branches: " + std::to_string(*c.active_branches) + ".";
    if (!c.recent_intents.empty()) {
      out += "\nRecent branch intents: ";
      for (std::size_t i = 0; i < c.recent_intents.size(); ++i) {
        if (i > 0) out += " || ";
        out += c.recent_intents[i];
      }
    }
  }
  if (user_model_json) {
    out += "\n\n";
    out += resource("structure_user_model_guidance");
    out += "\n";
    out += *user_model_json;
  }
  out += "\n\n";
  out += resource("structure_output_contract");
  return out;
}

MemoryPromptKind memory_prompt_kind_from_string(std::string_view text) {
  if (text == "mainline_progress") return MemoryPromptKind::mainline_progress;
  if (text == "branch_summary") return MemoryPromptKind::branch_summary;
  fail(ErrorCode::invalid_argument, "unknown memory prompt kind '" + std::string(text) + "'");
}

std::string build_memory_prompt(MemoryPromptKind kind) {
  switch (kind) {
    case MemoryPromptKind::mainline_progress: return std::string(resource("memory_mainline_progress"));
    case MemoryPromptKind::branch_summary: return std::string(resource("memory_branch_summary"));
  }
  fail(ErrorCode::invalid_argument, "unknown memory prompt kind");
}

std::string render_transcript(std::span<const ContextNode> nodes) {
  std::string out(resource("transcript_header"));
  std::size_t i = 0;
  for (const auto& n : nodes) {
    out += "\n" + std::to_string(++i) + ". ";
    switch (n.role) {
      case Role::user: out += "User: "; break;
      case Role::assistant: out += "Assistant: "; break;
      case Role::system: out += "System: "; break;
    }
    out += n.content;
  }
  out += "\n\n";
  out += resource("transcript_footer");
  return out;
}

std::string build_extraction_system(PatternType type) {
  switch (type) {
    case PatternType::reasoning: return std::string(resource("extract_reasoning"));
    case PatternType::task_sop: return std::string(resource("extract_task_sop"));
    case PatternType::context_case: return std::string(resource("extract_context_case"));
  }
  fail(ErrorCode::invalid_argument, "unknown pattern type");
}

std::string build_user_model_prompt() { return std::string(resource("user_model_agent")); }

}  // namespace ctxd
