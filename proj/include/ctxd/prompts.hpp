#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/capsule.hpp"
#include "ctxd/graph.hpp"

namespace ctxd {

enum class ConversationMode { mainline, branch };

std::string_view to_string(ConversationMode mode);

/// Optional facts about the current structural position, rendered into the
/// structure copilot prompt. Absent fields produce no line at all.
struct ExecutionContext {
  ConversationMode mode = ConversationMode::mainline;
  int branch_depth = 0;
  std::optional<std::string> branch_intent;
  std::optional<std::string> parent_tldr;
  std::optional<std::string> mainline_tldr;
  std::optional<int> total_branches;
  std::optional<int> active_branches;
  std::vector<std::string> recent_intents;

  bool operator==(const ExecutionContext&) const = default;
};

struct PromptInputs {
  ConversationMode mode = ConversationMode::mainline;
  std::optional<std::string> anchor_node_id;      // required in branch mode
  std::optional<std::string> mainline_summary;    // read in branch mode only
  std::vector<std::string> branch_summaries;      // read in mainline mode only
  std::vector<PatternCapsule> enabled_patterns;   // activation order, all active
  std::optional<ExecutionContext> exec_ctx;
  std::optional<std::string> user_model_json;
};

/// The four system-prompt shapes of the conversation agent.
enum class ConversationCase {
  mainline_plain,           // A
  mainline_with_summaries,  // B
  branch_plain,             // C
  branch_with_status,       // D
};

ConversationCase select_conversation_case(ConversationMode mode, bool has_branch_summaries,
                                          bool has_mainline_summary);

std::string build_conversation_system(const PromptInputs& inputs);
std::string render_pattern_appendix(std::span<const PatternCapsule> patterns);
std::string build_structure_prompt(const std::optional<ExecutionContext>& exec_ctx,
                                   const std::optional<std::string>& user_model_json);

enum class MemoryPromptKind { mainline_progress, branch_summary };

MemoryPromptKind memory_prompt_kind_from_string(std::string_view text);
std::string build_memory_prompt(MemoryPromptKind kind);

/// User message for the extraction agents: numbered transcript plus the
/// JSON-keys reminder. Multi-line content is kept as-is under one number.
std::string render_transcript(std::span<const ContextNode> nodes);
std::string build_extraction_system(PatternType type);
std::string build_user_model_prompt();

}  // namespace ctxd
