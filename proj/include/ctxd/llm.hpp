#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/assembly.hpp"

namespace ctxd {

enum class AgentRole { conversation, structure, memory, extraction, user_model };

std::string_view to_string(AgentRole role);
AgentRole agent_role_from_string(std::string_view text);

/// Structure, extraction and user-model calls always ask for JSON output.
bool wants_json(AgentRole role);

struct LlmRequest {
  std::string system_text;
  std::vector<ChatMessage> messages;
  bool json_mode = false;
  AgentRole role = AgentRole::conversation;
};

LlmRequest make_request(AgentRole role, std::string system_text, std::vector<ChatMessage> messages);

struct LlmResponse {
  std::string text;
  std::chrono::milliseconds latency{0};
  std::string backend_id;
};

/// One operation: turn a system string plus messages into text.
/// Implementations must be callable from several threads at once.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual LlmResponse generate(const LlmRequest& request) = 0;
};

/// Replays canned responses from a script. Rules are tried in order; a rule
/// matches when its role matches and its optional `call` (1-based count of
/// calls for that role) and `match` (substring of the last message) agree.
///
///   {"rules": [{"role": "structure", "match": "product manager",
///               "text": {...} | "...", "error": "..."}]}
///
/// Object-valued `text` is sent as compact JSON. A rule with `error` makes
/// the call fail. Without a matching rule the role's fallback is used.
class MockBackend final : public LlmBackend {
 public:
  struct Rule {
    AgentRole role = AgentRole::conversation;
    std::optional<std::size_t> call;
    std::optional<std::string> match;
    std::optional<std::string> text;
    std::optional<std::string> error;
  };

  struct CallRecord {
    LlmRequest request;
    std::size_t role_call = 0;
  };

  MockBackend() = default;
  explicit MockBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  static MockBackend from_json_text(std::string_view json_text);
  static MockBackend from_file(const std::filesystem::path& path);
  static std::vector<Rule> parse_rules(std::string_view json_text);
  static std::vector<Rule> read_rules(const std::filesystem::path& path);

  LlmResponse generate(const LlmRequest& request) override;

  [[nodiscard]] std::vector<CallRecord> calls() const;
  [[nodiscard]] std::size_t call_count(AgentRole role) const;

  /// Response used when no rule matches.
  static std::string fallback_text(const LlmRequest& request);

 private:
  std::vector<Rule> rules_;
  mutable std::mutex mu_;
  std::map<AgentRole, std::size_t> counters_;
  std::vector<CallRecord> calls_;
};

/// OpenAI-style chat completions over HTTP(S).
class ChatCompletionsBackend final : public LlmBackend {
 public:
  struct Config {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string model;
    std::string api_key;
    std::map<AgentRole, std::string> role_models;  // overrides `model`
    std::chrono::seconds timeout{120};
  };

  explicit ChatCompletionsBackend(Config config);

  /// CTXD_LLM_BASE_URL, CTXD_LLM_MODEL, CTXD_LLM_API_KEY. Throws when the
  /// base URL or model is missing.
  static Config config_from_env();

  LlmResponse generate(const LlmRequest& request) override;

  /// Request body for one call; exposed for tests.
  [[nodiscard]] std::string request_body(const LlmRequest& request) const;

 private:
  Config config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace ctxd
