#include <fstream>
#include <sstream>

#include "ctxd/error.hpp"
#include "ctxd/llm.hpp"
#include "json.hpp"

namespace ctxd {

using nlohmann::json;

std::vector<MockBackend::Rule> MockBackend::parse_rules(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("mock script is not valid JSON: ") + e.what());
  }
  const json* rules = &doc;
  if (doc.is_object()) {
    if (!doc.contains("rules")) fail(ErrorCode::parse_error, "mock script needs a 'rules' array");
    rules = &doc.at("rules");
  }
  if (!rules->is_array()) fail(ErrorCode::parse_error, "mock script rules must be an array");

  std::vector<Rule> out;
  for (const auto& r : *rules) try {
    if (!r.is_object() || !r.contains("role")) {
      fail(ErrorCode::parse_error, "mock rule needs a 'role'");
    }
    Rule rule;
    rule.role = agent_role_from_string(r.at("role").get<std::string>());
    if (r.contains("call")) rule.call = r.at("call").get<std::size_t>();
    if (r.contains("match")) rule.match = r.at("match").get<std::string>();
    if (r.contains("text")) {
      const auto& t = r.at("text");
      rule.text = t.is_string() ? t.get<std::string>() : t.dump();
    }
    if (r.contains("error")) rule.error = r.at("error").get<std::string>();
    if (!rule.text && !rule.error) fail(ErrorCode::parse_error, "mock rule needs 'text' or 'error'");
    out.push_back(std::move(rule));
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("bad mock rule: ") + e.what());
  }
  return out;
}

MockBackend MockBackend::from_json_text(std::string_view json_text) {
  return MockBackend(parse_rules(json_text));
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
  return MockBackend(read_rules(path));
}

std::vector<MockBackend::Rule> MockBackend::read_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open mock script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

std::string MockBackend::fallback_text(const LlmRequest& request) {
  const std::string last = request.messages.empty() ? std::string{} : request.messages.back().content;
  switch (request.role) {
    case AgentRole::conversation:
      return "Mock reply to: " + last;
    case AgentRole::structure:
      return R"({"primary_action":"continue","asset_action":"none","confidence":0.5,)"
             R"("reason":"no structural change needed","asset_reason":"","show_suggestion":false})";
    case AgentRole::memory:
      return "Mock summary.";
    case AgentRole::extraction:
      return R"({"name":"Tentative Pattern","requires_human_review":true,)"
             R"("instruction":"Review before reuse.","example":"Apply when a similar task appears."})";
    case AgentRole::user_model:
      return R"({"lifecycle":"learning","generalizations":[],"supporting_examples":[]})";
  }
  return {};
}

LlmResponse MockBackend::generate(const LlmRequest& request) {
  const std::string last = request.messages.empty() ? std::string{} : request.messages.back().content;
  const Rule* hit = nullptr;
  std::size_t n = 0;
  {
    std::lock_guard lock(mu_);
    n = ++counters_[request.role];
    calls_.push_back({request, n});
    for (const auto& r : rules_) {
      if (r.role != request.role) continue;
      if (r.call && *r.call != n) continue;
      if (r.match && last.find(*r.match) == std::string::npos) continue;
      hit = &r;
      break;
    }
  }
  LlmResponse resp;
  resp.backend_id = "mock";
  if (hit == nullptr) {
    resp.text = fallback_text(request);
    return resp;
  }
  if (hit->error) fail(ErrorCode::backend_error, "mock backend error: " + *hit->error);
  resp.text = *hit->text;
  return resp;
}

std::vector<MockBackend::CallRecord> MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t MockBackend::call_count(AgentRole role) const {
  std::lock_guard lock(mu_);
  auto it = counters_.find(role);
  return it == counters_.end() ? 0 : it->second;
}

}  // namespace ctxd
