#include "httplib.h"

#include <cstdlib>

#include "ctxd/error.hpp"
#include "ctxd/llm.hpp"
#include "json.hpp"

namespace ctxd {

using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string{} : std::string(v);
}

}  // namespace

ChatCompletionsBackend::ChatCompletionsBackend(Config config) : config_(std::move(config)) {
  if (config_.base_url.empty()) fail(ErrorCode::invalid_argument, "LLM base URL is empty");
  auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    fail(ErrorCode::invalid_argument, "LLM base URL needs a scheme: " + config_.base_url);
  }
  auto path_start = config_.base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.base_url;
  } else {
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    path_prefix_ = config_.base_url.substr(path_start);
  }
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

ChatCompletionsBackend::Config ChatCompletionsBackend::config_from_env() {
  Config c;
  c.base_url = env_or_empty("CTXD_LLM_BASE_URL");
  c.model = env_or_empty("CTXD_LLM_MODEL");
  c.api_key = env_or_empty("CTXD_LLM_API_KEY");
  if (c.base_url.empty() || c.model.empty()) {
    fail(ErrorCode::invalid_argument,
         "live mode needs CTXD_LLM_BASE_URL and CTXD_LLM_MODEL (or run with --mock)");
  }
  return c;
}

std::string ChatCompletionsBackend::request_body(const LlmRequest& request) const {
  auto model_it = config_.role_models.find(request.role);
  json body;
  body["model"] = model_it == config_.role_models.end() ? config_.model : model_it->second;
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_text}});
  for (const auto& m : request.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  body["messages"] = std::move(messages);
  if (request.json_mode) body["response_format"] = {{"type", "json_object"}};
  return body.dump();
}

LlmResponse ChatCompletionsBackend::generate(const LlmRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  httplib::Client client(scheme_host_port_);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(path_prefix_ + "/chat/completions", headers, request_body(request),
                         "application/json");
  if (!res) {
    fail(ErrorCode::backend_error, "LLM request failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorCode::backend_error,
         "LLM backend returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  LlmResponse out;
  try {
    auto doc = json::parse(res->body);
    out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::backend_error, std::string("unexpected LLM response shape: ") + e.what());
  }
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  out.backend_id = "chat-completions:" + scheme_host_port_;
  return out;
}

}  // namespace ctxd
