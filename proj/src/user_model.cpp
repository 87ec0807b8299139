#include <spdlog/spdlog.h>

#include "ctxd/error.hpp"
#include "ctxd/json_io.hpp"
#include "ctxd/prompts.hpp"
#include "ctxd/trace.hpp"

namespace ctxd {

using nlohmann::json;

UserModel parse_user_model(std::string_view raw, std::int64_t now) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::exception&) {
    fail(ErrorCode::parse_error, "user model is not valid JSON");
  }
  if (!doc.is_object()) fail(ErrorCode::parse_error, "user model must be a JSON object");
  if (!doc.contains("lifecycle") || !doc.at("lifecycle").is_string()) {
    fail(ErrorCode::parse_error, "user model needs a string 'lifecycle'");
  }
  UserModel m;
  m.lifecycle = lifecycle_from_string(doc.at("lifecycle").get<std::string>());
  for (const char* key : {"generalizations", "supporting_examples"}) {
    if (!doc.contains(key) || !doc.at(key).is_array()) {
      fail(ErrorCode::parse_error, std::string("user model needs an array '") + key + "'");
    }
  }
  for (const auto& g : doc.at("generalizations")) {
    if (!g.is_object() || !g.contains("claim") || !g.at("claim").is_string() ||
        !g.contains("evidence_strength") || !g.at("evidence_strength").is_string()) {
      fail(ErrorCode::parse_error, "each generalization needs string 'claim' and 'evidence_strength'");
    }
    m.generalizations.push_back(
        {g.at("claim").get<std::string>(), g.at("evidence_strength").get<std::string>()});
  }
  for (const auto& ex : doc.at("supporting_examples")) m.supporting_examples.push_back(ex.dump());
  m.updated_at = now;
  m.raw_json = std::string(raw);
  return m;
}

UserModel cold_start_model(std::int64_t now) {
  UserModel m;
  m.lifecycle = Lifecycle::cold_start;
  m.updated_at = now;
  m.raw_json = R"({"lifecycle":"cold_start","generalizations":[],"supporting_examples":[]})";
  return m;
}

std::string build_user_model_message(const std::optional<UserModel>& prior,
                                     std::span<const TraceEvent> fresh) {
  std::string out = "Current user model:\n";
  out += prior ? prior->raw_json : std::string("none");
  out += "\n\nNew structural interaction events (JSON lines):";
  for (const auto& e : fresh) {
    out += '\n';
    out += json(e).dump();
  }
  return out;
}

UserModelUpdate update_user_model(UserModelState& state, const TraceLog& traces,
                                  LlmBackend& backend, std::int64_t now) {
  UserModelUpdate result;
  if (traces.size() == 0) {
    if (!state.model) {
      state.model = cold_start_model(now);
      result.changed = true;
    }
    return result;
  }
  if (traces.size() <= state.consumed_traces) return result;

  std::span<const TraceEvent> fresh(traces.events().data() + state.consumed_traces,
                                    traces.size() - state.consumed_traces);
  auto request = make_request(AgentRole::user_model, build_user_model_prompt(),
                              {ChatMessage{Role::user, build_user_model_message(state.model, fresh)}});
  result.called_backend = true;
  try {
    auto response = backend.generate(request);
    auto model = parse_user_model(response.text, now);
    state.model = std::move(model);
    state.consumed_traces = traces.size();
    result.changed = true;
  } catch (const Error& e) {
    spdlog::warn("user model update failed, keeping prior model: {}", e.what());
    result.error = e.what();
  }
  return result;
}

}  // namespace ctxd
