#include "ctxd/decision.hpp"

#include <algorithm>

#include <array>

#include "ctxd/error.hpp"
#include "strict_json.hpp"
#include "json.hpp"

namespace ctxd {

using nlohmann::json;

std::string_view to_string(PrimaryAction action) {
  switch (action) {
    case PrimaryAction::continue_: return "continue";
    case PrimaryAction::branch: return "branch";
    case PrimaryAction::return_parent: return "return_parent";
  }
  return "continue";
}

std::string_view to_string(AssetAction action) {
  switch (action) {
    case AssetAction::none: return "none";
    case AssetAction::extract_reasoning: return "extract_reasoning";
    case AssetAction::extract_task_sop: return "extract_task_sop";
  }
  return "none";
}

PrimaryAction primary_action_from_string(std::string_view text) {
  for (auto a : {PrimaryAction::continue_, PrimaryAction::branch, PrimaryAction::return_parent}) {
    if (to_string(a) == text) return a;
  }
  fail(ErrorCode::parse_error, "unknown primary_action '" + std::string(text) + "'");
}

AssetAction asset_action_from_string(std::string_view text) {
  for (auto a : {AssetAction::none, AssetAction::extract_reasoning, AssetAction::extract_task_sop}) {
    if (to_string(a) == text) return a;
  }
  fail(ErrorCode::parse_error, "unknown asset_action '" + std::string(text) + "'");
}

namespace {

constexpr std::array<std::string_view, 6> kDecisionKeys = {
    "primary_action", "asset_action", "confidence", "reason", "asset_reason", "show_suggestion"};

const json& require(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) fail(ErrorCode::parse_error, "missing key '" + std::string(key) + "'");
  return *it;
}

std::string require_string(const json& obj, std::string_view key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) fail(ErrorCode::parse_error, "'" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

StructureDecision parse_structure_decision(std::string_view raw) {
  const json doc = detail::parse_strict_object(raw, "structure decision");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kDecisionKeys.begin(), kDecisionKeys.end(), key) == kDecisionKeys.end()) {
      fail(ErrorCode::parse_error, "unexpected key '" + key + "'");
    }
  }

  StructureDecision d;
  d.primary_action = primary_action_from_string(require_string(doc, "primary_action"));
  d.asset_action = asset_action_from_string(require_string(doc, "asset_action"));

  const auto& conf = require(doc, "confidence");
  if (!conf.is_number()) fail(ErrorCode::parse_error, "'confidence' must be a number");
  d.confidence = conf.get<double>();
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    fail(ErrorCode::parse_error, "'confidence' must be in [0,1]");
  }

  d.reason = require_string(doc, "reason");
  d.asset_reason = require_string(doc, "asset_reason");
  if (d.asset_action == AssetAction::none && !d.asset_reason.empty()) {
    fail(ErrorCode::parse_error, "'asset_reason' must be empty when asset_action is none");
  }
  if (d.asset_action != AssetAction::none && d.asset_reason.empty()) {
    fail(ErrorCode::parse_error, "'asset_reason' must explain a non-none asset_action");
  }

  const auto& show = require(doc, "show_suggestion");
  if (!show.is_boolean()) fail(ErrorCode::parse_error, "'show_suggestion' must be a boolean");
  d.show_suggestion = show.get<bool>();
  return d;
}

std::string serialize_structure_decision(const StructureDecision& d) {
  json j;
  j["primary_action"] = std::string(to_string(d.primary_action));
  j["asset_action"] = std::string(to_string(d.asset_action));
  j["confidence"] = d.confidence;
  j["reason"] = d.reason;
  j["asset_reason"] = d.asset_reason;
  j["show_suggestion"] = d.show_suggestion;
  return j.dump();
}

std::string_view to_string(SuggestionState state) {
  switch (state) {
    case SuggestionState::pending: return "pending";
    case SuggestionState::accepted: return "accepted";
    case SuggestionState::rejected: return "rejected";
    case SuggestionState::ignored: return "ignored";
  }
  return "pending";
}

SuggestionState suggestion_state_from_string(std::string_view text) {
  for (auto s : {SuggestionState::pending, SuggestionState::accepted, SuggestionState::rejected,
                 SuggestionState::ignored}) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::invalid_argument, "unknown suggestion state '" + std::string(text) + "'");
}

const Suggestion* SuggestionBook::pending() const {
  for (const auto& s : items_) {
    if (s.state == SuggestionState::pending) return &s;
  }
  return nullptr;
}

const Suggestion* SuggestionBook::find(std::string_view id) const {
  for (const auto& s : items_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const Suggestion& SuggestionBook::open(std::string id, StructureDecision decision,
                                       std::string anchor_node, PathRef path, std::int64_t now) {
  if (pending() != nullptr) fail(ErrorCode::conflict, "another suggestion is still pending");
  items_.push_back(Suggestion{std::move(id), std::move(decision), std::move(anchor_node),
                              std::move(path), SuggestionState::pending, now, std::nullopt});
  return items_.back();
}

const Suggestion& SuggestionBook::resolve(std::string_view id, SuggestionState to,
                                          std::optional<std::string> resolution) {
  if (to == SuggestionState::pending) {
    fail(ErrorCode::invalid_argument, "cannot move a suggestion back to pending");
  }
  for (auto& s : items_) {
    if (s.id != id) continue;
    if (s.state != SuggestionState::pending) {
      fail(ErrorCode::conflict, "suggestion '" + s.id + "' is already " + std::string(to_string(s.state)));
    }
    s.state = to;
    s.resolution = std::move(resolution);
    return s;
  }
  fail(ErrorCode::not_found, "unknown suggestion '" + std::string(id) + "'");
}

}  // namespace ctxd
