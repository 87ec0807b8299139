#include "ctxd/patterns.hpp"

#include <algorithm>
#include <array>

#include "ctxd/error.hpp"
#include "strict_json.hpp"
#include "ctxd/prompts.hpp"
#include "json.hpp"

namespace ctxd {

using nlohmann::json;

ExtractedPattern parse_extraction(std::string_view raw) {
  const json doc = detail::parse_strict_object(raw, "extraction response");
  static constexpr std::array<std::string_view, 4> kKeys = {"name", "requires_human_review",
                                                            "instruction", "example"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      fail(ErrorCode::parse_error, "unexpected key '" + key + "' in extraction response");
    }
  }
  for (auto key : kKeys) {
    if (!doc.contains(std::string(key))) {
      fail(ErrorCode::parse_error, "extraction response is missing '" + std::string(key) + "'");
    }
  }
  auto text = [&](const char* key) {
    const auto& v = doc.at(key);
    if (!v.is_string()) fail(ErrorCode::parse_error, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  };
  ExtractedPattern p;
  p.name = text("name");
  p.instruction = text("instruction");
  p.example = text("example");
  const auto& review = doc.at("requires_human_review");
  if (!review.is_boolean()) fail(ErrorCode::parse_error, "'requires_human_review' must be a boolean");
  p.requires_human_review = review.get<bool>();
  return p;
}

const PatternCapsule* PatternStore::find(std::string_view id) const {
  auto it = std::find_if(capsules_.begin(), capsules_.end(),
                         [&](const PatternCapsule& c) { return c.id == id; });
  return it == capsules_.end() ? nullptr : &*it;
}

const PatternCapsule& PatternStore::get(std::string_view id) const {
  const auto* c = find(id);
  if (c == nullptr) fail(ErrorCode::not_found, "unknown pattern '" + std::string(id) + "'");
  return *c;
}

PatternCapsule& PatternStore::mutable_get(std::string_view id) {
  return const_cast<PatternCapsule&>(get(id));
}

const PatternCapsule& PatternStore::add(std::string id, PatternType type, ExtractedPattern content,
                                        std::vector<std::string> source_nodes, std::int64_t now) {
  if (find(id) != nullptr) fail(ErrorCode::conflict, "duplicate pattern id '" + id + "'");
  PatternCapsule c;
  c.id = std::move(id);
  c.type = type;
  c.name = std::move(content.name);
  c.instruction = std::move(content.instruction);
  c.example = std::move(content.example);
  c.requires_human_review = content.requires_human_review;
  c.state = c.requires_human_review ? CapsuleState::needs_review : CapsuleState::active;
  c.source_nodes = std::move(source_nodes);
  c.created_at = now;
  if (c.state == CapsuleState::active) c.activated_at = now;
  capsules_.push_back(std::move(c));
  return capsules_.back();
}

const PatternCapsule& PatternStore::review(std::string_view id, const PatternEdits& edits,
                                           bool approve, std::int64_t now) {
  auto& c = mutable_get(id);
  if (c.state != CapsuleState::needs_review) {
    fail(ErrorCode::conflict, "pattern '" + c.id + "' is not awaiting review");
  }
  if (edits.name) c.name = *edits.name;
  if (edits.instruction) c.instruction = *edits.instruction;
  if (edits.example) c.example = *edits.example;
  if (approve) {
    c.state = CapsuleState::active;
    c.activated_at = now;
  }
  return c;
}

const PatternCapsule& PatternStore::set_enabled(std::string_view id, bool enabled, std::int64_t now) {
  auto& c = mutable_get(id);
  if (c.state == CapsuleState::needs_review) {
    fail(ErrorCode::conflict, "pattern '" + c.id + "' must be reviewed before it can be enabled");
  }
  if (enabled && c.state != CapsuleState::active) {
    c.state = CapsuleState::active;
    c.activated_at = now;
  } else if (!enabled) {
    c.state = CapsuleState::disabled;
  }
  return c;
}

std::vector<PatternCapsule> PatternStore::active_in_activation_order() const {
  std::vector<PatternCapsule> out;
  for (const auto& c : capsules_) {
    if (c.state == CapsuleState::active) out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const PatternCapsule& a, const PatternCapsule& b) {
    return a.activated_at < b.activated_at;
  });
  return out;
}

std::string PatternStore::export_json() const {
  json arr = json::array();
  for (const auto& c : capsules_) {
    arr.push_back({{"type", std::string(to_string(c.type))},
                   {"state", std::string(to_string(c.state))},
                   {"name", c.name},
                   {"requires_human_review", c.requires_human_review},
                   {"instruction", c.instruction},
                   {"example", c.example}});
  }
  return arr.dump(2);
}

std::vector<std::string> PatternStore::import_json(std::string_view json_text,
                                                   const std::function<std::string()>& next_id,
                                                   std::int64_t now) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception&) {
    fail(ErrorCode::parse_error, "capsule import is not valid JSON");
  }
  if (!doc.is_array()) fail(ErrorCode::parse_error, "capsule import must be a JSON array");

  std::vector<PatternCapsule> staged;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("type") || !item.contains("state") ||
        !item.at("type").is_string() || !item.at("state").is_string()) {
      fail(ErrorCode::parse_error, "capsule import entries need string 'type' and 'state'");
    }
    json content = item;
    content.erase("type");
    content.erase("state");
    auto parsed = parse_extraction(content.dump());
    PatternCapsule c;
    c.type = pattern_type_from_string(item.at("type").get<std::string>());
    c.state = capsule_state_from_string(item.at("state").get<std::string>());
    c.name = std::move(parsed.name);
    c.instruction = std::move(parsed.instruction);
    c.example = std::move(parsed.example);
    c.requires_human_review = parsed.requires_human_review;
    if (c.requires_human_review) c.state = CapsuleState::needs_review;
    staged.push_back(std::move(c));
  }
  std::vector<std::string> ids;
  for (auto& c : staged) {
    c.id = next_id();
    c.created_at = now;
    if (c.state == CapsuleState::active) c.activated_at = now;
    ids.push_back(c.id);
    capsules_.push_back(std::move(c));
  }
  return ids;
}

const PatternCapsule& extract_pattern(PatternStore& store, LlmBackend& backend,
                                      const ConversationTopology& topology, PatternType type,
                                      std::span<const std::string> node_ids,
                                      std::string capsule_id, std::int64_t now) {
  std::vector<ContextNode> nodes;
  std::vector<std::string> sources;
  for (const auto& id : node_ids) {
    const auto& n = topology.node(id);
    if (n.placeholder) continue;
    nodes.push_back(n);
  }
  std::sort(nodes.begin(), nodes.end(), [](const ContextNode& a, const ContextNode& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.seq < b.seq;
  });
  for (const auto& n : nodes) sources.push_back(n.id);

  auto request = make_request(AgentRole::extraction, build_extraction_system(type),
                              {ChatMessage{Role::user, render_transcript(nodes)}});
  auto response = backend.generate(request);
  auto content = parse_extraction(response.text);
  return store.add(std::move(capsule_id), type, std::move(content), std::move(sources), now);
}

}  // namespace ctxd
