#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxd/error.hpp"
#include "json.hpp"

namespace ctxd::detail {

/// Parses one JSON object, rejecting duplicate keys at any depth (the
/// stock parser silently keeps the last one).
inline nlohmann::json parse_strict_object(std::string_view raw, const std::string& what) {
  using nlohmann::json;
  std::vector<std::set<std::string>> open;
  std::string duplicate;
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start: open.emplace_back(); break;
      case json::parse_event_t::object_end:
        if (!open.empty()) open.pop_back();
        break;
      case json::parse_event_t::key:
        if (!open.empty() && !open.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default: break;
    }
    return true;
  };
  json doc;
  try {
    doc = json::parse(raw, cb);
  } catch (const json::exception&) {
    fail(ErrorCode::parse_error, what + " is not valid JSON");
  }
  if (!duplicate.empty()) fail(ErrorCode::parse_error, what + " repeats key '" + duplicate + "'");
  if (!doc.is_object()) fail(ErrorCode::parse_error, what + " must be a JSON object");
  return doc;
}

}  // namespace ctxd::detail
