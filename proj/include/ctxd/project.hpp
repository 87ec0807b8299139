#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ctxd/assembly.hpp"
#include "ctxd/decision.hpp"
#include "ctxd/graph.hpp"
#include "ctxd/patterns.hpp"
#include "ctxd/trace.hpp"
#include "json.hpp"

namespace ctxd {

/// Everything one conversation project owns. Ids of nodes, branches,
/// suggestions, capsules and traces all start with "<id>.".
struct Project {
  std::string id;
  std::string title;
  ContextGraph graph;
  ContextScopeState scope;
  PatternStore patterns;
  SuggestionBook suggestions;
  TraceLog traces;
  UserModelState user_model;
  std::optional<std::string> mainline_summary;
  std::int64_t created_at = 0;
  std::uint64_t version = 0;  // bumped on every mutation
  std::uint64_t next_capsule = 1;

  Project() = default;
  Project(std::string project_id, std::string project_title);

  [[nodiscard]] std::string prefix() const { return id + "."; }
  std::string next_suggestion_id();
  std::string next_capsule_id();
  [[nodiscard]] std::string next_trace_id() const;

  bool operator==(const Project&) const = default;
};

nlohmann::json project_to_json(const Project& p);
/// Throws Error(parse_error) on any schema violation; never returns a
/// partially filled project.
Project project_from_json(const nlohmann::json& j);

std::string project_to_text(const Project& p);
Project project_from_text(std::string_view text);

}  // namespace ctxd
