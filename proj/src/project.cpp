#include "ctxd/project.hpp"

#include "ctxd/error.hpp"
#include "ctxd/json_io.hpp"

namespace ctxd {

using nlohmann::json;

namespace {
constexpr int kSchemaVersion = 1;
}

Project::Project(std::string project_id, std::string project_title)
    : id(std::move(project_id)), title(std::move(project_title)), graph(id + ".") {
  created_at = graph.tick();
}

std::string Project::next_suggestion_id() {
  return prefix() + "s" + std::to_string(suggestions.next_ordinal++);
}

std::string Project::next_capsule_id() { return prefix() + "c" + std::to_string(next_capsule++); }

std::string Project::next_trace_id() const {
  return prefix() + "t" + std::to_string(traces.size() + 1);
}

json project_to_json(const Project& p) {
  return json{{"schema", kSchemaVersion},
              {"id", p.id},
              {"title", p.title},
              {"created_at", p.created_at},
              {"version", p.version},
              {"next_capsule", p.next_capsule},
              {"mainline_summary", p.mainline_summary ? json(*p.mainline_summary) : json(nullptr)},
              {"graph", p.graph},
              {"scope", p.scope},
              {"patterns", p.patterns},
              {"suggestions", p.suggestions},
              {"traces", p.traces},
              {"user_model", p.user_model}};
}

Project project_from_json(const json& j) {
  try {
    if (j.at("schema").get<int>() != kSchemaVersion) {
      fail(ErrorCode::parse_error, "unsupported project schema");
    }
    Project p;
    p.id = j.at("id").get<std::string>();
    p.title = j.at("title").get<std::string>();
    p.created_at = j.at("created_at").get<std::int64_t>();
    p.version = j.at("version").get<std::uint64_t>();
    p.next_capsule = j.at("next_capsule").get<std::uint64_t>();
    if (!j.at("mainline_summary").is_null()) {
      p.mainline_summary = j.at("mainline_summary").get<std::string>();
    }
    from_json(j.at("graph"), p.graph);
    from_json(j.at("scope"), p.scope);
    from_json(j.at("patterns"), p.patterns);
    from_json(j.at("suggestions"), p.suggestions);
    from_json(j.at("traces"), p.traces);
    from_json(j.at("user_model"), p.user_model);
    if (!p.scope.base_path.is_mainline() && !p.graph.topology().has_path(p.scope.base_path)) {
      fail(ErrorCode::parse_error, "scope refers to unknown path '" + p.scope.base_path.str() + "'");
    }
    return p;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::parse_error) throw;
    fail(ErrorCode::parse_error, std::string("invalid project document: ") + e.what());
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("invalid project document: ") + e.what());
  }
}

std::string project_to_text(const Project& p) { return project_to_json(p).dump(1); }

Project project_from_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("project document is not JSON: ") + e.what());
  }
  return project_from_json(j);
}

}  // namespace ctxd
