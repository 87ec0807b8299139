#include "ctxd/service.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "ctxd/error.hpp"
#include "ctxd/json_io.hpp"

namespace ctxd {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    auto j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    if (j > i) out.push_back(path.substr(i, j - i));
    i = j;
  }
  return out;
}

json parse_body(const std::string& body, std::initializer_list<const char*> allowed) {
  if (body.empty()) return json::object();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("request body is not JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::invalid_argument, "request body must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }) ==
        allowed.end()) {
      fail(ErrorCode::invalid_argument, "unexpected field '" + key + "'");
    }
  }
  return j;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(ErrorCode::invalid_argument, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::string req_string(const json& j, const char* key) {
  auto v = opt_string(j, key);
  if (!v) fail(ErrorCode::invalid_argument, std::string("missing '") + key + "'");
  return *v;
}

std::optional<bool> opt_bool(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) fail(ErrorCode::invalid_argument, std::string("'") + key + "' must be a boolean");
  return it->get<bool>();
}

bool req_bool(const json& j, const char* key) {
  auto v = opt_bool(j, key);
  if (!v) fail(ErrorCode::invalid_argument, std::string("missing '") + key + "'");
  return *v;
}

std::vector<std::string> req_ids(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    fail(ErrorCode::invalid_argument, std::string("'") + key + "' must be an array of ids");
  }
  std::vector<std::string> ids;
  for (const auto& v : *it) {
    if (!v.is_string()) fail(ErrorCode::invalid_argument, std::string("'") + key + "' must hold strings");
    ids.push_back(v.get<std::string>());
  }
  return ids;
}

json summary(const Project& p) {
  return json{{"id", p.id}, {"title", p.title}, {"created_at", p.created_at}, {"version", p.version}};
}

json error_body(std::string_view code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}}}};
}

ApiResponse ok(json body) { return ApiResponse{200, body.dump(), "application/json"}; }

}  // namespace

json ApiResponse::json() const { return nlohmann::json::parse(body); }

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::parse_error: return 422;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::backend_error: return 502;
    case ErrorCode::io_error:
    case ErrorCode::internal: return 500;
  }
  return 500;
}

json topology_view(const Project& p) {
  const auto& t = p.graph.topology();
  auto visible = resolve_visible_path(t, p.scope.base_path, p.scope.truncate_at);
  auto eff = apply_scope_overrides(t, visible, p.scope);
  std::sort(eff.nodes.begin(), eff.nodes.end(), [](const ContextNode& a, const ContextNode& b) {
    return std::tie(a.created_at, a.seq) < std::tie(b.created_at, b.seq);
  });
  json effective = json::array();
  for (const auto& n : eff.nodes) effective.push_back(n.id);
  const auto* pending = p.suggestions.pending();
  return json{{"id", p.id},
              {"version", p.version},
              {"topology", t},
              {"scope", p.scope},
              {"mainline_summary", p.mainline_summary ? json(*p.mainline_summary) : json(nullptr)},
              {"visible", visible},
              {"effective", std::move(effective)},
              {"ignored_includes", eff.ignored_includes},
              {"can_undo", p.graph.can_undo()},
              {"can_redo", p.graph.can_redo()},
              {"pending_suggestion", pending ? json(*pending) : json(nullptr)}};
}

Service::Service(ProjectStore store, LlmBackend& backend, RuntimeConfig config)
    : store_(std::move(store)), runtime_(backend, config) {
  for (const auto& id : store_.list_ids()) {
    try {
      auto s = std::make_shared<Slot>();
      s->project = store_.load(id);
      projects_.emplace(id, std::move(s));
    } catch (const Error& e) {
      spdlog::error("skipping project '{}': {}", id, e.what());
    }
  }
}

std::vector<std::string> Service::project_ids() const {
  std::lock_guard lock(registry_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : projects_) ids.push_back(id);
  return ids;
}

Project Service::project(const std::string& id) const {
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  return s->project;
}

std::shared_ptr<Service::Slot> Service::slot(const std::string& project_id) const {
  std::lock_guard lock(registry_mu_);
  auto it = projects_.find(project_id);
  if (it == projects_.end()) fail(ErrorCode::not_found, "unknown project '" + project_id + "'");
  return it->second;
}

std::shared_ptr<Service::Slot> Service::owner(const std::string& object_id) const {
  auto dot = object_id.find('.');
  if (dot == std::string::npos || dot == 0) fail(ErrorCode::not_found, "unknown id '" + object_id + "'");
  std::lock_guard lock(registry_mu_);
  auto it = projects_.find(object_id.substr(0, dot));
  if (it == projects_.end()) fail(ErrorCode::not_found, "unknown id '" + object_id + "'");
  return it->second;
}

template <class Fn>
json Service::mutate(const std::shared_ptr<Slot>& s, Fn&& fn) {
  std::lock_guard lock(s->mu);
  Project work = s->project;
  json out = fn(work);
  store_.save(work);
  s->project = std::move(work);
  if (out.is_object()) out["version"] = s->project.version;
  return out;
}

template <class Fn>
json Service::read(const std::shared_ptr<Slot>& s, Fn&& fn) const {
  std::lock_guard lock(s->mu);
  return fn(static_cast<const Project&>(s->project));
}

ApiResponse Service::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return ApiResponse{http_status(e.code()), error_body(to_string(e.code()), e.what()).dump()};
  } catch (const json::exception& e) {
    return ApiResponse{400, error_body("invalid_argument", e.what()).dump()};
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", request.method, request.path, e.what());
    return ApiResponse{500, error_body("internal", e.what()).dump()};
  }
}

ApiResponse Service::route(const ApiRequest& req) {
  const auto seg = split_path(req.path);
  const auto& m = req.method;
  const auto n = seg.size();
  auto no_method = [&]() -> ApiResponse {
    return ApiResponse{405, error_body("invalid_argument", "method " + m + " not allowed on " + req.path).dump()};
  };
  auto at = [&](std::size_t i, const char* word) { return n > i && seg[i] == word; };

  if (at(0, "projects") && n == 1) {
    if (m == "GET") {
      json list = json::array();
      for (const auto& id : project_ids()) {
        auto s = slot(id);
        list.push_back(read(s, [](const Project& p) { return summary(p); }));
      }
      return ok(json{{"projects", std::move(list)}});
    }
    if (m == "POST") {
      auto body = parse_body(req.body, {"title"});
      auto title = opt_string(body, "title").value_or("Untitled");
      std::lock_guard lock(registry_mu_);
      std::uint64_t top = 0;
      for (const auto& [id, s] : projects_) {
        if (id.size() > 1 && id[0] == 'P' && std::all_of(id.begin() + 1, id.end(), ::isdigit)) {
          top = std::max<std::uint64_t>(top, std::stoull(id.substr(1)));
        }
      }
      auto disk = store_.next_id();
      top = std::max<std::uint64_t>(top, std::stoull(disk.substr(1)) - 1);
      auto s = std::make_shared<Slot>();
      s->project = Project("P" + std::to_string(top + 1), title);
      store_.save(s->project);
      auto out = summary(s->project);
      projects_.emplace(s->project.id, std::move(s));
      return ok(out);
    }
    return no_method();
  }

  if (at(0, "projects") && n >= 2) {
    auto s = slot(seg[1]);
    if (n == 2) {
      if (m != "GET") return no_method();
      return ok(read(s, [](const Project& p) { return project_to_json(p); }));
    }
    const auto& what = seg[2];
    if (what == "topology" && n == 3) {
      if (m != "GET") return no_method();
      return ok(read(s, [](const Project& p) { return topology_view(p); }));
    }
    if (what == "messages" && n == 3) {
      if (m != "POST") return no_method();
      auto body = parse_body(req.body, {"text", "from_node"});
      auto text = req_string(body, "text");
      auto from = opt_string(body, "from_node");
      return ok(mutate(s, [&](Project& p) {
        auto r = runtime_.run_turn(p, text, from);
        return json{{"user_node", r.user_node},
                    {"assistant_node", r.assistant_node},
                    {"assistant_text", p.graph.topology().node(r.assistant_node).content},
                    {"suggestion", r.suggestion ? json(*r.suggestion) : json(nullptr)},
                    {"superseded", r.superseded ? json(*r.superseded) : json(nullptr)},
                    {"structure_error", r.structure_error ? json(*r.structure_error) : json(nullptr)},
                    {"assembled", r.assembled}};
      }));
    }
    if (what == "nodes" && at(3, "delete") && n == 4) {
      if (m != "POST") return no_method();
      auto body = parse_body(req.body, {"ids", "preview"});
      auto ids = req_ids(body, "ids");
      if (opt_bool(body, "preview").value_or(false)) {
        return ok(read(s, [&](const Project& p) {
          json out{{"preview", true}, {"report", p.graph.preview_delete(ids)}};
          out["version"] = p.version;
          return out;
        }));
      }
      return ok(mutate(s, [&](Project& p) {
        return json{{"preview", false}, {"report", runtime_.delete_nodes(p, ids)}};
      }));
    }
    if (what == "scope" && n == 3) {
      if (m != "POST") return no_method();
      auto body = parse_body(req.body, {"op", "ids"});
      auto op = scope_op_from_string(req_string(body, "op"));
      auto ids = req_ids(body, "ids");
      return ok(mutate(s, [&](Project& p) {
        auto out = runtime_.apply_scope(p, op, ids);
        return json{{"activated", out.activated}, {"deactivated", out.deactivated}, {"scope", p.scope}};
      }));
    }
    if (what == "path" && n == 3) {
      if (m != "POST") return no_method();
      auto body = parse_body(req.body, {"target"});
      auto target = PathRef::parse(req_string(body, "target"));
      return ok(mutate(s, [&](Project& p) {
        auto r = runtime_.transition_path(p, target);
        return json{{"from", r.from},
                    {"base_path", r.to},
                    {"mainline_summary", r.mainline_summary ? json(*r.mainline_summary) : json(nullptr)},
                    {"completed_branches", r.summarized_branches},
                    {"memory_errors", r.errors}};
      }));
    }
    if (what == "mainline" && n == 3) {
      if (m != "POST") return no_method();
      auto body = parse_body(req.body, {"start", "end"});
      auto start = opt_string(body, "start");
      auto end = opt_string(body, "end");
      return ok(mutate(s, [&](Project& p) {
        runtime_.set_mainline(p, start, end);
        const auto& t = p.graph.topology();
        return json{{"mainline", t.mainline()},
                    {"mainline_start", t.mainline_start()},
                    {"mainline_end", t.mainline_end()},
                    {"base_path", p.scope.base_path}};
      }));
    }
    if (what == "history" && n == 3) {
      if (m != "POST") return no_method();
      auto body = parse_body(req.body, {"op"});
      auto op = history_op_from_string(req_string(body, "op"));
      return ok(mutate(s, [&](Project& p) {
        runtime_.history(p, op);
        return json{{"can_undo", p.graph.can_undo()}, {"can_redo", p.graph.can_redo()}};
      }));
    }
    if (what == "suggestions" && n == 3) {
      if (m != "GET") return no_method();
      return ok(read(s, [](const Project& p) { return json{{"suggestions", p.suggestions.all()}}; }));
    }
    if (what == "patterns") {
      if (n == 3) {
        if (m != "GET") return no_method();
        return ok(read(s, [](const Project& p) { return json{{"patterns", p.patterns.all()}}; }));
      }
      if (n == 4 && seg[3] == "extract") {
        if (m != "POST") return no_method();
        auto body = parse_body(req.body, {"type", "ids"});
        auto type = pattern_type_from_string(req_string(body, "type"));
        auto ids = req_ids(body, "ids");
        return ok(mutate(s, [&](Project& p) { return json{{"capsule", runtime_.extract(p, type, ids)}}; }));
      }
      if (n == 4 && seg[3] == "export") {
        if (m != "GET") return no_method();
        return ok(read(s, [](const Project& p) { return json::parse(p.patterns.export_json()); }));
      }
      if (n == 4 && seg[3] == "import") {
        if (m != "POST") return no_method();
        return ok(mutate(s, [&](Project& p) {
          return json{{"imported", runtime_.import_patterns(p, req.body)}};
        }));
      }
    }
    if (what == "user-model" && n == 3) {
      if (m == "GET") {
        const bool injected = runtime_.config().user_model_enabled;
        return ok(read(s, [injected](const Project& p) {
          const auto model = p.user_model.model ? *p.user_model.model : cold_start_model(p.graph.now());
          return json{{"model", model},
                      {"stored", p.user_model.model.has_value()},
                      {"consumed_traces", p.user_model.consumed_traces},
                      {"injected", injected && p.user_model.model.has_value()}};
        }));
      }
      if (m == "POST") {
        parse_body(req.body, {});
        return ok(mutate(s, [&](Project& p) {
          auto up = runtime_.refresh_user_model(p, true);
          return json{{"called_backend", up.called_backend},
                      {"changed", up.changed},
                      {"error", up.error ? json(*up.error) : json(nullptr)},
                      {"model", p.user_model.model ? json(*p.user_model.model) : json(nullptr)}};
        }));
      }
      return no_method();
    }
    if (what == "traces" && n == 3) {
      if (m != "GET") return no_method();
      auto s2 = s;
      std::lock_guard lock(s2->mu);
      return ApiResponse{200, s2->project.traces.export_jsonl(), "application/x-ndjson"};
    }
    return ApiResponse{404, error_body("not_found", "no route for " + req.path).dump()};
  }

  if (at(0, "nodes") && n >= 2) {
    const auto node_id = seg[1];
    auto s = owner(node_id);
    if (n == 2) {
      if (m != "PATCH") return no_method();
      auto body = parse_body(req.body, {"content", "layout_pos"});
      auto content = opt_string(body, "content");
      const bool has_layout = body.contains("layout_pos");
      std::optional<LayoutPos> pos;
      if (has_layout && !body["layout_pos"].is_null()) {
        const auto& lp = body["layout_pos"];
        if (!lp.is_array() || lp.size() != 2 || !lp[0].is_number() || !lp[1].is_number()) {
          fail(ErrorCode::invalid_argument, "'layout_pos' must be [x, y] or null");
        }
        pos = LayoutPos{lp[0].get<double>(), lp[1].get<double>()};
      }
      if (!content && !has_layout) fail(ErrorCode::invalid_argument, "nothing to change");
      return ok(mutate(s, [&](Project& p) {
        if (content) runtime_.edit_node(p, node_id, *content);
        if (has_layout) runtime_.set_layout(p, node_id, pos);
        return json{{"node", p.graph.topology().node(node_id)}};
      }));
    }
    if (n == 3 && (seg[2] == "branch" || seg[2] == "rebranch")) {
      if (m != "POST") return no_method();
      const bool rebranch = seg[2] == "rebranch";
      auto body = rebranch ? parse_body(req.body, {"intent"}) : parse_body(req.body, {"intent", "parent"});
      auto intent = opt_string(body, "intent");
      std::optional<PathRef> parent;
      if (auto ps = opt_string(body, "parent")) parent = PathRef::parse(*ps);
      return ok(mutate(s, [&](Project& p) {
        auto bid = rebranch ? runtime_.rebranch_from(p, node_id, intent)
                            : runtime_.branch_from(p, node_id, intent, parent);
        return json{{"branch_id", bid}, {"branch", p.graph.topology().branch(bid)}, {"base_path", p.scope.base_path}};
      }));
    }
  }

  if (at(0, "suggestions") && n == 3 && seg[2] == "respond") {
    if (m != "POST") return no_method();
    auto s = owner(seg[1]);
    auto body = parse_body(req.body, {"action"});
    auto action = suggestion_response_from_string(req_string(body, "action"));
    return ok(mutate(s, [&](Project& p) {
      auto fx = runtime_.respond_to_suggestion(p, seg[1], action);
      return json{{"suggestion", fx.suggestion},
                  {"stale", fx.stale},
                  {"branch_id", fx.branch_id ? json(*fx.branch_id) : json(nullptr)},
                  {"capsule", fx.capsule_id ? json(p.patterns.get(*fx.capsule_id)) : json(nullptr)},
                  {"base_path", p.scope.base_path}};
    }));
  }

  if (at(0, "patterns") && n == 3) {
    if (m != "POST") return no_method();
    auto s = owner(seg[1]);
    if (seg[2] == "review") {
      auto body = parse_body(req.body, {"edits", "approve"});
      PatternEdits edits;
      if (body.contains("edits") && !body["edits"].is_null()) {
        auto e = body["edits"];
        if (!e.is_object()) fail(ErrorCode::invalid_argument, "'edits' must be an object");
        for (const auto& [key, value] : e.items()) {
          if (key != "name" && key != "instruction" && key != "example") {
            fail(ErrorCode::invalid_argument, "unexpected edit field '" + key + "'");
          }
        }
        edits.name = opt_string(e, "name");
        edits.instruction = opt_string(e, "instruction");
        edits.example = opt_string(e, "example");
      }
      const bool approve = req_bool(body, "approve");
      return ok(mutate(s, [&](Project& p) { return json{{"capsule", runtime_.review(p, seg[1], edits, approve)}}; }));
    }
    if (seg[2] == "enabled") {
      auto body = parse_body(req.body, {"enabled"});
      const bool enabled = req_bool(body, "enabled");
      return ok(mutate(s, [&](Project& p) { return json{{"capsule", runtime_.set_enabled(p, seg[1], enabled)}}; }));
    }
  }

  return ApiResponse{404, error_body("not_found", "no route for " + m + " " + req.path).dump()};
}

}  // namespace ctxd
