#include "ctxd/replay.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ctxd/error.hpp"
#include "ctxd/service.hpp"

namespace ctxd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Captures = std::map<std::string, json>;

std::string capture_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::string substitute(const std::string& s, const Captures& caps) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s.compare(i, 2, "${") == 0) {
      auto close = s.find('}', i + 2);
      if (close != std::string::npos) {
        auto name = s.substr(i + 2, close - i - 2);
        auto it = caps.find(name);
        if (it == caps.end()) fail(ErrorCode::invalid_argument, "nothing captured as '" + name + "'");
        out += capture_text(it->second);
        i = close + 1;
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

json substitute(const json& j, const Captures& caps) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    // A lone placeholder keeps the captured value's JSON type.
    if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}' && s.find('}') == s.size() - 1) {
      auto it = caps.find(s.substr(2, s.size() - 3));
      if (it != caps.end()) return it->second;
    }
    return substitute(s, caps);
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(substitute(v, caps));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = substitute(v, caps);
    return out;
  }
  return j;
}

json snapshot_of(const Service& service) {
  json projects = json::array();
  for (const auto& id : service.project_ids()) projects.push_back(project_snapshot(service.project(id)));
  return projects;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) fail(ErrorCode::invalid_argument, what + " must be an object");
  for (const auto& [key, v] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(ErrorCode::invalid_argument, what + " has unknown key '" + key + "'");
  }
}

std::unique_ptr<MockBackend> load_mock(const json& script, const fs::path& dir) {
  auto it = script.find("mock");
  if (it == script.end() || it->is_null()) return std::make_unique<MockBackend>();
  if (it->is_string()) {
    fs::path p = it->get<std::string>();
    if (p.is_relative()) p = dir / p;
    return std::make_unique<MockBackend>(MockBackend::read_rules(p));
  }
  return std::make_unique<MockBackend>(MockBackend::parse_rules(it->dump()));
}

}  // namespace

bool json_subset(const json& expected, const json& actual, std::string& where, const std::string& at) {
  if (expected.is_object()) {
    if (!actual.is_object()) {
      where = at.empty() ? "/" : at;
      return false;
    }
    for (const auto& [k, v] : expected.items()) {
      auto it = actual.find(k);
      const auto here = at + "/" + k;
      if (it == actual.end()) {
        where = here;
        return false;
      }
      if (!json_subset(v, *it, where, here)) return false;
    }
    return true;
  }
  if (expected.is_array()) {
    if (!actual.is_array() || actual.size() != expected.size()) {
      where = at.empty() ? "/" : at;
      return false;
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (!json_subset(expected[i], actual[i], where, at + "/" + std::to_string(i))) return false;
    }
    return true;
  }
  if (expected != actual) {
    where = at.empty() ? "/" : at;
    return false;
  }
  return true;
}

json project_snapshot(const Project& p) {
  auto j = project_to_json(p);
  auto& g = j["graph"];
  const auto& journal = p.graph.journal();
  g["journal"] = json{{"entries", journal.entries.size()}, {"cursor", journal.cursor}};
  return j;
}

ReplayOutcome replay_script(const json& script, const fs::path& script_dir, const fs::path& store_dir,
                            RuntimeConfig config) {
  ReplayOutcome out;
  check_keys(script, {"mock", "steps", "description"}, "script");
  auto backend = load_mock(script, script_dir);
  Service service(ProjectStore(store_dir), *backend, config);

  const json steps = script.value("steps", json::array());
  if (!steps.is_array()) fail(ErrorCode::invalid_argument, "'steps' must be an array");
  Captures caps;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    const std::string label = "step " + std::to_string(i + 1) +
                              (step.is_object() && step.contains("name") ? " (" + step["name"].dump() + ")" : "");
    try {
      check_keys(step, {"name", "method", "path", "body", "expect", "capture"}, label);
      ApiRequest req;
      req.method = step.at("method").get<std::string>();
      req.path = substitute(step.at("path").get<std::string>(), caps);
      if (step.contains("body")) {
        const auto body = substitute(step["body"], caps);
        req.body = body.is_string() ? body.get<std::string>() : body.dump();
      }
      auto res = service.handle(req);
      ++out.steps_run;

      json actual;
      if (res.content_type == "application/json") actual = json::parse(res.body);
      const json expect = step.value("expect", json::object());
      check_keys(expect, {"status", "json"}, label + " expect");
      if (expect.contains("status")) {
        if (res.status != expect["status"].get<int>()) {
          throw Error(ErrorCode::conflict, label + ": status " + std::to_string(res.status) + ", expected " +
                                               expect["status"].dump() + ": " + res.body);
        }
      } else if (res.status / 100 != 2) {
        throw Error(ErrorCode::conflict, label + ": status " + std::to_string(res.status) + ": " + res.body);
      }
      if (expect.contains("json")) {
        std::string where;
        if (!json_subset(substitute(expect["json"], caps), actual, where)) {
          throw Error(ErrorCode::conflict, label + ": response differs at " + where + ": " + res.body);
        }
      }
      if (step.contains("capture")) {
        for (const auto& [name, ptr] : step["capture"].items()) {
          const auto pointer = json::json_pointer(ptr.get<std::string>());
          if (!actual.contains(pointer)) {
            throw Error(ErrorCode::conflict, label + ": nothing at " + ptr.get<std::string>() + " to capture");
          }
          caps[name] = actual.at(pointer);
        }
      }
    } catch (const std::exception& e) {
      out.complete = false;
      out.failed_step = i + 1;
      out.error = e.what();
      spdlog::error("replay stopped: {}", e.what());
      break;
    }
  }

  out.snapshot = json{{"complete", out.complete},
                      {"failed_step", out.failed_step ? json(*out.failed_step) : json(nullptr)},
                      {"error", out.complete ? json(nullptr) : json(out.error)},
                      {"steps_run", out.steps_run},
                      {"projects", snapshot_of(service)}};
  return out;
}

ReplayOutcome replay_file(const fs::path& script, const fs::path& store_dir, RuntimeConfig config) {
  std::ifstream in(script, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot read script '" + script.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, "script is not JSON: " + std::string(e.what()));
  }
  return replay_script(j, script.parent_path(), store_dir, config);
}

}  // namespace ctxd
