#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ctxd/error.hpp"
#include "ctxd/runtime.hpp"
#include "ctxd/store.hpp"
#include "json.hpp"

namespace ctxd {

struct ApiRequest {
  std::string method;  // GET, POST, PATCH
  std::string path;    // without query string
  std::string body;
  std::map<std::string, std::string> query;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  [[nodiscard]] nlohmann::json json() const;
};

int http_status(ErrorCode code);

/// Transport-independent request handling over a directory of projects.
/// Writes to one project are serialized; different projects proceed in
/// parallel. Each mutation runs on a copy that replaces the live project
/// only after it was saved, so a failed request leaves no trace.
class Service {
 public:
  Service(ProjectStore store, LlmBackend& backend, RuntimeConfig config = {});

  ApiResponse handle(const ApiRequest& request);

  [[nodiscard]] std::vector<std::string> project_ids() const;
  /// Copy of the live project; throws not_found.
  [[nodiscard]] Project project(const std::string& id) const;
  [[nodiscard]] const ProjectStore& store() const { return store_; }
  [[nodiscard]] AgentRuntime& runtime() { return runtime_; }

 private:
  struct Slot {
    mutable std::mutex mu;
    Project project;
  };

  ApiResponse route(const ApiRequest& request);
  std::shared_ptr<Slot> slot(const std::string& project_id) const;
  /// Project that owns a node, suggestion or capsule id ("<project>.<local>").
  std::shared_ptr<Slot> owner(const std::string& object_id) const;

  template <class Fn>
  nlohmann::json mutate(const std::shared_ptr<Slot>& s, Fn&& fn);
  template <class Fn>
  nlohmann::json read(const std::shared_ptr<Slot>& s, Fn&& fn) const;

  ProjectStore store_;
  AgentRuntime runtime_;
  mutable std::mutex registry_mu_;
  std::map<std::string, std::shared_ptr<Slot>> projects_;
};

/// JSON view of the topology for clients: nodes, paths, bounds, scope and
/// the effective context ids in prompt order.
nlohmann::json topology_view(const Project& p);

}  // namespace ctxd
