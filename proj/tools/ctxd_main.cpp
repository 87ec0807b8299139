#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "ctxd/error.hpp"
#include "ctxd/replay.hpp"
#include "ctxd/server.hpp"
#include "ctxd/service.hpp"

namespace fs = std::filesystem;

namespace {

ctxd::HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
  if (g_frontend != nullptr) g_frontend->stop();
}

std::string default_store() {
  const char* env = std::getenv("CTXD_STORE");
  return env != nullptr && *env != '\0' ? env : "ctxd-store";
}

int serve(const std::string& listen, const std::string& store, const std::string& mock) {
  std::unique_ptr<ctxd::LlmBackend> backend;
  if (!mock.empty()) {
    backend = std::make_unique<ctxd::MockBackend>(ctxd::MockBackend::read_rules(mock));
    spdlog::info("mock backend from {}", mock);
  } else {
    backend = std::make_unique<ctxd::ChatCompletionsBackend>(ctxd::ChatCompletionsBackend::config_from_env());
  }
  ctxd::Service service(ctxd::ProjectStore(store), *backend, ctxd::RuntimeConfig::from_env());
  ctxd::HttpFrontend http(service);
  auto [host, port] = ctxd::parse_listen_address(listen);
  int bound = http.bind(host, port);
  g_frontend = &http;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("listening on {}:{} (store {})", host, bound, store);
  http.run();
  g_frontend = nullptr;
  return 0;
}

int replay(const std::string& script, std::string store, const std::string& snapshot_path) {
  std::optional<fs::path> scratch;
  if (store.empty()) {
    scratch = fs::temp_directory_path() / ("ctxd-replay-" + std::to_string(::getpid()));
    fs::remove_all(*scratch);
    store = scratch->string();
  }
  auto out = ctxd::replay_file(script, store, ctxd::RuntimeConfig::from_env());
  const auto text = out.snapshot.dump(2) + "\n";
  if (snapshot_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(snapshot_path, std::ios::binary);
    if (!f) throw ctxd::Error(ctxd::ErrorCode::io_error, "cannot write " + snapshot_path);
    f << text;
  }
  if (scratch) fs::remove_all(*scratch);
  if (!out.complete) {
    std::cerr << "replay failed at step " << *out.failed_step << ": " << out.error << "\n";
    return 1;
  }
  return 0;
}

int export_project(const std::string& store, const std::string& id, bool traces, bool patterns) {
  ctxd::ProjectStore s(store);
  auto p = s.load(id);
  if (traces) {
    std::cout << p.traces.export_jsonl();
  } else if (patterns) {
    std::cout << p.patterns.export_json() << "\n";
  } else {
    std::cout << ctxd::project_to_text(p) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxd: structured conversation context service"};
  app.require_subcommand(1);
  std::string store = default_store();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON API");
  std::string listen = "127.0.0.1:8080";
  std::string mock;
  serve_cmd->add_option("--listen", listen, "host:port to listen on");
  serve_cmd->add_option("--store", store, "Project store directory (CTXD_STORE)");
  serve_cmd->add_option("--mock", mock, "Mock backend script instead of a live model")->check(CLI::ExistingFile);

  auto* replay_cmd = app.add_subcommand("replay", "Run a scripted API session against the mock backend");
  std::string script;
  std::string replay_store;
  std::string snapshot;
  replay_cmd->add_option("script", script, "Replay script")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--store", replay_store, "Store directory (default: a scratch directory)");
  replay_cmd->add_option("--snapshot", snapshot, "Write the final snapshot here instead of stdout");

  auto* export_cmd = app.add_subcommand("export", "Print a stored project, its traces or its patterns");
  std::string project_id;
  bool traces = false;
  bool patterns = false;
  export_cmd->add_option("--project", project_id, "Project id")->required();
  export_cmd->add_option("--store", store, "Project store directory (CTXD_STORE)");
  auto* traces_flag = export_cmd->add_flag("--traces", traces, "Trace events as JSONL");
  export_cmd->add_flag("--patterns", patterns, "Pattern capsules as JSON")->excludes(traces_flag);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("ctxd"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*serve_cmd) return serve(listen, store, mock);
    if (*replay_cmd) return replay(script, replay_store, snapshot);
    if (*export_cmd) return export_project(store, project_id, traces, patterns);
  } catch (const ctxd::Error& e) {
    std::cerr << "error (" << ctxd::to_string(e.code()) << "): " << e.what() << "\n";
    return e.code() == ctxd::ErrorCode::not_found ? 3 : 2;
  }
  return 0;
}
