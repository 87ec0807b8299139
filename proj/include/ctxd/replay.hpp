#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ctxd/project.hpp"
#include "ctxd/runtime.hpp"
#include "json.hpp"

namespace ctxd {

/// Script format:
///
///   {"mock": {"rules": [...]} | "mock.json",
///    "steps": [{"name": "...", "method": "POST", "path": "/projects/${pid}/messages",
///               "body": {...}, "expect": {"status": 200, "json": {...}},
///               "capture": {"pid": "/id"}}]}
///
/// "${name}" in paths and body strings is replaced by a captured value
/// (a JSON pointer into an earlier response). "expect.json" is matched as a
/// subset: objects by key, arrays element-wise with equal length. Without
/// "expect" any 2xx status passes.
struct ReplayOutcome {
  bool complete = true;
  std::optional<std::size_t> failed_step;  // 1-based
  std::string error;
  std::size_t steps_run = 0;
  nlohmann::json snapshot;
};

ReplayOutcome replay_script(const nlohmann::json& script, const std::filesystem::path& script_dir,
                            const std::filesystem::path& store_dir, RuntimeConfig config = {});
ReplayOutcome replay_file(const std::filesystem::path& script, const std::filesystem::path& store_dir,
                          RuntimeConfig config = {});

/// The project minus its journal body (entry count and cursor only).
nlohmann::json project_snapshot(const Project& p);

/// Subset match used by "expect.json". On mismatch `where` names the
/// first differing JSON pointer.
bool json_subset(const nlohmann::json& expected, const nlohmann::json& actual, std::string& where,
                 const std::string& at = "");

}  // namespace ctxd
