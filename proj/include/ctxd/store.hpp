#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ctxd/project.hpp"

namespace ctxd {

/// One JSON document per project, "<id>.json" under the store directory.
/// Saves go through a temp file and a rename, so a crash leaves either the
/// old or the new document.
class ProjectStore {
 public:
  explicit ProjectStore(std::filesystem::path dir);

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] std::filesystem::path file_for(const std::string& id) const;

  void save(const Project& p) const;
  /// Throws not_found for a missing document, parse_error for a corrupt one.
  [[nodiscard]] Project load(const std::string& id) const;
  [[nodiscard]] std::vector<std::string> list_ids() const;
  /// Next free "P<k>" id.
  [[nodiscard]] std::string next_id() const;

 private:
  std::filesystem::path dir_;
};

}  // namespace ctxd
