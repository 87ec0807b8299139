#include "ctxd/store.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "ctxd/error.hpp"

namespace ctxd {

namespace fs = std::filesystem;

namespace {

bool valid_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

}  // namespace

ProjectStore::ProjectStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create store '" + dir_.string() + "': " + ec.message());
}

fs::path ProjectStore::file_for(const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::invalid_argument, "invalid project id '" + id + "'");
  return dir_ / (id + ".json");
}

void ProjectStore::save(const Project& p) const {
  const auto target = file_for(p.id);
  auto tmp = target;
  tmp += ".tmp";
  const auto text = project_to_text(p);

  FILE* f = std::fopen(tmp.c_str(), "wb");
  if (f == nullptr) fail(ErrorCode::io_error, "cannot write '" + tmp.string() + "': " + std::strerror(errno));
  bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  ok = std::fflush(f) == 0 && ok;
  ok = ::fsync(fileno(f)) == 0 && ok;
  ok = std::fclose(f) == 0 && ok;
  if (!ok) {
    std::remove(tmp.c_str());
    fail(ErrorCode::io_error, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::io_error, "cannot replace '" + target.string() + "': " + ec.message());
}

Project ProjectStore::load(const std::string& id) const {
  const auto path = file_for(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "no project '" + id + "' in store");
  std::stringstream buf;
  buf << in.rdbuf();
  auto p = project_from_text(buf.str());
  if (p.id != id) fail(ErrorCode::parse_error, "document '" + path.string() + "' holds project '" + p.id + "'");
  return p;
}

std::vector<std::string> ProjectStore::list_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    auto stem = entry.path().stem().string();
    if (valid_id(stem)) ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string ProjectStore::next_id() const {
  std::uint64_t top = 0;
  for (const auto& id : list_ids()) {
    if (id.size() > 1 && id[0] == 'P' &&
        std::all_of(id.begin() + 1, id.end(), [](unsigned char c) { return std::isdigit(c); })) {
      top = std::max<std::uint64_t>(top, std::stoull(id.substr(1)));
    }
  }
  return "P" + std::to_string(top + 1);
}

}  // namespace ctxd
