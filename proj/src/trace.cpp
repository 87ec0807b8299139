#include "ctxd/trace.hpp"

#include "ctxd/error.hpp"
#include "ctxd/json_io.hpp"

namespace ctxd {

using nlohmann::json;

namespace {

constexpr TraceKind kAllKinds[] = {
    TraceKind::suggestion_accepted,   TraceKind::suggestion_rejected,
    TraceKind::suggestion_ignored_explicit, TraceKind::suggestion_ignored_superseded,
    TraceKind::manual_branch,         TraceKind::manual_return,
    TraceKind::manual_include,        TraceKind::manual_exclude,
    TraceKind::manual_delete,         TraceKind::manual_mainline_change,
    TraceKind::manual_edit,           TraceKind::extraction_requested,
    TraceKind::capsule_reviewed,
};

std::string clip_code_points(const std::string& s, std::size_t max_chars) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (count == max_chars) return s.substr(0, i);
      ++count;
    }
  }
  return s;
}

}  // namespace

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::suggestion_accepted: return "suggestion_accepted";
    case TraceKind::suggestion_rejected: return "suggestion_rejected";
    case TraceKind::suggestion_ignored_explicit: return "suggestion_ignored_explicit";
    case TraceKind::suggestion_ignored_superseded: return "suggestion_ignored_superseded";
    case TraceKind::manual_branch: return "manual_branch";
    case TraceKind::manual_return: return "manual_return";
    case TraceKind::manual_include: return "manual_include";
    case TraceKind::manual_exclude: return "manual_exclude";
    case TraceKind::manual_delete: return "manual_delete";
    case TraceKind::manual_mainline_change: return "manual_mainline_change";
    case TraceKind::manual_edit: return "manual_edit";
    case TraceKind::extraction_requested: return "extraction_requested";
    case TraceKind::capsule_reviewed: return "capsule_reviewed";
  }
  return "manual_branch";
}

TraceKind trace_kind_from_string(std::string_view text) {
  for (auto k : kAllKinds) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorCode::invalid_argument, "unknown trace kind '" + std::string(text) + "'");
}

std::vector<QaPair> compress_context(const ConversationTopology& topology,
                                     std::span<const std::string> visible, std::size_t pairs,
                                     std::size_t max_chars) {
  std::vector<QaPair> all;
  const ContextNode* pending_user = nullptr;
  for (const auto& id : visible) {
    const auto* n = topology.find_node(id);
    if (n == nullptr || n->placeholder) continue;
    if (n->role == Role::user) {
      pending_user = n;
    } else if (n->role == Role::assistant && pending_user != nullptr) {
      all.push_back({clip_code_points(pending_user->content, max_chars),
                     clip_code_points(n->content, max_chars)});
      pending_user = nullptr;
    }
  }
  if (all.size() > pairs) all.erase(all.begin(), all.end() - static_cast<std::ptrdiff_t>(pairs));
  return all;
}

const TraceEvent& TraceLog::append(TraceEvent event) {
  if (!events_.empty() && event.created_at < events_.back().created_at) {
    fail(ErrorCode::internal, "trace events must be appended in time order");
  }
  events_.push_back(std::move(event));
  return events_.back();
}

std::string TraceLog::export_jsonl() const {
  std::string out;
  for (const auto& e : events_) {
    out += json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<TraceEvent> TraceLog::parse_jsonl(std::string_view text) {
  std::vector<TraceEvent> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<TraceEvent>());
    } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, std::string("bad trace line: ") + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::parse_error, std::string("bad trace line: ") + e.what());
    }
  }
  return out;
}

std::string_view to_string(Lifecycle lifecycle) {
  switch (lifecycle) {
    case Lifecycle::cold_start: return "cold_start";
    case Lifecycle::learning: return "learning";
    case Lifecycle::ready: return "ready";
  }
  return "cold_start";
}

Lifecycle lifecycle_from_string(std::string_view text) {
  if (text == "cold_start") return Lifecycle::cold_start;
  if (text == "learning") return Lifecycle::learning;
  if (text == "ready") return Lifecycle::ready;
  fail(ErrorCode::parse_error, "unknown lifecycle '" + std::string(text) + "'");
}

}  // namespace ctxd
