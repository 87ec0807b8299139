#include "ctxd/runtime.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <future>

#include <spdlog/spdlog.h>

#include "ctxd/error.hpp"

namespace ctxd {

namespace {

bool env_flag(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr) return false;
  std::string s(v);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s == "1" || s == "true" || s == "on" || s == "yes";
}

std::string describe(const StructureDecision& d) {
  std::string out(to_string(d.primary_action));
  if (d.asset_action != AssetAction::none) out += "+" + std::string(to_string(d.asset_action));
  return out;
}

// The memory agent reads the nodes as ordinary chat turns.
std::vector<ChatMessage> memory_messages(const ConversationTopology& t, std::span<const std::string> ids) {
  std::vector<ChatMessage> out;
  for (const auto& id : ids) {
    const auto& n = t.node(id);
    if (!n.placeholder) out.push_back({n.role, n.content});
  }
  return out;
}

}  // namespace

RuntimeConfig RuntimeConfig::from_env() {
  RuntimeConfig c;
  c.user_model_enabled = env_flag("CTXD_USER_MODEL_ENABLED");
  return c;
}

std::string_view to_string(SuggestionResponse r) {
  switch (r) {
    case SuggestionResponse::accept: return "accept";
    case SuggestionResponse::reject: return "reject";
    case SuggestionResponse::ignore: return "ignore";
  }
  return "?";
}

SuggestionResponse suggestion_response_from_string(std::string_view text) {
  if (text == "accept") return SuggestionResponse::accept;
  if (text == "reject") return SuggestionResponse::reject;
  if (text == "ignore" || text == "dismiss") return SuggestionResponse::ignore;
  fail(ErrorCode::invalid_argument, "unknown suggestion action '" + std::string(text) + "'");
}

ScopeOp scope_op_from_string(std::string_view text) {
  if (text == "include") return ScopeOp::include;
  if (text == "exclude") return ScopeOp::exclude;
  if (text == "revert") return ScopeOp::revert;
  fail(ErrorCode::invalid_argument, "unknown scope op '" + std::string(text) + "'");
}

HistoryOp history_op_from_string(std::string_view text) {
  if (text == "undo") return HistoryOp::undo;
  if (text == "redo") return HistoryOp::redo;
  if (text == "reset") return HistoryOp::reset;
  fail(ErrorCode::invalid_argument, "unknown history op '" + std::string(text) + "'");
}

AgentRuntime::AgentRuntime(LlmBackend& backend, RuntimeConfig config)
    : backend_(backend), config_(config) {}

// -- prompt facts -------------------------------------------------------------

PromptInputs AgentRuntime::prompt_inputs(const Project& p) const {
  const auto& t = p.graph.topology();
  PromptInputs in;
  const auto& base = p.scope.base_path;
  if (base.is_mainline()) {
    in.mode = ConversationMode::mainline;
    for (const auto* b : t.branches_by_ordinal()) {
      if (b->status == BranchStatus::completed && b->summary && !b->summary->empty()) {
        in.branch_summaries.push_back(*b->summary);
      }
    }
  } else {
    in.mode = ConversationMode::branch;
    in.anchor_node_id = t.branch(base.branch_id()).anchor;
    in.mainline_summary = p.mainline_summary;
  }
  in.enabled_patterns = p.patterns.active_in_activation_order();
  in.exec_ctx = execution_context(p);
  if (config_.user_model_enabled && p.user_model.model) {
    in.user_model_json = p.user_model.model->raw_json;
  }
  return in;
}

ExecutionContext AgentRuntime::execution_context(const Project& p) const {
  const auto& t = p.graph.topology();
  const auto& base = p.scope.base_path;
  ExecutionContext c;
  c.mode = base.is_mainline() ? ConversationMode::mainline : ConversationMode::branch;
  c.branch_depth = t.depth(base);
  if (!base.is_mainline()) {
    const auto& b = t.branch(base.branch_id());
    c.branch_intent = b.intent;
    if (b.parent.is_mainline()) {
      c.parent_tldr = p.mainline_summary;
    } else {
      c.parent_tldr = t.branch(b.parent.branch_id()).summary;
    }
  }
  c.mainline_tldr = p.mainline_summary;
  int active = 0;
  std::vector<std::string> intents;
  for (const auto* b : t.branches_by_ordinal()) {
    if (b->status == BranchStatus::active) ++active;
    if (b->intent) intents.push_back(*b->intent);
  }
  c.total_branches = static_cast<int>(t.branches().size());
  c.active_branches = active;
  const std::size_t keep = std::min<std::size_t>(intents.size(), 3);
  c.recent_intents.assign(intents.end() - static_cast<std::ptrdiff_t>(keep), intents.end());
  return c;
}

// -- bookkeeping --------------------------------------------------------------

const TraceEvent& AgentRuntime::record(Project& p, TraceKind kind, std::vector<std::string> subjects,
                                       std::string detail) {
  TraceEvent e;
  e.id = p.next_trace_id();
  e.kind = kind;
  e.subjects = std::move(subjects);
  e.detail = std::move(detail);
  try {
    auto visible = resolve_visible_path(p.graph.topology(), p.scope.base_path, p.scope.truncate_at);
    e.compressed_context = compress_context(p.graph.topology(), visible, config_.trace_pairs);
  } catch (const Error& err) {
    spdlog::warn("trace {}: no context ({})", e.id, err.what());
  }
  e.created_at = p.graph.tick();
  return p.traces.append(std::move(e));
}

void AgentRuntime::fix_scope(Project& p) {
  const auto& t = p.graph.topology();
  if (!t.has_path(p.scope.base_path)) {
    spdlog::info("project {}: path {} is gone, back to mainline", p.id, p.scope.base_path.str());
    p.scope.base_path = PathRef::mainline();
  }
  if (p.scope.truncate_at && !t.on_path(p.scope.base_path, *p.scope.truncate_at)) {
    p.scope.truncate_at.reset();
  }
}

std::optional<std::string> AgentRuntime::summarize(MemoryPromptKind kind, const ConversationTopology& t,
                                                   std::span<const std::string> node_ids,
                                                   std::vector<std::string>& errors) {
  auto messages = memory_messages(t, node_ids);
  if (messages.empty()) return std::nullopt;
  auto req = make_request(AgentRole::memory, build_memory_prompt(kind), std::move(messages));
  try {
    auto text = backend_.generate(req).text;
    if (text.empty()) throw Error(ErrorCode::backend_error, "empty summary");
    return text;
  } catch (const std::exception& e) {
    spdlog::warn("memory agent failed: {}", e.what());
    errors.emplace_back(e.what());
    return std::nullopt;
  }
}

// -- path transitions -----------------------------------------------------------

void AgentRuntime::enter(Project& p, const PathRef& target, TransitionResult& out) {
  fix_scope(p);
  const auto& t = p.graph.topology();
  if (!t.has_path(target)) fail(ErrorCode::not_found, "unknown path '" + target.str() + "'");
  const PathRef from = p.scope.base_path;
  out.from = from;
  out.to = target;
  if (from == target) return;

  // Leaving toward an ancestor: every branch left behind is summarized.
  const auto from_chain = t.chain(from);
  std::vector<std::string> left;
  bool ancestor = target.is_mainline() && !from.is_mainline();
  if (!target.is_mainline()) {
    for (std::size_t i = 1; i < from_chain.size(); ++i) {
      if (from_chain[i]->id == target.branch_id()) {
        ancestor = true;
        break;
      }
    }
  }
  if (ancestor) {
    for (const auto* b : from_chain) {
      if (!target.is_mainline() && b->id == target.branch_id()) break;
      left.push_back(b->id);
    }
  }
  for (const auto& id : left) {
    const auto& b = p.graph.topology().branch(id);
    std::vector<std::string> ids{b.anchor};
    ids.insert(ids.end(), b.segment.begin(), b.segment.end());
    auto summary = summarize(MemoryPromptKind::branch_summary, p.graph.topology(), ids, out.errors);
    auto keep = summary ? summary : b.summary;
    p.graph.annotate_branch(id, BranchStatus::completed, keep);
    out.summarized_branches.push_back(id);
  }

  if (from.is_mainline() && !target.is_mainline()) {
    auto visible = resolve_visible_path(p.graph.topology(), PathRef::mainline());
    auto summary = summarize(MemoryPromptKind::mainline_progress, p.graph.topology(), visible, out.errors);
    if (summary) {
      p.mainline_summary = summary;
      out.mainline_summary = summary;
    }
  }

  if (!target.is_mainline()) {
    const auto& b = p.graph.topology().branch(target.branch_id());
    if (b.status != BranchStatus::active) {
      p.graph.annotate_branch(b.id, BranchStatus::active, b.summary);
    }
  }
  p.scope.base_path = target;
  p.scope.truncate_at.reset();
  ++p.version;
}

TransitionResult AgentRuntime::transition_path(Project& p, const PathRef& target) {
  TransitionResult out;
  enter(p, target, out);
  if (!out.summarized_branches.empty()) {
    auto subjects = out.summarized_branches;
    record(p, TraceKind::manual_return, std::move(subjects), "to " + target.str());
  }
  return out;
}

// -- turns ----------------------------------------------------------------------

TurnResult AgentRuntime::run_turn(Project& p, const std::string& user_text,
                                  const std::optional<std::string>& from_node) {
  if (user_text.empty()) fail(ErrorCode::invalid_argument, "message text must not be empty");
  fix_scope(p);
  const auto& topo = p.graph.topology();
  ContextScopeState scope = p.scope;
  std::vector<std::string> skipped;
  if (from_node) {
    if (!topo.find_node(*from_node)) fail(ErrorCode::not_found, "unknown node '" + *from_node + "'");
    auto full = resolve_visible_path(topo, scope.base_path);
    auto it = std::find(full.begin(), full.end(), *from_node);
    if (it == full.end()) {
      fail(ErrorCode::invalid_argument, "node '" + *from_node + "' is not on the visible path");
    }
    skipped.assign(it + 1, full.end());
    scope.truncate_at = *from_node;
  }

  auto inputs = prompt_inputs(p);
  TurnResult r;
  r.assembled = assemble(topo, scope, user_text, inputs);
  r.structure_input = r.assembled;
  r.structure_input.system_text = build_structure_prompt(inputs.exec_ctx, inputs.user_model_json);

  const auto conv_req = make_request(AgentRole::conversation, r.assembled.system_text, r.assembled.messages);
  const auto struct_req = make_request(AgentRole::structure, r.structure_input.system_text,
                                       r.structure_input.messages);
  auto structure = std::async(std::launch::async, [this, &struct_req] { return backend_.generate(struct_req); });

  LlmResponse reply;
  try {
    reply = backend_.generate(conv_req);
  } catch (const Error& e) {
    structure.wait();
    if (e.code() == ErrorCode::backend_error) throw;
    fail(ErrorCode::backend_error, std::string("conversation agent failed: ") + e.what());
  } catch (const std::exception& e) {
    structure.wait();
    fail(ErrorCode::backend_error, std::string("conversation agent failed: ") + e.what());
  }

  std::optional<StructureDecision> decision;
  try {
    decision = parse_structure_decision(structure.get().text);
  } catch (const std::exception& e) {
    r.structure_error = e.what();
    spdlog::warn("project {}: structure agent gave no decision: {}", p.id, e.what());
  }

  ContextNode user;
  user.id = p.graph.allocate_node_id();
  user.content = user_text;
  ContextNode assistant;
  assistant.id = p.graph.allocate_node_id();
  assistant.content = reply.text;
  p.graph.append_exchange(scope.base_path, user, assistant);
  r.user_node = user.id;
  r.assistant_node = assistant.id;
  if (!skipped.empty()) p.scope.exclude(skipped);
  ++p.version;

  if (const auto* pending = p.suggestions.pending()) {
    const std::string sid = pending->id;
    p.suggestions.resolve(sid, SuggestionState::ignored, "superseded");
    record(p, TraceKind::suggestion_ignored_superseded, {sid}, "superseded by new turn");
    r.superseded = sid;
  }
  if (decision && decision->show_suggestion && !decision->is_noop()) {
    r.suggestion = p.suggestions.open(p.next_suggestion_id(), *decision, assistant.id,
                                      scope.base_path, p.graph.tick());
  }

  try {
    refresh_user_model(p);
  } catch (const std::exception& e) {
    spdlog::warn("project {}: user model refresh failed: {}", p.id, e.what());
  }
  return r;
}

// -- suggestions ------------------------------------------------------------------

ResponseEffect AgentRuntime::respond_to_suggestion(Project& p, const std::string& suggestion_id,
                                                   SuggestionResponse action) {
  const auto* s = p.suggestions.find(suggestion_id);
  if (s == nullptr) fail(ErrorCode::not_found, "unknown suggestion '" + suggestion_id + "'");
  if (s->state != SuggestionState::pending) {
    fail(ErrorCode::conflict, "suggestion '" + suggestion_id + "' is " + std::string(to_string(s->state)));
  }
  ResponseEffect fx;
  fix_scope(p);

  if (action == SuggestionResponse::reject) {
    fx.suggestion = p.suggestions.resolve(suggestion_id, SuggestionState::rejected, "rejected");
    record(p, TraceKind::suggestion_rejected, {suggestion_id}, describe(s->decision));
    ++p.version;
    return fx;
  }
  if (action == SuggestionResponse::ignore) {
    fx.suggestion = p.suggestions.resolve(suggestion_id, SuggestionState::ignored, "dismissed");
    record(p, TraceKind::suggestion_ignored_explicit, {suggestion_id}, describe(s->decision));
    ++p.version;
    return fx;
  }

  const auto* anchor = p.graph.topology().find_node(s->anchor_node);
  if (anchor == nullptr || anchor->placeholder) {
    fx.suggestion = p.suggestions.resolve(suggestion_id, SuggestionState::ignored, "stale anchor");
    fx.stale = true;
    record(p, TraceKind::suggestion_ignored_explicit, {suggestion_id}, "stale anchor");
    ++p.version;
    return fx;
  }

  const StructureDecision decision = s->decision;
  const std::string anchor_id = s->anchor_node;
  if (decision.primary_action == PrimaryAction::return_parent && p.scope.base_path.is_mainline()) {
    fail(ErrorCode::conflict, "already on the mainline; there is no parent to return to");
  }

  std::vector<std::string> subjects{suggestion_id};
  if (decision.asset_action != AssetAction::none) {
    const auto type = decision.asset_action == AssetAction::extract_reasoning ? PatternType::reasoning
                                                                              : PatternType::task_sop;
    // The active context: excluded nodes stay out of the capsule too.
    const auto& t = p.graph.topology();
    const auto visible = resolve_visible_path(t, p.scope.base_path, p.scope.truncate_at);
    std::vector<std::string> ids;
    for (const auto& n : apply_scope_overrides(t, visible, p.scope).nodes) ids.push_back(n.id);
    const auto& capsule = extract_pattern(p.patterns, backend_, p.graph.topology(), type, ids,
                                          p.next_capsule_id(), p.graph.tick());
    fx.capsule_id = capsule.id;
    subjects.push_back(capsule.id);
  }

  TransitionResult moved;
  if (decision.primary_action == PrimaryAction::branch) {
    const auto where = p.graph.topology().locate(anchor_id);
    const auto bid = p.graph.create_branch(*where, anchor_id, decision.reason);
    fx.branch_id = bid;
    subjects.push_back(bid);
    enter(p, PathRef::branch(bid), moved);
  } else if (decision.primary_action == PrimaryAction::return_parent) {
    const auto parent = p.graph.topology().branch(p.scope.base_path.branch_id()).parent;
    enter(p, parent, moved);
  }

  fx.suggestion = p.suggestions.resolve(suggestion_id, SuggestionState::accepted, "accepted");
  fx.base_path = p.scope.base_path;
  record(p, TraceKind::suggestion_accepted, std::move(subjects), describe(decision));
  ++p.version;
  return fx;
}

// -- manual structure -------------------------------------------------------------

std::string AgentRuntime::branch_from(Project& p, const std::string& node_id,
                                      std::optional<std::string> intent,
                                      const std::optional<PathRef>& parent) {
  std::string bid;
  if (parent) {
    bid = p.graph.create_branch(*parent, node_id, std::move(intent));
  } else {
    bid = p.graph.rebranch_from(node_id, std::move(intent));
  }
  record(p, TraceKind::manual_branch, {node_id, bid}, "branch");
  TransitionResult moved;
  enter(p, PathRef::branch(bid), moved);
  ++p.version;
  return bid;
}

std::string AgentRuntime::rebranch_from(Project& p, const std::string& node_id,
                                        std::optional<std::string> intent) {
  const auto bid = p.graph.rebranch_from(node_id, std::move(intent));
  record(p, TraceKind::manual_branch, {node_id, bid}, "rebranch");
  TransitionResult moved;
  enter(p, PathRef::branch(bid), moved);
  ++p.version;
  return bid;
}

DeletionReport AgentRuntime::delete_nodes(Project& p, std::span<const std::string> ids) {
  if (ids.empty()) fail(ErrorCode::invalid_argument, "no node ids given");
  auto report = p.graph.delete_nodes(ids);
  fix_scope(p);
  record(p, TraceKind::manual_delete, {ids.begin(), ids.end()});
  ++p.version;
  return report;
}

void AgentRuntime::edit_node(Project& p, const std::string& node_id, std::string content) {
  p.graph.edit_node(node_id, std::move(content));
  record(p, TraceKind::manual_edit, {node_id});
  ++p.version;
}

void AgentRuntime::set_mainline(Project& p, const std::optional<std::string>& start,
                                const std::optional<std::string>& end) {
  if (!start && !end) fail(ErrorCode::invalid_argument, "give a start, an end, or both");
  p.graph.set_mainline_bounds(start, end);
  fix_scope(p);
  std::vector<std::string> subjects;
  std::string detail;
  if (start) {
    subjects.push_back(*start);
    detail = "start";
  }
  if (end) {
    subjects.push_back(*end);
    detail += detail.empty() ? "end" : "+end";
  }
  record(p, TraceKind::manual_mainline_change, std::move(subjects), detail);
  ++p.version;
}

RevertOutcome AgentRuntime::apply_scope(Project& p, ScopeOp op, std::span<const std::string> ids) {
  if (ids.empty()) fail(ErrorCode::invalid_argument, "no node ids given");
  const auto& t = p.graph.topology();
  for (const auto& id : ids) {
    if (t.find_node(id) == nullptr) fail(ErrorCode::not_found, "unknown node '" + id + "'");
  }
  RevertOutcome out;
  switch (op) {
    case ScopeOp::include:
      p.scope.include(ids);
      out.activated.assign(ids.begin(), ids.end());
      record(p, TraceKind::manual_include, {ids.begin(), ids.end()});
      break;
    case ScopeOp::exclude:
      p.scope.exclude(ids);
      out.deactivated.assign(ids.begin(), ids.end());
      record(p, TraceKind::manual_exclude, {ids.begin(), ids.end()});
      break;
    case ScopeOp::revert:
      out = revert(t, p.scope, ids);
      record(p, out.deactivated.empty() ? TraceKind::manual_include : TraceKind::manual_exclude,
             {ids.begin(), ids.end()}, "revert");
      break;
  }
  ++p.version;
  return out;
}

void AgentRuntime::history(Project& p, HistoryOp op) {
  switch (op) {
    case HistoryOp::undo: p.graph.undo(); break;
    case HistoryOp::redo: p.graph.redo(); break;
    case HistoryOp::reset: p.graph.reset(); break;
  }
  fix_scope(p);
  ++p.version;
}

void AgentRuntime::set_layout(Project& p, const std::string& node_id, std::optional<LayoutPos> pos) {
  p.graph.set_layout(node_id, pos);
  ++p.version;
}

// -- patterns ---------------------------------------------------------------------

const PatternCapsule& AgentRuntime::extract(Project& p, PatternType type, std::span<const std::string> ids) {
  if (ids.empty()) fail(ErrorCode::invalid_argument, "no node ids given");
  const auto& c = extract_pattern(p.patterns, backend_, p.graph.topology(), type, ids,
                                  p.next_capsule_id(), p.graph.tick());
  std::vector<std::string> subjects{c.id};
  subjects.insert(subjects.end(), ids.begin(), ids.end());
  record(p, TraceKind::extraction_requested, std::move(subjects), std::string(to_string(type)));
  ++p.version;
  return c;
}

const PatternCapsule& AgentRuntime::review(Project& p, const std::string& capsule_id,
                                           const PatternEdits& edits, bool approve) {
  const auto& c = p.patterns.review(capsule_id, edits, approve, p.graph.tick());
  record(p, TraceKind::capsule_reviewed, {capsule_id}, approve ? "approved" : "edited");
  ++p.version;
  return c;
}

const PatternCapsule& AgentRuntime::set_enabled(Project& p, const std::string& capsule_id, bool enabled) {
  const auto& c = p.patterns.set_enabled(capsule_id, enabled, p.graph.tick());
  ++p.version;
  return c;
}

std::vector<std::string> AgentRuntime::import_patterns(Project& p, std::string_view json_text) {
  auto ids = p.patterns.import_json(json_text, [&p] { return p.next_capsule_id(); }, p.graph.tick());
  ++p.version;
  return ids;
}

UserModelUpdate AgentRuntime::refresh_user_model(Project& p, bool force) {
  const auto fresh = p.traces.size() - std::min(p.traces.size(), p.user_model.consumed_traces);
  if (!force && (fresh == 0 || fresh < config_.user_model_debounce)) return {};
  auto up = update_user_model(p.user_model, p.traces, backend_, p.graph.now());
  if (up.error) spdlog::warn("project {}: user model kept: {}", p.id, *up.error);
  if (up.changed) ++p.version;
  return up;
}

}  // namespace ctxd
