#include "ctxd/graph.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "ctxd/error.hpp"

namespace ctxd {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::system: return "system";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  if (text == "system") return Role::system;
  fail(ErrorCode::invalid_argument, "unknown role '" + std::string(text) + "'");
}

std::string_view to_string(BranchStatus status) {
  return status == BranchStatus::active ? "active" : "completed";
}

BranchStatus branch_status_from_string(std::string_view text) {
  if (text == "active") return BranchStatus::active;
  if (text == "completed") return BranchStatus::completed;
  fail(ErrorCode::invalid_argument, "unknown branch status '" + std::string(text) + "'");
}

std::string_view to_string(MutationKind kind) {
  switch (kind) {
    case MutationKind::append_exchange: return "append_exchange";
    case MutationKind::create_branch: return "create_branch";
    case MutationKind::delete_nodes: return "delete_nodes";
    case MutationKind::set_mainline_bounds: return "set_mainline_bounds";
    case MutationKind::edit_node: return "edit_node";
    case MutationKind::annotate_branch: return "annotate_branch";
  }
  return "append_exchange";
}

MutationKind mutation_kind_from_string(std::string_view text) {
  for (auto k : {MutationKind::append_exchange, MutationKind::create_branch,
                 MutationKind::delete_nodes, MutationKind::set_mainline_bounds,
                 MutationKind::edit_node, MutationKind::annotate_branch}) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorCode::invalid_argument, "unknown mutation kind '" + std::string(text) + "'");
}

PathRef PathRef::branch(std::string id) {
  if (id.empty() || id == "mainline") {
    fail(ErrorCode::invalid_argument, "invalid branch id '" + id + "'");
  }
  PathRef p;
  p.branch_ = std::move(id);
  return p;
}

PathRef PathRef::parse(std::string_view text) {
  if (text == "mainline") return mainline();
  return branch(std::string(text));
}

// ---------------------------------------------------------------------------
// ConversationTopology

const ContextNode* ConversationTopology::find_node(std::string_view id) const {
  auto it = nodes_.find(std::string(id));
  return it == nodes_.end() ? nullptr : &it->second;
}

const Branch* ConversationTopology::find_branch(std::string_view id) const {
  auto it = branches_.find(std::string(id));
  return it == branches_.end() ? nullptr : &it->second;
}

const ContextNode& ConversationTopology::node(std::string_view id) const {
  const auto* n = find_node(id);
  if (n == nullptr) fail(ErrorCode::not_found, "unknown node '" + std::string(id) + "'");
  return *n;
}

const Branch& ConversationTopology::branch(std::string_view id) const {
  const auto* b = find_branch(id);
  if (b == nullptr) fail(ErrorCode::not_found, "unknown branch '" + std::string(id) + "'");
  return *b;
}

bool ConversationTopology::has_path(const PathRef& path) const {
  return path.is_mainline() || find_branch(path.branch_id()) != nullptr;
}

const std::vector<std::string>& ConversationTopology::sequence(const PathRef& path) const {
  if (path.is_mainline()) return mainline_;
  return branch(path.branch_id()).segment;
}

std::vector<std::string>& ConversationTopology::mutable_sequence(const PathRef& path) {
  if (path.is_mainline()) return mainline_;
  auto it = branches_.find(path.branch_id());
  if (it == branches_.end()) {
    fail(ErrorCode::internal, "edit targets missing branch '" + path.branch_id() + "'");
  }
  return it->second.segment;
}

std::optional<PathRef> ConversationTopology::locate(std::string_view node_id) const {
  if (std::find(mainline_.begin(), mainline_.end(), node_id) != mainline_.end()) {
    return PathRef::mainline();
  }
  for (const auto& [id, b] : branches_) {
    if (std::find(b.segment.begin(), b.segment.end(), node_id) != b.segment.end()) {
      return PathRef::branch(id);
    }
  }
  return std::nullopt;
}

bool ConversationTopology::on_path(const PathRef& path, std::string_view node_id) const {
  if (!has_path(path)) return false;
  const auto& seq = sequence(path);
  return std::find(seq.begin(), seq.end(), node_id) != seq.end();
}

std::vector<const Branch*> ConversationTopology::chain(const PathRef& path) const {
  std::vector<const Branch*> out;
  std::unordered_set<std::string> seen;
  PathRef cur = path;
  while (!cur.is_mainline()) {
    const auto* b = find_branch(cur.branch_id());
    if (b == nullptr) {
      if (out.empty()) fail(ErrorCode::not_found, "unknown branch '" + cur.branch_id() + "'");
      fail(ErrorCode::internal, "dangling branch chain at '" + cur.branch_id() + "'");
    }
    if (!seen.insert(b->id).second) {
      fail(ErrorCode::internal, "cyclic branch chain at '" + b->id + "'");
    }
    out.push_back(b);
    cur = b->parent;
  }
  return out;
}

int ConversationTopology::depth(const PathRef& path) const {
  return static_cast<int>(chain(path).size());
}

std::vector<const Branch*> ConversationTopology::branches_anchored_at(
    std::string_view node_id) const {
  std::vector<const Branch*> out;
  for (const auto& [id, b] : branches_) {
    if (b.anchor == node_id) out.push_back(&b);
  }
  return out;
}

std::vector<const Branch*> ConversationTopology::branches_by_ordinal() const {
  std::vector<const Branch*> out;
  out.reserve(branches_.size());
  for (const auto& [id, b] : branches_) out.push_back(&b);
  std::sort(out.begin(), out.end(),
            [](const Branch* a, const Branch* b) { return a->ordinal < b->ordinal; });
  return out;
}

// ---------------------------------------------------------------------------
// Edits

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void edit_mismatch(const std::string& what) {
  fail(ErrorCode::internal, "journal edit does not match state: " + what);
}

}  // namespace

Edit invert(const Edit& e) {
  return std::visit(
      overloaded{
          [](const edit::Node& x) -> Edit { return edit::Node{x.node, !x.insert}; },
          [](const edit::PathSlot& x) -> Edit {
            return edit::PathSlot{x.path, x.index, x.node_id, !x.insert};
          },
          [](const edit::BranchRecord& x) -> Edit { return edit::BranchRecord{x.branch, !x.insert}; },
          [](const edit::Content& x) -> Edit { return edit::Content{x.node_id, x.after, x.before}; },
          [](const edit::Link& x) -> Edit {
            return edit::Link{x.branch_id, x.parent_after, x.anchor_after, x.parent_before,
                              x.anchor_before};
          },
          [](const edit::Annotation& x) -> Edit {
            return edit::Annotation{x.branch_id, x.status_after, x.summary_after, x.status_before,
                                    x.summary_before};
          },
          [](const edit::Bounds& x) -> Edit {
            return edit::Bounds{x.start_after, x.end_after, x.start_before, x.end_before};
          },
      },
      e);
}

void apply_edit(ConversationTopology& t, const Edit& e) {
  auto& nodes = TopologyAccess::nodes(t);
  auto& branches = TopologyAccess::branches(t);
  std::visit(
      overloaded{
          [&](const edit::Node& x) {
            if (x.insert) {
              if (!nodes.emplace(x.node.id, x.node).second) edit_mismatch("node exists " + x.node.id);
            } else if (nodes.erase(x.node.id) == 0) {
              edit_mismatch("node missing " + x.node.id);
            }
          },
          [&](const edit::PathSlot& x) {
            std::vector<std::string>* seq = nullptr;
            if (x.path.is_mainline()) {
              seq = &TopologyAccess::mainline(t);
            } else {
              auto it = branches.find(x.path.branch_id());
              if (it == branches.end()) edit_mismatch("path missing " + x.path.branch_id());
              seq = &it->second.segment;
            }
            if (x.insert) {
              if (x.index > seq->size()) edit_mismatch("slot out of range");
              seq->insert(seq->begin() + static_cast<std::ptrdiff_t>(x.index), x.node_id);
            } else {
              if (x.index >= seq->size() || (*seq)[x.index] != x.node_id) {
                edit_mismatch("slot holds other node than " + x.node_id);
              }
              seq->erase(seq->begin() + static_cast<std::ptrdiff_t>(x.index));
            }
          },
          [&](const edit::BranchRecord& x) {
            if (x.insert) {
              if (!x.branch.segment.empty()) edit_mismatch("branch inserted with segment");
              if (!branches.emplace(x.branch.id, x.branch).second) {
                edit_mismatch("branch exists " + x.branch.id);
              }
            } else {
              auto it = branches.find(x.branch.id);
              if (it == branches.end() || !it->second.segment.empty()) {
                edit_mismatch("branch removal of non-empty or missing " + x.branch.id);
              }
              branches.erase(it);
            }
          },
          [&](const edit::Content& x) {
            auto it = nodes.find(x.node_id);
            if (it == nodes.end() || it->second.content != x.before) {
              edit_mismatch("content of " + x.node_id);
            }
            it->second.content = x.after;
          },
          [&](const edit::Link& x) {
            auto it = branches.find(x.branch_id);
            if (it == branches.end() || it->second.parent != x.parent_before ||
                it->second.anchor != x.anchor_before) {
              edit_mismatch("link of " + x.branch_id);
            }
            it->second.parent = x.parent_after;
            it->second.anchor = x.anchor_after;
          },
          [&](const edit::Annotation& x) {
            auto it = branches.find(x.branch_id);
            if (it == branches.end() || it->second.status != x.status_before ||
                it->second.summary != x.summary_before) {
              edit_mismatch("annotation of " + x.branch_id);
            }
            it->second.status = x.status_after;
            it->second.summary = x.summary_after;
          },
          [&](const edit::Bounds& x) {
            if (TopologyAccess::start(t) != x.start_before || TopologyAccess::end(t) != x.end_before) {
              edit_mismatch("mainline bounds");
            }
            TopologyAccess::start(t) = x.start_after;
            TopologyAccess::end(t) = x.end_after;
          },
      },
      e);
}

// ---------------------------------------------------------------------------
// ContextGraph

namespace {

/// Applies edits as they are produced so later steps see updated indices;
/// rolls everything back if the mutation throws half-way.
class Recorder {
 public:
  explicit Recorder(ConversationTopology& t) : t_(t) {}
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;
  ~Recorder() {
    if (committed_) return;
    for (auto it = edits_.rbegin(); it != edits_.rend(); ++it) apply_edit(t_, invert(*it));
  }

  void operator()(Edit e) {
    apply_edit(t_, e);
    edits_.push_back(std::move(e));
  }

  std::vector<Edit> release() {
    committed_ = true;
    return std::move(edits_);
  }

 private:
  ConversationTopology& t_;
  std::vector<Edit> edits_;
  bool committed_ = false;
};

std::size_t index_of(const std::vector<std::string>& seq, std::string_view id) {
  auto it = std::find(seq.begin(), seq.end(), id);
  if (it == seq.end()) fail(ErrorCode::internal, "node '" + std::string(id) + "' not on path");
  return static_cast<std::size_t>(it - seq.begin());
}

}  // namespace

ContextGraph::ContextGraph(std::string id_prefix) : prefix_(std::move(id_prefix)) {}

std::string ContextGraph::allocate_node_id() {
  return prefix_ + "n" + std::to_string(alloc_.next_node++);
}

std::int64_t ContextGraph::tick() { return ++alloc_.clock; }

void ContextGraph::commit(MutationKind kind, std::vector<Edit> edits) {
  journal_.entries.resize(journal_.cursor);
  journal_.entries.push_back(JournalEntry{kind, std::move(edits)});
  journal_.cursor = journal_.entries.size();
}

void ContextGraph::apply(const Edit& e) { apply_edit(topology_, e); }

void ContextGraph::append_exchange(const PathRef& path, ContextNode user, ContextNode assistant,
                                   std::optional<std::int64_t> at) {
  if (!topology_.has_path(path)) fail(ErrorCode::not_found, "unknown path '" + path.str() + "'");
  for (const auto* n : {&user, &assistant}) {
    if (n->id.empty()) fail(ErrorCode::invalid_argument, "node id must not be empty");
    if (topology_.find_node(n->id) != nullptr) {
      fail(ErrorCode::conflict, "duplicate node id '" + n->id + "'");
    }
  }
  if (user.id == assistant.id) fail(ErrorCode::conflict, "duplicate node id '" + user.id + "'");
  if (at && *at < alloc_.clock) {
    fail(ErrorCode::invalid_argument, "timestamp would move the clock backwards");
  }

  user.role = Role::user;
  assistant.role = Role::assistant;
  user.placeholder = assistant.placeholder = false;
  if (at) {
    alloc_.clock = *at;
    user.created_at = assistant.created_at = *at;
  } else {
    user.created_at = tick();
    assistant.created_at = tick();
  }
  user.seq = alloc_.next_seq++;
  assistant.seq = alloc_.next_seq++;

  Recorder rec(topology_);
  const auto& seq = topology_.sequence(path);
  const std::string old_tail = seq.empty() ? std::string{} : seq.back();
  rec(edit::Node{user, true});
  rec(edit::PathSlot{path, topology_.sequence(path).size(), user.id, true});
  rec(edit::Node{assistant, true});
  rec(edit::PathSlot{path, topology_.sequence(path).size(), assistant.id, true});
  if (path.is_mainline()) {
    const auto& start = topology_.mainline_start();
    const auto& end = topology_.mainline_end();
    if (end.empty() || end == old_tail) {
      rec(edit::Bounds{start, end, start.empty() ? user.id : start, assistant.id});
    }
  }
  commit(MutationKind::append_exchange, rec.release());
}

std::string ContextGraph::create_branch(const PathRef& parent, const std::string& anchor,
                                        std::optional<std::string> intent) {
  if (!topology_.has_path(parent)) {
    fail(ErrorCode::not_found, "unknown path '" + parent.str() + "'");
  }
  if (!topology_.on_path(parent, anchor)) {
    fail(ErrorCode::invalid_argument,
         "anchor '" + anchor + "' is not on parent path '" + parent.str() + "'");
  }
  Branch b;
  b.ordinal = alloc_.next_branch++;
  b.id = prefix_ + "b" + std::to_string(b.ordinal);
  b.parent = parent;
  b.anchor = anchor;
  b.intent = std::move(intent);

  Recorder rec(topology_);
  rec(edit::BranchRecord{b, true});
  commit(MutationKind::create_branch, rec.release());
  return b.id;
}

std::string ContextGraph::rebranch_from(const std::string& node_id,
                                        std::optional<std::string> intent) {
  auto where = topology_.locate(node_id);
  if (!where) fail(ErrorCode::not_found, "unknown node '" + node_id + "'");
  return create_branch(*where, node_id, std::move(intent));
}

struct ContextGraph::DeletionPlan {
  DeletionReport report;
  std::vector<ContextNode> placeholder_nodes;  // parallel to report.placeholders
  std::set<std::string> removed_branches;
};

ContextGraph::DeletionPlan ContextGraph::plan_deletion(std::span<const std::string> ids) const {
  std::set<std::string> doomed;
  for (const auto& id : ids) {
    if (topology_.find_node(id) == nullptr) fail(ErrorCode::not_found, "unknown node '" + id + "'");
    doomed.insert(id);
  }

  // A branch disappears when nothing of it survives; it is kept alive if a
  // surviving branch still hangs off one of its nodes.
  std::set<std::string> vanishing;
  for (const auto& [id, b] : topology_.branches()) {
    bool all_gone = std::all_of(b.segment.begin(), b.segment.end(),
                                [&](const std::string& n) { return doomed.contains(n); });
    if (all_gone && (!b.segment.empty() || doomed.contains(b.anchor))) vanishing.insert(id);
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = vanishing.begin(); it != vanishing.end();) {
      const auto& seg = topology_.branch(*it).segment;
      bool needed = false;
      for (const auto& [oid, other] : topology_.branches()) {
        if (vanishing.contains(oid)) continue;
        if (std::find(seg.begin(), seg.end(), other.anchor) != seg.end()) {
          needed = true;
          break;
        }
      }
      if (needed) {
        it = vanishing.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }

  auto structural = [&](const std::string& id) {
    if (id == topology_.mainline_start() || id == topology_.mainline_end()) return true;
    for (const auto& [bid, b] : topology_.branches()) {
      if (!vanishing.contains(bid) && b.anchor == id) return true;
    }
    return false;
  };

  std::vector<const ContextNode*> ordered;
  for (const auto& id : doomed) ordered.push_back(&topology_.node(id));
  std::sort(ordered.begin(), ordered.end(),
            [](const ContextNode* a, const ContextNode* b) { return a->seq < b->seq; });

  DeletionPlan plan;
  auto next_ph = alloc_.next_placeholder;
  auto next_seq = alloc_.next_seq;
  for (const auto* n : ordered) {
    if (!structural(n->id)) {
      plan.report.removed.push_back(n->id);
    } else if (n->placeholder) {
      plan.report.retained_placeholders.push_back(n->id);
    } else {
      ContextNode ph;
      ph.id = prefix_ + "ph" + std::to_string(next_ph++);
      ph.role = Role::system;
      ph.placeholder = true;
      ph.created_at = n->created_at;
      ph.seq = next_seq++;
      plan.report.placeholders.push_back({ph.id, n->id});
      plan.placeholder_nodes.push_back(std::move(ph));
    }
  }
  plan.removed_branches = vanishing;
  plan.report.removed_branches.assign(vanishing.begin(), vanishing.end());
  return plan;
}

DeletionReport ContextGraph::preview_delete(std::span<const std::string> ids) const {
  return plan_deletion(ids).report;
}

DeletionReport ContextGraph::delete_nodes(std::span<const std::string> ids) {
  auto plan = plan_deletion(ids);
  if (plan.report.removed.empty() && plan.report.placeholders.empty() &&
      plan.removed_branches.empty()) {
    return plan.report;
  }

  Recorder rec(topology_);
  for (std::size_t i = 0; i < plan.placeholder_nodes.size(); ++i) {
    const auto& ph = plan.placeholder_nodes[i];
    const auto& origin = plan.report.placeholders[i].origin_id;
    auto path = topology_.locate(origin);
    if (!path) fail(ErrorCode::internal, "structural node '" + origin + "' is on no path");
    auto idx = index_of(topology_.sequence(*path), origin);
    rec(edit::Node{ph, true});
    rec(edit::PathSlot{*path, idx, origin, false});
    rec(edit::PathSlot{*path, idx, ph.id, true});
    std::vector<std::string> relink;
    for (const auto* b : topology_.branches_anchored_at(origin)) relink.push_back(b->id);
    for (const auto& bid : relink) {
      const auto& b = topology_.branch(bid);
      rec(edit::Link{bid, b.parent, b.anchor, b.parent, ph.id});
    }
    const auto& start = topology_.mainline_start();
    const auto& end = topology_.mainline_end();
    if (start == origin || end == origin) {
      rec(edit::Bounds{start, end, start == origin ? ph.id : start, end == origin ? ph.id : end});
    }
    rec(edit::Node{topology_.node(origin), false});
  }
  for (const auto& id : plan.report.removed) {
    auto path = topology_.locate(id);
    if (path) rec(edit::PathSlot{*path, index_of(topology_.sequence(*path), id), id, false});
    rec(edit::Node{topology_.node(id), false});
  }
  for (const auto& bid : plan.removed_branches) {
    rec(edit::BranchRecord{topology_.branch(bid), false});
  }
  alloc_.next_placeholder += plan.placeholder_nodes.size();
  alloc_.next_seq += plan.placeholder_nodes.size();
  commit(MutationKind::delete_nodes, rec.release());
  return plan.report;
}

void ContextGraph::set_mainline_bounds(const std::optional<std::string>& start,
                                       const std::optional<std::string>& end) {
  if (!start && !end) return;
  const auto& ml = topology_.mainline();
  if (start) {
    (void)topology_.node(*start);
    if (!topology_.on_path(PathRef::mainline(), *start)) {
      fail(ErrorCode::invalid_argument, "mainline start '" + *start + "' is not on the mainline");
    }
  }

  std::optional<PathRef> end_path;
  if (end) {
    (void)topology_.node(*end);
    end_path = topology_.locate(*end);
    if (!end_path) fail(ErrorCode::invalid_argument, "mainline end '" + *end + "' is unreachable");
  }

  if (!end_path || end_path->is_mainline()) {
    std::string new_start = start.value_or(topology_.mainline_start());
    std::string new_end = end.value_or(topology_.mainline_end());
    if (!new_start.empty() && !new_end.empty() && index_of(ml, new_start) > index_of(ml, new_end)) {
      fail(ErrorCode::invalid_argument, "mainline start lies after mainline end");
    }
    if (new_start == topology_.mainline_start() && new_end == topology_.mainline_end()) return;
    Recorder rec(topology_);
    rec(edit::Bounds{topology_.mainline_start(), topology_.mainline_end(), new_start, new_end});
    commit(MutationKind::set_mainline_bounds, rec.release());
    return;
  }

  // The end lies on a branch: promote the chain leading to it.
  auto chain = topology_.chain(*end_path);
  std::vector<std::string> chain_ids;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) chain_ids.push_back((*it)->id);
  const std::string root_anchor = chain.back()->anchor;
  if (!topology_.on_path(PathRef::mainline(), root_anchor)) {
    fail(ErrorCode::internal, "root branch anchor is not on the mainline");
  }

  Recorder rec(topology_);
  const auto root_idx = index_of(topology_.mainline(), root_anchor);
  std::vector<std::string> tail(topology_.mainline().begin() + static_cast<std::ptrdiff_t>(root_idx) + 1,
                                topology_.mainline().end());
  if (!tail.empty()) {
    for (std::size_t k = topology_.mainline().size(); k-- > root_idx + 1;) {
      rec(edit::PathSlot{PathRef::mainline(), k, topology_.mainline()[k], false});
    }
    Branch demoted;
    demoted.ordinal = alloc_.next_branch++;
    demoted.id = prefix_ + "b" + std::to_string(demoted.ordinal);
    demoted.parent = PathRef::mainline();
    demoted.anchor = root_anchor;
    demoted.intent = std::string(kDemotedMainlineIntent);
    rec(edit::BranchRecord{demoted, true});
    const auto demoted_path = PathRef::branch(demoted.id);
    for (std::size_t j = 0; j < tail.size(); ++j) {
      rec(edit::PathSlot{demoted_path, j, tail[j], true});
    }
    std::vector<std::string> relink;
    for (const auto& [bid, b] : topology_.branches()) {
      if (b.parent.is_mainline() && std::find(tail.begin(), tail.end(), b.anchor) != tail.end()) {
        relink.push_back(bid);
      }
    }
    for (const auto& bid : relink) {
      const auto& b = topology_.branch(bid);
      rec(edit::Link{bid, b.parent, b.anchor, demoted_path, b.anchor});
    }
  }

  for (std::size_t k = 0; k < chain_ids.size(); ++k) {
    const auto cur_path = PathRef::branch(chain_ids[k]);
    const std::string cut_id =
        k + 1 < chain_ids.size() ? topology_.branch(chain_ids[k + 1]).anchor : *end;
    const auto cut = index_of(topology_.branch(chain_ids[k]).segment, cut_id);
    std::vector<std::string> promoted;
    for (std::size_t j = 0; j <= cut; ++j) {
      const std::string id = topology_.branch(chain_ids[k]).segment.front();
      rec(edit::PathSlot{cur_path, 0, id, false});
      rec(edit::PathSlot{PathRef::mainline(), topology_.mainline().size(), id, true});
      promoted.push_back(id);
    }
    std::vector<std::string> relink;
    for (const auto& [bid, b] : topology_.branches()) {
      if (b.parent == cur_path &&
          std::find(promoted.begin(), promoted.end(), b.anchor) != promoted.end()) {
        relink.push_back(bid);
      }
    }
    for (const auto& bid : relink) {
      const auto& b = topology_.branch(bid);
      rec(edit::Link{bid, b.parent, b.anchor, PathRef::mainline(), b.anchor});
    }
    const auto& cur = topology_.branch(chain_ids[k]);
    if (cur.segment.empty()) {
      rec(edit::BranchRecord{cur, false});
    } else {
      rec(edit::Link{cur.id, cur.parent, cur.anchor, PathRef::mainline(), cut_id});
    }
  }

  const auto& new_ml = topology_.mainline();
  std::string new_start = topology_.mainline_start();
  if (std::find(new_ml.begin(), new_ml.end(), new_start) == new_ml.end()) new_start = new_ml.front();
  if (start) new_start = *start;
  if (index_of(new_ml, new_start) > index_of(new_ml, *end)) {
    fail(ErrorCode::invalid_argument, "mainline start lies after mainline end");
  }
  rec(edit::Bounds{topology_.mainline_start(), topology_.mainline_end(), new_start, *end});
  commit(MutationKind::set_mainline_bounds, rec.release());
}

void ContextGraph::edit_node(const std::string& node_id, std::string content) {
  const auto& n = topology_.node(node_id);
  if (n.placeholder) fail(ErrorCode::invalid_argument, "placeholder '" + node_id + "' cannot be edited");
  Recorder rec(topology_);
  rec(edit::Content{node_id, n.content, std::move(content)});
  commit(MutationKind::edit_node, rec.release());
}

void ContextGraph::annotate_branch(const std::string& branch_id, BranchStatus status,
                                   std::optional<std::string> summary) {
  const auto& b = topology_.branch(branch_id);
  if (b.status == status && b.summary == summary) return;
  Recorder rec(topology_);
  rec(edit::Annotation{branch_id, b.status, b.summary, status, std::move(summary)});
  commit(MutationKind::annotate_branch, rec.release());
}

void ContextGraph::set_layout(const std::string& node_id, std::optional<LayoutPos> pos) {
  (void)topology_.node(node_id);
  TopologyAccess::nodes(topology_).at(node_id).layout_pos = pos;
}

void ContextGraph::undo() {
  if (!can_undo()) fail(ErrorCode::conflict, "nothing to undo");
  const auto& entry = journal_.entries[journal_.cursor - 1];
  for (auto it = entry.edits.rbegin(); it != entry.edits.rend(); ++it) apply(invert(*it));
  --journal_.cursor;
}

void ContextGraph::redo() {
  if (!can_redo()) fail(ErrorCode::conflict, "nothing to redo");
  for (const auto& e : journal_.entries[journal_.cursor].edits) apply(e);
  ++journal_.cursor;
}

void ContextGraph::reset() {
  topology_ = journal_.baseline;
  journal_.cursor = 0;
}

}  // namespace ctxd
