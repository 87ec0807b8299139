#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ctxd {

enum class Role { user, assistant, system };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct LayoutPos {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const LayoutPos&) const = default;
};

/// One atomic context unit: a single message in the conversation.
/// Activation state is not stored here; it belongs to the scope.
struct ContextNode {
  std::string id;
  Role role = Role::user;
  std::string content;
  std::int64_t created_at = 0;
  std::uint64_t seq = 0;
  bool placeholder = false;
  std::optional<LayoutPos> layout_pos;  // UI only, never read by assembly

  bool operator==(const ContextNode&) const = default;
};

/// Names a path in the topology: the mainline, or one branch.
class PathRef {
 public:
  PathRef() = default;

  static PathRef mainline() { return PathRef{}; }
  static PathRef branch(std::string id);
  /// "mainline" or a branch id.
  static PathRef parse(std::string_view text);

  [[nodiscard]] bool is_mainline() const { return branch_.empty(); }
  [[nodiscard]] const std::string& branch_id() const { return branch_; }
  [[nodiscard]] std::string str() const { return is_mainline() ? "mainline" : branch_; }

  auto operator<=>(const PathRef&) const = default;

 private:
  std::string branch_;
};

enum class BranchStatus { active, completed };

std::string_view to_string(BranchStatus status);
BranchStatus branch_status_from_string(std::string_view text);

struct Branch {
  std::string id;
  PathRef parent;
  std::string anchor;
  std::vector<std::string> segment;
  std::optional<std::string> intent;
  BranchStatus status = BranchStatus::active;
  std::optional<std::string> summary;
  std::uint64_t ordinal = 0;  // creation order

  bool operator==(const Branch&) const = default;
};

inline constexpr std::string_view kDemotedMainlineIntent = "demoted mainline";

/// Structural state of one project's conversation. Mutated only through
/// ContextGraph so that every change is journaled.
class ConversationTopology {
 public:
  [[nodiscard]] const std::map<std::string, ContextNode>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<std::string>& mainline() const { return mainline_; }
  [[nodiscard]] const std::map<std::string, Branch>& branches() const { return branches_; }
  [[nodiscard]] const std::string& mainline_start() const { return mainline_start_; }
  [[nodiscard]] const std::string& mainline_end() const { return mainline_end_; }

  [[nodiscard]] const ContextNode* find_node(std::string_view id) const;
  [[nodiscard]] const Branch* find_branch(std::string_view id) const;
  [[nodiscard]] const ContextNode& node(std::string_view id) const;
  [[nodiscard]] const Branch& branch(std::string_view id) const;

  [[nodiscard]] bool has_path(const PathRef& path) const;
  /// The full node sequence of a path (the entire mainline, not the window).
  [[nodiscard]] const std::vector<std::string>& sequence(const PathRef& path) const;
  /// Which path holds the node, if any.
  [[nodiscard]] std::optional<PathRef> locate(std::string_view node_id) const;
  [[nodiscard]] bool on_path(const PathRef& path, std::string_view node_id) const;

  /// Branch chain from the given branch up to its root (child first).
  /// Empty for the mainline. Throws on cycles or dangling parents.
  [[nodiscard]] std::vector<const Branch*> chain(const PathRef& path) const;
  [[nodiscard]] int depth(const PathRef& path) const;
  [[nodiscard]] std::vector<const Branch*> branches_anchored_at(std::string_view node_id) const;
  /// Branches in creation order.
  [[nodiscard]] std::vector<const Branch*> branches_by_ordinal() const;

  bool operator==(const ConversationTopology&) const = default;

 private:
  friend class ContextGraph;
  friend struct TopologyAccess;

  std::vector<std::string>& mutable_sequence(const PathRef& path);

  std::map<std::string, ContextNode> nodes_;
  std::vector<std::string> mainline_;
  std::map<std::string, Branch> branches_;
  std::string mainline_start_;
  std::string mainline_end_;
};

// Primitive, exactly invertible edits. Every journaled mutation is a list
// of these; undo applies the inverses in reverse order.
namespace edit {

struct Node {
  ContextNode node;
  bool insert = true;
  bool operator==(const Node&) const = default;
};

struct PathSlot {
  PathRef path;
  std::size_t index = 0;
  std::string node_id;
  bool insert = true;
  bool operator==(const PathSlot&) const = default;
};

/// Adds or removes a branch record. The segment is always empty here;
/// segment contents move through PathSlot edits.
struct BranchRecord {
  Branch branch;
  bool insert = true;
  bool operator==(const BranchRecord&) const = default;
};

struct Content {
  std::string node_id;
  std::string before;
  std::string after;
  bool operator==(const Content&) const = default;
};

struct Link {
  std::string branch_id;
  PathRef parent_before;
  std::string anchor_before;
  PathRef parent_after;
  std::string anchor_after;
  bool operator==(const Link&) const = default;
};

struct Annotation {
  std::string branch_id;
  BranchStatus status_before = BranchStatus::active;
  std::optional<std::string> summary_before;
  BranchStatus status_after = BranchStatus::active;
  std::optional<std::string> summary_after;
  bool operator==(const Annotation&) const = default;
};

struct Bounds {
  std::string start_before;
  std::string end_before;
  std::string start_after;
  std::string end_after;
  bool operator==(const Bounds&) const = default;
};

}  // namespace edit

using Edit = std::variant<edit::Node, edit::PathSlot, edit::BranchRecord, edit::Content,
                          edit::Link, edit::Annotation, edit::Bounds>;

Edit invert(const Edit& e);

enum class MutationKind {
  append_exchange,
  create_branch,
  delete_nodes,
  set_mainline_bounds,
  edit_node,
  annotate_branch,
};

std::string_view to_string(MutationKind kind);
MutationKind mutation_kind_from_string(std::string_view text);

struct JournalEntry {
  MutationKind kind = MutationKind::append_exchange;
  std::vector<Edit> edits;
  bool operator==(const JournalEntry&) const = default;
};

struct MutationJournal {
  std::vector<JournalEntry> entries;
  std::size_t cursor = 0;  // entries[0, cursor) are applied
  ConversationTopology baseline;
  bool operator==(const MutationJournal&) const = default;
};

/// Monotone counters. Never rolled back by undo, so ids are never reused.
struct IdAllocator {
  std::uint64_t next_node = 1;
  std::uint64_t next_branch = 1;
  std::uint64_t next_placeholder = 1;
  std::uint64_t next_seq = 1;
  std::int64_t clock = 0;
  bool operator==(const IdAllocator&) const = default;
};

struct PlaceholderRecord {
  std::string placeholder_id;
  std::string origin_id;
  bool operator==(const PlaceholderRecord&) const = default;
};

struct DeletionReport {
  std::vector<std::string> removed;  // deleted outright
  std::vector<PlaceholderRecord> placeholders;
  std::vector<std::string> removed_branches;
  std::vector<std::string> retained_placeholders;  // deleted ids that already were placeholders
  bool operator==(const DeletionReport&) const = default;
};

/// Owns a topology plus its mutation journal. All writes go through here.
/// Not internally synchronized: callers serialize writers per project.
class ContextGraph {
 public:
  explicit ContextGraph(std::string id_prefix = {});

  [[nodiscard]] const ConversationTopology& topology() const { return topology_; }
  [[nodiscard]] const MutationJournal& journal() const { return journal_; }
  [[nodiscard]] const IdAllocator& allocator() const { return alloc_; }
  [[nodiscard]] const std::string& id_prefix() const { return prefix_; }

  std::string allocate_node_id();
  /// Advances the logical clock and returns the new tick.
  std::int64_t tick();
  [[nodiscard]] std::int64_t now() const { return alloc_.clock; }

  /// Appends user then assistant to the tail of `path`. Timestamps come from
  /// the clock unless `at` pins both (must not go backwards).
  void append_exchange(const PathRef& path, ContextNode user, ContextNode assistant,
                       std::optional<std::int64_t> at = std::nullopt);

  std::string create_branch(const PathRef& parent, const std::string& anchor,
                            std::optional<std::string> intent = std::nullopt);
  std::string rebranch_from(const std::string& node_id,
                            std::optional<std::string> intent = std::nullopt);

  [[nodiscard]] DeletionReport preview_delete(std::span<const std::string> ids) const;
  DeletionReport delete_nodes(std::span<const std::string> ids);

  void set_mainline_bounds(const std::optional<std::string>& start,
                           const std::optional<std::string>& end);

  void edit_node(const std::string& node_id, std::string content);
  void annotate_branch(const std::string& branch_id, BranchStatus status,
                       std::optional<std::string> summary);

  /// Layout is not part of the structure and is not journaled.
  void set_layout(const std::string& node_id, std::optional<LayoutPos> pos);

  [[nodiscard]] bool can_undo() const { return journal_.cursor > 0; }
  [[nodiscard]] bool can_redo() const { return journal_.cursor < journal_.entries.size(); }
  void undo();
  void redo();
  void reset();

  bool operator==(const ContextGraph&) const = default;

 private:
  friend struct GraphAccess;

  struct DeletionPlan;
  DeletionPlan plan_deletion(std::span<const std::string> ids) const;

  void apply(const Edit& e);
  void commit(MutationKind kind, std::vector<Edit> edits);

  std::string prefix_;
  ConversationTopology topology_;
  MutationJournal journal_;
  IdAllocator alloc_;
};

/// Applies one edit to a bare topology. Exposed for deserialization
/// and tests; throws Error(internal) when the edit does not fit the state.
void apply_edit(ConversationTopology& topology, const Edit& e);

/// Grants serialization code access to private state.
struct GraphAccess {
  static ConversationTopology& topology(ContextGraph& g) { return g.topology_; }
  static MutationJournal& journal(ContextGraph& g) { return g.journal_; }
  static IdAllocator& allocator(ContextGraph& g) { return g.alloc_; }
  static std::string& prefix(ContextGraph& g) { return g.prefix_; }
};

struct TopologyAccess {
  static std::map<std::string, ContextNode>& nodes(ConversationTopology& t) { return t.nodes_; }
  static std::vector<std::string>& mainline(ConversationTopology& t) { return t.mainline_; }
  static std::map<std::string, Branch>& branches(ConversationTopology& t) { return t.branches_; }
  static std::string& start(ConversationTopology& t) { return t.mainline_start_; }
  static std::string& end(ConversationTopology& t) { return t.mainline_end_; }
};

}  // namespace ctxd
