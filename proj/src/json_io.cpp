#include "ctxd/json_io.hpp"

#include "ctxd/error.hpp"

namespace ctxd {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// -- graph ------------------------------------------------------------------

void to_json(json& j, const ContextNode& n) {
  j = json{{"id", n.id},
           {"role", std::string(to_string(n.role))},
           {"content", n.content},
           {"created_at", n.created_at},
           {"seq", n.seq},
           {"placeholder", n.placeholder},
           {"layout_pos", n.layout_pos ? json::array({n.layout_pos->x, n.layout_pos->y}) : json(nullptr)}};
}

void from_json(const json& j, ContextNode& n) {
  n.id = j.at("id").get<std::string>();
  n.role = role_from_string(j.at("role").get<std::string>());
  n.content = j.at("content").get<std::string>();
  n.created_at = j.at("created_at").get<std::int64_t>();
  n.seq = j.at("seq").get<std::uint64_t>();
  n.placeholder = j.at("placeholder").get<bool>();
  n.layout_pos.reset();
  if (auto it = j.find("layout_pos"); it != j.end() && !it->is_null()) {
    n.layout_pos = LayoutPos{it->at(0).get<double>(), it->at(1).get<double>()};
  }
}

void to_json(json& j, const PathRef& p) { j = p.str(); }
void from_json(const json& j, PathRef& p) { p = PathRef::parse(j.get<std::string>()); }

void to_json(json& j, const Branch& b) {
  j = json{{"id", b.id},
           {"parent", b.parent},
           {"anchor", b.anchor},
           {"segment", b.segment},
           {"intent", opt(b.intent)},
           {"status", std::string(to_string(b.status))},
           {"summary", opt(b.summary)},
           {"ordinal", b.ordinal}};
}

void from_json(const json& j, Branch& b) {
  b.id = j.at("id").get<std::string>();
  b.parent = j.at("parent").get<PathRef>();
  b.anchor = j.at("anchor").get<std::string>();
  b.segment = j.at("segment").get<std::vector<std::string>>();
  b.intent = get_opt<std::string>(j, "intent");
  b.status = branch_status_from_string(j.at("status").get<std::string>());
  b.summary = get_opt<std::string>(j, "summary");
  b.ordinal = j.at("ordinal").get<std::uint64_t>();
}

void to_json(json& j, const ConversationTopology& t) {
  std::vector<const ContextNode*> nodes;
  for (const auto& [id, n] : t.nodes()) nodes.push_back(&n);
  std::sort(nodes.begin(), nodes.end(),
            [](const ContextNode* a, const ContextNode* b) { return a->seq < b->seq; });
  json jn = json::array();
  for (const auto* n : nodes) jn.push_back(*n);
  json jb = json::array();
  for (const auto* b : t.branches_by_ordinal()) jb.push_back(*b);
  j = json{{"nodes", std::move(jn)},
           {"mainline", t.mainline()},
           {"mainline_start", t.mainline_start()},
           {"mainline_end", t.mainline_end()},
           {"branches", std::move(jb)}};
}

void from_json(const json& j, ConversationTopology& t) {
  t = ConversationTopology{};
  auto& nodes = TopologyAccess::nodes(t);
  for (const auto& jn : j.at("nodes")) {
    auto n = jn.get<ContextNode>();
    auto id = n.id;
    if (!nodes.emplace(id, std::move(n)).second) {
      fail(ErrorCode::parse_error, "duplicate node id '" + id + "' in document");
    }
  }
  TopologyAccess::mainline(t) = j.at("mainline").get<std::vector<std::string>>();
  TopologyAccess::start(t) = j.at("mainline_start").get<std::string>();
  TopologyAccess::end(t) = j.at("mainline_end").get<std::string>();
  auto& branches = TopologyAccess::branches(t);
  for (const auto& jb : j.at("branches")) {
    auto b = jb.get<Branch>();
    auto id = b.id;
    if (!branches.emplace(id, std::move(b)).second) {
      fail(ErrorCode::parse_error, "duplicate branch id '" + id + "' in document");
    }
  }
}

void to_json(json& j, const Edit& e) {
  std::visit(overloaded{
                 [&](const edit::Node& x) {
                   j = json{{"op", "node"}, {"insert", x.insert}, {"node", x.node}};
                 },
                 [&](const edit::PathSlot& x) {
                   j = json{{"op", "slot"}, {"insert", x.insert}, {"path", x.path},
                            {"index", x.index}, {"node_id", x.node_id}};
                 },
                 [&](const edit::BranchRecord& x) {
                   j = json{{"op", "branch"}, {"insert", x.insert}, {"branch", x.branch}};
                 },
                 [&](const edit::Content& x) {
                   j = json{{"op", "content"}, {"node_id", x.node_id}, {"before", x.before},
                            {"after", x.after}};
                 },
                 [&](const edit::Link& x) {
                   j = json{{"op", "link"},
                            {"branch_id", x.branch_id},
                            {"parent_before", x.parent_before},
                            {"anchor_before", x.anchor_before},
                            {"parent_after", x.parent_after},
                            {"anchor_after", x.anchor_after}};
                 },
                 [&](const edit::Annotation& x) {
                   j = json{{"op", "annotation"},
                            {"branch_id", x.branch_id},
                            {"status_before", std::string(to_string(x.status_before))},
                            {"summary_before", opt(x.summary_before)},
                            {"status_after", std::string(to_string(x.status_after))},
                            {"summary_after", opt(x.summary_after)}};
                 },
                 [&](const edit::Bounds& x) {
                   j = json{{"op", "bounds"},
                            {"start_before", x.start_before},
                            {"end_before", x.end_before},
                            {"start_after", x.start_after},
                            {"end_after", x.end_after}};
                 },
             },
             e);
}

void from_json(const json& j, Edit& e) {
  const auto op = j.at("op").get<std::string>();
  if (op == "node") {
    e = edit::Node{j.at("node").get<ContextNode>(), j.at("insert").get<bool>()};
  } else if (op == "slot") {
    e = edit::PathSlot{j.at("path").get<PathRef>(), j.at("index").get<std::size_t>(),
                       j.at("node_id").get<std::string>(), j.at("insert").get<bool>()};
  } else if (op == "branch") {
    e = edit::BranchRecord{j.at("branch").get<Branch>(), j.at("insert").get<bool>()};
  } else if (op == "content") {
    e = edit::Content{j.at("node_id").get<std::string>(), j.at("before").get<std::string>(),
                      j.at("after").get<std::string>()};
  } else if (op == "link") {
    e = edit::Link{j.at("branch_id").get<std::string>(), j.at("parent_before").get<PathRef>(),
                   j.at("anchor_before").get<std::string>(), j.at("parent_after").get<PathRef>(),
                   j.at("anchor_after").get<std::string>()};
  } else if (op == "annotation") {
    e = edit::Annotation{j.at("branch_id").get<std::string>(),
                         branch_status_from_string(j.at("status_before").get<std::string>()),
                         get_opt<std::string>(j, "summary_before"),
                         branch_status_from_string(j.at("status_after").get<std::string>()),
                         get_opt<std::string>(j, "summary_after")};
  } else if (op == "bounds") {
    e = edit::Bounds{j.at("start_before").get<std::string>(), j.at("end_before").get<std::string>(),
                     j.at("start_after").get<std::string>(), j.at("end_after").get<std::string>()};
  } else {
    fail(ErrorCode::parse_error, "unknown journal edit '" + op + "'");
  }
}

void to_json(json& j, const JournalEntry& e) {
  json edits = json::array();
  for (const auto& x : e.edits) {
    json je;
    to_json(je, x);
    edits.push_back(std::move(je));
  }
  j = json{{"kind", std::string(to_string(e.kind))}, {"edits", std::move(edits)}};
}

void from_json(const json& j, JournalEntry& e) {
  e.kind = mutation_kind_from_string(j.at("kind").get<std::string>());
  e.edits.clear();
  for (const auto& je : j.at("edits")) {
    Edit x;
    from_json(je, x);
    e.edits.push_back(std::move(x));
  }
}

void to_json(json& j, const MutationJournal& m) {
  j = json{{"entries", m.entries}, {"cursor", m.cursor}, {"baseline", m.baseline}};
}

void from_json(const json& j, MutationJournal& m) {
  m.entries = j.at("entries").get<std::vector<JournalEntry>>();
  m.cursor = j.at("cursor").get<std::size_t>();
  m.baseline = j.at("baseline").get<ConversationTopology>();
  if (m.cursor > m.entries.size()) fail(ErrorCode::parse_error, "journal cursor out of range");
}

void to_json(json& j, const IdAllocator& a) {
  j = json{{"next_node", a.next_node},
           {"next_branch", a.next_branch},
           {"next_placeholder", a.next_placeholder},
           {"next_seq", a.next_seq},
           {"clock", a.clock}};
}

void from_json(const json& j, IdAllocator& a) {
  a.next_node = j.at("next_node").get<std::uint64_t>();
  a.next_branch = j.at("next_branch").get<std::uint64_t>();
  a.next_placeholder = j.at("next_placeholder").get<std::uint64_t>();
  a.next_seq = j.at("next_seq").get<std::uint64_t>();
  a.clock = j.at("clock").get<std::int64_t>();
}

void to_json(json& j, const ContextGraph& g) {
  j = json{{"id_prefix", g.id_prefix()},
           {"topology", g.topology()},
           {"journal", g.journal()},
           {"allocator", g.allocator()}};
}

void from_json(const json& j, ContextGraph& g) {
  GraphAccess::prefix(g) = j.at("id_prefix").get<std::string>();
  GraphAccess::topology(g) = j.at("topology").get<ConversationTopology>();
  GraphAccess::journal(g) = j.at("journal").get<MutationJournal>();
  GraphAccess::allocator(g) = j.at("allocator").get<IdAllocator>();
}

void to_json(json& j, const DeletionReport& r) {
  json ph = json::array();
  for (const auto& p : r.placeholders) {
    ph.push_back({{"placeholder_id", p.placeholder_id}, {"origin_id", p.origin_id}});
  }
  j = json{{"removed", r.removed},
           {"placeholders", std::move(ph)},
           {"removed_branches", r.removed_branches},
           {"retained_placeholders", r.retained_placeholders}};
}

// -- assembly ---------------------------------------------------------------

void to_json(json& j, const ContextScopeState& s) {
  j = json{{"base_path", s.base_path},
           {"excluded_nodes", s.excluded_nodes},
           {"included_nodes", s.included_nodes},
           {"truncate_at", opt(s.truncate_at)}};
}

void from_json(const json& j, ContextScopeState& s) {
  s.base_path = j.at("base_path").get<PathRef>();
  s.excluded_nodes = j.at("excluded_nodes").get<std::set<std::string>>();
  s.included_nodes = j.at("included_nodes").get<std::set<std::string>>();
  s.truncate_at = get_opt<std::string>(j, "truncate_at");
}

void to_json(json& j, const ChatMessage& m) {
  j = json{{"role", std::string(to_string(m.role))}, {"content", m.content}};
}

void to_json(json& j, const AssembledContext& c) {
  j = json{{"system_text", c.system_text},
           {"messages", c.messages},
           {"final_user_turn", c.final_user_turn}};
}

// -- decisions --------------------------------------------------------------

void to_json(json& j, const StructureDecision& d) {
  j = json::parse(serialize_structure_decision(d));
}

void to_json(json& j, const Suggestion& s) {
  j = json{{"id", s.id},
           {"decision", s.decision},
           {"anchor_node", s.anchor_node},
           {"path", s.path},
           {"state", std::string(to_string(s.state))},
           {"created_at", s.created_at},
           {"resolution", opt(s.resolution)}};
}

void from_json(const json& j, Suggestion& s) {
  s.id = j.at("id").get<std::string>();
  s.decision = parse_structure_decision(j.at("decision").dump());
  s.anchor_node = j.at("anchor_node").get<std::string>();
  s.path = j.at("path").get<PathRef>();
  s.state = suggestion_state_from_string(j.at("state").get<std::string>());
  s.created_at = j.at("created_at").get<std::int64_t>();
  s.resolution = get_opt<std::string>(j, "resolution");
}

void to_json(json& j, const SuggestionBook& b) {
  j = json{{"next_ordinal", b.next_ordinal}, {"items", b.all()}};
}

void from_json(const json& j, SuggestionBook& b) {
  b.next_ordinal = j.at("next_ordinal").get<std::uint64_t>();
  SuggestionBookAccess::items(b) = j.at("items").get<std::vector<Suggestion>>();
  int pending = 0;
  for (const auto& s : b.all()) pending += s.state == SuggestionState::pending ? 1 : 0;
  if (pending > 1) fail(ErrorCode::parse_error, "more than one pending suggestion in document");
}

// -- patterns ---------------------------------------------------------------

void to_json(json& j, const PatternCapsule& c) {
  j = json{{"id", c.id},
           {"type", std::string(to_string(c.type))},
           {"name", c.name},
           {"instruction", c.instruction},
           {"example", c.example},
           {"requires_human_review", c.requires_human_review},
           {"state", std::string(to_string(c.state))},
           {"source_nodes", c.source_nodes},
           {"created_at", c.created_at},
           {"activated_at", c.activated_at}};
}

void from_json(const json& j, PatternCapsule& c) {
  c.id = j.at("id").get<std::string>();
  c.type = pattern_type_from_string(j.at("type").get<std::string>());
  c.name = j.at("name").get<std::string>();
  c.instruction = j.at("instruction").get<std::string>();
  c.example = j.at("example").get<std::string>();
  c.requires_human_review = j.at("requires_human_review").get<bool>();
  c.state = capsule_state_from_string(j.at("state").get<std::string>());
  c.source_nodes = j.at("source_nodes").get<std::vector<std::string>>();
  c.created_at = j.at("created_at").get<std::int64_t>();
  c.activated_at = j.at("activated_at").get<std::int64_t>();
}

void to_json(json& j, const PatternStore& s) { j = s.all(); }

void from_json(const json& j, PatternStore& s) {
  PatternStoreAccess::capsules(s) = j.get<std::vector<PatternCapsule>>();
}

// -- traces -----------------------------------------------------------------

void to_json(json& j, const QaPair& p) { j = json{{"user", p.user}, {"assistant", p.assistant}}; }

void from_json(const json& j, QaPair& p) {
  p.user = j.at("user").get<std::string>();
  p.assistant = j.at("assistant").get<std::string>();
}

void to_json(json& j, const TraceEvent& e) {
  j = json{{"id", e.id},
           {"kind", std::string(to_string(e.kind))},
           {"subjects", e.subjects},
           {"compressed_context", e.compressed_context},
           {"detail", e.detail},
           {"created_at", e.created_at}};
}

void from_json(const json& j, TraceEvent& e) {
  e.id = j.at("id").get<std::string>();
  e.kind = trace_kind_from_string(j.at("kind").get<std::string>());
  e.subjects = j.at("subjects").get<std::vector<std::string>>();
  e.compressed_context = j.at("compressed_context").get<std::vector<QaPair>>();
  e.detail = j.at("detail").get<std::string>();
  e.created_at = j.at("created_at").get<std::int64_t>();
}

void to_json(json& j, const TraceLog& l) { j = l.events(); }

void from_json(const json& j, TraceLog& l) {
  l = TraceLog{};
  for (const auto& e : j) l.append(e.get<TraceEvent>());
}

void to_json(json& j, const UserModel& m) {
  json gens = json::array();
  for (const auto& g : m.generalizations) {
    gens.push_back({{"claim", g.claim}, {"evidence_strength", g.evidence_strength}});
  }
  j = json{{"lifecycle", std::string(to_string(m.lifecycle))},
           {"generalizations", std::move(gens)},
           {"supporting_examples", m.supporting_examples},
           {"updated_at", m.updated_at},
           {"raw_json", m.raw_json}};
}

void from_json(const json& j, UserModel& m) {
  m = parse_user_model(j.at("raw_json").get<std::string>(), j.at("updated_at").get<std::int64_t>());
}

void to_json(json& j, const UserModelState& s) {
  j = json{{"model", s.model ? json(*s.model) : json(nullptr)},
           {"consumed_traces", s.consumed_traces}};
}

void from_json(const json& j, UserModelState& s) {
  s.model = get_opt<UserModel>(j, "model");
  s.consumed_traces = j.at("consumed_traces").get<std::size_t>();
}

}  // namespace ctxd
