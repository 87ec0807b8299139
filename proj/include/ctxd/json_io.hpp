#pragma once

// JSON mapping of every persisted type. Field names here are the stable
// on-disk and wire schema.

#include "json.hpp"

#include "ctxd/assembly.hpp"
#include "ctxd/decision.hpp"
#include "ctxd/graph.hpp"
#include "ctxd/patterns.hpp"
#include "ctxd/trace.hpp"

namespace ctxd {

void to_json(nlohmann::json& j, const ContextNode& n);
void from_json(const nlohmann::json& j, ContextNode& n);
void to_json(nlohmann::json& j, const PathRef& p);
void from_json(const nlohmann::json& j, PathRef& p);
void to_json(nlohmann::json& j, const Branch& b);
void from_json(const nlohmann::json& j, Branch& b);
void to_json(nlohmann::json& j, const ConversationTopology& t);
void from_json(const nlohmann::json& j, ConversationTopology& t);
void to_json(nlohmann::json& j, const Edit& e);
void from_json(const nlohmann::json& j, Edit& e);
void to_json(nlohmann::json& j, const JournalEntry& e);
void from_json(const nlohmann::json& j, JournalEntry& e);
void to_json(nlohmann::json& j, const MutationJournal& m);
void from_json(const nlohmann::json& j, MutationJournal& m);
void to_json(nlohmann::json& j, const IdAllocator& a);
void from_json(const nlohmann::json& j, IdAllocator& a);
void to_json(nlohmann::json& j, const ContextGraph& g);
void from_json(const nlohmann::json& j, ContextGraph& g);
void to_json(nlohmann::json& j, const DeletionReport& r);

void to_json(nlohmann::json& j, const ContextScopeState& s);
void from_json(const nlohmann::json& j, ContextScopeState& s);
void to_json(nlohmann::json& j, const ChatMessage& m);
void to_json(nlohmann::json& j, const AssembledContext& c);

void to_json(nlohmann::json& j, const StructureDecision& d);
void to_json(nlohmann::json& j, const Suggestion& s);
void from_json(const nlohmann::json& j, Suggestion& s);
void to_json(nlohmann::json& j, const SuggestionBook& b);
void from_json(const nlohmann::json& j, SuggestionBook& b);

void to_json(nlohmann::json& j, const PatternCapsule& c);
void from_json(const nlohmann::json& j, PatternCapsule& c);
void to_json(nlohmann::json& j, const PatternStore& s);
void from_json(const nlohmann::json& j, PatternStore& s);

void to_json(nlohmann::json& j, const QaPair& p);
void from_json(const nlohmann::json& j, QaPair& p);
void to_json(nlohmann::json& j, const TraceEvent& e);
void from_json(const nlohmann::json& j, TraceEvent& e);
void to_json(nlohmann::json& j, const TraceLog& l);
void from_json(const nlohmann::json& j, TraceLog& l);
void to_json(nlohmann::json& j, const UserModel& m);
void from_json(const nlohmann::json& j, UserModel& m);
void to_json(nlohmann::json& j, const UserModelState& s);
void from_json(const nlohmann::json& j, UserModelState& s);

}  // namespace ctxd
