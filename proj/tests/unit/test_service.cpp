#include "doctest.h"

#include <fstream>
#include <thread>

#include "ctxd/error.hpp"
#include "ctxd/server.hpp"
#include "ctxd/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "oracle.hpp"
#include "tempdir.hpp"

using namespace ctxd;
using nlohmann::json;
using testing::decision_json;
using testing::ScriptedBackend;
using testing::TempDir;

namespace {

struct Api {
  TempDir dir{"svc"};
  ScriptedBackend backend;
  std::unique_ptr<Service> svc;

  Api() { reopen(); }
  void reopen() { svc = std::make_unique<Service>(ProjectStore(dir.path), backend); }

  ApiResponse call(const std::string& method, const std::string& path, const json& body = nullptr) {
    return svc->handle({method, path, body.is_null() ? std::string{} : body.dump(), {}});
  }
  json ok(const std::string& method, const std::string& path, const json& body = nullptr) {
    auto r = call(method, path, body);
    INFO(method << " " << path << " -> " << r.status << " " << r.body);
    REQUIRE(r.status == 200);
    return r.content_type == "application/json" ? r.json() : json(r.body);
  }
  std::string new_project() { return ok("POST", "/projects", {{"title", "t"}})["id"]; }
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("project lifecycle") {
  Api a;
  CHECK(a.ok("GET", "/projects")["projects"].empty());
  auto p = a.ok("POST", "/projects", {{"title", "Career"}});
  CHECK(p["id"] == "P1");
  CHECK(p["title"] == "Career");
  CHECK(a.ok("POST", "/projects")["id"] == "P2");
  CHECK(a.ok("GET", "/projects")["projects"].size() == 2);
  auto doc = a.ok("GET", "/projects/P1");
  CHECK(doc["id"] == "P1");
  CHECK(a.call("GET", "/projects/P9").status == 404);
  CHECK(a.call("DELETE", "/projects").status == 405);
  CHECK(a.call("GET", "/nowhere").status == 404);
}

TEST_CASE("messages, topology and versions") {
  Api a;
  auto pid = a.new_project();
  auto t1 = a.ok("POST", "/projects/" + pid + "/messages", {{"text", "hello"}});
  CHECK(t1["user_node"] == "P1.n1");
  CHECK(t1["assistant_node"] == "P1.n2");
  CHECK(t1["assistant_text"] == "Mock reply to: hello");
  CHECK(t1["suggestion"].is_null());
  const auto v1 = t1["version"].get<int>();
  auto topo = a.ok("GET", "/projects/" + pid + "/topology");
  CHECK(topo["visible"] == json{"P1.n1", "P1.n2"});
  CHECK(topo["effective"] == json{"P1.n1", "P1.n2"});
  CHECK(topo["version"] == v1);
  CHECK(topo["can_undo"] == true);
  auto t2 = a.ok("POST", "/projects/" + pid + "/messages", {{"text", "again"}});
  CHECK(t2["version"].get<int>() > v1);
  CHECK(t2["assembled"]["messages"].size() == 3);
}

TEST_CASE("bad requests map to status codes") {
  Api a;
  auto pid = a.new_project();
  const auto msgs = "/projects/" + pid + "/messages";
  CHECK(a.call("POST", msgs, {{"text", 3}}).status == 400);
  CHECK(a.call("POST", msgs, {{"text", "x"}, {"extra", 1}}).status == 400);
  CHECK(a.svc->handle({"POST", msgs, "{not json", {}}).status == 400);
  CHECK(a.call("POST", msgs, {{"text", ""}}).status == 400);
  CHECK(a.call("GET", msgs).status == 405);
  CHECK(a.call("POST", "/projects/" + pid + "/scope", {{"op", "flip"}, {"ids", {"P1.n1"}}}).status == 400);
  CHECK(a.call("POST", "/projects/" + pid + "/scope", {{"op", "exclude"}, {"ids", {"P1.n9"}}}).status == 404);
  CHECK(a.call("PATCH", "/nodes/P1.n9", {{"content", "x"}}).status == 404);
  CHECK(a.call("PATCH", "/nodes/Q.n1", {{"content", "x"}}).status == 404);
  CHECK(a.call("POST", "/suggestions/P1.s1/respond", {{"action", "accept"}}).status == 404);
  CHECK(a.call("POST", "/projects/" + pid + "/patterns/import", nullptr).status == 422);
  auto err = a.call("POST", "/projects/" + pid + "/history", {{"op", "sideways"}}).json();
  CHECK(err["error"]["code"] == "invalid_argument");
  CHECK(http_status(ErrorCode::backend_error) == 502);
  CHECK(http_status(ErrorCode::conflict) == 409);
}

TEST_CASE("a failed turn leaves the project untouched on disk and in memory") {
  Api a;
  auto pid = a.new_project();
  a.ok("POST", "/projects/" + pid + "/messages", {{"text", "one"}});
  const auto before = a.svc->project(pid);
  a.backend.on(AgentRole::conversation, [](const LlmRequest&) -> std::string {
    throw Error(ErrorCode::backend_error, "offline");
  });
  auto r = a.call("POST", "/projects/" + pid + "/messages", {{"text", "two"}});
  CHECK(r.status == 502);
  CHECK(a.svc->project(pid) == before);
  CHECK(a.svc->store().load(pid) == before);
}

TEST_CASE("suggestion flow over the API") {
  Api a;
  a.backend.on(AgentRole::structure, [](const LlmRequest& r) {
    const bool pivot = r.messages.back().content.find("pivot") != std::string::npos;
    return decision_json(pivot ? "branch" : "continue", "none", pivot);
  });
  auto pid = a.new_project();
  a.ok("POST", "/projects/" + pid + "/messages", {{"text", "start"}});
  auto t = a.ok("POST", "/projects/" + pid + "/messages", {{"text", "time to pivot"}});
  REQUIRE(t["suggestion"].is_object());
  const std::string sid = t["suggestion"]["id"];
  CHECK(a.ok("GET", "/projects/" + pid + "/topology")["pending_suggestion"]["id"] == sid);
  auto fx = a.ok("POST", "/suggestions/" + sid + "/respond", {{"action", "accept"}});
  CHECK(fx["suggestion"]["state"] == "accepted");
  CHECK(fx["base_path"] == fx["branch_id"]);
  CHECK(a.call("POST", "/suggestions/" + sid + "/respond", {{"action", "reject"}}).status == 409);
  auto sugg = a.ok("GET", "/projects/" + pid + "/suggestions")["suggestions"];
  CHECK(sugg.size() == 1);
  auto traces = a.ok("GET", "/projects/" + pid + "/traces").get<std::string>();
  CHECK(traces.find("suggestion_accepted") != std::string::npos);
  CHECK(a.call("GET", "/projects/" + pid + "/traces").content_type == "application/x-ndjson");
}

TEST_CASE("structure edits over the API") {
  Api a;
  auto pid = a.new_project();
  for (const char* s : {"a", "b", "c"}) a.ok("POST", "/projects/" + pid + "/messages", {{"text", s}});
  auto br = a.ok("POST", "/nodes/P1.n2/branch", {{"intent", "side"}});
  CHECK(br["branch"]["anchor"] == "P1.n2");
  CHECK(br["base_path"] == br["branch_id"]);
  auto back = a.ok("POST", "/projects/" + pid + "/path", {{"target", "mainline"}});
  CHECK(back["base_path"] == "mainline");
  CHECK(back["completed_branches"] == json{br["branch_id"]});

  auto prev = a.ok("POST", "/projects/" + pid + "/nodes/delete", {{"ids", {"P1.n4"}}, {"preview", true}});
  CHECK(prev["preview"] == true);
  CHECK(a.svc->project(pid).graph.topology().find_node("P1.n4") != nullptr);
  a.ok("POST", "/projects/" + pid + "/nodes/delete", {{"ids", {"P1.n4"}}});

  auto patched = a.ok("PATCH", "/nodes/P1.n1", {{"content", "A"}, {"layout_pos", {3, 4}}});
  CHECK(patched["node"]["content"] == "A");
  CHECK(patched["node"]["layout_pos"] == json{3, 4});
  a.ok("PATCH", "/nodes/P1.n1", {{"layout_pos", nullptr}});
  CHECK(a.call("PATCH", "/nodes/P1.n1", json::object()).status == 400);

  auto scope = a.ok("POST", "/projects/" + pid + "/scope", {{"op", "exclude"}, {"ids", {"P1.n1"}}});
  CHECK(scope["deactivated"] == json{"P1.n1"});
  auto topo = a.ok("GET", "/projects/" + pid + "/topology");
  CHECK(std::find(topo["effective"].begin(), topo["effective"].end(), "P1.n1") == topo["effective"].end());

  a.ok("POST", "/projects/" + pid + "/mainline", {{"start", "P1.n2"}});
  auto h = a.ok("POST", "/projects/" + pid + "/history", {{"op", "undo"}});
  CHECK(h["can_redo"] == true);
  a.ok("POST", "/projects/" + pid + "/history", {{"op", "redo"}});
  a.ok("POST", "/nodes/P1.n5/rebranch", json::object());
}

TEST_CASE("pattern routes and the review gate") {
  Api a;
  a.backend.on(AgentRole::extraction, [](const LlmRequest&) {
    return std::string(R"({"name":"N","requires_human_review":true,"instruction":"I","example":"E"})");
  });
  auto pid = a.new_project();
  a.ok("POST", "/projects/" + pid + "/messages", {{"text", "a"}});
  auto c = a.ok("POST", "/projects/" + pid + "/patterns/extract", {{"type", "reasoning"}, {"ids", {"P1.n1", "P1.n2"}}});
  const std::string cid = c["capsule"]["id"];
  CHECK(c["capsule"]["state"] == "needs_review");
  CHECK(a.call("POST", "/patterns/" + cid + "/enabled", {{"enabled", true}}).status == 409);
  CHECK(a.call("POST", "/patterns/" + cid + "/review", {{"edits", {{"colour", "x"}}}, {"approve", true}}).status == 400);
  auto r = a.ok("POST", "/patterns/" + cid + "/review", {{"edits", {{"name", "Better"}}}, {"approve", true}});
  CHECK(r["capsule"]["state"] == "active");
  CHECK(r["capsule"]["name"] == "Better");
  auto exported = a.ok("GET", "/projects/" + pid + "/patterns/export");
  CHECK(exported.size() == 1);

  auto other = a.new_project();
  auto imp = a.svc->handle({"POST", "/projects/" + other + "/patterns/import", exported.dump(), {}});
  REQUIRE(imp.status == 200);
  auto pats = a.ok("GET", "/projects/" + other + "/patterns")["patterns"];
  REQUIRE(pats.size() == 1);
  CHECK(pats[0]["state"] == "needs_review");
  CHECK(pats[0]["id"] == other + ".c1");
}

TEST_CASE("user model routes") {
  Api a;
  auto pid = a.new_project();
  auto m = a.ok("GET", "/projects/" + pid + "/user-model");
  CHECK(m["stored"] == false);
  CHECK(m["model"]["lifecycle"] == "cold_start");
  CHECK(m["injected"] == false);
  auto up = a.ok("POST", "/projects/" + pid + "/user-model");
  CHECK(up["called_backend"] == false);
  CHECK(up["model"]["lifecycle"] == "cold_start");
  CHECK(a.ok("GET", "/projects/" + pid + "/user-model")["stored"] == true);
}

TEST_CASE("projects survive a restart; corrupt documents are skipped") {
  Api a;
  auto pid = a.new_project();
  a.ok("POST", "/projects/" + pid + "/messages", {{"text", "remember me"}});
  a.ok("POST", "/nodes/P1.n2/branch", {{"intent", "x"}});
  const auto before = a.svc->project(pid);
  {
    std::ofstream bad(a.dir.path / "P7.json");
    bad << "{\"schema\": 1, \"id\": ";
  }
  a.reopen();
  CHECK(a.svc->project_ids() == std::vector<std::string>{"P1"});
  CHECK(a.svc->project(pid) == before);
  CHECK(a.ok("POST", "/projects")["id"] == "P8");
  CHECK_FALSE(std::filesystem::exists(a.dir.path / "P1.json.tmp"));
}

TEST_CASE("store rejects unsafe ids and mismatched documents") {
  TempDir d;
  ProjectStore store(d.path);
  CHECK_THROWS_AS((void)store.file_for("../etc"), Error);
  CHECK_THROWS_AS((void)store.file_for(""), Error);
  Project p("P3", "x");
  store.save(p);
  CHECK(store.load("P3") == p);
  std::filesystem::copy_file(d.path / "P3.json", d.path / "P4.json");
  try {
    (void)store.load("P4");
    FAIL("mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
  try {
    (void)store.load("P5");
    FAIL("missing accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_found);
  }
  CHECK(store.next_id() == "P5");
}

TEST_CASE("different projects are served in parallel") {
  Api a;
  std::atomic<int> inflight{0}, peak{0};
  a.backend.on(AgentRole::conversation, [&](const LlmRequest&) {
    int now = ++inflight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(80));
    --inflight;
    return std::string("ok");
  });
  auto p1 = a.new_project();
  auto p2 = a.new_project();
  std::thread t1([&] { a.call("POST", "/projects/" + p1 + "/messages", {{"text", "x"}}); });
  std::thread t2([&] { a.call("POST", "/projects/" + p2 + "/messages", {{"text", "y"}}); });
  t1.join();
  t2.join();
  CHECK(peak.load() == 2);

  // Same project: serialized, and both turns land.
  peak = 0;
  std::thread t3([&] { a.call("POST", "/projects/" + p1 + "/messages", {{"text", "x"}}); });
  std::thread t4([&] { a.call("POST", "/projects/" + p1 + "/messages", {{"text", "y"}}); });
  t3.join();
  t4.join();
  CHECK(peak.load() == 1);
  CHECK(a.svc->project(p1).graph.topology().mainline().size() == 6);
}

TEST_CASE("listen addresses") {
  CHECK(parse_listen_address("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
  CHECK(parse_listen_address(":81") == std::pair<std::string, int>{"127.0.0.1", 81});
  CHECK(parse_listen_address("8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK_THROWS_AS(parse_listen_address("host:port"), Error);
  CHECK_THROWS_AS(parse_listen_address("h:70000"), Error);
}

TEST_CASE("the HTTP front end serves the API") {
  Api a;
  HttpFrontend http(*a.svc);
  const int port = http.bind("127.0.0.1", 0);
  std::thread server([&] { http.run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(std::chrono::seconds(5));
  auto created = client.Post("/projects", R"({"title":"web"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 200);
  auto msg = client.Post("/projects/P1/messages", R"({"text":"over http"})", "application/json");
  REQUIRE(msg);
  CHECK(json::parse(msg->body)["assistant_text"] == "Mock reply to: over http");
  auto patch = client.Patch("/nodes/P1.n1", R"({"layout_pos":[1,2]})", "application/json");
  REQUIRE(patch);
  CHECK(patch->status == 200);
  auto missing = client.Get("/projects/P2/topology");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto traces = client.Get("/projects/P1/traces");
  REQUIRE(traces);
  CHECK(traces->get_header_value("Content-Type") == "application/x-ndjson");
  http.stop();
  server.join();
}

}  // TEST_SUITE
