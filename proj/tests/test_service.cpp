#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "gptree/service.hpp"
#include "httplib.h"

using namespace gptree;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gptree_service_" + name);
  fs::remove_all(p);
  return p;
}

std::string candidate_csv() {
  std::ostringstream out;
  write_dataset(generate_descriptor_analog(10, 5, 3, 4.6, 8.0), out);
  return out.str();
}

json create_body(std::uint64_t seed = 1) {
  return {{"candidates_csv", candidate_csv()},
          {"config", {{"policy", {{"name", "batch-gp-tree"}, {"b", 2}, {"n", 3}, {"K", 2}}}, {"seed", seed}, {"prior_mean", 6.0}}}};
}

std::string create(AdvisorService& svc, std::uint64_t seed = 1) {
  const auto r = svc.dispatch("POST", "/campaigns", create_body(seed).dump());
  REQUIRE(r.status == 201);
  return r.body.at("id").get<std::string>();
}

json observation(const std::string& arm, double y) { return {{"arm_id", arm}, {"y", y}}; }

}  // namespace

TEST_CASE("campaign lifecycle over dispatch") {
  const fs::path store = scratch("lifecycle");
  AdvisorService svc(store.string());
  const std::string id = create(svc);
  CHECK(id == "c0001");

  auto got = svc.dispatch("GET", "/campaigns/" + id, "");
  CHECK(got.status == 200);
  CHECK(got.body.at("status") == "active");
  CHECK(got.body.at("candidates") == 10);

  const auto s = svc.dispatch("POST", "/campaigns/" + id + "/suggest", "");
  REQUIRE(s.status == 200);
  CHECK(s.body.at("arm_ids").size() == 2);
  CHECK(s.body.at("candidates").size() >= 1);

  const std::string arm = s.body.at("arm_ids")[0];
  const auto before = svc.dispatch("GET", "/campaigns/" + id + "/posterior", "", {{"arms", arm}});
  REQUIRE(before.status == 200);
  const double m0 = before.body.at("posterior")[0].at("mean");
  const double s0 = before.body.at("posterior")[0].at("std");

  const double y = 7.5;
  CHECK(svc.dispatch("POST", "/campaigns/" + id + "/observe", observation(arm, y).dump()).status == 200);
  const auto after = svc.dispatch("GET", "/campaigns/" + id + "/posterior", "", {{"arms", arm}});
  const double m1 = after.body.at("posterior")[0].at("mean");
  const double s1 = after.body.at("posterior")[0].at("std");
  CHECK(std::abs(y - m1) < std::abs(y - m0));
  CHECK(s1 < s0);

  // same numbers straight from the GP
  const Campaign& direct = Campaign::load((store / id).string());
  const auto p = direct.posterior({arm});
  CHECK(std::abs(p[0].mean - m1) <= 1e-10);
  CHECK(std::abs(p[0].std - s1) <= 1e-10);

  const auto all = svc.dispatch("GET", "/campaigns/" + id + "/posterior", "");
  CHECK(all.body.at("posterior").size() == 10);
  fs::remove_all(store);
}

TEST_CASE("error codes") {
  const fs::path store = scratch("errors");
  AdvisorService svc(store.string());
  const std::string id = create(svc);
  const std::string arm = "mol00001";

  auto r = svc.dispatch("GET", "/campaigns/c9999", "");
  CHECK(r.status == 404);
  CHECK(r.body.at("code") == "not_found");
  CHECK(svc.dispatch("POST", "/campaigns/c9999/suggest", "").status == 404);
  CHECK(svc.dispatch("POST", "/campaigns/" + id + "/observe", observation("nope", 1.0).dump()).status == 404);
  CHECK(svc.dispatch("GET", "/campaigns/" + id + "/posterior", "", {{"arms", "mol00001,nope"}}).status == 404);
  CHECK(svc.dispatch("GET", "/elsewhere", "").status == 404);

  CHECK(svc.dispatch("POST", "/campaigns/" + id + "/observe", observation(arm, 6.0).dump()).status == 200);
  r = svc.dispatch("POST", "/campaigns/" + id + "/observe", observation(arm, 6.5).dump());
  CHECK(r.status == 409);
  CHECK(r.body.at("code") == "duplicate_observation");

  for (const std::string body : {R"({"arm_id": "mol00002"})", R"({"arm_id": "mol00002", "y": "high"})",
                                 R"({"y": 5.0})", R"([1, 2])", "{not json"}) {
    CAPTURE(body);
    r = svc.dispatch("POST", "/campaigns/" + id + "/observe", body);
    CHECK(r.status == 422);
    CHECK(r.body.at("code") == "schema_violation");
    CHECK(r.body.contains("message"));
  }
  CHECK(svc.dispatch("POST", "/campaigns", R"({"config": {}})").status == 422);
  CHECK(svc.dispatch("POST", "/campaigns", json{{"candidates_csv", "id,y\n"}}.dump()).status == 422);
  CHECK(svc.dispatch("POST", "/campaigns", json{{"candidates_csv", candidate_csv()}, {"config", {{"policy", {{"name", "x"}}}}}}.dump()).status == 422);
  fs::remove_all(store);
}

TEST_CASE("what-if never changes the next suggestion") {
  const fs::path store = scratch("whatif");
  AdvisorService svc(store.string());
  const std::string id = create(svc);
  const auto s0 = svc.dispatch("POST", "/campaigns/" + id + "/suggest", "").body;
  const auto w = svc.dispatch("POST", "/campaigns/" + id + "/whatif", observation("mol00003", 7.9).dump());
  REQUIRE(w.status == 200);
  CHECK(w.body.at("suggestion").at("arm_ids").size() == 2);
  const auto s1 = svc.dispatch("POST", "/campaigns/" + id + "/suggest", "").body;
  CHECK(s0 == s1);
  CHECK(svc.dispatch("GET", "/campaigns/" + id, "").body.at("observed") == 0);
  CHECK(svc.dispatch("POST", "/campaigns/" + id + "/whatif", observation("zzz", 1.0).dump()).status == 404);
  fs::remove_all(store);
}

TEST_CASE("identical campaigns give identical suggestions") {
  const fs::path store = scratch("twins");
  AdvisorService svc(store.string());
  const std::string a = create(svc, 9);
  const std::string b = create(svc, 9);
  CHECK(a != b);
  for (int step = 0; step < 4; ++step) {
    const auto sa = svc.dispatch("POST", "/campaigns/" + a + "/suggest", "").body;
    const auto sb = svc.dispatch("POST", "/campaigns/" + b + "/suggest", "").body;
    CHECK(sa == sb);
    for (const auto& arm : sa.at("arm_ids")) {
      const auto body = observation(arm.get<std::string>(), 5.0 + step).dump();
      svc.dispatch("POST", "/campaigns/" + a + "/observe", body);
      svc.dispatch("POST", "/campaigns/" + b + "/observe", body);
    }
  }
  fs::remove_all(store);
}

TEST_CASE("restart replays persisted campaigns") {
  const fs::path store = scratch("restart");
  json post_before;
  std::string id;
  {
    AdvisorService svc(store.string());
    id = create(svc);
    for (const char* arm : {"mol00002", "mol00005", "mol00007"}) {
      svc.dispatch("POST", "/campaigns/" + id + "/observe", observation(arm, 6.3).dump());
    }
    post_before = svc.dispatch("GET", "/campaigns/" + id + "/posterior", "").body;
  }
  AdvisorService again(store.string());
  const auto post_after = again.dispatch("GET", "/campaigns/" + id + "/posterior", "").body;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(std::abs(post_before["posterior"][i]["mean"].get<double>() - post_after["posterior"][i]["mean"].get<double>()) <= 1e-10);
  }
  CHECK(create(again) == "c0002");
  fs::remove_all(store);
}

TEST_CASE("concurrent observers are serialized") {
  const fs::path store = scratch("concurrent");
  AdvisorService svc(store.string());
  const std::string id = create(svc);
  std::atomic<int> ok{0}, conflicts{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (int i = 1; i <= 10; ++i) {
        char arm[16];
        std::snprintf(arm, sizeof(arm), "mol%05d", i);
        const auto r = svc.dispatch("POST", "/campaigns/" + id + "/observe", observation(arm, 5.0 + 0.1 * w).dump());
        if (r.status == 200) ++ok;
        if (r.status == 409) ++conflicts;
        svc.dispatch("POST", "/campaigns/" + id + "/suggest", "");
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(ok == 10);
  CHECK(conflicts == 30);
  const auto st = svc.dispatch("GET", "/campaigns/" + id, "").body;
  CHECK(st.at("observed") == 10);
  CHECK(st.at("status") == "complete");
  CHECK(svc.dispatch("POST", "/campaigns/" + id + "/suggest", "").body.at("complete") == true);
  fs::remove_all(store);
}

TEST_CASE("http transport and static files") {
  const fs::path store = scratch("http");
  const fs::path ui = scratch("ui");
  fs::create_directories(ui);
  std::ofstream(ui / "index.html") << "<html>advisor</html>";
  AdvisorService svc(store.string());
  httplib::Server server;
  mount_routes(server, svc, ui.string());
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/campaigns", create_body().dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body).at("id");
  auto sug = client.Post("/campaigns/" + id + "/suggest", "", "application/json");
  REQUIRE(sug);
  CHECK(sug->status == 200);
  CHECK(sug->get_header_value("Content-Type") == "application/json");
  auto post = client.Get("/campaigns/" + id + "/posterior?arms=mol00001,mol00002");
  REQUIRE(post);
  CHECK(json::parse(post->body).at("posterior").size() == 2);
  auto bad = client.Post("/campaigns/" + id + "/observe", "{}", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 422);
  auto page = client.Get("/index.html");
  REQUIRE(page);
  CHECK(page->body == "<html>advisor</html>");

  server.stop();
  loop.join();
  fs::remove_all(store);
  fs::remove_all(ui);
}
