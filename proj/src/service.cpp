#include "gptree/service.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "gptree/errors.hpp"
#include "httplib.h"

namespace gptree {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ServiceResponse error(int status, const std::string& code, const std::string& message) {
  return {status, json{{"code", code}, {"message", message}}};
}

ServiceResponse not_found(const std::string& what) { return error(404, "not_found", what); }
ServiceResponse schema(const std::string& what) { return error(422, "schema_violation", what); }

// Observation body: {"arm_id": string, "y": finite number}.
std::optional<ServiceResponse> check_observation(const json& body) {
  if (!body.is_object()) return schema("body must be a JSON object");
  if (!body.contains("arm_id") || !body.at("arm_id").is_string()) return schema("'arm_id' must be a string");
  if (!body.contains("y") || !body.at("y").is_number()) return schema("'y' must be a number");
  if (!std::isfinite(body.at("y").get<double>())) return schema("'y' must be finite");
  return std::nullopt;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

}  // namespace

json suggestion_to_json(const Suggestion& s) {
  json candidates = json::array();
  for (const auto& [ids, value] : s.scores) candidates.push_back({{"arm_ids", ids}, {"value", value}});
  return {{"complete", s.complete}, {"arm_ids", s.arm_ids}, {"candidates", candidates}};
}

json status_to_json(const std::string& id, const Campaign& c) {
  const CampaignStatus st = c.status();
  json obs = json::array();
  for (const auto& o : c.observations()) obs.push_back({{"arm_id", o.arm_id}, {"y", o.y}});
  json j{{"id", id},
         {"status", st.complete ? "complete" : "active"},
         {"candidates", st.candidates},
         {"observed", st.observed},
         {"observations", obs},
         {"config", campaign_config_to_json(c.config())}};
  j["best_so_far"] = st.best_so_far ? json(*st.best_so_far) : json(nullptr);
  j["average_regret"] = st.average_regret ? json(*st.average_regret) : json(nullptr);
  j["simple_regret"] = st.simple_regret ? json(*st.simple_regret) : json(nullptr);
  return j;
}

AdvisorService::AdvisorService(std::string store_dir) : store_dir_(std::move(store_dir)) {
  std::error_code ec;
  fs::create_directories(store_dir_, ec);
  if (ec) throw InputError("cannot create campaign store '" + store_dir_ + "': " + ec.message());
  for (const auto& entry : fs::directory_iterator(store_dir_)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "campaign.json")) continue;
    const std::string id = entry.path().filename().string();
    auto e = std::make_shared<Entry>();
    e->snapshot = std::make_shared<const Campaign>(Campaign::load(entry.path().string()));
    campaigns_[id] = e;
    int number = 0;
    if (std::sscanf(id.c_str(), "c%d", &number) == 1) next_id_ = std::max(next_id_, number + 1);
  }
}

std::shared_ptr<AdvisorService::Entry> AdvisorService::find(const std::string& id) const {
  std::lock_guard lock(map_mutex_);
  const auto it = campaigns_.find(id);
  return it == campaigns_.end() ? nullptr : it->second;
}

std::shared_ptr<const Campaign> AdvisorService::snapshot(const Entry& e) {
  std::shared_lock lock(e.snapshot_mutex);
  return e.snapshot;
}

ServiceResponse AdvisorService::create_campaign(const json& body) {
  if (!body.is_object()) return schema("body must be a JSON object");
  if (!body.contains("candidates_csv") || !body.at("candidates_csv").is_string()) {
    return schema("'candidates_csv' must be a string holding the candidate CSV");
  }
  try {
    const CampaignConfig cfg = campaign_config_from_json(body.value("config", json::object()));
    std::istringstream csv(body.at("candidates_csv").get<std::string>());
    LoadOptions opts;
    opts.allow_missing_targets = true;
    Dataset candidates = parse_dataset(csv, "candidates", opts);

    std::lock_guard lock(map_mutex_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%04d", next_id_);
    const std::string id = buf;
    auto e = std::make_shared<Entry>();
    e->snapshot = std::make_shared<const Campaign>(
        Campaign::create((fs::path(store_dir_) / id).string(), std::move(candidates), cfg));
    campaigns_[id] = e;
    ++next_id_;
    return {201, status_to_json(id, *e->snapshot)};
  } catch (const ConfigError& ex) {
    return schema(ex.what());
  } catch (const InputError& ex) {
    return schema(ex.what());
  }
}

ServiceResponse AdvisorService::get_campaign(const std::string& id) const {
  const auto e = find(id);
  if (!e) return not_found("unknown campaign '" + id + "'");
  return {200, status_to_json(id, *snapshot(*e))};
}

ServiceResponse AdvisorService::suggest(const std::string& id) const {
  const auto e = find(id);
  if (!e) return not_found("unknown campaign '" + id + "'");
  return {200, suggestion_to_json(snapshot(*e)->suggest())};
}

ServiceResponse AdvisorService::observe(const std::string& id, const json& body) {
  if (auto bad = check_observation(body)) return *bad;
  const auto e = find(id);
  if (!e) return not_found("unknown campaign '" + id + "'");
  const std::string arm = body.at("arm_id").get<std::string>();
  const double y = body.at("y").get<double>();

  std::lock_guard write(e->write_mutex);
  auto current = snapshot(*e);
  if (!current->candidates().find(arm)) return not_found("unknown arm '" + arm + "'");
  auto next = std::make_shared<Campaign>(*current);
  try {
    next->observe(arm, y);
  } catch (const CampaignConflict& ex) {
    return error(409, "duplicate_observation", ex.what());
  } catch (const InputError& ex) {
    return schema(ex.what());
  }
  {
    std::unique_lock lock(e->snapshot_mutex);
    e->snapshot = next;
  }
  return {200, status_to_json(id, *next)};
}

ServiceResponse AdvisorService::posterior(const std::string& id, const std::string& arms) const {
  const auto e = find(id);
  if (!e) return not_found("unknown campaign '" + id + "'");
  const auto c = snapshot(*e);
  std::vector<std::string> ids = split_ids(arms);
  if (ids.empty()) ids = c->candidates().ids;
  for (const auto& a : ids) {
    if (!c->candidates().find(a)) return not_found("unknown arm '" + a + "'");
  }
  json out = json::array();
  for (const auto& p : c->posterior(ids)) out.push_back({{"arm_id", p.arm_id}, {"mean", p.mean}, {"std", p.std}});
  return {200, json{{"posterior", out}}};
}

ServiceResponse AdvisorService::what_if(const std::string& id, const json& body) const {
  if (auto bad = check_observation(body)) return *bad;
  const auto e = find(id);
  if (!e) return not_found("unknown campaign '" + id + "'");
  const auto c = snapshot(*e);
  const std::string arm = body.at("arm_id").get<std::string>();
  if (!c->candidates().find(arm)) return not_found("unknown arm '" + arm + "'");
  try {
    const Campaign clone = c->what_if(arm, body.at("y").get<double>());
    return {200, json{{"hypothetical", body}, {"suggestion", suggestion_to_json(clone.suggest())}}};
  } catch (const CampaignConflict& ex) {
    return error(409, "duplicate_observation", ex.what());
  }
}

ServiceResponse AdvisorService::dispatch(const std::string& method, const std::string& path, const std::string& body,
                                         const std::map<std::string, std::string>& query) {
  json parsed = json::object();
  if (!body.empty()) {
    try {
      parsed = json::parse(body);
    } catch (const json::parse_error& ex) {
      return schema(std::string("body is not valid JSON: ") + ex.what());
    }
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  if (parts.empty() || parts[0] != "campaigns") return not_found("no route for " + method + " " + path);
  try {
    if (parts.size() == 1 && method == "POST") return create_campaign(parsed);
    if (parts.size() == 2 && method == "GET") return get_campaign(parts[1]);
    if (parts.size() == 3) {
      const std::string& id = parts[1];
      if (parts[2] == "suggest" && method == "POST") return suggest(id);
      if (parts[2] == "observe" && method == "POST") return observe(id, parsed);
      if (parts[2] == "whatif" && method == "POST") return what_if(id, parsed);
      if (parts[2] == "posterior" && method == "GET") {
        const auto it = query.find("arms");
        return posterior(id, it == query.end() ? "" : it->second);
      }
    }
  } catch (const NumericalError& ex) {
    return error(500, "numerical_error", ex.what());
  }
  return not_found("no route for " + method + " " + path);
}

void mount_routes(httplib::Server& server, AdvisorService& service, const std::optional<std::string>& static_dir) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    const ServiceResponse out = service.dispatch(req.method, req.path, req.body, query);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Post(R"(/campaigns(/.*)?)", handler);
  server.Get(R"(/campaigns(/.*)?)", handler);
  if (static_dir) server.set_mount_point("/", *static_dir);
}

void serve(const std::string& host, int port, const std::string& store_dir,
           const std::optional<std::string>& static_dir) {
  AdvisorService service(store_dir);
  httplib::Server server;
  mount_routes(server, service, static_dir);
  if (!server.listen(host, port)) {
    throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace gptree
