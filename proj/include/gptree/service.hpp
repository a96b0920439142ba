#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "gptree/campaign.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace gptree {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// JSON facade over Campaign, independent of the transport.
///
/// Each campaign lives in `<store>/<id>/`. Observations on one campaign are
/// serialized; suggest, posterior and what-if read an immutable snapshot
/// and may run concurrently. Errors are returned as {"code", "message"}
/// with status 404 (unknown campaign or arm), 409 (duplicate observation)
/// or 422 (schema violation).
class AdvisorService {
 public:
  /// Loads every campaign already present under `store_dir`.
  explicit AdvisorService(std::string store_dir);

  ServiceResponse create_campaign(const nlohmann::json& body);
  ServiceResponse get_campaign(const std::string& id) const;
  ServiceResponse suggest(const std::string& id) const;
  ServiceResponse observe(const std::string& id, const nlohmann::json& body);
  /// `arms` is a comma-separated id list; empty means every candidate.
  ServiceResponse posterior(const std::string& id, const std::string& arms) const;
  ServiceResponse what_if(const std::string& id, const nlohmann::json& body) const;

  /// Routes a request by method and path. `body` is raw JSON text.
  ServiceResponse dispatch(const std::string& method, const std::string& path, const std::string& body,
                           const std::map<std::string, std::string>& query = {});

 private:
  struct Entry {
    mutable std::shared_mutex snapshot_mutex;
    std::mutex write_mutex;
    std::shared_ptr<const Campaign> snapshot;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  static std::shared_ptr<const Campaign> snapshot(const Entry& e);

  std::string store_dir_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> campaigns_;
  int next_id_ = 1;
};

nlohmann::json suggestion_to_json(const Suggestion& s);
nlohmann::json status_to_json(const std::string& id, const Campaign& c);

/// Registers the API routes (and static files when `static_dir` is set).
void mount_routes(httplib::Server& server, AdvisorService& service, const std::optional<std::string>& static_dir);

/// Blocking HTTP server.
void serve(const std::string& host, int port, const std::string& store_dir,
           const std::optional<std::string>& static_dir);

}  // namespace gptree
