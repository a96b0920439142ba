#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gptree/data.hpp"
#include "gptree/errors.hpp"
#include "gptree/harness.hpp"
#include "json.hpp"

namespace gptree {

struct CampaignConfig {
  PolicyConfig policy;
  Goal goal = Goal::kAverageRegret;
  std::uint64_t seed = 0;
  /// GP prior mean; set to a typical activity level for the assay.
  double prior_mean = 0.0;
  std::optional<ProjectionSpec> projection;
};

CampaignConfig campaign_config_from_json(const nlohmann::json& j);
nlohmann::json campaign_config_to_json(const CampaignConfig& c);

struct Observation {
  std::string arm_id;
  double y = 0.0;
};

struct Suggestion {
  bool complete = false;
  std::vector<std::string> arm_ids;
  /// Candidate actions considered, with their estimated values.
  std::vector<std::pair<std::vector<std::string>, double>> scores;
};

struct PosteriorEntry {
  std::string arm_id;
  double mean = 0.0;
  double std = 0.0;
};

struct CampaignStatus {
  std::size_t candidates = 0;
  std::size_t observed = 0;
  bool complete = false;
  std::optional<double> best_so_far;
  /// Present when every candidate's true outcome is known.
  std::optional<double> average_regret;
  std::optional<double> simple_regret;
};

/// Live screening campaign: a candidate set, a policy, and the ordered
/// observation log. The belief is a pure function of (candidates, config,
/// log), so loading replays the log.
///
/// On disk a campaign is a directory with candidates.csv, campaign.json and
/// observations.log (one JSON object per line, append-only).
class Campaign {
 public:
  /// Campaign with no backing directory.
  Campaign(Dataset candidates, CampaignConfig config);

  /// Creates the directory layout and an empty log. Fails if `dir` already holds a campaign.
  static Campaign create(const std::string& dir, Dataset candidates, CampaignConfig config);
  /// Reads a campaign directory and replays its log.
  static Campaign load(const std::string& dir);

  /// Next decision; does not change state. Deterministic in (config.seed, log length).
  Suggestion suggest() const;

  /// Validates, appends to the log (when persistent) and conditions the belief.
  /// Throws InputError for unknown ids and CampaignConflict for repeats.
  void observe(const std::string& arm_id, double y);

  /// Copy with one hypothetical observation; never persisted.
  Campaign what_if(const std::string& arm_id, double y) const;

  std::vector<PosteriorEntry> posterior(const std::vector<std::string>& arm_ids) const;
  CampaignStatus status() const;

  const Dataset& candidates() const { return *candidates_; }
  const CampaignConfig& config() const { return config_; }
  const std::vector<Observation>& observations() const { return log_; }
  const GpBelief& belief() const { return state_.belief; }
  const std::string& directory() const { return dir_; }

 private:
  void apply(const std::string& arm_id, double y);
  std::size_t index_of(const std::string& arm_id) const;

  std::shared_ptr<const Dataset> candidates_;
  std::shared_ptr<const Eigen::MatrixXd> features_;
  CampaignConfig config_;
  PolicyState state_;
  ArmSet arms_;
  std::vector<Observation> log_;
  std::string dir_;
};

/// Observation of an arm that is already in the log.
class CampaignConflict : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace gptree
