#include "gptree/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gptree/errors.hpp"

namespace gptree {

namespace fs = std::filesystem;
using nlohmann::json;

CampaignConfig campaign_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("campaign config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "policy" && key != "goal" && key != "seed" && key != "prior_mean" && key != "projection") {
      throw ConfigError("unknown campaign config key '" + key + "'");
    }
  }
  // Reuse the experiment parser for the shared policy/projection blocks.
  json exp = json::object();
  if (j.contains("policy")) exp["policy"] = j.at("policy");
  if (j.contains("projection")) exp["projection"] = j.at("projection");
  if (j.contains("goal")) exp["goal"] = j.at("goal");
  const ExperimentConfig parsed = config_from_json(exp);
  CampaignConfig c;
  c.policy = parsed.policy;
  c.goal = parsed.goal;
  c.projection = parsed.projection;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.prior_mean = j.value("prior_mean", 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("campaign config: ") + e.what());
  }
  if (!std::isfinite(c.prior_mean)) throw ConfigError("campaign prior_mean must be finite");
  return c;
}

json campaign_config_to_json(const CampaignConfig& c) {
  ExperimentConfig e;
  e.policy = c.policy;
  e.goal = c.goal;
  e.projection = c.projection;
  const json full = config_to_json(e);
  json j;
  j["policy"] = full.at("policy");
  j["goal"] = full.at("goal");
  j["projection"] = full.at("projection");
  j["seed"] = c.seed;
  j["prior_mean"] = c.prior_mean;
  return j;
}

Campaign::Campaign(Dataset candidates, CampaignConfig config)
    : config_(std::move(config)), state_{GpBelief(config_.policy.kernel, config_.policy.noise_variance), {}} {
  candidates.validate();
  if (candidates.size() == 0) throw InputError("campaign needs at least one candidate");
  policy_index(config_.policy.name);
  features_ = std::make_shared<const Eigen::MatrixXd>(prepare_features(candidates, config_.projection));
  double range = 2.0;
  if (candidates.has_targets()) range = candidates.targets.maxCoeff() - candidates.targets.minCoeff();
  state_ = make_policy_state(config_.policy, config_.goal, config_.prior_mean, features_->cols(),
                             static_cast<int>(candidates.size()), range);
  arms_ = ArmSet::all(features_);
  candidates_ = std::make_shared<const Dataset>(std::move(candidates));
}

Campaign Campaign::create(const std::string& dir, Dataset candidates, CampaignConfig config) {
  if (fs::exists(fs::path(dir) / "campaign.json")) throw ConfigError("campaign already exists at '" + dir + "'");
  Campaign c(std::move(candidates), std::move(config));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create campaign directory '" + dir + "': " + ec.message());
  save_dataset(c.candidates(), (fs::path(dir) / "candidates.csv").string());
  std::ofstream cfg(fs::path(dir) / "campaign.json", std::ios::binary);
  cfg << campaign_config_to_json(c.config_).dump(2) << '\n';
  std::ofstream log(fs::path(dir) / "observations.log", std::ios::binary);
  if (!cfg || !log) throw InputError("cannot write campaign files in '" + dir + "'");
  c.dir_ = dir;
  return c;
}

Campaign Campaign::load(const std::string& dir) {
  std::ifstream cfg_in(fs::path(dir) / "campaign.json");
  if (!cfg_in) throw InputError("no campaign at '" + dir + "'");
  json cfg_json;
  try {
    cfg_json = json::parse(cfg_in);
  } catch (const json::parse_error& e) {
    throw ConfigError("campaign.json: " + std::string(e.what()));
  }
  LoadOptions opts;
  opts.allow_missing_targets = true;
  Campaign c(load_dataset((fs::path(dir) / "candidates.csv").string(), opts), campaign_config_from_json(cfg_json));
  std::ifstream log(fs::path(dir) / "observations.log");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(log, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json entry = json::parse(line);
      c.apply(entry.at("arm_id").get<std::string>(), entry.at("y").get<double>());
    } catch (const json::exception& e) {
      throw InputError("observations.log:" + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.dir_ = dir;
  return c;
}

std::size_t Campaign::index_of(const std::string& arm_id) const {
  const auto idx = candidates_->find(arm_id);
  if (!idx) throw InputError("unknown arm id '" + arm_id + "'");
  return *idx;
}

void Campaign::apply(const std::string& arm_id, double y) {
  const std::size_t idx = index_of(arm_id);
  if (!std::isfinite(y)) throw InputError("observation for '" + arm_id + "' is not a finite number");
  if (std::any_of(log_.begin(), log_.end(), [&](const Observation& o) { return o.arm_id == arm_id; })) {
    throw CampaignConflict("arm '" + arm_id + "' has already been observed");
  }
  Eigen::VectorXd ys(1);
  ys(0) = y;
  state_ = observe_batch(state_, arms_.rows({idx}), ys);
  arms_ = arms_.without({idx});
  log_.push_back({arm_id, y});
}

void Campaign::observe(const std::string& arm_id, double y) {
  Campaign next(*this);
  next.apply(arm_id, y);
  if (!dir_.empty()) {
    std::ofstream log(fs::path(dir_) / "observations.log", std::ios::app | std::ios::binary);
    log << json{{"arm_id", arm_id}, {"y", y}}.dump() << '\n';
    if (!log) throw InputError("cannot append to observation log in '" + dir_ + "'");
  }
  *this = std::move(next);
}

Campaign Campaign::what_if(const std::string& arm_id, double y) const {
  Campaign copy(*this);
  copy.dir_.clear();
  copy.apply(arm_id, y);
  return copy;
}

Suggestion Campaign::suggest() const {
  Suggestion s;
  if (arms_.untested.empty()) {
    s.complete = true;
    return s;
  }
  Rng rng(mix64(config_.seed, log_.size()));
  const Decision d = decide(config_.policy, config_.goal, state_, arms_, static_cast<int>(log_.size()) + 1,
                            static_cast<int>(arms_.untested.size()), rng);
  for (std::size_t i : d.arm_indices) s.arm_ids.push_back(candidates_->ids[i]);
  for (const auto& cand : d.diagnostics) {
    std::vector<std::string> ids;
    for (std::size_t i : cand.arms) ids.push_back(candidates_->ids[i]);
    s.scores.emplace_back(std::move(ids), cand.value);
  }
  return s;
}

std::vector<PosteriorEntry> Campaign::posterior(const std::vector<std::string>& arm_ids) const {
  std::vector<std::size_t> idx;
  for (const auto& id : arm_ids) idx.push_back(index_of(id));
  const PosteriorMarginals post = posterior_marginals(state_.belief, arms_.rows(idx));
  std::vector<PosteriorEntry> out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.push_back({arm_ids[i], post.mean(r), std::sqrt(post.variance(r))});
  }
  return out;
}

CampaignStatus Campaign::status() const {
  CampaignStatus st;
  st.candidates = candidates_->size();
  st.observed = log_.size();
  st.complete = arms_.untested.empty();
  for (const auto& o : log_) st.best_so_far = st.best_so_far ? std::max(*st.best_so_far, o.y) : o.y;
  if (candidates_->has_targets() && !log_.empty()) {
    const double r_star = candidates_->targets.maxCoeff();
    double total = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& o : log_) {
      const double truth = candidates_->targets(static_cast<Eigen::Index>(index_of(o.arm_id)));
      total += r_star - truth;
      best = std::max(best, truth);
    }
    st.average_regret = total / static_cast<double>(log_.size());
    st.simple_regret = r_star - best;
  }
  return st;
}

}  // namespace gptree
