#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gptree/arms.hpp"
#include "gptree/data.hpp"
#include "gptree/gp.hpp"
#include "gptree/linear_ts.hpp"
#include "gptree/metrics.hpp"
#include "gptree/policies.hpp"
#include "json.hpp"

namespace gptree {

/// Optimization goal. aregret runs trees in Cumulative mode, sregret in Terminal mode.
enum class Goal { kAverageRegret, kSimpleRegret };

std::string to_string(Goal g);
Goal goal_from_string(const std::string& s);
RewardMode reward_mode_for(Goal g);

struct ProjectionSpec {
  int m = 128;
  std::uint64_t seed = 0;
};

/// Policy name plus every parameter any registered policy reads.
struct PolicyConfig {
  std::string name = "gp-tree";
  int h = 1;
  int K = 4;
  int n = 20;
  int b = 1;
  bool fantasy_noise = true;
  /// Root candidates of gp-tree. batch-gp-tree always ranks.
  RootSampling root_sampling = RootSampling::kIndependent;
  /// GP-UCB and LB-TS confidence parameter; defaults to 0.01 (aregret) or 0.99 (sregret).
  std::optional<double> delta;
  /// LB-TS scale; defaults to half the target range.
  std::optional<double> R;
  KernelSpec kernel;
  double noise_variance = 0.1;

  TreeConfig tree(Goal goal) const;
  double delta_for(Goal goal) const;
};

struct ExperimentConfig {
  std::string dataset_path;
  std::optional<ProjectionSpec> projection;
  PolicyConfig policy;
  Goal goal = Goal::kAverageRegret;
  int horizon = 100;
  int replications = 20;
  std::uint64_t master_seed = 0;
  int initial_reveal_count = 1;
  std::string output_path;
  /// Worker threads (replicates run concurrently). Output does not depend on it.
  int threads = 1;

  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// Belief-side state carried by a policy between decisions.
struct PolicyState {
  GpBelief belief;
  std::optional<LinTSState> lints;
};

/// Initial state: empty GP with the given prior mean, plus an LB-TS state for lin-ts.
PolicyState make_policy_state(const PolicyConfig& pc, Goal goal, double prior_mean, Eigen::Index dim,
                              int horizon, double target_range);

/// Conditions every component of the state on the rows of `xs`.
PolicyState observe_batch(const PolicyState& s, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                          const Eigen::Ref<const Eigen::VectorXd>& ys);

/// Dispatches to the named policy. `t` is the 1-based number of the next
/// observation, `max_batch` caps the batch size (budget tail).
Decision decide(const PolicyConfig& pc, Goal goal, const PolicyState& s, const ArmSet& arms, int t,
                int max_batch, Rng& rng);

/// Features as policies see them: projected when requested, then standardized.
Eigen::MatrixXd prepare_features(const Dataset& ds, const std::optional<ProjectionSpec>& projection);

struct SummaryRow {
  int t = 0;
  double mean_aregret = 0.0;
  double se_aregret = 0.0;
  double mean_sregret = 0.0;
  double se_sregret = 0.0;
};

struct RunResult {
  ExperimentConfig config;
  std::string config_digest;
  std::vector<std::vector<RunRecord>> replicates;
  std::vector<SummaryRow> summary;
};

/// Seed of replicate r: mix64(master_seed, policy_index, r).
std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t policy_index, int rep);

/// One replicate on prepared features. Uses `seed` directly.
std::vector<RunRecord> run_replicate(const ExperimentConfig& cfg, const Dataset& ds,
                                     std::shared_ptr<const Eigen::MatrixXd> features, std::uint64_t seed);

RunResult run_experiment(const ExperimentConfig& cfg);
/// Same, on an already loaded dataset (cfg.dataset_path is only echoed).
RunResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds);

std::vector<SummaryRow> summarize(const std::vector<std::vector<RunRecord>>& replicates);

/// Writes records.csv, summary.csv and config.json into directory `path`.
void emit_results(const RunResult& res, const std::string& path);
std::string records_csv(const RunResult& res);
std::string summary_csv(const RunResult& res);

/// Re-checks per-row metric invariants of a records.csv. Returns one
/// message per violation; empty means valid.
std::vector<std::string> verify_records(const std::string& records_path);

}  // namespace gptree
