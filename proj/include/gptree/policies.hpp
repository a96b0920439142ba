#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gptree/arms.hpp"
#include "gptree/gp.hpp"
#include "gptree/rng.hpp"

namespace gptree {

/// Cumulative: every outcome is a reward (r_t = y_t).
/// Terminal: intermediate rewards are zero and only leaves are scored.
enum class RewardMode { kCumulative, kTerminal };

/// How root candidates are drawn for a sequential tree.
enum class RootSampling { kIndependent, kRank };

struct TreeConfig {
  int horizon = 1;
  int branches = 4;
  int thompson_samples = 20;
  int batch_size = 1;
  RewardMode reward_mode = RewardMode::kCumulative;
  /// Fantasy outcomes include observation noise (predictive draws) when
  /// true, otherwise they are noiseless draws of f.
  bool fantasy_noise = true;
  RootSampling root_sampling = RootSampling::kIndependent;
  /// Worker threads for root candidate evaluation. Results do not depend on it.
  int threads = 1;

  void validate() const;
};

struct CandidateScore {
  std::vector<std::size_t> arms;
  double value = 0.0;
};

struct Decision {
  std::vector<std::size_t> arm_indices;
  std::vector<CandidateScore> diagnostics;
};

/// Counters filled in by tree evaluation.
struct TreeStats {
  long conditionings = 0;
  long leaf_evaluations = 0;
  /// Sum of intermediate rewards added at fantasy nodes.
  double intermediate_reward = 0.0;

  TreeStats& operator+=(const TreeStats& o);
};

/// One joint posterior sample over untested arms; the n arms with the
/// largest sampled values, best first. Ties go to the lowest arm index.
std::vector<std::size_t> thompson_rank(const GpBelief& b, const ArmSet& arms, int n, Rng& rng);

/// n independent joint samples; the k-th pick is the argmax of the k-th
/// sample over arms not picked yet.
std::vector<std::size_t> thompson_independent(const GpBelief& b, const ArmSet& arms, int n, Rng& rng);

/// n joint samples, each contributing its top-`batch` arms as one candidate
/// batch. Duplicate batches (same arm set) are merged, keeping first
/// appearance order.
std::vector<std::vector<std::size_t>> thompson_rank_batches(const GpBelief& b, const ArmSet& arms, int n,
                                                            int batch, Rng& rng);

Decision gp_thompson_step(const GpBelief& b, const ArmSet& arms, Rng& rng);

/// beta_t = 2 ln(|D| t^2 pi^2 / (6 delta)).
double ucb_beta(std::size_t d_size, int t, double delta);

Decision gp_ucb_step(const GpBelief& b, const ArmSet& arms, int t, double delta, std::size_t d_size);

Decision random_baseline_step(const ArmSet& arms, Rng& rng);

/// Evaluation context for the lookahead tree.
struct TreeContext {
  /// Arms available at this node. The leaf rule scores all rows of
  /// `arms.features`, tested or not.
  ArmSet arms;
  TreeConfig cfg;
  TreeStats* stats = nullptr;
  /// Replaces descend_v for the children of descend_q when set.
  std::function<double(const GpBelief&, int depth, Rng&)> child_value;
  /// Joint sampler of the belief handed to descend_q over all rows of
  /// `arms.features`, if the caller already built one.
  std::shared_ptr<const PosteriorSampler> belief_sampler;
};

/// Monte Carlo Q estimate for playing `action` (one arm or a batch) at
/// `depth`: mean over K fantasy branches of reward + descend_v(child).
///
/// When the children are leaves and fantasies are noisy, each branch takes
/// one joint draw f of the current belief over all arms and sets
/// y = f(action) + noise. (y, f) then has the same law as drawing y from the
/// predictive, conditioning on it and sampling f from the fantasy posterior,
/// so the leaf value is max f without refactoring per branch.
double descend_q(const GpBelief& b, const std::vector<std::size_t>& action, int depth, const TreeContext& ctx,
                 Rng& rng);

/// Value estimate at `depth`: the max of one joint f sample over all arms at
/// the horizon, otherwise the best descend_q over a freshly sampled action set.
double descend_v(const GpBelief& b, int depth, const TreeContext& ctx, Rng& rng);

Decision gp_tree_step(const GpBelief& b, const ArmSet& arms, const TreeConfig& cfg, Rng& rng,
                      TreeStats* stats = nullptr);

/// Batch lookahead. Candidate batches come from thompson_rank_batches and
/// each is scored with all of its fantasy outcomes drawn and conditioned
/// jointly. Throws InputError when batch_size exceeds the untested arms.
Decision batch_gp_tree_step(const GpBelief& b, const ArmSet& arms, const TreeConfig& cfg, Rng& rng,
                            TreeStats* stats = nullptr);

/// Registered policy names, in registry order.
const std::vector<std::string>& policy_names();
/// Registry position of `name`; throws ConfigError for unknown names.
std::size_t policy_index(std::string_view name);
bool is_batch_policy(std::string_view name);

}  // namespace gptree
