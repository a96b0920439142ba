#include "gptree/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "gptree/errors.hpp"
#include "gptree/parallel.hpp"

namespace gptree {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_arms(const ArmSet& arms, const char* who) {
  if (!arms.features || arms.untested.empty()) {
    throw InputError(std::string(who) + ": no untested arms");
  }
}

void require_count(int n, const ArmSet& arms, const char* who) {
  if (n < 1 || static_cast<std::size_t>(n) > arms.untested.size()) {
    throw InputError(std::string(who) + ": need 1 <= n <= " + std::to_string(arms.untested.size()) +
                     " untested arms, got n=" + std::to_string(n));
  }
}

// Positions into `arms.untested`, sorted by descending sample then ascending arm index.
std::vector<std::size_t> ranked_positions(const VectorXd& sample, const ArmSet& arms) {
  std::vector<std::size_t> order(arms.untested.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = sample(static_cast<Index>(a));
    const double vb = sample(static_cast<Index>(b));
    if (va != vb) return va > vb;
    return arms.untested[a] < arms.untested[b];
  });
  return order;
}

std::vector<std::size_t> top_arms(const VectorXd& sample, const ArmSet& arms, int n) {
  const auto order = ranked_positions(sample, arms);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(arms.untested[order[static_cast<std::size_t>(i)]]);
  return out;
}

// Strict improvement, or equal value with a lexicographically smaller arm list.
bool better(double value, const std::vector<std::size_t>& arms, double best_value,
            const std::vector<std::size_t>& best_arms) {
  if (value != best_value) return value > best_value;
  auto a = arms;
  auto b = best_arms;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a < b;
}

Decision score_candidates(const GpBelief& b, const ArmSet& arms, const TreeConfig& cfg,
                          std::vector<std::vector<std::size_t>> candidates, std::uint64_t base, TreeStats* stats) {
  std::vector<double> values(candidates.size());
  std::vector<TreeStats> task_stats(candidates.size());
  std::shared_ptr<const PosteriorSampler> joint;
  if (cfg.horizon == 1 && cfg.fantasy_noise) joint = std::make_shared<const PosteriorSampler>(b, *arms.features);
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
    TreeContext ctx{arms, cfg, &task_stats[i], {}, joint};
    Rng rng = Rng::child(base, i + 1);
    values[i] = descend_q(b, candidates[i], 0, ctx, rng);
  });

  Decision d;
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (stats) *stats += task_stats[i];
    if (i > 0 && better(values[i], candidates[i], values[best], candidates[best])) best = i;
  }
  d.arm_indices = candidates[best];
  d.diagnostics.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) d.diagnostics.push_back({std::move(candidates[i]), values[i]});
  return d;
}

}  // namespace

void TreeConfig::validate() const {
  if (horizon < 1) throw InputError("tree horizon h must be >= 1");
  if (branches < 1) throw InputError("tree branches K must be >= 1");
  if (thompson_samples < 1) throw InputError("thompson samples n must be >= 1");
  if (batch_size < 1) throw InputError("batch size b must be >= 1");
}

TreeStats& TreeStats::operator+=(const TreeStats& o) {
  conditionings += o.conditionings;
  leaf_evaluations += o.leaf_evaluations;
  intermediate_reward += o.intermediate_reward;
  return *this;
}

std::vector<std::size_t> thompson_rank(const GpBelief& b, const ArmSet& arms, int n, Rng& rng) {
  require_arms(arms, "thompson_rank");
  require_count(n, arms, "thompson_rank");
  const VectorXd sample = sample_function_values(b, arms.untested_features(), rng);
  return top_arms(sample, arms, n);
}

std::vector<std::size_t> thompson_independent(const GpBelief& b, const ArmSet& arms, int n, Rng& rng) {
  require_arms(arms, "thompson_independent");
  require_count(n, arms, "thompson_independent");
  const PosteriorSampler sampler(b, arms.untested_features());
  std::vector<bool> taken(arms.untested.size(), false);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const VectorXd sample = sampler.draw(rng);
    std::size_t best = arms.untested.size();
    for (std::size_t i = 0; i < arms.untested.size(); ++i) {
      if (taken[i]) continue;
      const double v = sample(static_cast<Index>(i));
      if (best == arms.untested.size() || v > sample(static_cast<Index>(best)) ||
          (v == sample(static_cast<Index>(best)) && arms.untested[i] < arms.untested[best])) {
        best = i;
      }
    }
    taken[best] = true;
    out.push_back(arms.untested[best]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> thompson_rank_batches(const GpBelief& b, const ArmSet& arms, int n, int batch,
                                                            Rng& rng) {
  require_arms(arms, "thompson_rank_batches");
  require_count(batch, arms, "thompson_rank_batches");
  if (n < 1) throw InputError("thompson_rank_batches: n must be >= 1");
  const PosteriorSampler sampler(b, arms.untested_features());
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::vector<std::size_t>> seen;
  for (int k = 0; k < n; ++k) {
    auto top = top_arms(sampler.draw(rng), arms, batch);
    auto key = top;
    std::sort(key.begin(), key.end());
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(std::move(key));
    batches.push_back(std::move(top));
  }
  return batches;
}

Decision gp_thompson_step(const GpBelief& b, const ArmSet& arms, Rng& rng) {
  require_arms(arms, "gp_thompson_step");
  const VectorXd sample = sample_function_values(b, arms.untested_features(), rng);
  const auto order = ranked_positions(sample, arms);
  Decision d;
  d.arm_indices = {arms.untested[order.front()]};
  d.diagnostics.push_back({d.arm_indices, sample(static_cast<Index>(order.front()))});
  return d;
}

double ucb_beta(std::size_t d_size, int t, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("gp-ucb: delta must lie in (0, 1)");
  if (t < 1) throw InputError("gp-ucb: t must be >= 1");
  if (d_size < 1) throw InputError("gp-ucb: |D| must be >= 1");
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(static_cast<double>(d_size) * tt * tt * std::numbers::pi * std::numbers::pi / (6.0 * delta));
}

Decision gp_ucb_step(const GpBelief& b, const ArmSet& arms, int t, double delta, std::size_t d_size) {
  const double beta = ucb_beta(d_size, t, delta);
  require_arms(arms, "gp_ucb_step");
  const PosteriorMarginals post = posterior_marginals(b, arms.untested_features());
  const double scale = std::sqrt(beta);
  Decision d;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.untested.size(); ++i) {
    const Index j = static_cast<Index>(i);
    const double score = post.mean(j) + scale * std::sqrt(post.variance(j));
    d.diagnostics.push_back({{arms.untested[i]}, score});
    if (score > best_score || (score == best_score && arms.untested[i] < arms.untested[best])) {
      best_score = score;
      best = i;
    }
  }
  d.arm_indices = {arms.untested[best]};
  return d;
}

Decision random_baseline_step(const ArmSet& arms, Rng& rng) {
  require_arms(arms, "random_baseline_step");
  Decision d;
  d.arm_indices = {arms.untested[rng.uniform_index(arms.untested.size())]};
  return d;
}

double descend_q(const GpBelief& b, const std::vector<std::size_t>& action, int depth, const TreeContext& ctx,
                 Rng& rng) {
  if (depth >= ctx.cfg.horizon) throw InputError("descend_q: depth must be below the horizon");
  if (action.empty()) throw InputError("descend_q: empty action");
  const MatrixXd xs = ctx.arms.rows(action);
  TreeContext child_ctx{ctx.arms.without(action), ctx.cfg, ctx.stats, ctx.child_value, nullptr};
  const bool leaf_children = depth + 1 == ctx.cfg.horizon && !ctx.child_value && ctx.cfg.fantasy_noise;

  std::shared_ptr<const PosteriorSampler> joint;
  if (leaf_children) {
    joint = ctx.belief_sampler ? ctx.belief_sampler : std::make_shared<const PosteriorSampler>(b, *ctx.arms.features);
  }
  const double noise_sd = std::sqrt(b.noise_variance());

  const std::uint64_t base = rng.next_u64();
  double total = 0.0;
  for (int k = 0; k < ctx.cfg.branches; ++k) {
    Rng branch = Rng::child(base, static_cast<std::uint64_t>(k));
    VectorXd ys(static_cast<Index>(action.size()));
    double future = 0.0;
    if (leaf_children) {
      const VectorXd f = joint->draw(branch);
      for (std::size_t i = 0; i < action.size(); ++i) {
        ys(static_cast<Index>(i)) = f(static_cast<Index>(action[i])) + noise_sd * branch.normal();
      }
      future = f.maxCoeff();
      if (ctx.stats) ++ctx.stats->leaf_evaluations;
    } else {
      ys = ctx.cfg.fantasy_noise ? sample_outcomes(b, xs, branch) : sample_function_values(b, xs, branch);
      const GpBelief fantasy = b.condition(xs, ys);
      future = ctx.child_value ? ctx.child_value(fantasy, depth + 1, branch)
                               : descend_v(fantasy, depth + 1, child_ctx, branch);
    }
    double reward = 0.0;
    if (ctx.cfg.reward_mode == RewardMode::kCumulative) reward = ys.sum();
    if (ctx.stats) {
      ++ctx.stats->conditionings;
      ctx.stats->intermediate_reward += reward;
    }
    total += reward + future;
  }
  return total / static_cast<double>(ctx.cfg.branches);
}

double descend_v(const GpBelief& b, int depth, const TreeContext& ctx, Rng& rng) {
  if (depth > ctx.cfg.horizon) throw InputError("descend_v: depth exceeds the horizon");
  if (depth == ctx.cfg.horizon || ctx.arms.untested.empty()) {
    if (ctx.stats) ++ctx.stats->leaf_evaluations;
    return sample_function_values(b, *ctx.arms.features, rng).maxCoeff();
  }
  const std::uint64_t base = rng.next_u64();
  Rng pick = Rng::child(base, 0);
  const int available = static_cast<int>(ctx.arms.untested.size());
  const int n = std::min(ctx.cfg.thompson_samples, available);
  std::vector<std::vector<std::size_t>> actions;
  if (ctx.cfg.batch_size > 1) {
    actions = thompson_rank_batches(b, ctx.arms, n, std::min(ctx.cfg.batch_size, available), pick);
  } else {
    for (std::size_t arm : thompson_independent(b, ctx.arms, n, pick)) actions.push_back({arm});
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Rng branch = Rng::child(base, i + 1);
    best = std::max(best, descend_q(b, actions[i], depth, ctx, branch));
  }
  return best;
}

Decision gp_tree_step(const GpBelief& b, const ArmSet& arms, const TreeConfig& cfg, Rng& rng, TreeStats* stats) {
  cfg.validate();
  require_arms(arms, "gp_tree_step");
  const std::uint64_t base = rng.next_u64();
  Rng pick = Rng::child(base, 0);
  const int n = std::min(cfg.thompson_samples, static_cast<int>(arms.untested.size()));
  std::vector<std::vector<std::size_t>> candidates;
  if (cfg.root_sampling == RootSampling::kRank) {
    candidates = thompson_rank_batches(b, arms, n, 1, pick);
  } else {
    for (std::size_t arm : thompson_independent(b, arms, n, pick)) candidates.push_back({arm});
  }
  TreeConfig seq = cfg;
  seq.batch_size = 1;
  return score_candidates(b, arms, seq, std::move(candidates), base, stats);
}

Decision batch_gp_tree_step(const GpBelief& b, const ArmSet& arms, const TreeConfig& cfg, Rng& rng,
                            TreeStats* stats) {
  cfg.validate();
  require_arms(arms, "batch_gp_tree_step");
  if (static_cast<std::size_t>(cfg.batch_size) > arms.untested.size()) {
    throw InputError("batch_gp_tree_step: batch size " + std::to_string(cfg.batch_size) + " exceeds the " +
                     std::to_string(arms.untested.size()) + " untested arms");
  }
  if (cfg.batch_size == 1) {
    TreeConfig rank = cfg;
    rank.root_sampling = RootSampling::kRank;
    return gp_tree_step(b, arms, rank, rng, stats);
  }
  const std::uint64_t base = rng.next_u64();
  Rng pick = Rng::child(base, 0);
  auto candidates = thompson_rank_batches(b, arms, cfg.thompson_samples, cfg.batch_size, pick);
  return score_candidates(b, arms, cfg, std::move(candidates), base, stats);
}

const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names = {"random", "gp-thompson", "gp-ucb", "lin-ts", "gp-tree",
                                                 "batch-gp-tree"};
  return names;
}

std::size_t policy_index(std::string_view name) {
  const auto& names = policy_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("unknown policy '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

bool is_batch_policy(std::string_view name) { return name == "batch-gp-tree"; }

}  // namespace gptree
