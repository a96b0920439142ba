#include "gptree/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "gptree/errors.hpp"
#include "gptree/parallel.hpp"
#include "gptree/projection.hpp"

namespace gptree {

using nlohmann::json;

std::string to_string(Goal g) { return g == Goal::kAverageRegret ? "aregret" : "sregret"; }

Goal goal_from_string(const std::string& s) {
  if (s == "aregret") return Goal::kAverageRegret;
  if (s == "sregret") return Goal::kSimpleRegret;
  throw ConfigError("goal must be 'aregret' or 'sregret', got '" + s + "'");
}

RewardMode reward_mode_for(Goal g) {
  return g == Goal::kAverageRegret ? RewardMode::kCumulative : RewardMode::kTerminal;
}

TreeConfig PolicyConfig::tree(Goal goal) const {
  TreeConfig t;
  t.horizon = h;
  t.branches = K;
  t.thompson_samples = n;
  t.batch_size = b;
  t.reward_mode = reward_mode_for(goal);
  t.fantasy_noise = fantasy_noise;
  t.root_sampling = root_sampling;
  return t;
}

double PolicyConfig::delta_for(Goal goal) const {
  if (delta) return *delta;
  return goal == Goal::kAverageRegret ? 0.01 : 0.99;
}

void ExperimentConfig::validate() const {
  policy_index(policy.name);
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (initial_reveal_count < 0) throw ConfigError("initial_reveal_count must be >= 0");
  if (initial_reveal_count > horizon) throw ConfigError("initial_reveal_count exceeds horizon");
  if (policy.h < 1 || policy.K < 1 || policy.n < 1 || policy.b < 1) {
    throw ConfigError("policy h, K, n and b must all be >= 1");
  }
  if (!(policy.kernel.lengthscale > 0.0) || !(policy.kernel.signal_variance > 0.0)) {
    throw ConfigError("kernel lengthscale and signal_variance must be positive");
  }
  if (!(policy.noise_variance >= 0.0)) throw ConfigError("noise_variance must be non-negative");
  if (policy.delta && !(*policy.delta > 0.0 && *policy.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (policy.R && !(*policy.R > 0.0)) throw ConfigError("R must be positive");
  if (projection && projection->m < 1) throw ConfigError("projection.m must be >= 1");
  if (policy.name == "lin-ts" && horizon < 2) throw ConfigError("lin-ts needs horizon >= 2");
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown config key '" + where + key + "'");
    }
  }
}

std::string digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"dataset_path", "projection", "policy", "goal", "horizon", "replications", "master_seed",
                  "initial_reveal_count", "output_path", "threads"},
                 "");
  ExperimentConfig c;
  c.dataset_path = get_or<std::string>(j, "dataset_path", "");
  if (j.contains("projection") && !j.at("projection").is_null()) {
    const json& p = j.at("projection");
    reject_unknown(p, {"m", "seed"}, "projection.");
    c.projection = ProjectionSpec{get_or<int>(p, "m", 128), get_or<std::uint64_t>(p, "seed", 0)};
  }
  if (j.contains("policy")) {
    const json& p = j.at("policy");
    if (!p.is_object()) throw ConfigError("config key 'policy' must be an object");
    reject_unknown(p, {"name", "h", "K", "n", "b", "fantasy_noise", "root_sampling", "delta", "R", "kernel",
                    "noise_variance"},
                   "policy.");
    c.policy.name = get_or<std::string>(p, "name", c.policy.name);
    c.policy.h = get_or<int>(p, "h", c.policy.h);
    c.policy.K = get_or<int>(p, "K", c.policy.K);
    c.policy.n = get_or<int>(p, "n", c.policy.n);
    c.policy.b = get_or<int>(p, "b", c.policy.b);
    c.policy.fantasy_noise = get_or<bool>(p, "fantasy_noise", c.policy.fantasy_noise);
    const std::string roots = get_or<std::string>(p, "root_sampling", "independent");
    if (roots == "rank") {
      c.policy.root_sampling = RootSampling::kRank;
    } else if (roots != "independent") {
      throw ConfigError("policy.root_sampling must be 'independent' or 'rank', got '" + roots + "'");
    }
    if (p.contains("delta") && !p.at("delta").is_null()) c.policy.delta = get_or<double>(p, "delta", 0.0);
    if (p.contains("R") && !p.at("R").is_null()) c.policy.R = get_or<double>(p, "R", 0.0);
    c.policy.noise_variance = get_or<double>(p, "noise_variance", c.policy.noise_variance);
    if (p.contains("kernel")) {
      const json& k = p.at("kernel");
      reject_unknown(k, {"kind", "lengthscale", "signal_variance"}, "policy.kernel.");
      if (get_or<std::string>(k, "kind", "rbf") != "rbf") throw ConfigError("only the 'rbf' kernel is supported");
      c.policy.kernel.lengthscale = get_or<double>(k, "lengthscale", c.policy.kernel.lengthscale);
      c.policy.kernel.signal_variance = get_or<double>(k, "signal_variance", c.policy.kernel.signal_variance);
    }
  }
  c.goal = goal_from_string(get_or<std::string>(j, "goal", "aregret"));
  c.horizon = get_or<int>(j, "horizon", c.horizon);
  c.replications = get_or<int>(j, "replications", c.replications);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  c.initial_reveal_count = get_or<int>(j, "initial_reveal_count", c.initial_reveal_count);
  c.output_path = get_or<std::string>(j, "output_path", "");
  c.threads = get_or<int>(j, "threads", c.threads);
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset_path"] = c.dataset_path;
  j["projection"] = c.projection ? json{{"m", c.projection->m}, {"seed", c.projection->seed}} : json(nullptr);
  json p;
  p["name"] = c.policy.name;
  p["h"] = c.policy.h;
  p["K"] = c.policy.K;
  p["n"] = c.policy.n;
  p["b"] = c.policy.b;
  p["fantasy_noise"] = c.policy.fantasy_noise;
  p["root_sampling"] = c.policy.root_sampling == RootSampling::kRank ? "rank" : "independent";
  p["delta"] = c.policy.delta_for(c.goal);
  p["R"] = c.policy.R ? json(*c.policy.R) : json(nullptr);
  p["kernel"] = {{"kind", "rbf"},
                 {"lengthscale", c.policy.kernel.lengthscale},
                 {"signal_variance", c.policy.kernel.signal_variance}};
  p["noise_variance"] = c.policy.noise_variance;
  j["policy"] = p;
  j["goal"] = to_string(c.goal);
  j["horizon"] = c.horizon;
  j["replications"] = c.replications;
  j["master_seed"] = c.master_seed;
  j["initial_reveal_count"] = c.initial_reveal_count;
  j["output_path"] = c.output_path;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

PolicyState make_policy_state(const PolicyConfig& pc, Goal goal, double prior_mean, Eigen::Index dim, int horizon,
                              double target_range) {
  PolicyState s{GpBelief(pc.kernel, pc.noise_variance, prior_mean), std::nullopt};
  if (pc.name == "lin-ts") {
    const double R = pc.R ? *pc.R : (target_range > 0.0 ? 0.5 * target_range : 1.0);
    s.lints = lints_init(dim, R, pc.delta_for(goal), std::max(horizon, 2));
  }
  return s;
}

PolicyState observe_batch(const PolicyState& s, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                          const Eigen::Ref<const Eigen::VectorXd>& ys) {
  PolicyState next{s.belief.condition(xs, ys), s.lints};
  if (next.lints) {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      next.lints = lints_update(*next.lints, xs.row(i).transpose(), ys(i) - s.belief.prior_mean());
    }
  }
  return next;
}

Decision decide(const PolicyConfig& pc, Goal goal, const PolicyState& s, const ArmSet& arms, int t, int max_batch,
                Rng& rng) {
  const std::string& name = pc.name;
  if (name == "random") return random_baseline_step(arms, rng);
  if (name == "gp-thompson") return gp_thompson_step(s.belief, arms, rng);
  if (name == "gp-ucb") return gp_ucb_step(s.belief, arms, std::max(t, 1), pc.delta_for(goal), arms.total());
  if (name == "lin-ts") {
    if (!s.lints) throw ConfigError("lin-ts state missing");
    Decision d;
    d.arm_indices = {lints_step(*s.lints, arms, rng)};
    return d;
  }
  TreeConfig tree = pc.tree(goal);
  if (name == "gp-tree") return gp_tree_step(s.belief, arms, tree, rng);
  if (name == "batch-gp-tree") {
    tree.batch_size = std::min({tree.batch_size, std::max(max_batch, 1), static_cast<int>(arms.untested.size())});
    return batch_gp_tree_step(s.belief, arms, tree, rng);
  }
  throw ConfigError("unknown policy '" + name + "'");
}

Eigen::MatrixXd prepare_features(const Dataset& ds, const std::optional<ProjectionSpec>& projection) {
  if (!projection) return Standardizer::fit(ds.features).apply(ds.features);
  if (projection->m > ds.dim()) {
    throw InputError("projection target dim " + std::to_string(projection->m) + " exceeds dataset dim " +
                     std::to_string(ds.dim()));
  }
  const ProjectionMatrix p = build_projection(ds.dim(), projection->m, projection->seed);
  const Eigen::MatrixXd projected = apply_projection_rows(p, ds.features);
  return Standardizer::fit(projected).apply(projected);
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t policy_index, int rep) {
  return mix64(master_seed, static_cast<std::uint64_t>(policy_index), static_cast<std::uint64_t>(rep));
}

std::vector<RunRecord> run_replicate(const ExperimentConfig& cfg, const Dataset& ds,
                                     std::shared_ptr<const Eigen::MatrixXd> features, std::uint64_t seed) {
  Rng rng(seed);
  ArmSet arms = ArmSet::all(features);
  const double r_star = ds.targets.maxCoeff();
  const double range = r_star - ds.targets.minCoeff();

  std::vector<std::size_t> order;
  std::vector<std::size_t> revealed;
  for (int i = 0; i < cfg.initial_reveal_count; ++i) {
    const std::size_t pick = arms.untested[rng.uniform_index(arms.untested.size())];
    revealed.push_back(pick);
    arms = arms.without({pick});
  }
  double prior_mean = 0.0;
  for (std::size_t i : revealed) prior_mean += ds.targets(static_cast<Eigen::Index>(i));
  if (!revealed.empty()) prior_mean /= static_cast<double>(revealed.size());

  PolicyState state = make_policy_state(cfg.policy, cfg.goal, prior_mean, features->cols(), cfg.horizon, range);
  auto observe = [&](const std::vector<std::size_t>& picks) {
    Eigen::VectorXd ys(static_cast<Eigen::Index>(picks.size()));
    for (std::size_t i = 0; i < picks.size(); ++i) ys(static_cast<Eigen::Index>(i)) = ds.targets(static_cast<Eigen::Index>(picks[i]));
    state = observe_batch(state, arms.rows(picks), ys);
    order.insert(order.end(), picks.begin(), picks.end());
  };
  if (!revealed.empty()) observe(revealed);

  while (static_cast<int>(order.size()) < cfg.horizon) {
    const int remaining = cfg.horizon - static_cast<int>(order.size());
    Decision d = decide(cfg.policy, cfg.goal, state, arms, static_cast<int>(order.size()) + 1, remaining, rng);
    if (static_cast<int>(d.arm_indices.size()) > remaining) d.arm_indices.resize(static_cast<std::size_t>(remaining));
    for (std::size_t i : d.arm_indices) {
      if (std::find(arms.untested.begin(), arms.untested.end(), i) == arms.untested.end()) {
        throw NumericalError("policy returned an already tested arm");
      }
    }
    observe(d.arm_indices);
    arms = arms.without(d.arm_indices);
  }

  std::vector<std::string> ids;
  std::vector<double> ys;
  for (std::size_t i : order) {
    ids.push_back(ds.ids[i]);
    ys.push_back(ds.targets(static_cast<Eigen::Index>(i)));
  }
  return make_records(r_star, ids, ys);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, load_dataset(cfg.dataset_path));
}

RunResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
  cfg.validate();
  ds.validate();
  if (!ds.has_targets()) throw InputError("dataset '" + ds.name + "' has missing targets");
  if (static_cast<std::size_t>(cfg.horizon) > ds.size()) {
    throw ConfigError("horizon " + std::to_string(cfg.horizon) + " exceeds the " + std::to_string(ds.size()) +
                      " arms in the dataset");
  }
  auto features = std::make_shared<const Eigen::MatrixXd>(prepare_features(ds, cfg.projection));
  const std::size_t pidx = policy_index(cfg.policy.name);

  RunResult res;
  res.config = cfg;
  res.config_digest = digest(config_to_json(cfg).dump());
  res.replicates.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(res.replicates.size(), cfg.threads, [&](std::size_t r) {
    res.replicates[r] = run_replicate(cfg, ds, features, replicate_seed(cfg.master_seed, pidx, static_cast<int>(r)));
  });
  res.summary = summarize(res.replicates);
  return res;
}

std::vector<SummaryRow> summarize(const std::vector<std::vector<RunRecord>>& replicates) {
  std::vector<SummaryRow> rows;
  if (replicates.empty()) return rows;
  const std::size_t T = replicates.front().size();
  const double n = static_cast<double>(replicates.size());
  for (std::size_t t = 0; t < T; ++t) {
    SummaryRow row;
    row.t = static_cast<int>(t) + 1;
    double sa = 0.0, ss = 0.0;
    for (const auto& rep : replicates) {
      sa += rep.at(t).running_aregret;
      ss += rep.at(t).running_sregret;
    }
    row.mean_aregret = sa / n;
    row.mean_sregret = ss / n;
    if (replicates.size() > 1) {
      double va = 0.0, vs = 0.0;
      for (const auto& rep : replicates) {
        va += std::pow(rep[t].running_aregret - row.mean_aregret, 2);
        vs += std::pow(rep[t].running_sregret - row.mean_sregret, 2);
      }
      row.se_aregret = std::sqrt(va / (n - 1.0) / n);
      row.se_sregret = std::sqrt(vs / (n - 1.0) / n);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string records_csv(const RunResult& res) {
  std::ostringstream out;
  out << "policy,goal,rep,t,arm_id,y,iregret,avg_regret,simple_regret\n";
  const std::string prefix = res.config.policy.name + "," + to_string(res.config.goal) + ",";
  for (std::size_t r = 0; r < res.replicates.size(); ++r) {
    for (const auto& rec : res.replicates[r]) {
      out << prefix << r << ',' << rec.t << ',' << rec.arm_id << ',' << format_real(rec.y_observed) << ','
          << format_real(rec.iregret) << ',' << format_real(rec.running_aregret) << ','
          << format_real(rec.running_sregret) << '\n';
    }
  }
  return out.str();
}

std::string summary_csv(const RunResult& res) {
  std::ostringstream out;
  out << "t,mean_avg_regret,se_avg_regret,mean_simple_regret,se_simple_regret\n";
  for (const auto& row : res.summary) {
    out << row.t << ',' << format_real(row.mean_aregret) << ',' << format_real(row.se_aregret) << ','
        << format_real(row.mean_sregret) << ',' << format_real(row.se_sregret) << '\n';
  }
  return out.str();
}

void emit_results(const RunResult& res, const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw InputError("cannot create output directory '" + path + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(path) / name, std::ios::binary);
    out << text;
    if (!out) throw InputError("cannot write '" + (fs::path(path) / name).string() + "'");
  };
  write("records.csv", records_csv(res));
  write("summary.csv", summary_csv(res));
  json cfg = config_to_json(res.config);
  cfg["config_digest"] = res.config_digest;
  write("config.json", cfg.dump(2) + "\n");
}

std::vector<std::string> verify_records(const std::string& records_path) {
  std::ifstream in(records_path);
  if (!in) throw InputError("cannot open '" + records_path + "'");
  std::vector<std::string> problems;
  std::string line;
  if (!std::getline(in, line) || line != "policy,goal,rep,t,arm_id,y,iregret,avg_regret,simple_regret") {
    problems.push_back("unexpected header");
    return problems;
  }
  struct Running {
    int t = 0;
    double sum = 0.0;
    double best = 0.0;
    std::vector<std::string> arms;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Running> runs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (c.size() != 9) {
      problems.push_back(where + "expected 9 columns");
      continue;
    }
    double y, ireg, avg, simple;
    int t;
    try {
      t = std::stoi(c[3]);
      y = std::stod(c[5]);
      ireg = std::stod(c[6]);
      avg = std::stod(c[7]);
      simple = std::stod(c[8]);
    } catch (const std::exception&) {
      problems.push_back(where + "non-numeric cell");
      continue;
    }
    Running& run = runs[{c[0], c[1], c[2]}];
    if (t != run.t + 1) problems.push_back(where + "t is not consecutive");
    run.t = t;
    if (std::find(run.arms.begin(), run.arms.end(), c[4]) != run.arms.end()) {
      problems.push_back(where + "arm '" + c[4] + "' tested twice");
    }
    run.arms.push_back(c[4]);
    if (ireg < 0.0) problems.push_back(where + "negative iregret");
    const double r_star = y + ireg;
    run.sum += ireg;
    run.best = t == 1 ? y : std::max(run.best, y);
    const double expect_avg = run.sum / t;
    if (std::abs(avg - expect_avg) > 1e-9 * std::max(1.0, std::abs(expect_avg))) {
      problems.push_back(where + "avg_regret is not the running mean of iregret");
    }
    if (avg < 0.0) problems.push_back(where + "negative avg_regret");
    if (std::abs(simple - (r_star - run.best)) > 1e-9 * std::max(1.0, std::abs(r_star))) {
      problems.push_back(where + "simple_regret is not r* minus best-so-far");
    }
    if (simple < 0.0) problems.push_back(where + "negative simple_regret");
  }
  return problems;
}

}  // namespace gptree
