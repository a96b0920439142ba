// gptree command line: experiments, dataset tools, and the campaign advisor.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gptree/campaign.hpp"
#include "gptree/data.hpp"
#include "gptree/errors.hpp"
#include "gptree/harness.hpp"
#include "gptree/projection.hpp"
#include "gptree/service.hpp"

namespace {

using namespace gptree;
using nlohmann::json;

int cmd_run(const std::string& config_path, const std::string& output_override, int threads) {
  ExperimentConfig cfg = load_config(config_path);
  if (!output_override.empty()) cfg.output_path = output_override;
  if (threads > 0) cfg.threads = threads;
  if (cfg.output_path.empty()) throw ConfigError("no output_path in config and no --output given");
  const RunResult res = run_experiment(cfg);
  emit_results(res, cfg.output_path);
  const SummaryRow& last = res.summary.back();
  std::cout << cfg.policy.name << " " << to_string(cfg.goal) << " T=" << last.t
            << " avg_regret=" << format_real(last.mean_aregret) << " +- " << format_real(last.se_aregret)
            << " simple_regret=" << format_real(last.mean_sregret) << " +- " << format_real(last.se_sregret) << "\n";
  return kExitOk;
}

void print_suggestion(const Suggestion& s) {
  if (s.complete) {
    std::cout << "campaign complete\n";
    return;
  }
  std::cout << "suggest:";
  for (const auto& id : s.arm_ids) std::cout << ' ' << id;
  std::cout << '\n';
}

int cmd_advise(const std::string& dir, const std::string& init_csv, const std::string& init_config) {
  Campaign campaign = [&] {
    if (init_csv.empty()) return Campaign::load(dir);
    CampaignConfig cfg;
    if (!init_config.empty()) {
      std::ifstream in(init_config);
      if (!in) throw ConfigError("cannot open '" + init_config + "'");
      cfg = campaign_config_from_json(json::parse(in));
    }
    LoadOptions opts;
    opts.allow_missing_targets = true;
    return Campaign::create(dir, load_dataset(init_csv, opts), cfg);
  }();
  std::cout << "campaign " << dir << ": " << campaign.status().observed << "/" << campaign.status().candidates
            << " observed. commands: suggest | observe <id> <y> | whatif <id> <y> | posterior [ids...] | status | quit\n";
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    if (cmd.empty()) continue;
    try {
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "suggest") {
        print_suggestion(campaign.suggest());
      } else if (cmd == "observe" || cmd == "whatif") {
        std::string id;
        double y;
        if (!(in >> id >> y)) {
          std::cout << "usage: " << cmd << " <arm_id> <y>\n";
          continue;
        }
        if (cmd == "observe") {
          campaign.observe(id, y);
          std::cout << "recorded " << id << " = " << format_real(y) << "\n";
        } else {
          std::cout << "what-if " << id << " = " << format_real(y) << " -> ";
          print_suggestion(campaign.what_if(id, y).suggest());
        }
      } else if (cmd == "posterior") {
        std::vector<std::string> ids;
        for (std::string id; in >> id;) ids.push_back(id);
        if (ids.empty()) ids = campaign.candidates().ids;
        for (const auto& p : campaign.posterior(ids)) {
          std::cout << p.arm_id << " mean=" << format_real(p.mean) << " std=" << format_real(p.std) << "\n";
        }
      } else if (cmd == "status") {
        std::cout << status_to_json(dir, campaign).dump(2) << "\n";
      } else {
        std::cout << "unknown command '" << cmd << "'\n";
      }
    } catch (const InputError& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP bandit experiment design for drug screening"};
  app.require_subcommand(1);

  std::string config_path, output, records;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment grid cell from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "Output directory (overrides output_path)");
  run->add_option("--threads", threads, "Worker threads for replicates");

  std::string source, descriptors, synth_out;
  int n_points = 3000, analog_n = 0, analog_dim = 64;
  std::uint64_t seed = 0;
  double lengthscale = 1.0, signal_variance = 1.0, noise = 0.1, y_lo = 4.6, y_hi = 8.0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a GP fitted on a source");
  synth->add_option("--source", source, "Source dataset CSV");
  synth->add_option("--descriptors", descriptors, "Source descriptor table (id<TAB>y<TAB>tokens)");
  synth->add_option("--analog", analog_n, "Instead of a source, write an N-molecule descriptor-count analog");
  synth->add_option("--analog-dim", analog_dim, "Count columns of the analog");
  synth->add_option("--y-lo", y_lo, "Analog target lower bound");
  synth->add_option("--y-hi", y_hi, "Analog target upper bound");
  synth->add_option("--n", n_points, "Number of synthetic points");
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--lengthscale", lengthscale, "RBF lengthscale (standardized features)");
  synth->add_option("--signal-variance", signal_variance, "RBF signal variance");
  synth->add_option("--noise", noise, "GP noise variance");
  synth->add_option("--output", synth_out, "Output CSV")->required();

  std::string project_in, project_out;
  int project_m = 128;
  std::uint64_t project_seed = 0;
  auto* project = app.add_subcommand("project", "Gaussian random projection of a dataset's features");
  project->add_option("--input", project_in, "Input dataset CSV")->required()->check(CLI::ExistingFile);
  project->add_option("--m", project_m, "Target dimension");
  project->add_option("--seed", project_seed, "Projection seed");
  project->add_option("--output", project_out, "Output CSV")->required();

  auto* verify = app.add_subcommand("verify", "Re-check metric invariants of a records.csv");
  verify->add_option("--records", records, "records.csv path")->required()->check(CLI::ExistingFile);

  std::string host = "127.0.0.1", store = "campaigns", static_dir;
  int port = 8080;
  if (const char* addr = std::getenv("GPTREE_ADDR")) {
    const std::string a = addr;
    const auto colon = a.rfind(':');
    if (colon != std::string::npos) {
      host = a.substr(0, colon);
      port = std::atoi(a.c_str() + colon + 1);
    }
  }
  auto* serve_cmd = app.add_subcommand("serve", "Start the campaign advisor HTTP service");
  serve_cmd->add_option("--host", host, "Bind address (default from GPTREE_ADDR or 127.0.0.1)");
  serve_cmd->add_option("--port", port, "Port (default from GPTREE_ADDR or 8080)");
  serve_cmd->add_option("--store", store, "Campaign store directory");
  serve_cmd->add_option("--static", static_dir, "Directory of the built UI bundle");

  std::string advise_dir, init_csv, init_config;
  auto* advise = app.add_subcommand("advise", "Interactive campaign session in the terminal");
  advise->add_option("--dir", advise_dir, "Campaign directory")->required();
  advise->add_option("--init", init_csv, "Create the campaign from this candidate CSV");
  advise->add_option("--config", init_config, "Campaign config JSON (with --init)");

  std::string vec_in, vec_out;
  auto* vectorize = app.add_subcommand("vectorize", "Turn a descriptor table into a count-feature dataset CSV");
  vectorize->add_option("--descriptors", vec_in, "Descriptor table")->required()->check(CLI::ExistingFile);
  vectorize->add_option("--output", vec_out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, output, threads);
    if (*synth) {
      if (analog_n > 0) {
        save_dataset(generate_descriptor_analog(analog_n, analog_dim, seed, y_lo, y_hi), synth_out);
        return kExitOk;
      }
      Dataset src;
      if (!source.empty()) {
        src = load_dataset(source);
      } else if (!descriptors.empty()) {
        src = dataset_from_descriptors(load_descriptors(descriptors), "descriptors");
      } else {
        throw ConfigError("synth needs --source, --descriptors or --analog");
      }
      KernelSpec k;
      k.lengthscale = lengthscale;
      k.signal_variance = signal_variance;
      save_dataset(generate_synthetic(src, n_points, seed, k, noise), synth_out);
      return kExitOk;
    }
    if (*project) {
      Dataset ds = load_dataset(project_in);
      const ProjectionMatrix p = build_projection(ds.dim(), project_m, project_seed);
      ds.features = apply_projection_rows(p, ds.features);
      ds.provenance = Provenance::kProjected;
      save_dataset(ds, project_out);
      return kExitOk;
    }
    if (*verify) {
      const auto problems = verify_records(records);
      for (const auto& p : problems) std::cerr << p << "\n";
      if (!problems.empty()) return kExitData;
      std::cout << "ok\n";
      return kExitOk;
    }
    if (*vectorize) {
      save_dataset(dataset_from_descriptors(load_descriptors(vec_in), "descriptors"), vec_out);
      return kExitOk;
    }
    if (*serve_cmd) {
      std::cout << "serving on http://" << host << ":" << port << " (store " << store << ")" << std::endl;
      serve(host, port, store, static_dir.empty() ? std::nullopt : std::optional<std::string>(static_dir));
      return kExitOk;
    }
    if (*advise) return cmd_advise(advise_dir, init_csv, init_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
