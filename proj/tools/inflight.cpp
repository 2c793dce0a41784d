#include "inflight/inflight.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace inflight;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  bool no_gating = false;
  std::optional<double> cutoff;
  std::optional<std::int64_t> target;
  std::optional<std::string> out_dir;
  std::optional<std::string> prompts;
  std::optional<std::string> exemplars;
  std::optional<int> threads;

  void add_to(CLI::App* app, bool run_flags) {
    app->add_option("--config", config, "JSON config file");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--cutoff", cutoff, "mid-solution cutoff as a fraction of the expected length");
    if (!run_flags) return;
    app->add_option("--backend", backend, "generation backend")->check(CLI::IsMember({"sim", "http"}));
    app->add_flag("--no-gating", no_gating, "generate every stage in full and only record would-be rejections");
    app->add_option("--target-accepted", target, "stop once this many samples are accepted");
    app->add_option("--out-dir", out_dir, "output directory");
    app->add_option("--exemplars", exemplars, "few-shot exemplar file, one problem per line");
    app->add_option("--threads", threads, "worker threads per chunk");
  }

  RunConfig load() const {
    json doc = json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw ConfigError({"cannot open config file '" + config + "'"});
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError({"config file '" + config + "' is not valid JSON: " + std::string(e.what())});
      }
      if (!doc.is_object()) throw ConfigError({"config file must hold an object"});
    }
    if (seed) doc["seed"] = *seed;
    if (backend) doc["backend"] = *backend;
    if (no_gating) doc["run"]["gating"] = false;
    if (cutoff) doc["policy"]["midsol_cutoff"] = *cutoff;
    if (target) doc["run"]["target_accepted"] = *target;
    if (threads) doc["run"]["threads"] = *threads;
    if (out_dir) doc["paths"]["out_dir"] = *out_dir;
    if (prompts) doc["paths"]["prompts"] = *prompts;
    if (exemplars) doc["paths"]["exemplars"] = *exemplars;
    return config_from_json(doc);
  }
};

int config_failure(const ConfigError& e) {
  std::cerr << "invalid configuration:\n";
  for (const auto& p : e.problems) std::cerr << "  - " << p << "\n";
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inflight: synthetic math data generation with staged early rejection"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "run the pipeline over a prompts file");
  gen_flags.add_to(gen, true);
  std::string gen_prompts;
  gen->add_option("prompts", gen_prompts, "prompts file (plain lines or JSON objects)");

  CommonFlags replay_flags;
  auto* replay = app.add_subcommand("replay", "replay a --no-gating trajectory log through the gates");
  replay_flags.add_to(replay, false);
  std::string replay_log;
  std::string replay_name = "run";
  bool replay_json = false;
  replay->add_option("log", replay_log, "trajectories.jsonl from a --no-gating run")->required();
  replay->add_option("--name", replay_name, "benchmark name for the FP/FN table");
  replay->add_flag("--json", replay_json, "print one machine-readable record");

  auto* theory = app.add_subcommand("verify-theory", "check the savings and optional-stopping identities");
  std::optional<std::string> model_file;
  std::int64_t random_models = 0;
  TheoryOptions topt;
  theory->add_option("model", model_file, "model file (one object or an array)");
  theory->add_option("--random", random_models, "check this many random models")->check(CLI::NonNegativeNumber);
  theory->add_option("--trials", topt.trials, "Monte-Carlo trials")->check(CLI::NonNegativeNumber);
  theory->add_option("--martingale-models", topt.martingale_models, "models checked against every stopping rule");
  theory->add_option("--mc-models", topt.mc_models, "models given Monte-Carlo checks");
  theory->add_option("--seed", topt.seed, "seed for random models and Monte-Carlo");

  CommonFlags dedup_flags;
  auto* dedup = app.add_subcommand("dedup", "list near-duplicate clusters in a dataset file");
  dedup_flags.add_to(dedup, false);
  std::string dataset;
  dedup->add_option("dataset", dataset, "dataset.jsonl")->required();

  CommonFlags show_flags;
  auto* show = app.add_subcommand("show-config", "print the normalized configuration");
  show_flags.add_to(show, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      if (!gen_prompts.empty()) gen_flags.prompts = gen_prompts;
      return cmd_generate(gen_flags.load(), std::cout, std::cerr);
    }
    if (*replay) return cmd_replay(replay_flags.load(), replay_log, std::cout, std::cerr, replay_json, replay_name);
    if (*theory) {
      std::vector<ExactModel> models;
      if (model_file) {
        try {
          models = load_models(*model_file);
        } catch (const std::exception& e) {
          std::cerr << "error: " << e.what() << "\n";
          return kExitUsage;
        }
      }
      Rng rng(topt.seed);
      for (std::int64_t i = 0; i < random_models; ++i) models.push_back(random_exact_model(rng, i % 2 == 1));
      if (models.empty()) {
        std::cerr << "error: give a model file or --random N\n";
        return kExitUsage;
      }
      return cmd_verify_theory(models, topt, std::cout);
    }
    if (*dedup) return cmd_dedup(dataset, dedup_flags.load().dedup, std::cout, std::cerr);
    if (*show) {
      auto cfg = show_flags.load();
      if (auto problems = finalize_config(cfg); !problems.empty()) {
        std::cerr << "invalid configuration:\n";
        for (const auto& p : problems) std::cerr << "  - " << p << "\n";
        return kExitUsage;
      }
      std::cout << config_to_json(cfg).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    return config_failure(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
