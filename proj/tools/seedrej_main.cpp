#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seedrej/config.hpp"
#include "seedrej/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool check_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Path to the JSON run configuration")
      ->required();
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Override the config's rng seed");
  cmd->add_flag("--check-config", args.check_config,
                "Validate the configuration and exit without running");
}

seedrej::RunConfig load_config(const CommonArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw std::runtime_error("cannot open config file '" + args.config_path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file '" + args.config_path + "': " + e.what());
  }
  return seedrej::parse_run_config(std::move(doc), args.seed);
}

bool report_check(const seedrej::RunConfig& cfg, const CommonArgs& args) {
  if (!args.check_config) return false;
  std::cout << "config ok (hash " << cfg.config_hash() << ")\n";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seed-rejection evaluation toolkit"};
  app.require_subcommand(1);

  CommonArgs synth_args, eval_args, train_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic seeded-task corpus and its frozen task model");
  add_common(synth, synth_args);
  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate rejection scorers per fold and write report + curves");
  add_common(eval, eval_args);
  CLI::App* train = app.add_subcommand("train-daer", "Train the dual-loss rejection model");
  add_common(train, train_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      seedrej::RunConfig cfg = load_config(synth_args);
      if (report_check(cfg, synth_args)) return 0;
      auto res = seedrej::run_synth(cfg, synth_args.out_dir);
      std::cout << "wrote " << res.n_records << " records to " << res.corpus_path.string() << "\n"
                << "wrote task model to " << res.task_model_path.string()
                << " (holdout accuracy " << res.holdout_accuracy << ")\n";
    } else if (eval->parsed()) {
      seedrej::RunConfig cfg = load_config(eval_args);
      if (report_check(cfg, eval_args)) return 0;
      auto res = seedrej::run_eval(cfg, eval_args.out_dir);
      std::cout << "wrote " << res.report_path.string() << " and " << res.curve_paths.size()
                << " curve files\n";
      for (const auto& [label, entry] : res.report["scorers"].items())
        std::cout << "  " << label << ": fold-mean AMAE "
                  << entry["fold_mean_amae"].get<double>() << "\n";
    } else if (train->parsed()) {
      seedrej::RunConfig cfg = load_config(train_args);
      if (report_check(cfg, train_args)) return 0;
      auto res = seedrej::run_train_daer(cfg, train_args.out_dir);
      std::cout << "wrote " << res.checkpoint_path.string() << "\n"
                << "wrote " << res.log_path.string() << "\n"
                << "best validation AMAE " << res.best_val_amae << " at epoch " << res.best_epoch
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
