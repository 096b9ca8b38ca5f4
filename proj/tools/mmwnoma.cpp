// Command-line front end: train, eval, sweep, baseline.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "mmwnoma/harness.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<mmwnoma::Seed> seed;
  std::string out = "out";
  std::string profile = "paper";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "run a single seed instead of the configured list");
  cmd->add_option("--out", opts.out, "output directory")->capture_default_str();
  cmd->add_option("--profile", opts.profile, "base profile the config file overrides")
      ->check(CLI::IsMember({"paper", "desk"}))
      ->capture_default_str();
}

mmwnoma::ExperimentConfig resolve(const CommonOptions& opts) {
  const mmwnoma::Profile profile = mmwnoma::parse_profile(opts.profile);
  mmwnoma::ExperimentConfig cfg =
      opts.config.empty() ? mmwnoma::profile_config(profile) : mmwnoma::load_config_file(opts.config, profile);
  if (opts.seed) cfg.seeds = {*opts.seed};
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training allocates and frees many same-sized matrices; keeping freed
  // blocks in the heap avoids repeated mmap/munmap round trips.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif

  CLI::App app{"Joint power allocation and hybrid beamforming for mmWave NOMA with soft actor-critic"};
  app.require_subcommand(1);

  CommonOptions train_opts, eval_opts, sweep_opts, baseline_opts;
  std::string checkpoints;

  auto* train = app.add_subcommand("train", "train one agent per seed; writes curves and checkpoints");
  add_common(train, train_opts);
  auto* eval = app.add_subcommand("eval", "evaluate saved checkpoints with the deterministic policy");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoints", checkpoints, "directory holding checkpoint_seed<s>.txt (default: --out)");
  auto* sweep = app.add_subcommand("sweep", "compare drl, tdma and strongest_path_noma over a parameter grid");
  add_common(sweep, sweep_opts);
  auto* baseline = app.add_subcommand("baseline", "evaluate tdma and strongest_path_noma only");
  add_common(baseline, baseline_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = resolve(train_opts);
      const auto runs = mmwnoma::run_training(cfg, train_opts.out, &std::cout);
      for (const auto& run : runs) {
        std::cout << "seed " << run.seed << ": final moving_avg " << run.curve.moving_avg.back() << ", wall "
                  << run.wall_seconds << " s\n";
      }
    } else if (*eval) {
      const auto cfg = resolve(eval_opts);
      const std::filesystem::path from = checkpoints.empty() ? eval_opts.out : checkpoints;
      const auto results = mmwnoma::run_evaluation(cfg, from, eval_opts.out);
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::cout << "seed " << cfg.seeds[i] << ": sum_rate " << r.sum_rate.mean << " +- " << r.sum_rate.std_err
                  << ", reward " << r.reward.mean << " +- " << r.reward.std_err << ", violations "
                  << r.violation_fraction << '\n';
      }
    } else if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto path = mmwnoma::run_sweep(cfg, sweep_opts.out, &std::cout);
      std::cout << "wrote " << path.string() << '\n';
    } else if (*baseline) {
      const auto cfg = resolve(baseline_opts);
      mmwnoma::run_baselines(cfg, baseline_opts.out);
      std::cout << "wrote " << (std::filesystem::path(baseline_opts.out) / "baseline.csv").string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
