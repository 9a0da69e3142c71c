// Command-line front end for the SD-GAN laboratory.
//
//   sdgan dirac    --config cfg.json [--out DIR]
//   sdgan train    --config cfg.json [--out DIR] [--seeds 0,1,2] [--threads N]
//   sdgan ablate   --config cfg.json [--out DIR] [--seeds ...] [--threads N]
//   sdgan finetune --config cfg.json --checkpoint ck.json [...]
//   sdgan rank     --config cfg.json --checkpoint ck.json [--out DIR]
//
// Exit codes: 0 success; 1 configuration error; 2 every training run
// diverged; 3 I/O or other runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sdgan/config.hpp"
#include "sdgan/harness.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string checkpoint;
  std::vector<std::uint64_t> seeds;
  unsigned threads = 1;
};

sdgan::ExperimentConfig load_config(const CliOptions& opt, sdgan::RunMode mode) {
  std::ifstream in(opt.config_path);
  if (!in) throw sdgan::IoError("cannot open config file: " + opt.config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw sdgan::ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  sdgan::ExperimentConfig cfg = sdgan::ExperimentConfig::from_json(j);
  if (cfg.mode != mode) {
    throw sdgan::ConfigError("config mode \"" + sdgan::run_mode_name(cfg.mode) +
                             "\" does not match subcommand \"" +
                             sdgan::run_mode_name(mode) + "\"");
  }
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (!opt.seeds.empty()) cfg.seeds = opt.seeds;
  if (!opt.checkpoint.empty()) cfg.checkpoint = opt.checkpoint;
  cfg.validate();
  return cfg;
}

int run_training_mode(const CliOptions& opt, sdgan::RunMode mode) {
  const sdgan::ExperimentConfig cfg = load_config(opt, mode);
  const auto results = sdgan::run_training_suite(cfg, opt.threads);
  bool any_ok = false, any_diverged = false;
  for (const auto& r : results) {
    const char* status = r.diverged ? "DIVERGED" : (r.failed ? "FAILED" : "ok");
    if (r.diverged || r.failed) {
      std::printf("[%s seed=%llu] %s  %s\n", r.cell.c_str(),
                  static_cast<unsigned long long>(r.seed), status, r.error.c_str());
    } else {
      std::printf("[%s seed=%llu] %s  frechet_feature=%.6g modes=%zu hq=%.3f\n",
                  r.cell.c_str(), static_cast<unsigned long long>(r.seed), status,
                  r.frechet_feature, r.modes_hit, r.hq_fraction);
    }
    any_ok = any_ok || (!r.diverged && !r.failed);
    any_diverged = any_diverged || r.diverged;
  }
  std::printf("summary: %s/summary.json\n", cfg.output_dir.c_str());
  if (!any_ok) return any_diverged ? 2 : 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale laboratory for EMA-teacher self-distillation in GAN training"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* sub, bool with_threads, bool with_checkpoint) {
    sub->add_option("--config", opt.config_path, "JSON experiment config")
        ->required();
    sub->add_option("--out", opt.out_dir, "Override the config's output_dir");
    sub->add_option("--seeds", opt.seeds, "Override the config's seed list")
        ->delimiter(',');
    if (with_threads) {
      sub->add_option("--threads", opt.threads, "Worker threads for the run grid")
          ->check(CLI::PositiveNumber);
    }
    if (with_checkpoint) {
      sub->add_option("--checkpoint", opt.checkpoint, "Override the config's checkpoint path");
    }
  };

  CLI::App* cmd_dirac = app.add_subcommand("dirac", "One-parameter stability study");
  add_common(cmd_dirac, false, false);
  CLI::App* cmd_train = app.add_subcommand("train", "Train a single configuration");
  add_common(cmd_train, true, false);
  CLI::App* cmd_ablate = app.add_subcommand("ablate", "Run the ablation grid");
  add_common(cmd_ablate, true, false);
  CLI::App* cmd_finetune =
      app.add_subcommand("finetune", "Continue training from a checkpoint");
  add_common(cmd_finetune, true, true);
  CLI::App* cmd_rank =
      app.add_subcommand("rank", "Rank latents by teacher discrepancy x D score");
  add_common(cmd_rank, false, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_dirac->parsed()) {
      const auto cfg = load_config(opt, sdgan::RunMode::Dirac);
      const auto reports = sdgan::run_dirac_study(cfg);
      std::size_t stable = 0;
      for (const auto& r : reports) stable += r.routh_hurwitz_pass;
      std::printf("stability sweep: %zu/%zu grid points asymptotically stable\n", stable,
                  reports.size());
      std::printf("outputs in %s\n", cfg.output_dir.c_str());
      return 0;
    }
    if (cmd_train->parsed()) return run_training_mode(opt, sdgan::RunMode::Train);
    if (cmd_ablate->parsed()) return run_training_mode(opt, sdgan::RunMode::Ablate);
    if (cmd_finetune->parsed()) return run_training_mode(opt, sdgan::RunMode::Finetune);
    if (cmd_rank->parsed()) {
      const auto cfg = load_config(opt, sdgan::RunMode::Rank);
      sdgan::run_rank_report(cfg);
      std::printf("rank report in %s\n", cfg.output_dir.c_str());
      return 0;
    }
  } catch (const sdgan::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const sdgan::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 1;
  } catch (const sdgan::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
