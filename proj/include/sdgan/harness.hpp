#pragma once
// Experiment harness: turns a validated ExperimentConfig into runs, files
// and a summary. Five entry points mirror the CLI subcommands:
//
//   run_dirac_study     trajectory CSVs + a stability sweep over (alpha,
//                       eta_phi) for the one-parameter model
//   run_training_suite  train / ablate / finetune: a grid of (cell x seed)
//                       training runs, optionally warm-started, executed by
//                       a small worker pool with per-run crash isolation
//   run_rank_report     joint SD/discriminator ranking from a checkpoint
//
// Per-run rng discipline: base = Rng(seed); main batches on split(0),
// augmentation on split(1), frozen eval probes on split(2), weight init on
// split(3). Streams never cross, so turning augmentation or monitoring on
// or off cannot shift any other stream.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "sdgan/checkpoint.hpp"
#include "sdgan/config.hpp"
#include "sdgan/csv.hpp"
#include "sdgan/metrics.hpp"
#include "sdgan/train.hpp"

namespace sdgan {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// cells
// ---------------------------------------------------------------------------

struct CellSpec {
  std::string name;
  SdSettings sd;
};

inline std::string cell_name_for(const SdSettings& s) {
  if (s.alpha == 0.0) return "baseline";
  return "sd_" + sd_kind_name(s.kind) + (s.augment ? "_aug" : "_noaug");
}

/// The cell grid for a config: a single cell for train/finetune, the
/// configured ablation grid otherwise.
inline std::vector<CellSpec> cells_for(const ExperimentConfig& cfg) {
  std::vector<CellSpec> cells;
  if (cfg.mode == RunMode::Ablate) {
    if (cfg.ablate.include_baseline) {
      SdSettings s = cfg.sd;
      s.alpha = 0.0;
      cells.push_back({cell_name_for(s), s});
    }
    for (SdKind kind : cfg.ablate.kinds) {
      for (bool aug : cfg.ablate.augment_settings) {
        SdSettings s = cfg.sd;
        s.kind = kind;
        s.augment = aug;
        if (s.alpha == 0.0) s.alpha = 1.0;  // an SD cell needs a live penalty
        cells.push_back({cell_name_for(s), s});
      }
    }
    // Drop duplicate names (e.g. augment_settings irrelevant for baseline).
    std::vector<CellSpec> uniq;
    for (auto& c : cells) {
      bool seen = false;
      for (const auto& u : uniq) seen = seen || u.name == c.name;
      if (!seen) uniq.push_back(std::move(c));
    }
    return uniq;
  }
  cells.push_back({cell_name_for(cfg.sd), cfg.sd});
  return cells;
}

// ---------------------------------------------------------------------------
// single training run
// ---------------------------------------------------------------------------

struct RunResult {
  std::string cell;
  std::uint64_t seed = 0;
  bool diverged = false;
  bool failed = false;  // non-divergence failure (I/O, internal error)
  std::string error;
  std::uint64_t steps_completed = 0;
  double wall_seconds = 0.0;
  // Final eval row.
  double frechet_data = std::numeric_limits<double>::quiet_NaN();
  double frechet_feature = std::numeric_limits<double>::quiet_NaN();
  std::size_t modes_hit = 0;
  double hq_fraction = 0.0;
  double last_loss_sd = std::numeric_limits<double>::quiet_NaN();
  // Checkpoint-trajectory variance over generator snapshots (if >= 2).
  bool traj_var_ok = false;
  VarianceStats traj_var;
  std::string run_dir;
};

namespace detail {

/// Steps (1-based) at which checkpoints are written, derived from fractions
/// of the segment [start_step, start_step + segment_steps].
inline std::vector<std::pair<std::uint64_t, int>> checkpoint_steps(
    const std::vector<double>& fractions, std::uint64_t start_step,
    std::uint64_t segment_steps) {
  std::vector<std::pair<std::uint64_t, int>> out;  // (step, percent label)
  for (double f : fractions) {
    auto s = static_cast<std::uint64_t>(
        std::llround(f * static_cast<double>(segment_steps)));
    if (s < 1) s = 1;
    if (s > segment_steps) s = segment_steps;
    out.emplace_back(start_step + s, static_cast<int>(std::llround(f * 100.0)));
  }
  return out;
}

inline std::string percent_label(int pct) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03d", pct);
  return buf;
}

struct Median {
  std::vector<double> values;
  void add(double v) {
    if (std::isfinite(v)) values.push_back(v);
  }
  double get() {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  }
  double mean() const {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
};

}  // namespace detail

/// Runs one (cell, seed) training run end to end, writing record.csv and
/// checkpoint files into `run_dir`. Never throws: failures are recorded in
/// the result so sibling runs in a sweep are unaffected.
inline RunResult run_single_training(const ExperimentConfig& cfg, const CellSpec& cell,
                                     std::uint64_t seed, const fs::path& run_dir,
                                     const std::optional<Checkpoint>& warm_from) {
  RunResult res;
  res.cell = cell.name;
  res.seed = seed;
  res.run_dir = run_dir.string();
  const auto t_begin = std::chrono::steady_clock::now();
  try {
    fs::create_directories(run_dir);
    const TrainingConfig& tc = cfg.training;
    const SdLossSpec sd_spec = make_sd_loss_spec(cell.sd);
    const MlpParams feature_net = make_feature_net(cfg.sd.feature_seed);
    const double extent = cfg.data.extent();
    const std::string config_hash = cfg.hash();

    // --- rng streams ------------------------------------------------------
    Rng base(seed);
    Rng rng_main = base.split(0);
    Rng rng_aug = base.split(1);
    Rng rng_eval = base.split(2);
    Rng rng_init = base.split(3);

    // Frozen evaluation probes, derived from the seed alone so a resumed run
    // reconstructs them exactly.
    const Tensor eval_reals = sample_batch(cfg.data, tc.eval_samples, rng_eval);
    Tensor eval_latents = Tensor::zeros({tc.eval_samples, 2});
    for (std::size_t i = 0; i < eval_latents.numel(); ++i) eval_latents[i] = rng_eval.normal();
    Tensor traj_latents = Tensor::zeros({tc.trajectory_latents, 2});
    for (std::size_t i = 0; i < traj_latents.numel(); ++i) traj_latents[i] = rng_eval.normal();
    const GaussianFit reals_fit_data = fit_gaussian(eval_reals);
    const GaussianFit reals_fit_feat = fit_gaussian(forward_raw(feature_net, eval_reals));

    // --- model state ------------------------------------------------------
    const Adam::Config g_cfg{tc.lr_g, tc.adam_beta1, tc.adam_beta2, tc.adam_eps};
    const Adam::Config d_cfg{tc.lr_d, tc.adam_beta1, tc.adam_beta2, tc.adam_eps};
    GanTrainer trainer;
    std::uint64_t start_step = 0;
    if (warm_from) {
      WarmStart w = warm_start(*warm_from, generator_spec(), discriminator_spec(),
                               tc.ema_beta, g_cfg, d_cfg);
      trainer = GanTrainer{std::move(w.g), std::move(w.d), std::move(w.ema),
                           std::move(w.opt_g), std::move(w.opt_d),
                           generator_spec().dims.front()};
      if (w.rng_main) rng_main = *w.rng_main;
      if (w.rng_augment) rng_aug = *w.rng_augment;
      start_step = w.start_step;
    } else {
      trainer = make_trainer(generator_spec(), discriminator_spec(), tc.ema_beta,
                             g_cfg, d_cfg, rng_init);
    }
    const std::uint64_t end_step = start_step + tc.steps;
    const auto ckpt_at = detail::checkpoint_steps(tc.checkpoint_fractions, start_step, tc.steps);

    // --- output -----------------------------------------------------------
    CsvWriter csv(run_dir / "record.csv",
                  {"config_hash=" + config_hash, "cell=" + cell.name,
                   "seed=" + std::to_string(seed)},
                  {"step", "loss_d", "loss_g_adv", "loss_sd", "grad_norm_g",
                   "grad_norm_d", "teacher_grad_sq_norm", "frechet_data",
                   "frechet_feature", "modes_hit", "hq_fraction"});

    std::vector<MlpParams> g_snapshots;
    double acc_d = 0.0, acc_g = 0.0, acc_sd = 0.0, acc_gn_g = 0.0, acc_gn_d = 0.0,
           acc_tg = 0.0;
    std::uint64_t acc_n = 0;

    auto eval_and_record = [&](std::uint64_t step) {
      const Tensor fakes = forward_raw(trainer.ema.shadow(), eval_latents);
      res.frechet_data = frechet_distance(fit_gaussian(fakes), reals_fit_data);
      res.frechet_feature =
          frechet_distance(fit_gaussian(forward_raw(feature_net, fakes)), reals_fit_feat);
      const ModeCoverage cov = mode_coverage(fakes, cfg.data, tc.hq_threshold_std);
      res.modes_hit = cov.modes_hit;
      res.hq_fraction = cov.high_quality_fraction;
      const double inv = acc_n ? 1.0 / static_cast<double>(acc_n) : 0.0;
      res.last_loss_sd = acc_sd * inv;
      csv.row({std::to_string(step), format_g17(acc_d * inv), format_g17(acc_g * inv),
               format_g17(acc_sd * inv), format_g17(acc_gn_g * inv),
               format_g17(acc_gn_d * inv), format_g17(acc_tg * inv),
               format_g17(res.frechet_data), format_g17(res.frechet_feature),
               std::to_string(cov.modes_hit), format_g17(cov.high_quality_fraction)});
      acc_d = acc_g = acc_sd = acc_gn_g = acc_gn_d = acc_tg = 0.0;
      acc_n = 0;
    };

    // --- training loop ----------------------------------------------------
    for (std::uint64_t step = start_step + 1; step <= end_step; ++step) {
      const Tensor real = sample_batch(cfg.data, tc.batch_size, rng_main);
      try {
        const TrainStepLog log = train_step(trainer, real, sd_spec, rng_main, rng_aug,
                                            extent, /*monitor_sd=*/true);
        acc_d += log.loss_d;
        acc_g += log.loss_g_adv;
        acc_sd += log.loss_sd;
        acc_gn_g += log.grad_norm_g;
        acc_gn_d += log.grad_norm_d;
        acc_tg += log.teacher_grad_sq_norm;
        ++acc_n;
      } catch (const DivergenceError& e) {
        res.diverged = true;
        res.error = e.what();
        break;
      }
      // Steps executed by this run; a warm-started run counts from its
      // checkpoint, not from zero.
      res.steps_completed = step - start_step;
      if (step % tc.eval_interval == 0 || step == end_step) eval_and_record(step);
      for (const auto& [ck_step, pct] : ckpt_at) {
        if (ck_step != step) continue;
        g_snapshots.push_back(trainer.g.snapshot());
        Checkpoint ck;
        ck.config_hash = config_hash;
        ck.seed = seed;
        ck.step = step;
        ck.generator = trainer.g.snapshot();
        ck.discriminator = trainer.d.snapshot();
        ck.ema = trainer.ema.shadow();
        ck.opt_g = trainer.opt_g.save_state();
        ck.opt_d = trainer.opt_d.save_state();
        ck.rng_main = rng_main.save_state();
        ck.rng_augment = rng_aug.save_state();
        save_checkpoint(run_dir / ("ckpt_" + detail::percent_label(pct) + ".json"), ck);
      }
    }

    if (g_snapshots.size() >= 2) {
      CheckpointSeries series{std::move(g_snapshots), traj_latents};
      const SdKind var_kind = cell.sd.kind == SdKind::Feature ? SdKind::Feature : SdKind::L2;
      res.traj_var = trajectory_variance(
          series, var_kind,
          var_kind == SdKind::Feature ? std::optional<MlpParams>(feature_net) : std::nullopt);
      res.traj_var_ok = true;
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return res;
}

// ---------------------------------------------------------------------------
// suite driver
// ---------------------------------------------------------------------------

inline nlohmann::json summarize_runs(const ExperimentConfig& cfg,
                                     const std::vector<CellSpec>& cells,
                                     const std::vector<RunResult>& results) {
  nlohmann::json cells_json;
  for (const CellSpec& cell : cells) {
    nlohmann::json seeds_json;
    detail::Median fr_data, fr_feat, tv_mean;
    double modes_sum = 0.0, hq_sum = 0.0;
    std::size_t n_ok = 0, n_div = 0, n_fail = 0;
    for (const RunResult& r : results) {
      if (r.cell != cell.name) continue;
      nlohmann::json rj;
      rj["diverged"] = r.diverged;
      rj["failed"] = r.failed;
      if (!r.error.empty()) rj["error"] = r.error;
      rj["steps_completed"] = r.steps_completed;
      rj["wall_seconds"] = r.wall_seconds;
      rj["run_dir"] = r.run_dir;
      if (!r.diverged && !r.failed) {
        rj["frechet_data"] = r.frechet_data;
        rj["frechet_feature"] = r.frechet_feature;
        rj["modes_hit"] = r.modes_hit;
        rj["hq_fraction"] = r.hq_fraction;
        rj["loss_sd_final"] = r.last_loss_sd;
        if (r.traj_var_ok) {
          rj["trajectory_variance_mean"] = r.traj_var.mean;
          rj["trajectory_variance_std"] = r.traj_var.stddev;
          tv_mean.add(r.traj_var.mean);
        }
        fr_data.add(r.frechet_data);
        fr_feat.add(r.frechet_feature);
        modes_sum += static_cast<double>(r.modes_hit);
        hq_sum += r.hq_fraction;
        ++n_ok;
      }
      if (r.diverged) ++n_div;
      if (r.failed) ++n_fail;
      seeds_json[std::to_string(r.seed)] = std::move(rj);
    }
    nlohmann::json agg;
    agg["completed"] = n_ok;
    agg["diverged"] = n_div;
    agg["failed"] = n_fail;
    if (n_ok > 0) {
      agg["frechet_data_median"] = fr_data.get();
      agg["frechet_feature_median"] = fr_feat.get();
      agg["frechet_feature_mean"] = fr_feat.mean();
      agg["modes_hit_mean"] = modes_sum / static_cast<double>(n_ok);
      agg["hq_fraction_mean"] = hq_sum / static_cast<double>(n_ok);
      if (!tv_mean.values.empty()) {
        agg["trajectory_variance_mean"] = tv_mean.mean();
      }
    }
    cells_json[cell.name] = {{"seeds", std::move(seeds_json)}, {"aggregate", std::move(agg)}};
  }
  nlohmann::json j;
  j["config_hash"] = cfg.hash();
  j["mode"] = run_mode_name(cfg.mode);
  j["cells"] = std::move(cells_json);
  return j;
}

/// Runs the full (cell x seed) grid, with `threads` parallel workers when
/// asked. Writes config_used.json up front and summary.json at the end.
/// Returns all run results (order: cells x seeds).
inline std::vector<RunResult> run_training_suite(const ExperimentConfig& cfg,
                                                 unsigned threads = 1) {
  const fs::path out_root(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out_root, ec);
  if (ec) throw IoError("cannot create output dir " + out_root.string() + ": " + ec.message());
  {
    std::ofstream cj(out_root / "config_used.json");
    if (!cj) throw IoError("cannot write config_used.json in " + out_root.string());
    cj << cfg.to_json().dump(2) << "\n";
  }

  std::optional<Checkpoint> warm;
  if (cfg.mode == RunMode::Finetune) {
    warm = load_checkpoint(cfg.checkpoint);
  }

  const std::vector<CellSpec> cells = cells_for(cfg);
  struct Job {
    const CellSpec* cell;
    std::uint64_t seed;
    fs::path dir;
  };
  std::vector<Job> jobs;
  for (const CellSpec& cell : cells) {
    for (std::uint64_t seed : cfg.seeds) {
      jobs.push_back(Job{&cell, seed,
                         out_root / "cells" / cell.name / ("seed_" + std::to_string(seed))});
    }
  }
  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      results[i] = run_single_training(cfg, *jobs[i].cell, jobs[i].seed, jobs[i].dir, warm);
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  {
    std::ofstream sj(out_root / "summary.json");
    if (!sj) throw IoError("cannot write summary.json in " + out_root.string());
    sj << summarize_runs(cfg, cells, results).dump(2) << "\n";
  }
  return results;
}

// ---------------------------------------------------------------------------
// dirac study
// ---------------------------------------------------------------------------

namespace detail {

inline void write_trajectory_csv(const fs::path& path, const Trajectory& traj,
                                 const std::string& config_hash,
                                 const std::string& label) {
  CsvWriter csv(path,
                {"config_hash=" + config_hash, "config=" + label,
                 "integrator=" + integrator_name(traj.integrator),
                 std::string("diverged=") + (traj.diverged ? "true" : "false")},
                {"t", "theta", "psi", "phi", "radius"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const DiracState& s = traj.states[i];
    csv.row({format_g17(traj.times[i]), format_g17(s.theta), format_g17(s.psi),
             format_g17(s.phi), format_g17(s.radius())});
  }
}

}  // namespace detail

/// Emits the four discrete-dynamics trajectories (+/- EMA readout x +/- SD),
/// two continuous-time reference trajectories, and the Routh-Hurwitz sweep
/// over (alpha, eta_phi). Returns the sweep reports in row order.
inline std::vector<StabilityReport> run_dirac_study(const ExperimentConfig& cfg) {
  const fs::path out_root(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out_root, ec);
  if (ec) throw IoError("cannot create output dir " + out_root.string() + ": " + ec.message());
  const DiracStudyConfig& dc = cfg.dirac;
  const std::string hash = cfg.hash();
  {
    std::ofstream cj(out_root / "config_used.json");
    if (!cj) throw IoError("cannot write config_used.json in " + out_root.string());
    cj << cfg.to_json().dump(2) << "\n";
  }

  // Discrete dynamics: the four readout/SD combinations of the figure-style
  // study. "gan" = no SD, shadow present but unused by the update.
  struct Combo {
    const char* file;
    const char* label;
    double alpha;
    double beta;
  };
  const double a = dc.params.alpha > 0.0 ? dc.params.alpha : 1.0;
  const Combo combos[] = {
      {"discrete_gan.csv", "gan", 0.0, 0.0},
      {"discrete_gan_ema.csv", "gan_ema", 0.0, dc.beta},
      {"discrete_sd.csv", "sd", a, 0.0},
      {"discrete_sd_ema.csv", "sd_ema", a, dc.beta},
  };
  for (const Combo& c : combos) {
    DiracParams p = dc.params;
    p.alpha = c.alpha;
    detail::write_trajectory_csv(out_root / c.file,
                                 simulate_discrete(dc.init, p, dc.steps, c.beta), hash,
                                 c.label);
  }

  // Continuous-time references at alpha = 0 (marginal cycle) and the
  // configured alpha (contraction).
  {
    DiracParams p0 = dc.params;
    p0.alpha = 0.0;
    detail::write_trajectory_csv(out_root / "ode_gan.csv",
                                 simulate_ode(dc.init, p0, dc.t_end, dc.dt), hash,
                                 "ode_alpha0");
    DiracParams p1 = dc.params;
    p1.alpha = a;
    detail::write_trajectory_csv(out_root / "ode_sd.csv",
                                 simulate_ode(dc.init, p1, dc.t_end, dc.dt), hash,
                                 "ode_sd");
  }

  // Stability sweep.
  std::vector<StabilityReport> reports;
  CsvWriter csv(out_root / "stability_sweep.csv", {"config_hash=" + hash},
                {"alpha", "eta_phi", "eta_g", "eta_d", "c", "a3", "a2", "a1", "a0",
                 "hurwitz_margin", "routh_pass", "max_real_part", "re_lambda_1",
                 "im_lambda_1", "re_lambda_2", "im_lambda_2", "re_lambda_3",
                 "im_lambda_3"});
  for (double alpha : dc.alpha_grid) {
    for (double eta_phi : dc.eta_phi_grid) {
      DiracParams p = dc.params;
      p.alpha = alpha;
      p.eta_phi = eta_phi;
      const StabilityReport r = routh_hurwitz(p);
      csv.row({format_g17(alpha), format_g17(eta_phi), format_g17(p.eta_g),
               format_g17(p.eta_d), format_g17(p.c), format_g17(r.coefficients[0]),
               format_g17(r.coefficients[1]), format_g17(r.coefficients[2]),
               format_g17(r.coefficients[3]), format_g17(r.hurwitz_margin),
               r.routh_hurwitz_pass ? "1" : "0", format_g17(r.max_real_part),
               format_g17(r.eigenvalues[0].real()), format_g17(r.eigenvalues[0].imag()),
               format_g17(r.eigenvalues[1].real()), format_g17(r.eigenvalues[1].imag()),
               format_g17(r.eigenvalues[2].real()), format_g17(r.eigenvalues[2].imag())});
      reports.push_back(r);
    }
  }
  return reports;
}

// ---------------------------------------------------------------------------
// rank report
// ---------------------------------------------------------------------------

/// Loads a checkpoint and emits the four extreme (SD x D-score) groups as
/// JSON and CSV. Latents are drawn from the first configured seed.
inline RankGroups run_rank_report(const ExperimentConfig& cfg) {
  const fs::path out_root(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out_root, ec);
  if (ec) throw IoError("cannot create output dir " + out_root.string() + ": " + ec.message());
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const MlpParams& teacher = ck.ema ? *ck.ema : ck.generator;
  SdLossSpec spec = make_sd_loss_spec(cfg.sd);
  spec.augment = false;  // ranking scores raw outputs

  Rng rng = Rng(cfg.seeds.front()).split(4);
  const RankGroups groups =
      rank_joint_extremes(ck.generator, teacher, ck.discriminator, cfg.rank.n_latents,
                          cfg.rank.pool, cfg.rank.k, spec, rng);

  const std::string hash = cfg.hash();
  auto group_json = [](const std::vector<RankedSample>& g) {
    nlohmann::json arr = nlohmann::json::array();
    for (const RankedSample& s : g) {
      arr.push_back({{"latent_index", s.latent_index},
                     {"sd_discrepancy", s.sd_discrepancy},
                     {"d_score", s.d_score},
                     {"point", {s.teacher_point[0], s.teacher_point[1]}}});
    }
    return arr;
  };
  nlohmann::json j;
  j["config_hash"] = hash;
  j["checkpoint"] = cfg.checkpoint;
  j["checkpoint_step"] = ck.step;
  j["seed"] = cfg.seeds.front();
  j["n_latents"] = cfg.rank.n_latents;
  j["pool"] = cfg.rank.pool;
  j["k"] = cfg.rank.k;
  j["sd_kind"] = sd_kind_name(cfg.sd.kind);
  j["groups"] = {{"high_sd_high_d", group_json(groups.high_sd_high_d)},
                 {"high_sd_low_d", group_json(groups.high_sd_low_d)},
                 {"low_sd_high_d", group_json(groups.low_sd_high_d)},
                 {"low_sd_low_d", group_json(groups.low_sd_low_d)}};
  {
    std::ofstream out(out_root / "rank_report.json");
    if (!out) throw IoError("cannot write rank_report.json in " + out_root.string());
    out << j.dump(2) << "\n";
  }
  CsvWriter csv(out_root / "rank_groups.csv", {"config_hash=" + hash},
                {"group", "latent_index", "sd_discrepancy", "d_score", "x", "y"});
  auto emit_group = [&](const char* name, const std::vector<RankedSample>& g) {
    for (const RankedSample& s : g) {
      csv.row({name, std::to_string(s.latent_index), format_g17(s.sd_discrepancy),
               format_g17(s.d_score), format_g17(s.teacher_point[0]),
               format_g17(s.teacher_point[1])});
    }
  };
  emit_group("high_sd_high_d", groups.high_sd_high_d);
  emit_group("high_sd_low_d", groups.high_sd_low_d);
  emit_group("low_sd_high_d", groups.low_sd_high_d);
  emit_group("low_sd_low_d", groups.low_sd_low_d);
  return groups;
}

}  // namespace sdgan
