#pragma once
// One full SD-GAN training step: a discriminator update, a generator update
// whose loss adds the self-distillation pull toward the EMA teacher, then
// the EMA shadow update. Design invariants enforced here:
//
//   * The teacher is queried on the SAME latents as the student.
//   * The teacher output is detached; its parameters receive zero gradient
//     (checked, not assumed: the step reports the teacher gradient norm).
//   * The EMA update runs after the generator update, from the new weights.
//   * All augmentation randomness comes from a dedicated rng stream, and at
//     alpha = 0 the self-distillation branch (including that stream) is not
//     touched at all, so a baseline run is bitwise-identical to a build with
//     the SD code removed.

#include <cmath>
#include <stdexcept>
#include <string>

#include "sdgan/data.hpp"
#include "sdgan/ema.hpp"
#include "sdgan/losses.hpp"
#include "sdgan/mlp.hpp"
#include "sdgan/optim.hpp"

namespace sdgan {

/// Thrown when a loss or update is no longer finite; the run is unsalvageable
/// but sibling runs in a sweep must not be affected.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainStepLog {
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  // In-graph SD penalty value when alpha > 0; the graph-free monitor value
  // (same latents, no augmentation) when alpha == 0 and monitoring is on.
  double loss_sd = 0.0;
  double grad_norm_g = 0.0;
  double grad_norm_d = 0.0;
  // Sum of squared gradients in the teacher parameters after the generator
  // backward pass; identically 0 by the gradient-stop contract.
  double teacher_grad_sq_norm = 0.0;
};

struct GanTrainer {
  Mlp g;
  Mlp d;
  EmaTracker ema;
  Adam opt_g;
  Adam opt_d;
  std::size_t latent_dim = 2;

  /// Samples an [n x latent_dim] standard-normal latent batch.
  Tensor sample_latents(std::size_t n, Rng& rng) const {
    Tensor z = Tensor::zeros({n, latent_dim});
    for (std::size_t i = 0; i < z.numel(); ++i) z[i] = rng.normal();
    return z;
  }
};

/// Builds a trainer with freshly initialised G and D; the EMA shadow starts
/// as a copy of G (so teacher == student at step 0).
inline GanTrainer make_trainer(const MlpSpec& g_spec, const MlpSpec& d_spec,
                               double ema_beta, Adam::Config opt_g_cfg,
                               Adam::Config opt_d_cfg, Rng& rng) {
  g_spec.validate();
  d_spec.validate();
  if (g_spec.dims.back() != d_spec.dims.front()) {
    throw std::invalid_argument("make_trainer: generator output dim does not match "
                                "discriminator input dim");
  }
  GanTrainer t{Mlp(), Mlp(), EmaTracker(), Adam(opt_g_cfg), Adam(opt_d_cfg),
               g_spec.dims.front()};
  t.g = Mlp::init(g_spec, rng);
  t.d = Mlp::init(d_spec, rng);
  t.ema = EmaTracker(ema_beta, t.g.snapshot());
  return t;
}

/// One complete training step on a [B x 2] real batch. `rng` drives latent
/// sampling; `augment_rng` drives (only) the shared augmentation. Set
/// `monitor_sd` to log the SD discrepancy even when alpha == 0 (monitoring
/// runs outside the graph and consumes no randomness, so it does not perturb
/// the parameter trajectory).
inline TrainStepLog train_step(GanTrainer& t, const Tensor& real_batch,
                               const SdLossSpec& sd, Rng& rng, Rng& augment_rng,
                               double data_extent, bool monitor_sd = true) {
  sd.validate();
  if (real_batch.rank() != 2 || real_batch.cols() != t.g.spec().dims.back()) {
    throw std::invalid_argument("train_step: real batch shape " +
                                shape_to_string(real_batch.shape()) +
                                " does not match generator output dim");
  }
  const std::size_t batch = real_batch.rows();
  TrainStepLog log;

  // --- discriminator update ----------------------------------------------
  // Fakes are generated graph-free: the generator is fixed during this phase.
  {
    const Tensor z_d = t.sample_latents(batch, rng);
    const Tensor fake = t.g.forward_raw(z_d);
    t.d.zero_grad();
    Var d_real = t.d.forward(Var::constant(real_batch));
    Var d_fake = t.d.forward(Var::constant(fake));
    Var loss_d = discriminator_loss(d_real, d_fake);
    log.loss_d = loss_d.item();
    if (!std::isfinite(log.loss_d)) {
      throw DivergenceError("train_step: discriminator loss is not finite");
    }
    backward(loss_d);
    log.grad_norm_d = std::sqrt(t.d.grad_sq_norm());
    t.opt_d.step(t.d.params());
  }

  // --- generator update ----------------------------------------------------
  {
    const Tensor z_g = t.sample_latents(batch, rng);
    t.g.zero_grad();
    t.d.zero_grad();  // D participates in the graph but must not keep grads
    Var z = Var::constant(z_g);
    Var fake = t.g.forward(z);
    Var d_fake = t.d.forward(fake);
    Var loss_g = generator_adversarial_loss(d_fake);
    log.loss_g_adv = loss_g.item();

    // Teacher graph, kept alive across backward so its (zero) gradients are
    // observable. Its parameters are grad-capable leaves; only the detach of
    // its output stops the flow — which is exactly the contract under test.
    Mlp teacher;
    if (sd.alpha > 0.0) {
      teacher = Mlp::from_params(t.ema.shadow());
      Var teacher_out = detach(teacher.forward(z));
      Var penalty = sd_loss(fake, teacher_out, sd, augment_rng, data_extent);
      log.loss_sd = penalty.item();
      loss_g = loss_g + scale(penalty, sd.alpha);
    }
    const double loss_g_total = loss_g.item();
    if (!std::isfinite(loss_g_total)) {
      throw DivergenceError("train_step: generator loss is not finite");
    }
    backward(loss_g);
    log.grad_norm_g = std::sqrt(t.g.grad_sq_norm());
    if (sd.alpha > 0.0) log.teacher_grad_sq_norm = teacher.grad_sq_norm();

    // Baseline monitoring: the same student/teacher discrepancy (before the
    // optimizer step, un-augmented), computed outside the graph.
    if (sd.alpha == 0.0 && monitor_sd) {
      const Tensor student_out = t.g.forward_raw(z_g);
      const Tensor teacher_out = forward_raw(t.ema.shadow(), z_g);
      log.loss_sd = sd_monitor_value(student_out, teacher_out, sd.kind, sd.feature_net);
    }

    t.opt_g.step(t.g.params());
    t.d.zero_grad();  // discard D grads accumulated through the fake path
  }

  // --- EMA shadow update ---------------------------------------------------
  t.ema.update(t.g.snapshot());
  return log;
}

}  // namespace sdgan
