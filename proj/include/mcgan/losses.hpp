#pragma once

// Discriminator losses from the (f1, f2) menu, baseline generator losses h,
// and the Monte Carlo regression loss.

#include <optional>
#include <span>
#include <string>

#include "mcgan/models.hpp"
#include "mcgan/ndgrad.hpp"
#include "mcgan/rng.hpp"

namespace mcgan::losses {

using ndgrad::Tensor;
using models::ParamView;

/// Adversarial loss family. "mcgan" is not a discriminator loss; it is
/// accepted by parse_variant so configs and the CLI can name it.
enum class Variant { bce, nsgan, hinge, lsgan, wgan, energy, mcgan };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

struct LossSpec {
  Variant variant = Variant::bce;
  double ls_alpha = 1.0;  // least squares target for real scores
  double ls_beta = 0.0;   // least squares target for fake scores
  double energy_margin = 1.0;
  /// bce / nsgan only: scores are logits w and the probability is sigmoid(w).
  bool from_logits = false;
};

/// Elementwise f1, f2 and h. h for wgan needs c_mu.
Tensor f1(const LossSpec& spec, const Tensor& w);
Tensor f2(const LossSpec& spec, const Tensor& w);
Tensor h(const LossSpec& spec, const Tensor& w,
         std::optional<double> c_mu = std::nullopt);

/// mean f1(d_real) + mean f2(d_fake); the discriminator maximizes it.
Tensor discriminator_loss(const LossSpec& spec, const Tensor& d_real,
                          const Tensor& d_fake);

/// mean h(d_fake); the generator minimizes it.
Tensor generator_loss_baseline(const LossSpec& spec, const Tensor& d_fake,
                               std::optional<double> c_mu = std::nullopt);

struct LeakyClamp {
  double lb = -1.0;
  double ub = 1.0;
  double slope = 0.1;
  void validate() const;
};

/// Identity on [lb, ub], slope `slope` outside; continuous.
double leaky_clamp(double x, const LeakyClamp& c);
Tensor leaky_clamp(const Tensor& x, const LeakyClamp& c);

/// mean(d_real) - mean(d_fake).
double mean_discrepancy(std::span<const double> d_real,
                        std::span<const double> d_fake);

struct RegressionLossSpec {
  std::size_t mc_size = 10;
  std::optional<LeakyClamp> clamp;
  /// Regress sigmoid(score) instead of the raw score, for discriminators
  /// that output logits of a probability.
  bool on_probability = false;
  /// Unconditional generators only: one shared estimate for the whole batch,
  /// or an independent N_MC-sample estimate per real sample.
  bool shared_estimate = true;
  void validate() const;
};

/// Mean (optionally clamped) score of mc_size generated samples for one
/// condition row (1 x condition_dim, or 1 x 0). Differentiable in gen_params.
Tensor mc_expected_score(const models::Discriminator& disc,
                         const models::Generator& gen, const Tensor& cond,
                         const RegressionLossSpec& spec, Rng& noise,
                         ParamView gen_params, ParamView disc_values);

/// Mean over the batch of (C(D(x_i, y_i)) - E_i)^2, where E_i is the Monte
/// Carlo estimate for condition y_i. Real scores are constants. For an
/// unconditional generator one shared estimate is used for the whole batch.
Tensor regression_loss(const models::Discriminator& disc,
                       const models::Generator& gen, const Tensor& real_x,
                       const Tensor& real_y, const RegressionLossSpec& spec,
                       Rng& noise, ParamView gen_params,
                       ParamView disc_values);

/// B x n matrix of standard normals.
Tensor normal_noise(Rng& rng, std::size_t rows, std::size_t cols);

}  // namespace mcgan::losses
