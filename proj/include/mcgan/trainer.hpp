#pragma once

// Alternating discriminator / generator training loop.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcgan/losses.hpp"
#include "mcgan/metrics.hpp"
#include "mcgan/models.hpp"
#include "mcgan/ndgrad.hpp"
#include "mcgan/rng.hpp"

namespace mcgan::trainer {

using ndgrad::Tensor;

struct Batch {
  Tensor x;  // B x input_dim
  Tensor y;  // B x condition_dim (B x 0 when unconditional)
};

class DataSource {
 public:
  virtual ~DataSource() = default;
  /// Draws an i.i.d. batch using only `rng`.
  virtual Batch sample(std::size_t batch_size, Rng& rng) const = 0;
};

/// Uniform draws with replacement from fixed rows.
class TensorDataSource : public DataSource {
 public:
  /// y may be empty (unconditional); otherwise it must have x.rows() rows.
  explicit TensorDataSource(Tensor x, Tensor y = Tensor());
  Batch sample(std::size_t batch_size, Rng& rng) const override;
  std::size_t size() const { return x_.rows(); }

 private:
  Tensor x_;
  Tensor y_;
};

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  ndgrad::AdamConfig adam;
  double sgd_lr = 0.1;
};

enum class GenLossKind { baseline, mcgan };

struct TrainConfig {
  /// Generator updates (outer iterations).
  std::size_t iterations = 1000;
  std::size_t disc_steps_per_gen = 1;
  std::size_t batch_size = 64;
  losses::LossSpec loss;
  GenLossKind gen_loss = GenLossKind::baseline;
  losses::RegressionLossSpec regression;
  OptimizerConfig gen_optimizer;
  OptimizerConfig disc_optimizer;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  void validate() const;
};

struct LogRow {
  std::size_t step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  /// mean D(real) - mean D(fake) at the last discriminator step.
  double mean_discrepancy = 0.0;
  double wall_ms = 0.0;
  std::optional<nlohmann::json> metrics;
};

struct RunLog {
  std::vector<LogRow> rows;
  /// Header step,loss_d,loss_g,mean_discrepancy,wall_ms.
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainHooks {
  /// Called with every real batch drawn, tagged "disc" or "gen".
  std::function<void(std::size_t step, const std::string& phase, const Batch&)> on_batch;
  /// Called after each generator update.
  std::function<void(std::size_t step, const models::Generator&,
                     const models::Discriminator&)> on_step;
  /// Metric snapshot attached to each logged row.
  std::function<nlohmann::json(std::size_t step, const models::Generator&)> snapshot;
};

/// Runs cfg.iterations outer iterations. Each performs disc_steps_per_gen
/// ascent steps on L_D with fresh real batches and generator noise, then one
/// generator step on a fresh real batch. Randomness comes from the "data",
/// "noise" and "mc" sub-streams of cfg.seed; models are initialised by the
/// caller (conventionally from the "init" stream). Throws NumericalError
/// naming the step and loss on non-finite values.
RunLog train(models::Generator& gen, models::Discriminator& disc, const DataSource& data,
             const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Generator loss for one batch, differentiable in gen_params.
Tensor generator_loss(const models::Generator& gen, const models::Discriminator& disc,
                      const Batch& real, const TrainConfig& cfg, Rng& noise, Rng& mc,
                      models::ParamView gen_params);

// ---------------------------------------------------------------------------

struct NamedMetric {
  std::string name;
  /// (real, fake) -> value.
  std::function<double(const Tensor&, const Tensor&)> fn;
};

struct EvalConfig {
  std::uint64_t seed = 0;
  std::string config_hash;
  /// Reference samples.
  Tensor real;
  /// Conditions for generation, one row per sample; empty when unconditional.
  Tensor cond;
  /// Samples to generate when unconditional.
  std::size_t samples = 0;
};

/// Generates from `gen` with the "eval" stream of cfg.seed and evaluates each
/// metric. Metric failures are recorded in the report, never thrown.
metrics::MetricReport evaluate_hook(const models::Generator& gen,
                                    const std::vector<NamedMetric>& metric_set,
                                    const EvalConfig& cfg);

}  // namespace mcgan::trainer
