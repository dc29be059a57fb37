#pragma once

// End-to-end experiment runners shared by the mcgan_lab CLI and the
// acceptance binary. Each runner is deterministic in its config.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcgan/datagen.hpp"
#include "mcgan/diracdyn.hpp"
#include "mcgan/losses.hpp"
#include "mcgan/metrics.hpp"
#include "mcgan/ndgrad.hpp"
#include "mcgan/trainer.hpp"

namespace mcgan::experiments {

using ndgrad::Tensor;

/// Mean and sample standard deviation (std absent for a single value).
struct Summary {
  double mean = 0.0;
  std::optional<double> std;
};
Summary summarize(const std::vector<double>& values);
nlohmann::json to_json(const Summary& s);

// ---------------------------------------------------------------------------
// Dirac-GAN

struct DiracExperimentConfig {
  double lr = 0.1;
  std::size_t steps = 5000;
  dirac::DiracState init{1.0, 1.0};
  double c = 0.0;
  dirac::Schedule schedule = dirac::Schedule::simultaneous;
  double tol = 1e-3;
  double tail_fraction = 0.1;
  nlohmann::json to_json() const;
};

struct DiracVariantResult {
  dirac::Variant variant;
  std::vector<dirac::DiracState> trajectory;
  dirac::VerdictReport verdict;
};

/// gan, nsgan, hinge and mcgan under identical settings.
std::vector<DiracVariantResult> run_dirac(const DiracExperimentConfig& cfg);
nlohmann::json dirac_summary(const std::vector<DiracVariantResult>& results);

// ---------------------------------------------------------------------------
// 25-mode 2-D grid

struct Toy2dConfig {
  /// Baseline variant, or mcgan (regression generator with disc_loss).
  losses::Variant loss = losses::Variant::mcgan;
  losses::Variant disc_loss = losses::Variant::bce;
  std::size_t mc_size = 10;
  std::optional<losses::LeakyClamp> clamp;
  /// With a bce/nsgan discriminator (logit output), regress sigmoid(logit).
  bool on_probability = true;
  /// One Monte Carlo estimate per batch instead of one per real sample.
  bool shared_estimate = false;
  std::size_t iterations = 30000;
  std::size_t batch_size = 16;
  std::size_t disc_steps = 1;
  std::vector<std::size_t> hidden{128, 128};
  std::size_t noise_dim = 2;
  ndgrad::AdamConfig adam{1e-3, 0.5, 0.999, 1e-8};
  data::GaussianGridSpec grid;
  std::size_t eval_samples = 5000;
  double k = 3.0;
  std::size_t log_every = 5000;
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

struct Toy2dResult {
  std::uint64_t seed = 0;
  bool completed = false;
  std::string error;
  metrics::ModeReport report;
  trainer::RunLog log;
  Tensor fake;  // eval_samples x 2
};

Toy2dResult run_toy2d(const Toy2dConfig& cfg);
/// Aggregate over completed seeds (modes, points, tv_norm, tv_scaled).
nlohmann::json toy2d_aggregate(const std::vector<Toy2dResult>& runs);

// ---------------------------------------------------------------------------
// Conditional time series (VAR(1) and CSV data)

struct TsTrainConfig {
  std::size_t p = 3;
  std::size_t q = 3;
  losses::Variant loss = losses::Variant::hinge;
  std::size_t mc_size = 10;
  std::optional<losses::LeakyClamp> clamp;
  std::size_t iterations = 1500;
  std::size_t batch_size = 100;
  /// Discriminator updates per generator update.
  std::size_t disc_steps = 4;
  std::size_t hidden = 50;
  std::size_t residual_blocks = 2;
  ndgrad::AdamConfig adam{2e-4, 0.0, 0.9, 1e-8};
  std::size_t log_every = 250;
  nlohmann::json to_json() const;
};

struct TsEvalConfig {
  std::size_t max_lag = 1;
  std::size_t n_bins = 50;
};

struct TsMethodResult {
  std::string method;  // "rcgan" or "mcgan"
  metrics::TsMetricReport report;
  trainer::RunLog log;
  Tensor fake_paths;  // N x (p+q)*d: real past followed by generated future
};

/// Trains an AR-FNN generator on windows of `train_path` (rows = time,
/// cols = d) and evaluates on windows of `test_path`. `mcgan` selects the
/// regression generator loss; otherwise the baseline h of cfg.loss.
TsMethodResult train_and_evaluate_ts(const Tensor& train_path, const Tensor& test_path,
                                     const TsTrainConfig& cfg, const TsEvalConfig& eval,
                                     bool mcgan, std::uint64_t seed);

struct VarExperimentConfig {
  data::VarSpec var{2, 0.8, 0.8, 4000, 200};
  std::size_t test_length = 4000;
  TsTrainConfig train;
  TsEvalConfig eval;
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

struct VarExperimentResult {
  TsMethodResult rcgan;
  TsMethodResult mcgan;
  /// Second independent real sample against the test sample.
  metrics::TsMetricReport control;
};

VarExperimentResult run_var(const VarExperimentConfig& cfg);

struct TsgenConfig {
  std::filesystem::path csv;
  /// Column holding prices to turn into (log return, log volatility); when
  /// empty, `columns` are used as features directly.
  std::string price_column = "price";
  std::vector<std::string> columns;
  std::size_t vol_window = 20;
  double train_fraction = 0.8;
  TsTrainConfig train;
  TsEvalConfig eval;
  /// Evaluate the real test windows against themselves (no training).
  bool bypass = false;
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

struct TsgenResult {
  metrics::TsMetricReport report;
  double acf_abs = 0.0;  // acf_metric on |x|
  double acf_sq = 0.0;   // acf_metric on x^2
  std::size_t dropped_rows = 0;
  std::vector<std::string> feature_names;
  trainer::RunLog log;
  Tensor fake_paths;
};

TsgenResult run_tsgen(const TsgenConfig& cfg);
nlohmann::json to_json(const TsgenResult& r);

/// Writes a one-column ("price") GBM CSV of n + 1 prices.
void write_gbm_csv(const std::filesystem::path& path, std::size_t n, std::uint64_t seed);

}  // namespace mcgan::experiments
