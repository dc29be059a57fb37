#include "mcgan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <variant>

#include "mcgan/error.hpp"

namespace mcgan::trainer {

TensorDataSource::TensorDataSource(Tensor x, Tensor y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rank() != 2) throw ShapeError("TensorDataSource: x must be 2-D, got " +
                                       ndgrad::shape_string(x_.shape()));
  if (x_.rows() == 0) throw ConfigError("TensorDataSource: empty data source");
  if (y_.empty()) {
    y_ = models::no_condition(x_.rows());
  } else if (y_.rank() != 2 || y_.rows() != x_.rows()) {
    throw ShapeError("TensorDataSource: conditions " + ndgrad::shape_string(y_.shape()) +
                     " do not match " + std::to_string(x_.rows()) + " samples");
  }
}

namespace {

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx) {
  const std::size_t cols = src.cols();
  std::vector<double> out;
  out.reserve(idx.size() * cols);
  const auto data = src.data();
  for (std::size_t i : idx)
    out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(i * cols),
               data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  return Tensor({idx.size(), cols}, std::move(out));
}

}  // namespace

Batch TensorDataSource::sample(std::size_t batch_size, Rng& rng) const {
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(x_.rows()));
  return {gather_rows(x_, idx), gather_rows(y_, idx)};
}

void TrainConfig::validate() const {
  if (disc_steps_per_gen == 0) throw ConfigError("train: disc_steps_per_gen must be >= 1");
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (log_every == 0) throw ConfigError("train: log_every must be >= 1");
  if (gen_loss == GenLossKind::mcgan) regression.validate();
  if (gen_loss == GenLossKind::baseline && loss.variant == losses::Variant::mcgan) {
    throw ConfigError("train: 'mcgan' names the generator loss, pick a discriminator loss");
  }
}

void RunLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,loss_d,loss_g,mean_discrepancy,wall_ms\n" << std::setprecision(17);
  for (const auto& r : rows)
    out << r.step << ',' << r.loss_d << ',' << r.loss_g << ',' << r.mean_discrepancy << ','
        << r.wall_ms << '\n';
}

namespace {

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::span<const ndgrad::Parameter> params) {
    if (cfg.kind == OptimizerKind::adam) {
      state_.emplace<ndgrad::AdamState>(cfg.adam, params);
    } else {
      state_.emplace<ndgrad::SgdState>(cfg.sgd_lr);
    }
  }
  void step(std::vector<ndgrad::Parameter>& params, std::span<const Tensor> grads) {
    std::visit([&](auto& s) { s.step(params, grads); }, state_);
  }

 private:
  std::variant<ndgrad::SgdState, ndgrad::AdamState> state_{ndgrad::SgdState(0.0)};
};

void require_finite(double v, std::size_t step, const char* name) {
  if (!std::isfinite(v)) {
    throw NumericalError("train: non-finite " + std::string(name) + " at step " +
                         std::to_string(step));
  }
}

template <typename Fn>
void with_context(std::size_t step, const char* what, Fn&& fn) {
  try {
    fn();
  } catch (const NumericalError& e) {
    throw NumericalError("train: step " + std::to_string(step) + ", " + what + ": " + e.what());
  }
}

}  // namespace

Tensor generator_loss(const models::Generator& gen, const models::Discriminator& disc,
                      const Batch& real, const TrainConfig& cfg, Rng& noise, Rng& mc,
                      models::ParamView gen_params) {
  const auto disc_values = ndgrad::values(disc.parameters());
  if (cfg.gen_loss == GenLossKind::mcgan) {
    return losses::regression_loss(disc, gen, real.x, real.y, cfg.regression, mc, gen_params,
                                   disc_values);
  }
  const std::size_t b = real.x.rows();
  const Tensor fake =
      gen.generate(real.y, losses::normal_noise(noise, b, gen.noise_dim()), gen_params);
  const Tensor scores = disc.discriminate(fake, real.y, disc_values);
  std::optional<double> c_mu;
  if (cfg.loss.variant == losses::Variant::wgan) {
    c_mu = ndgrad::mean(disc.discriminate(real.x, real.y, disc_values)).item();
  }
  return losses::generator_loss_baseline(cfg.loss, scores, c_mu);
}

RunLog train(models::Generator& gen, models::Discriminator& disc, const DataSource& data,
             const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  Rng data_rng(cfg.seed, "data");
  Rng noise_rng(cfg.seed, "noise");
  Rng mc_rng(cfg.seed, "mc");
  Optimizer gen_opt(cfg.gen_optimizer, gen.parameters());
  Optimizer disc_opt(cfg.disc_optimizer, disc.parameters());
  const auto start = std::chrono::steady_clock::now();

  RunLog log;
  for (std::size_t step = 1; step <= cfg.iterations; ++step) {
    double loss_d = 0.0;
    double discrepancy = 0.0;
    for (std::size_t k = 0; k < cfg.disc_steps_per_gen; ++k) {
      const Batch real = data.sample(cfg.batch_size, data_rng);
      if (real.x.rows() == 0) throw ConfigError("train: data source returned an empty batch");
      if (hooks.on_batch) hooks.on_batch(step, "disc", real);
      const Tensor fake =
          gen.generate(real.y, losses::normal_noise(noise_rng, real.x.rows(), gen.noise_dim()));
      ndgrad::Tape tape;
      const auto p = tape.track(ndgrad::values(disc.parameters()));
      const Tensor s_real = disc.discriminate(real.x, real.y, p);
      const Tensor s_fake = disc.discriminate(fake, real.y, p);
      const Tensor objective = losses::discriminator_loss(cfg.loss, s_real, s_fake);
      loss_d = objective.item();
      require_finite(loss_d, step, "loss_d");
      discrepancy = losses::mean_discrepancy(s_real.data(), s_fake.data());
      const auto grads = tape.backward(-objective).wrt(p);
      with_context(step, "discriminator update", [&] { disc_opt.step(disc.parameters(), grads); });
    }

    const Batch real = data.sample(cfg.batch_size, data_rng);
    if (real.x.rows() == 0) throw ConfigError("train: data source returned an empty batch");
    if (hooks.on_batch) hooks.on_batch(step, "gen", real);
    ndgrad::Tape tape;
    const auto p = tape.track(ndgrad::values(gen.parameters()));
    const Tensor loss = generator_loss(gen, disc, real, cfg, noise_rng, mc_rng, p);
    const double loss_g = loss.item();
    require_finite(loss_g, step, "loss_g");
    const auto grads = tape.backward(loss).wrt(p);
    with_context(step, "generator update", [&] { gen_opt.step(gen.parameters(), grads); });
    if (hooks.on_step) hooks.on_step(step, gen, disc);

    if (step % cfg.log_every == 0 || step == cfg.iterations) {
      LogRow row;
      row.step = step;
      row.loss_d = loss_d;
      row.loss_g = loss_g;
      row.mean_discrepancy = discrepancy;
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start).count();
      if (hooks.snapshot) row.metrics = hooks.snapshot(step, gen);
      log.rows.push_back(std::move(row));
    }
  }
  return log;
}

metrics::MetricReport evaluate_hook(const models::Generator& gen,
                                    const std::vector<NamedMetric>& metric_set,
                                    const EvalConfig& cfg) {
  if (metric_set.empty()) throw ConfigError("evaluate_hook: empty metric set");
  metrics::MetricReport report;
  report.seed = cfg.seed;
  report.config_hash = cfg.config_hash;
  auto fail_all = [&](const std::string& why) {
    for (const auto& m : metric_set) report.errors[m.name] = why;
    return report;
  };

  const bool conditional = gen.condition_dim() > 0;
  const std::size_t n = conditional ? cfg.cond.rows() : cfg.samples;
  if (conditional && cfg.cond.empty()) return fail_all("empty generated set");
  if (n == 0) return fail_all("empty generated set");
  Tensor fake;
  try {
    Rng rng(cfg.seed, "eval");
    const Tensor cond = conditional ? cfg.cond : models::no_condition(n);
    fake = gen.generate(cond, losses::normal_noise(rng, n, gen.noise_dim()));
  } catch (const std::exception& e) {
    return fail_all(std::string("generation failed: ") + e.what());
  }
  for (const auto& m : metric_set) {
    try {
      const double v = m.fn(cfg.real, fake);
      if (!std::isfinite(v)) {
        report.errors[m.name] = "non-finite value";
      } else {
        report.values[m.name] = v;
      }
    } catch (const std::exception& e) {
      report.errors[m.name] = e.what();
    }
  }
  return report;
}

}  // namespace mcgan::trainer
