#include "mcgan/experiments.hpp"

#include <cmath>

#include "mcgan/error.hpp"
#include "mcgan/models.hpp"

namespace mcgan::experiments {

using nlohmann::json;

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

json to_json(const Summary& s) {
  json j{{"mean", s.mean}};
  if (s.std) j["std"] = *s.std;
  return j;
}

namespace {

json clamp_json(const std::optional<losses::LeakyClamp>& c) {
  if (!c) return nullptr;
  return {{"lb", c->lb}, {"ub", c->ub}, {"slope", c->slope}};
}

json adam_json(const ndgrad::AdamConfig& a) {
  return {{"lr", a.learning_rate}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.epsilon}};
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return Rng(seed, stream).next_u64();
}

}  // namespace

// ---------------------------------------------------------------------------

json DiracExperimentConfig::to_json() const {
  return {{"lr", lr},
          {"steps", steps},
          {"theta0", init.theta},
          {"phi0", init.phi},
          {"c", c},
          {"schedule", schedule == dirac::Schedule::simultaneous ? "simultaneous" : "alternating"},
          {"tol", tol},
          {"tail_fraction", tail_fraction}};
}

std::vector<DiracVariantResult> run_dirac(const DiracExperimentConfig& cfg) {
  std::vector<DiracVariantResult> out;
  for (auto v : {dirac::Variant::gan, dirac::Variant::nsgan, dirac::Variant::hinge,
                 dirac::Variant::mcgan}) {
    dirac::DiracConfig dc;
    dc.variant = v;
    dc.lr = cfg.lr;
    dc.c = cfg.c;
    dc.steps = cfg.steps;
    dc.init = cfg.init;
    dc.schedule = cfg.schedule;
    DiracVariantResult r{v, dirac::trajectory(dc), {}};
    r.verdict = dirac::convergence_verdict(r.trajectory, cfg.tol, cfg.tail_fraction);
    out.push_back(std::move(r));
  }
  return out;
}

json dirac_summary(const std::vector<DiracVariantResult>& results) {
  json j = json::object();
  for (const auto& r : results) {
    const auto& last = r.trajectory.back();
    j[dirac::to_string(r.variant)] = {{"verdict", dirac::to_string(r.verdict.verdict)},
                                      {"tail_max", r.verdict.tail_max},
                                      {"tail_max_theta", r.verdict.tail_max_theta},
                                      {"final_theta", last.theta},
                                      {"final_phi", last.phi}};
  }
  return j;
}

// ---------------------------------------------------------------------------

namespace {

class GridSource : public trainer::DataSource {
 public:
  explicit GridSource(const data::GaussianGridSpec& spec)
      : spec_(spec), centers_(data::grid_centers(spec)) {}
  trainer::Batch sample(std::size_t batch_size, Rng& rng) const override {
    std::vector<double> v(batch_size * 2);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto& c = centers_[rng.below(centers_.size())];
      v[2 * i] = c[0] + spec_.std * rng.normal();
      v[2 * i + 1] = c[1] + spec_.std * rng.normal();
    }
    return {Tensor({batch_size, 2}, std::move(v)), models::no_condition(batch_size)};
  }

 private:
  data::GaussianGridSpec spec_;
  std::vector<std::array<double, 2>> centers_;
};

}  // namespace

json Toy2dConfig::to_json() const {
  return {{"loss", losses::to_string(loss)},
          {"disc_loss", losses::to_string(disc_loss)},
          {"mc_size", mc_size},
          {"clamp", clamp_json(clamp)},
          {"on_probability", on_probability},
          {"shared_estimate", shared_estimate},
          {"iterations", iterations},
          {"batch_size", batch_size},
          {"disc_steps", disc_steps},
          {"hidden", hidden},
          {"noise_dim", noise_dim},
          {"adam", adam_json(adam)},
          {"grid",
           {{"modes_per_side", grid.modes_per_side},
            {"spacing", grid.spacing},
            {"std", grid.std}}},
          {"eval_samples", eval_samples},
          {"k", k},
          {"log_every", log_every},
          {"seed", seed}};
}

Toy2dResult run_toy2d(const Toy2dConfig& cfg) {
  Toy2dResult res;
  res.seed = cfg.seed;
  const bool mcgan = cfg.loss == losses::Variant::mcgan;
  const losses::Variant disc_variant = mcgan ? cfg.disc_loss : cfg.loss;
  if (disc_variant == losses::Variant::mcgan) {
    throw ConfigError("toy2d: the discriminator loss cannot be 'mcgan'");
  }

  Rng init(cfg.seed, "init");
  models::ConditionalGenerator gen(0, cfg.noise_dim, 2, cfg.hidden, models::Activation::relu,
                                   init);
  models::MlpDiscriminator disc(2, 0, cfg.hidden, models::Activation::relu,
                                models::Activation::identity, init);
  trainer::TrainConfig tc;
  tc.iterations = cfg.iterations;
  tc.disc_steps_per_gen = cfg.disc_steps;
  tc.batch_size = cfg.batch_size;
  tc.loss.variant = disc_variant;
  tc.loss.from_logits = disc_variant == losses::Variant::bce ||
                        disc_variant == losses::Variant::nsgan;
  tc.gen_loss = mcgan ? trainer::GenLossKind::mcgan : trainer::GenLossKind::baseline;
  tc.regression.mc_size = cfg.mc_size;
  tc.regression.clamp = cfg.clamp;
  tc.regression.on_probability = cfg.on_probability && tc.loss.from_logits;
  tc.regression.shared_estimate = cfg.shared_estimate;
  tc.gen_optimizer = {trainer::OptimizerKind::adam, cfg.adam, 0.0};
  tc.disc_optimizer = tc.gen_optimizer;
  tc.seed = cfg.seed;
  tc.log_every = cfg.log_every;

  try {
    res.log = trainer::train(gen, disc, GridSource(cfg.grid), tc);
    Rng eval(cfg.seed, "eval");
    res.fake = gen.generate(models::no_condition(cfg.eval_samples),
                            losses::normal_noise(eval, cfg.eval_samples, cfg.noise_dim));
    auto grid = cfg.grid;
    grid.n_samples = cfg.eval_samples;
    const auto real = data::sample_gaussian_grid(grid, derive_seed(cfg.seed, "eval-real"));
    res.report = metrics::mode_metrics(real.centers, cfg.grid.std, real.points, res.fake, cfg.k);
    res.completed = true;
  } catch (const NumericalError& e) {
    res.error = e.what();
  }
  return res;
}

json toy2d_aggregate(const std::vector<Toy2dResult>& runs) {
  std::vector<double> modes, points, tv, tvs;
  json failed = json::array();
  for (const auto& r : runs) {
    if (!r.completed) {
      failed.push_back({{"seed", r.seed}, {"error", r.error}});
      continue;
    }
    modes.push_back(static_cast<double>(r.report.registered_modes));
    points.push_back(static_cast<double>(r.report.registered_points));
    tv.push_back(r.report.tv_norm);
    tvs.push_back(r.report.tv_scaled);
  }
  return {{"completed", modes.size()},
          {"failed", failed},
          {"modes", to_json(summarize(modes))},
          {"points", to_json(summarize(points))},
          {"tv_norm", to_json(summarize(tv))},
          {"tv_scaled", to_json(summarize(tvs))}};
}

// ---------------------------------------------------------------------------

json TsTrainConfig::to_json() const {
  return {{"p", p},
          {"q", q},
          {"loss", losses::to_string(loss)},
          {"mc_size", mc_size},
          {"clamp", clamp_json(clamp)},
          {"iterations", iterations},
          {"batch_size", batch_size},
          {"disc_steps", disc_steps},
          {"hidden", hidden},
          {"residual_blocks", residual_blocks},
          {"adam", adam_json(adam)},
          {"log_every", log_every}};
}

namespace {

json eval_json(const TsEvalConfig& e) { return {{"max_lag", e.max_lag}, {"n_bins", e.n_bins}}; }

}  // namespace

TsMethodResult train_and_evaluate_ts(const Tensor& train_path, const Tensor& test_path,
                                     const TsTrainConfig& cfg, const TsEvalConfig& eval,
                                     bool mcgan, std::uint64_t seed) {
  if (cfg.loss == losses::Variant::mcgan) {
    throw ConfigError("time series: the discriminator loss cannot be 'mcgan'");
  }
  const std::size_t d = train_path.cols();
  const auto train = data::window(train_path, cfg.p, cfg.q);
  const auto test = data::window(test_path, cfg.p, cfg.q);

  Rng init(seed, "init");
  models::ArFnnConfig ac;
  ac.dim = d;
  ac.lags = cfg.p;
  ac.horizon = cfg.q;
  ac.hidden = cfg.hidden;
  ac.residual_blocks = cfg.residual_blocks;
  models::ArFnnGenerator gen(ac, init);
  models::MlpDiscriminator disc(cfg.q * d, cfg.p * d, {cfg.hidden, cfg.hidden},
                                models::Activation::relu, models::Activation::identity, init);

  trainer::TrainConfig tc;
  tc.iterations = cfg.iterations;
  tc.disc_steps_per_gen = cfg.disc_steps;
  tc.batch_size = cfg.batch_size;
  tc.loss.variant = cfg.loss;
  tc.loss.from_logits = cfg.loss == losses::Variant::bce || cfg.loss == losses::Variant::nsgan;
  tc.gen_loss = mcgan ? trainer::GenLossKind::mcgan : trainer::GenLossKind::baseline;
  tc.regression.mc_size = cfg.mc_size;
  tc.regression.clamp = cfg.clamp;
  tc.gen_optimizer = {trainer::OptimizerKind::adam, cfg.adam, 0.0};
  tc.disc_optimizer = tc.gen_optimizer;
  tc.seed = seed;
  tc.log_every = cfg.log_every;

  TsMethodResult res;
  res.method = mcgan ? "mcgan" : "rcgan";
  res.log = trainer::train(gen, disc, trainer::TensorDataSource(train.future, train.past), tc);

  Rng noise(seed, "eval");
  const Tensor fake_future =
      gen.generate(test.past, losses::normal_noise(noise, test.size(), gen.noise_dim()));
  res.fake_paths = ndgrad::concat_cols({test.past, fake_future});
  res.report = metrics::ts_metrics(test.joined(), res.fake_paths, d, cfg.p, eval.max_lag,
                                   eval.n_bins);
  return res;
}

json VarExperimentConfig::to_json() const {
  return {{"d", var.d},
          {"phi", var.phi},
          {"sigma", var.sigma},
          {"train_length", var.length},
          {"burn_in", var.burn_in},
          {"test_length", test_length},
          {"train", train.to_json()},
          {"eval", eval_json(eval)},
          {"seed", seed}};
}

VarExperimentResult run_var(const VarExperimentConfig& cfg) {
  cfg.var.validate();
  const Tensor train_path = data::simulate_var(cfg.var, derive_seed(cfg.seed, "var-train"));
  auto test_spec = cfg.var;
  test_spec.length = cfg.test_length;
  const Tensor test_path = data::simulate_var(test_spec, derive_seed(cfg.seed, "var-test"));
  const Tensor control_path =
      data::simulate_var(test_spec, derive_seed(cfg.seed, "var-control"));

  VarExperimentResult out;
  out.rcgan = train_and_evaluate_ts(train_path, test_path, cfg.train, cfg.eval, false, cfg.seed);
  out.mcgan = train_and_evaluate_ts(train_path, test_path, cfg.train, cfg.eval, true, cfg.seed);
  const auto test = data::window(test_path, cfg.train.p, cfg.train.q);
  const auto control = data::window(control_path, cfg.train.p, cfg.train.q);
  out.control = metrics::ts_metrics(test.joined(), control.joined(), cfg.var.d, cfg.train.p,
                                    cfg.eval.max_lag, cfg.eval.n_bins);
  return out;
}

// ---------------------------------------------------------------------------

json TsgenConfig::to_json() const {
  return {{"csv", csv.string()},
          {"price_column", price_column},
          {"columns", columns},
          {"vol_window", vol_window},
          {"train_fraction", train_fraction},
          {"train", train.to_json()},
          {"eval", eval_json(eval)},
          {"bypass", bypass},
          {"seed", seed}};
}

namespace {

struct Standardizer {
  std::vector<double> mean, scale;

  explicit Standardizer(const Tensor& x) : mean(x.cols(), 0.0), scale(x.cols(), 0.0) {
    const double n = static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x.at(r, c) / n;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c)
        scale[c] += (x.at(r, c) - mean[c]) * (x.at(r, c) - mean[c]) / n;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      scale[c] = std::sqrt(scale[c]);
      if (!(scale[c] > 0.0)) {
        throw NumericalError("tsgen: feature column " + std::to_string(c) + " is constant");
      }
    }
  }

  // Paths are time-major N x (L*d).
  Tensor apply(const Tensor& x, bool forward) const {
    const std::size_t d = mean.size();
    std::vector<double> v(x.data().begin(), x.data().end());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::size_t c = (i % x.cols()) % d;
      v[i] = forward ? (v[i] - mean[c]) / scale[c] : v[i] * scale[c] + mean[c];
    }
    return Tensor(x.shape(), std::move(v));
  }
};

Tensor row_range(const Tensor& x, std::size_t begin, std::size_t end) {
  return ndgrad::slice_rows(x, begin, end);
}

}  // namespace

TsgenResult run_tsgen(const TsgenConfig& cfg) {
  TsgenResult out;
  Tensor features;
  if (cfg.columns.empty()) {
    const auto ing = data::ingest_csv(cfg.csv, {cfg.price_column});
    out.dropped_rows = ing.dropped_count;
    std::vector<double> prices(ing.path.data().begin(), ing.path.data().end());
    features = data::derive_stock_features(prices, cfg.vol_window);
    out.feature_names = {"log_return", "log_volatility"};
  } else {
    const auto ing = data::ingest_csv(cfg.csv, cfg.columns);
    out.dropped_rows = ing.dropped_count;
    features = ing.path;
    out.feature_names = ing.columns;
  }
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw ConfigError("tsgen: train_fraction must lie in (0, 1)");
  }
  const std::size_t d = features.cols();
  const std::size_t n = features.rows();
  const std::size_t split = static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(n));
  const std::size_t need = cfg.train.p + cfg.train.q;
  if (split < need || n - split < need) {
    throw ConfigError("tsgen: " + std::to_string(n) + " feature rows are too few for windows of " +
                      std::to_string(need));
  }
  const Tensor train_raw = row_range(features, 0, split);
  const Tensor test_raw = row_range(features, split, n);
  const auto test = data::window(test_raw, cfg.train.p, cfg.train.q);
  const Tensor real = test.joined();

  if (cfg.bypass) {
    out.fake_paths = real;
  } else {
    const Standardizer st(train_raw);
    const TsMethodResult r =
        train_and_evaluate_ts(st.apply(train_raw, true), st.apply(test_raw, true), cfg.train,
                              cfg.eval, true, cfg.seed);
    out.log = r.log;
    out.fake_paths = st.apply(r.fake_paths, false);
  }
  out.report = metrics::ts_metrics(real, out.fake_paths, d, cfg.train.p, cfg.eval.max_lag,
                                   cfg.eval.n_bins);
  const auto abs_fn = [](double v) { return std::abs(v); };
  const auto sq_fn = [](double v) { return v * v; };
  out.acf_abs = metrics::acf_metric(metrics::transform(real, abs_fn),
                                    metrics::transform(out.fake_paths, abs_fn), d,
                                    cfg.eval.max_lag);
  out.acf_sq = metrics::acf_metric(metrics::transform(real, sq_fn),
                                   metrics::transform(out.fake_paths, sq_fn), d,
                                   cfg.eval.max_lag);
  return out;
}

json to_json(const TsgenResult& r) {
  json j = metrics::to_json(r.report);
  j["acf_abs"] = r.acf_abs;
  j["acf_sq"] = r.acf_sq;
  j["dropped_rows"] = r.dropped_rows;
  j["features"] = r.feature_names;
  return j;
}

void write_gbm_csv(const std::filesystem::path& path, std::size_t n, std::uint64_t seed) {
  const auto prices = data::simulate_gbm(100.0, 0.05, 0.2, 1.0 / 252.0, n, seed);
  data::export_csv(path, Tensor({prices.size(), 1}, prices), {"price"});
}

}  // namespace mcgan::experiments
