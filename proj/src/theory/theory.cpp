#include "mcgan/theory.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "mcgan/error.hpp"
#include "mcgan/gradcheck.hpp"
#include "mcgan/losses.hpp"
#include "mcgan/models.hpp"
#include "mcgan/ndgrad.hpp"

namespace mcgan::theory {

using ndgrad::Tensor;
using nlohmann::json;

void DiscretePair::validate() const {
  if (p_mu.size() != support.size() || p_nu.size() != support.size()) {
    throw ShapeError("DiscretePair: support has " + std::to_string(support.size()) +
                     " points but densities have " + std::to_string(p_mu.size()) +
                     " and " + std::to_string(p_nu.size()));
  }
  auto check = [](const std::vector<double>& p, const char* name) {
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw ConfigError(std::string("DiscretePair: negative mass in ") + name);
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError(std::string("DiscretePair: ") + name + " sums to " +
                        std::to_string(total));
    }
  };
  check(p_mu, "p_mu");
  check(p_nu, "p_nu");
}

std::vector<std::size_t> DiscretePair::differing() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < support.size(); ++k)
    if (p_mu[k] != p_nu[k]) out.push_back(k);
  return out;
}

namespace {

std::vector<double> random_density(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) {
    v = rng.uniform(0.01, 1.0);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

DiscretePair random_pair(std::size_t k, Rng& rng) {
  if (k == 0) throw ConfigError("random_pair: empty support");
  DiscretePair pair;
  pair.support.resize(k);
  for (std::size_t i = 0; i < k; ++i) pair.support[i] = static_cast<double>(i);
  pair.p_mu = random_density(k, rng);
  pair.p_nu = random_density(k, rng);
  return pair;
}

const std::vector<TableVariant>& all_table_variants() {
  static const std::vector<TableVariant> all = {
      TableVariant::vanilla, TableVariant::least_squares, TableVariant::hinge,
      TableVariant::energy, TableVariant::f_kl};
  return all;
}

std::string to_string(TableVariant v) {
  switch (v) {
    case TableVariant::vanilla: return "vanilla";
    case TableVariant::least_squares: return "least_squares";
    case TableVariant::hinge: return "hinge";
    case TableVariant::energy: return "energy";
    case TableVariant::f_kl: return "f_kl";
  }
  return "unknown";
}

std::vector<double> optimal_discriminator(TableVariant v, const DiscretePair& pair,
                                          const TableParams& params) {
  pair.validate();
  const std::size_t n = pair.support.size();
  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pm = pair.p_mu[k];
    const double pn = pair.p_nu[k];
    const bool ratio = v == TableVariant::vanilla || v == TableVariant::least_squares;
    if (ratio && pm + pn <= 0.0) {
      throw NumericalError("optimal_discriminator: p_mu + p_nu = 0 at point " +
                           std::to_string(k));
    }
    switch (v) {
      case TableVariant::vanilla: d[k] = pm / (pm + pn); break;
      case TableVariant::least_squares:
        d[k] = (params.alpha * pm + params.beta * pn) / (pm + pn);
        break;
      case TableVariant::hinge: d[k] = pm >= pn ? 1.0 : -1.0; break;
      case TableVariant::energy: d[k] = pm < pn ? params.margin : 0.0; break;
      case TableVariant::f_kl:
        if (pn <= 0.0 || pm <= 0.0) {
          throw NumericalError("optimal_discriminator: density ratio undefined at point " +
                               std::to_string(k));
        }
        d[k] = std::log(pm / pn) + 1.0;
        break;
    }
  }
  return d;
}

Constants table_constants(TableVariant v, const TableParams& params) {
  switch (v) {
    case TableVariant::vanilla: return {1, 0.5};
    case TableVariant::least_squares:
      if (params.alpha == params.beta) {
        throw ConfigError("table_constants: least squares needs alpha != beta");
      }
      return {params.alpha > params.beta ? 1 : -1, 0.5 * (params.alpha + params.beta)};
    case TableVariant::hinge: return {1, 0.0};
    case TableVariant::energy:
      if (params.margin <= 0.0) throw ConfigError("table_constants: energy margin must be > 0");
      return {-1, 0.5 * params.margin};
    case TableVariant::f_kl: return {1, 1.0};
  }
  return {};
}

Witness check_discriminability(std::span<const double> scores, const DiscretePair& pair,
                               int a, double c) {
  if (scores.size() != pair.support.size()) {
    throw ShapeError("check_discriminability: " + std::to_string(scores.size()) +
                     " scores for " + std::to_string(pair.support.size()) + " points");
  }
  Witness w;
  w.a = a;
  w.c = c;
  for (std::size_t k : pair.differing()) {
    if (!(a * (scores[k] - c) * (pair.p_mu[k] - pair.p_nu[k]) > 0.0))
      w.violating_points.push_back(k);
  }
  w.holds = w.violating_points.empty();
  return w;
}

FdivCheck fdiv_identity_check(const DiscretePair& pair) {
  const auto d = optimal_discriminator(TableVariant::vanilla, pair);
  FdivCheck out;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double pm = pair.p_mu[k];
    const double pn = pair.p_nu[k];
    const double bar = 0.5 * (pm + pn);
    out.lhs += d[k] * (pm - pn);
    if (bar > 0.0) {
      const double u = pm / bar;
      out.rhs += u * (u - 1.0) * bar;
    }
  }
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

// ---------------------------------------------------------------------------

Quadrature gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw ConfigError("gauss_legendre: need at least one node");
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
      table(gsl_integration_glfixed_table_alloc(n), &gsl_integration_glfixed_table_free);
  if (!table) throw NumericalError("gauss_legendre: table allocation failed");
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    gsl_integration_glfixed_point(a, b, i, &q.nodes[i], &q.weights[i], table.get());
  return q;
}

namespace {

double normal_pdf(double x, double mean) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

struct ToyGrid {
  Quadrature q;
  std::vector<double> p_mu;
  std::vector<double> p_nu;
};

ToyGrid toy_grid(const GaussianToy& toy, double theta) {
  ToyGrid g{gauss_legendre(toy.nodes, toy.lo, toy.hi), {}, {}};
  for (double x : g.q.nodes) {
    g.p_mu.push_back(normal_pdf(x, toy.data_mean));
    g.p_nu.push_back(normal_pdf(x, theta));
  }
  return g;
}

}  // namespace

FirstOrderFactors first_order_condition_check(const GaussianToy& toy, double theta,
                                              const ScalarFn& d, const ScalarFn& d_prime) {
  const ToyGrid g = toy_grid(toy, theta);
  double disc = 0.0;
  double h = 0.0;
  for (std::size_t i = 0; i < g.q.nodes.size(); ++i) {
    const double x = g.q.nodes[i];
    const double w = g.q.weights[i];
    disc += w * (g.p_mu[i] - g.p_nu[i]) * d(x);
    // G(z) = theta + z, so dG/dtheta = 1 and E_z[D'(G(z))] = E_nu[D'].
    h += w * g.p_nu[i] * d_prime(x);
  }
  return {std::abs(disc), std::abs(h)};
}

double train_location(const GaussianToy& toy, const ScalarFn& d, const ScalarFn& d_prime,
                      double theta0, double lr, std::size_t steps) {
  double theta = theta0;
  for (std::size_t s = 0; s < steps; ++s) {
    const ToyGrid g = toy_grid(toy, theta);
    double disc = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < g.q.nodes.size(); ++i) {
      const double x = g.q.nodes[i];
      disc += g.q.weights[i] * (g.p_mu[i] - g.p_nu[i]) * d(x);
      h += g.q.weights[i] * g.p_nu[i] * d_prime(x);
    }
    theta -= lr * (-2.0 * disc * h);
    if (!std::isfinite(theta)) {
      throw NumericalError("train_location: theta became non-finite at step " +
                           std::to_string(s));
    }
  }
  return theta;
}

NoisyStudyResult noisy_gradient_study(const GaussianToy& toy, const NoisyStudyConfig& cfg) {
  if (cfg.trials == 0) throw ConfigError("noisy_gradient_study: trials must be > 0");
  const ToyGrid g = toy_grid(toy, cfg.theta);
  const std::size_t n = g.q.nodes.size();
  std::vector<double> d_star(n), d_star_prime(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pm = g.p_mu[i];
    const double pn = g.p_nu[i];
    const double s = pm + pn;
    d_star[i] = s > 0.0 ? pm / s : 0.5;
    // d/dx of p_mu / (p_mu + p_nu) for unit-variance Gaussians.
    d_star_prime[i] = s > 0.0 ? pm * pn * (toy.data_mean - cfg.theta) / (s * s) : 0.0;
  }

  auto gradient = [&](Rng* rng) {
    double disc = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e1 = rng ? cfg.s1 * rng->normal() : 0.0;
      const double e2 = rng ? cfg.s2 * rng->normal() : 0.0;
      disc += g.q.weights[i] * (g.p_mu[i] - g.p_nu[i]) * (d_star[i] + e1);
      h += g.q.weights[i] * g.p_nu[i] * (d_star_prime[i] + e2);
    }
    return -2.0 * disc * h;
  };

  NoisyStudyResult r;
  r.clean = gradient(nullptr);
  const Rng base(cfg.seed, "noisy-gradient");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng = base.split(static_cast<std::uint64_t>(t));
    const double v = gradient(&rng);
    if (v == 0.0) ++r.zero_trials;
    const double delta = v - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (v - mean);
  }
  r.mean = mean;
  r.variance = cfg.trials > 1 ? m2 / static_cast<double>(cfg.trials - 1) : 0.0;
  r.stderr_mean = std::sqrt(r.variance / static_cast<double>(cfg.trials));
  return r;
}

// ---------------------------------------------------------------------------

namespace {

double norm(std::span<const Tensor> ts) {
  double s = 0.0;
  for (const auto& t : ts)
    for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

Tensor mean_rows(const Tensor& x) {
  // (n x m) -> (1 x m) via a ones row.
  return ndgrad::matmul(Tensor::filled({1, x.rows()}, 1.0 / static_cast<double>(x.rows())), x);
}

}  // namespace

GradientCheck gradient_decomposition_check(std::uint64_t seed) {
  Rng init(seed, "init");
  models::ConditionalGenerator gen(0, 2, 2, {8}, models::Activation::tanh, init);
  models::MlpDiscriminator disc(2, 0, {8}, models::Activation::tanh,
                                models::Activation::identity, init);
  Rng data(seed, "data");
  const std::size_t batch = 16;
  const Tensor real = losses::normal_noise(data, batch, 2) * 1.5 + 0.5;
  const losses::RegressionLossSpec spec{12, std::nullopt, false, true};
  const auto gen_values = ndgrad::values(gen.parameters());
  const auto disc_values = ndgrad::values(disc.parameters());

  Rng noise(seed, "mc");
  const Rng noise_copy = noise;

  ndgrad::Tape tape;
  const auto tracked = tape.track(gen_values);
  const Tensor loss = losses::regression_loss(disc, gen, real, models::no_condition(batch),
                                              spec, noise, tracked, disc_values);
  const auto autodiff = tape.backward(loss).wrt(tracked);

  // d_phi = E_mu[D] - E_nu[D] and H = E_z[J_G(z)^T grad_x D(G(z))], one
  // vector-Jacobian product per Monte Carlo sample.
  Rng replay = noise_copy;
  const Tensor z = losses::normal_noise(replay, spec.mc_size, gen.noise_dim());
  const double real_mean = ndgrad::mean(disc.discriminate(real, models::no_condition(batch),
                                                          disc_values)).item();
  double fake_mean = 0.0;
  std::vector<std::vector<double>> h(gen_values.size());
  for (std::size_t k = 0; k < gen_values.size(); ++k)
    h[k].assign(gen_values[k].size(), 0.0);
  for (std::size_t j = 0; j < spec.mc_size; ++j) {
    ndgrad::Tape sample_tape;
    const auto p = sample_tape.track(gen_values);
    const Tensor x = gen.generate(models::no_condition(1), ndgrad::slice_rows(z, j, j + 1), p);
    const Tensor score = disc.discriminate(x, models::no_condition(1), disc_values);
    fake_mean += score.item() / static_cast<double>(spec.mc_size);
    const auto vjp = sample_tape.backward(score).wrt(p);
    for (std::size_t k = 0; k < vjp.size(); ++k)
      for (std::size_t i = 0; i < vjp[k].size(); ++i)
        h[k][i] += vjp[k][i] / static_cast<double>(spec.mc_size);
  }
  const double d_phi = real_mean - fake_mean;
  std::vector<Tensor> structured;
  for (std::size_t k = 0; k < h.size(); ++k) {
    std::vector<double> v(h[k].size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -2.0 * d_phi * h[k][i];
    structured.emplace_back(gen_values[k].shape(), std::move(v));
  }
  return {ndgrad::relative_error(autodiff, structured), norm(autodiff), d_phi};
}

GradientCheck feature_matching_check(std::uint64_t seed) {
  Rng init(seed, "init");
  models::ConditionalGenerator gen(0, 2, 2, {8}, models::Activation::tanh, init);
  models::Mlp psi({{2, 8, 4}, models::Activation::tanh, models::Activation::tanh, 0.25},
                  init, "psi");
  models::LinearHeadDiscriminator disc(psi, init);
  Rng data(seed, "data");
  const std::size_t batch = 16;
  const Tensor real = losses::normal_noise(data, batch, 2) - 0.5;
  const losses::RegressionLossSpec spec{12, std::nullopt, false, true};
  const auto gen_values = ndgrad::values(gen.parameters());
  const auto disc_values = ndgrad::values(disc.parameters());

  Rng noise(seed, "mc");
  Rng replay = noise;

  ndgrad::Tape tape;
  const auto tracked = tape.track(gen_values);
  const Tensor loss = losses::regression_loss(disc, gen, real, models::no_condition(batch),
                                              spec, noise, tracked, disc_values);
  const auto autodiff = tape.backward(loss).wrt(tracked);

  ndgrad::Tape fm_tape;
  const auto p = fm_tape.track(gen_values);
  const Tensor z = losses::normal_noise(replay, spec.mc_size, gen.noise_dim());
  const Tensor fake = gen.generate(models::no_condition(spec.mc_size), z, p);
  const Tensor gap = mean_rows(disc.augmented_features(real)) -
                     mean_rows(disc.augmented_features(fake));
  const Tensor projected = ndgrad::matmul(gap, disc_values[0]);
  const Tensor fm_loss = ndgrad::sum(ndgrad::square(projected));
  const auto matched = fm_tape.backward(fm_loss).wrt(p);
  return {ndgrad::relative_error(autodiff, matched), norm(autodiff), projected.item()};
}

// ---------------------------------------------------------------------------

SuiteResult run_suite(const SuiteConfig& cfg) {
  SuiteResult result;
  json& report = result.report;
  bool all = true;
  auto record = [&](const std::string& name, bool pass, json detail) {
    detail["pass"] = pass;
    report["checks"][name] = std::move(detail);
    all = all && pass;
  };

  Rng pairs_rng(cfg.pair_seed, "pairs");
  std::vector<DiscretePair> pairs;
  for (std::size_t i = 0; i < cfg.pairs; ++i) pairs.push_back(random_pair(cfg.support, pairs_rng));

  {
    double max_gap = 0.0;
    for (const auto& pair : pairs) max_gap = std::max(max_gap, fdiv_identity_check(pair).gap);
    const DiscretePair two{{0.0, 1.0}, {0.8, 0.2}, {0.2, 0.8}};
    const FdivCheck ex = fdiv_identity_check(two);
    record("fdiv_identity",
           max_gap < 1e-12 && std::abs(ex.lhs - 0.36) < 1e-12 && ex.gap < 1e-12,
           {{"pairs", pairs.size()}, {"max_gap", max_gap}, {"two_point_lhs", ex.lhs},
            {"two_point_rhs", ex.rhs}, {"tolerance", 1e-12}});
  }

  {
    json per;
    bool pass = true;
    const TableParams params;
    for (TableVariant v : all_table_variants()) {
      const Constants k = table_constants(v, params);
      std::size_t holding = 0;
      for (const auto& pair : pairs) {
        const auto d = optimal_discriminator(v, pair, params);
        if (check_discriminability(d, pair, k.a, k.c).holds) ++holding;
      }
      per[to_string(v)] = {{"a", k.a}, {"c", k.c}, {"holds", holding}};
      pass = pass && holding == pairs.size();
    }
    record("discriminability", pass, {{"pairs", pairs.size()}, {"variants", per}});
  }

  {
    const GaussianToy toy;
    NoisyStudyConfig at_eq{0.0, cfg.noise_scale, cfg.noise_scale, cfg.trials, cfg.seed};
    const auto eq = noisy_gradient_study(toy, at_eq);
    NoisyStudyConfig off{1.0, cfg.noise_scale, cfg.noise_scale, cfg.trials, cfg.seed};
    const auto r = noisy_gradient_study(toy, off);
    const double dev = std::abs(r.mean - r.clean);
    const bool recovered = dev <= 4.0 * r.stderr_mean + 1e-12 * std::abs(r.clean);
    record("noisy_gradient",
           eq.zero_trials == cfg.trials && eq.variance == 0.0 && recovered &&
               std::isfinite(r.variance),
           {{"noise_scale", cfg.noise_scale},
            {"trials", cfg.trials},
            {"equilibrium_zero_trials", eq.zero_trials},
            {"equilibrium_variance", eq.variance},
            {"theta", off.theta},
            {"clean", r.clean},
            {"mean", r.mean},
            {"variance", r.variance},
            {"stderr", r.stderr_mean},
            {"deviation_in_stderr", r.stderr_mean > 0 ? dev / r.stderr_mean : 0.0}});
  }

  {
    const GaussianToy toy;
    const ScalarFn d = [](double x) { return std::tanh(x); };
    const ScalarFn dp = [](double x) {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    };
    const ScalarFn flat = [](double) { return 0.3; };
    const ScalarFn flat_p = [](double) { return 0.0; };
    const double theta_star = train_location(toy, d, dp, 2.0, 2.0, 400);
    const auto at_opt = first_order_condition_check(toy, theta_star, d, dp);
    const auto constant = first_order_condition_check(toy, 2.0, flat, flat_p);
    const auto far = first_order_condition_check(toy, 2.0, d, dp);
    const bool pass = at_opt.abs_d < 1e-6 && constant.abs_h == 0.0 && far.abs_d > 1e-3 &&
                      far.abs_h > 1e-3;
    record("first_order_condition", pass,
           {{"trained_theta", theta_star},
            {"abs_d_at_trained", at_opt.abs_d},
            {"abs_h_at_trained", at_opt.abs_h},
            {"constant_d_abs_h", constant.abs_h},
            {"far_abs_d", far.abs_d},
            {"far_abs_h", far.abs_h}});
  }

  {
    const auto g = gradient_decomposition_check(cfg.seed);
    record("gradient_decomposition", g.relative_error < 1e-5,
           {{"relative_error", g.relative_error}, {"gradient_norm", g.gradient_norm},
            {"d_phi", g.mean_discrepancy}, {"tolerance", 1e-5}});
  }
  {
    const auto g = feature_matching_check(cfg.seed);
    record("feature_matching", g.relative_error < 1e-5,
           {{"relative_error", g.relative_error}, {"gradient_norm", g.gradient_norm},
            {"projected_gap", g.mean_discrepancy}, {"tolerance", 1e-5}});
  }

  report["all_pass"] = all;
  result.all_pass = all;
  return result;
}

}  // namespace mcgan::theory
