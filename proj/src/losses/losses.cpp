#include "mcgan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcgan/error.hpp"

namespace mcgan::losses {

using namespace ndgrad;

Variant parse_variant(const std::string& name) {
  if (name == "bce") return Variant::bce;
  if (name == "nsgan") return Variant::nsgan;
  if (name == "hinge") return Variant::hinge;
  if (name == "lsgan") return Variant::lsgan;
  if (name == "wgan") return Variant::wgan;
  if (name == "energy") return Variant::energy;
  if (name == "mcgan") return Variant::mcgan;
  throw ConfigError("unknown loss '" + name +
                    "' (expected bce|nsgan|hinge|lsgan|wgan|energy|mcgan)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::bce: return "bce";
    case Variant::nsgan: return "nsgan";
    case Variant::hinge: return "hinge";
    case Variant::lsgan: return "lsgan";
    case Variant::wgan: return "wgan";
    case Variant::energy: return "energy";
    case Variant::mcgan: return "mcgan";
  }
  return "?";
}

namespace {

void require_probabilities(const Tensor& w) {
  for (double v : w.data()) {
    if (!(v > 0.0 && v < 1.0)) {
      throw NumericalError(
          "bce score " + std::to_string(v) +
          " outside (0,1); the discriminator needs a sigmoid output or "
          "from_logits");
    }
  }
}

// log sigmoid(w) and log(1 - sigmoid(w)) for logits.
Tensor log_sigmoid(const Tensor& w) { return neg(softplus(neg(w))); }
Tensor log_one_minus_sigmoid(const Tensor& w) { return neg(softplus(w)); }

void require_nonempty(const char* who, const Tensor& t) {
  if (t.empty()) throw ShapeError(std::string(who) + ": empty score batch");
}

}  // namespace

Tensor f1(const LossSpec& spec, const Tensor& w) {
  switch (spec.variant) {
    case Variant::bce:
    case Variant::nsgan:
      if (spec.from_logits) return log_sigmoid(w);
      require_probabilities(w);
      return log(w);
    case Variant::hinge: return neg(relu(1.0 - w));
    case Variant::lsgan: return neg(square(w - spec.ls_alpha));
    case Variant::wgan: return w;
    case Variant::energy: return neg(w);
    case Variant::mcgan: break;
  }
  throw ConfigError("mcgan has no discriminator loss of its own");
}

Tensor f2(const LossSpec& spec, const Tensor& w) {
  switch (spec.variant) {
    case Variant::bce:
    case Variant::nsgan:
      if (spec.from_logits) return log_one_minus_sigmoid(w);
      require_probabilities(w);
      return log(1.0 - w);
    case Variant::hinge: return neg(relu(1.0 + w));
    case Variant::lsgan: return neg(square(w - spec.ls_beta));
    case Variant::wgan: return neg(w);
    case Variant::energy: return neg(relu(spec.energy_margin - w));
    case Variant::mcgan: break;
  }
  throw ConfigError("mcgan has no discriminator loss of its own");
}

Tensor h(const LossSpec& spec, const Tensor& w, std::optional<double> c_mu) {
  if (spec.variant == Variant::wgan && !c_mu) {
    throw ConfigError("wgan generator loss needs c_mu (mean real score)");
  }
  switch (spec.variant) {
    case Variant::bce:
      // Min-max objective: the generator minimizes E log(1 - D).
      return f2(spec, w);
    case Variant::nsgan:
      if (spec.from_logits) return neg(log_sigmoid(w));
      require_probabilities(w);
      return neg(log(w));
    case Variant::hinge: return neg(w);
    case Variant::lsgan: return square(w - spec.ls_alpha);
    case Variant::wgan: return neg(w) + *c_mu;
    case Variant::energy: return w;
    case Variant::mcgan: break;
  }
  throw ConfigError("mcgan uses the regression loss, not h");
}

Tensor discriminator_loss(const LossSpec& spec, const Tensor& d_real,
                          const Tensor& d_fake) {
  require_nonempty("discriminator_loss", d_real);
  require_nonempty("discriminator_loss", d_fake);
  return mean(f1(spec, d_real)) + mean(f2(spec, d_fake));
}

Tensor generator_loss_baseline(const LossSpec& spec, const Tensor& d_fake,
                               std::optional<double> c_mu) {
  require_nonempty("generator_loss", d_fake);
  return mean(h(spec, d_fake, c_mu));
}

void LeakyClamp::validate() const {
  if (!(lb < ub)) throw ConfigError("leaky clamp needs lb < ub");
  if (!(slope > 0.0 && slope < 1.0)) {
    throw ConfigError("leaky clamp slope must lie in (0,1)");
  }
}

double leaky_clamp(double x, const LeakyClamp& c) {
  c.validate();
  if (x < c.lb) return c.lb + c.slope * (x - c.lb);
  if (x > c.ub) return c.ub + c.slope * (x - c.ub);
  return x;
}

Tensor leaky_clamp(const Tensor& x, const LeakyClamp& c) {
  c.validate();
  // slope * x + (1 - slope) * clamp(x, lb, ub)
  return x * c.slope + minimum(maximum(x, c.lb), c.ub) * (1.0 - c.slope);
}

double mean_discrepancy(std::span<const double> d_real,
                        std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) {
    throw ShapeError("mean_discrepancy: empty score set");
  }
  const double r = std::accumulate(d_real.begin(), d_real.end(), 0.0) /
                   static_cast<double>(d_real.size());
  const double f = std::accumulate(d_fake.begin(), d_fake.end(), 0.0) /
                   static_cast<double>(d_fake.size());
  return r - f;
}

void RegressionLossSpec::validate() const {
  if (mc_size < 1) throw ConfigError("mc_size must be >= 1");
  if (clamp) clamp->validate();
}

Tensor normal_noise(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor({rows, cols}, std::move(v));
}

namespace {

// Score used inside the regression: optional sigmoid, then optional clamp.
Tensor clamp_if(const Tensor& s, const RegressionLossSpec& spec) {
  const Tensor v = spec.on_probability ? sigmoid(s) : s;
  return spec.clamp ? leaky_clamp(v, *spec.clamp) : v;
}

Tensor repeat_rows(const Tensor& y, std::size_t times) {
  const std::size_t n = y.rows(), c = y.cols();
  std::vector<double> out;
  out.reserve(n * times * c);
  auto v = y.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < times; ++j)
      out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(i * c),
                 v.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
  return Tensor({n * times, c}, std::move(out));
}

}  // namespace

Tensor mc_expected_score(const models::Discriminator& disc,
                         const models::Generator& gen, const Tensor& cond,
                         const RegressionLossSpec& spec, Rng& noise,
                         ParamView gen_params, ParamView disc_values) {
  spec.validate();
  if (cond.rank() != 2 || cond.rows() != 1) {
    throw ShapeError("mc_expected_score: expected one condition row, got " +
                     shape_string(cond.shape()));
  }
  const std::size_t n = spec.mc_size;
  const Tensor y = repeat_rows(cond.detach(), n);
  const Tensor x = gen.generate(y, normal_noise(noise, n, gen.noise_dim()), gen_params);
  return mean(clamp_if(disc.discriminate(x, y, disc_values), spec));
}

Tensor regression_loss(const models::Discriminator& disc,
                       const models::Generator& gen, const Tensor& real_x,
                       const Tensor& real_y, const RegressionLossSpec& spec,
                       Rng& noise, ParamView gen_params,
                       ParamView disc_values) {
  spec.validate();
  if (real_x.rows() == 0) throw ShapeError("regression_loss: empty batch");
  std::vector<Tensor> frozen;
  for (const auto& t : disc_values) frozen.push_back(t.detach());
  const Tensor real_scores =
      clamp_if(disc.discriminate(real_x.detach(), real_y.detach(), frozen), spec)
          .detach();
  const std::size_t batch = real_x.rows();
  if (gen.condition_dim() == 0 && spec.shared_estimate) {
    const Tensor e = mc_expected_score(disc, gen, models::no_condition(1), spec,
                                       noise, gen_params, frozen);
    return mean(square(real_scores - e));
  }
  const std::size_t n = spec.mc_size;
  const Tensor y = gen.condition_dim() == 0
                       ? models::no_condition(batch * n)
                       : repeat_rows(real_y.detach(), n);
  const Tensor x =
      gen.generate(y, normal_noise(noise, batch * n, gen.noise_dim()), gen_params);
  const Tensor scores = clamp_if(disc.discriminate(x, y, frozen), spec);
  const Tensor e = row_mean(scores.reshape({batch, n}));
  return mean(square(real_scores - e));
}

}  // namespace mcgan::losses
