#include <cmath>

#include "mcgan/error.hpp"
#include "mcgan/models.hpp"

namespace mcgan::models {

using namespace ndgrad;

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "prelu") return Activation::prelu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::prelu: return "prelu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

namespace {

Tensor activate(Activation a, const Tensor& x, const Tensor* slope) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::prelu: return prelu(x, *slope);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

void check_view(const char* who, ParamView p, std::size_t expected) {
  if (p.size() != expected) {
    throw ShapeError(std::string(who) + ": expected " +
                     std::to_string(expected) + " parameter tensors, got " +
                     std::to_string(p.size()));
  }
}

void assign_values(std::vector<Parameter>& params,
                   std::span<const Tensor> values) {
  if (values.size() != params.size()) {
    throw ShapeError("set_values: expected " + std::to_string(params.size()) +
                     " tensors, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i].value.shape()) {
      throw ShapeError("set_values: '" + params[i].name + "' has shape " +
                       shape_string(params[i].value.shape()) + ", got " +
                       shape_string(values[i].shape()));
    }
    params[i].value = values[i].detach();
  }
}

void check_batch(const char* who, const Tensor& t, std::size_t batch,
                 std::size_t width, const char* what) {
  if (t.rank() != 2 || t.rows() != batch || t.cols() != width) {
    throw ShapeError(std::string(who) + ": " + what + " must be " +
                     std::to_string(batch) + "x" + std::to_string(width) +
                     ", got " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor uniform_init(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor({fan_in, fan_out}, std::move(v));
}

Tensor uniform_bias(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(fan_out);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor({fan_out}, std::move(v));
}

Tensor no_condition(std::size_t batch) { return Tensor({batch, 0}, {}); }

// ---------------------------------------------------------------------------

Mlp::Mlp(MlpConfig config, Rng& init, const std::string& prefix)
    : config_(std::move(config)) {
  const auto& sizes = config_.layer_sizes;
  if (sizes.size() < 3) {
    throw ConfigError("mlp: need at least one hidden layer");
  }
  for (auto s : sizes) {
    if (s == 0) throw ConfigError("mlp: layer widths must be >= 1");
  }
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::string idx = std::to_string(k);
    params_.push_back({prefix + ".w" + idx, uniform_init(init, sizes[k], sizes[k + 1])});
    params_.push_back({prefix + ".b" + idx, uniform_bias(init, sizes[k], sizes[k + 1])});
    const bool hidden = k + 2 < sizes.size();
    if (hidden && config_.activation == Activation::prelu) {
      params_.push_back({prefix + ".a" + idx, Tensor::scalar(config_.prelu_init)});
    }
  }
}

Tensor Mlp::forward(const Tensor& x, ParamView p) const {
  check_view("mlp", p, params_.size());
  if (x.rank() != 2 || x.cols() != input_dim()) {
    throw ShapeError("mlp: input must have " + std::to_string(input_dim()) +
                     " columns, got " + shape_string(x.shape()));
  }
  const auto& sizes = config_.layer_sizes;
  Tensor h = x;
  std::size_t i = 0;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    h = add_bias(matmul(h, p[i]), p[i + 1]);
    i += 2;
    const bool hidden = k + 2 < sizes.size();
    if (hidden) {
      const Tensor* slope = nullptr;
      if (config_.activation == Activation::prelu) slope = &p[i++];
      h = activate(config_.activation, h, slope);
    } else {
      h = activate(config_.output_activation, h, nullptr);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

Tensor Generator::generate(const Tensor& cond, const Tensor& noise) const {
  return generate(cond, noise, values(params_));
}

void Generator::set_values(std::span<const Tensor> v) { assign_values(params_, v); }

void Generator::check_inputs(const Tensor& cond, const Tensor& noise) const {
  if (noise.rank() != 2) {
    throw ShapeError("generate: noise must be 2-D, got " +
                     shape_string(noise.shape()));
  }
  check_batch("generate", noise, noise.rows(), noise_dim(), "noise");
  check_batch("generate", cond, noise.rows(), condition_dim(), "condition");
}

Tensor Discriminator::discriminate(const Tensor& x, const Tensor& cond) const {
  return discriminate(x, cond, values(params_));
}

void Discriminator::set_values(std::span<const Tensor> v) {
  assign_values(params_, v);
}

void Discriminator::check_inputs(const Tensor& x, const Tensor& cond) const {
  if (x.rank() != 2) {
    throw ShapeError("discriminate: samples must be 2-D, got " +
                     shape_string(x.shape()));
  }
  check_batch("discriminate", x, x.rows(), input_dim(), "samples");
  check_batch("discriminate", cond, x.rows(), condition_dim(), "condition");
}

// ---------------------------------------------------------------------------

ConditionalGenerator::ConditionalGenerator(std::size_t condition_dim,
                                           std::size_t noise_dim,
                                           std::size_t output_dim,
                                           std::vector<std::size_t> hidden,
                                           Activation activation, Rng& init)
    : condition_dim_(condition_dim),
      noise_dim_(noise_dim),
      mlp_(
          [&] {
            MlpConfig c;
            c.layer_sizes.push_back(condition_dim + noise_dim);
            c.layer_sizes.insert(c.layer_sizes.end(), hidden.begin(),
                                 hidden.end());
            c.layer_sizes.push_back(output_dim);
            c.activation = activation;
            return c;
          }(),
          init, "gen") {
  params_ = mlp_.parameters();
}

Tensor ConditionalGenerator::generate(const Tensor& cond, const Tensor& noise,
                                      ParamView p) const {
  check_inputs(cond, noise);
  if (condition_dim_ == 0) return mlp_.forward(noise, p);
  return mlp_.forward(concat_cols({cond, noise}), p);
}

AffineGenerator::AffineGenerator(std::size_t condition_dim,
                                 std::size_t noise_dim, std::size_t output_dim,
                                 bool use_noise, Rng& init)
    : condition_dim_(condition_dim),
      noise_dim_(noise_dim),
      output_dim_(output_dim),
      use_noise_(use_noise) {
  if (condition_dim > 0) {
    params_.push_back({"gen.c", uniform_init(init, condition_dim, output_dim)});
  }
  if (use_noise && noise_dim > 0) {
    params_.push_back({"gen.a", uniform_init(init, noise_dim, output_dim)});
  }
  params_.push_back({"gen.b", Tensor::zeros({output_dim})});
}

Tensor AffineGenerator::generate(const Tensor& cond, const Tensor& noise,
                                 ParamView p) const {
  check_inputs(cond, noise);
  check_view("affine generator", p, params_.size());
  const std::size_t batch = noise.rows();
  std::size_t i = 0;
  Tensor out = Tensor::zeros({batch, output_dim_});
  if (condition_dim_ > 0) out = out + matmul(cond, p[i++]);
  if (use_noise_ && noise_dim_ > 0) out = out + matmul(noise, p[i++]);
  return add_bias(out, p[i]);
}

// ---------------------------------------------------------------------------

ArFnnGenerator::ArFnnGenerator(ArFnnConfig config, Rng& init)
    : config_(config) {
  if (config_.dim == 0 || config_.lags == 0 || config_.horizon == 0 ||
      config_.hidden == 0) {
    throw ConfigError("ar-fnn: dim, lags, horizon and hidden must be >= 1");
  }
  const std::size_t d = config_.dim, h = config_.hidden;
  const std::size_t in = config_.lags * d + d;
  auto affine = [&](const std::string& name, std::size_t fan_in,
                    std::size_t fan_out) {
    params_.push_back({name + ".w", uniform_init(init, fan_in, fan_out)});
    params_.push_back({name + ".b", uniform_bias(init, fan_in, fan_out)});
  };
  affine("gen.embed", in, h);
  params_.push_back({"gen.embed.a", Tensor::scalar(config_.prelu_init)});
  for (std::size_t k = 0; k < config_.residual_blocks; ++k) {
    const std::string name = "gen.res" + std::to_string(k);
    affine(name, h, h);
    params_.push_back({name + ".a", Tensor::scalar(config_.prelu_init)});
  }
  affine("gen.out", h, d);
}

Tensor ArFnnGenerator::step(const Tensor& window, const Tensor& noise,
                            ParamView p) const {
  check_view("ar-fnn", p, params_.size());
  const std::size_t batch = window.rows();
  check_batch("ar-fnn step", window, batch, config_.lags * config_.dim, "window");
  check_batch("ar-fnn step", noise, batch, config_.dim, "noise");
  Tensor h = prelu(add_bias(matmul(concat_cols({window, noise}), p[0]), p[1]), p[2]);
  std::size_t i = 3;
  for (std::size_t k = 0; k < config_.residual_blocks; ++k) {
    h = h + prelu(add_bias(matmul(h, p[i]), p[i + 1]), p[i + 2]);
    i += 3;
  }
  return add_bias(matmul(h, p[i]), p[i + 1]);
}

Tensor ArFnnGenerator::generate_path(const Tensor& past, std::size_t q,
                                     const Tensor& noise, ParamView p) const {
  if (q < 1) throw ConfigError("ar-fnn: horizon q must be >= 1");
  const std::size_t d = config_.dim, width = config_.lags * d;
  const std::size_t batch = past.rows();
  check_batch("generate_path", past, batch, width, "past window");
  check_batch("generate_path", noise, batch, q * d, "noise");
  std::vector<Tensor> steps;
  Tensor window = past;
  for (std::size_t i = 0; i < q; ++i) {
    const Tensor x = step(window, slice_cols(noise, i * d, (i + 1) * d), p);
    steps.push_back(x);
    window = concat_cols({slice_cols(window, d, width), x});
  }
  return concat_cols(steps);
}

Tensor ArFnnGenerator::generate(const Tensor& cond, const Tensor& noise,
                                ParamView p) const {
  check_inputs(cond, noise);
  return generate_path(cond, config_.horizon, noise, p);
}

// ---------------------------------------------------------------------------

MlpDiscriminator::MlpDiscriminator(std::size_t input_dim,
                                   std::size_t condition_dim,
                                   std::vector<std::size_t> hidden,
                                   Activation activation,
                                   Activation output_activation, Rng& init)
    : input_dim_(input_dim),
      condition_dim_(condition_dim),
      mlp_(
          [&] {
            MlpConfig c;
            c.layer_sizes.push_back(input_dim + condition_dim);
            c.layer_sizes.insert(c.layer_sizes.end(), hidden.begin(),
                                 hidden.end());
            c.layer_sizes.push_back(1);
            c.activation = activation;
            c.output_activation = output_activation;
            return c;
          }(),
          init, "disc") {
  params_ = mlp_.parameters();
}

Tensor MlpDiscriminator::discriminate(const Tensor& x, const Tensor& cond,
                                      ParamView p) const {
  check_inputs(x, cond);
  if (condition_dim_ == 0) return mlp_.forward(x, p);
  return mlp_.forward(concat_cols({x, cond}), p);
}

LinearDiscriminator::LinearDiscriminator(std::size_t input_dim, bool with_bias,
                                         Rng& init)
    : input_dim_(input_dim), with_bias_(with_bias) {
  params_.push_back({"disc.w", uniform_init(init, input_dim, 1)});
  if (with_bias) params_.push_back({"disc.b", Tensor::zeros({1})});
}

Tensor LinearDiscriminator::discriminate(const Tensor& x, const Tensor& cond,
                                         ParamView p) const {
  check_inputs(x, cond);
  check_view("linear discriminator", p, params_.size());
  const Tensor s = matmul(x, p[0]);
  return with_bias_ ? add_bias(s, p[1]) : s;
}

LinearHeadDiscriminator::LinearHeadDiscriminator(Mlp feature_map, Rng& init)
    : features_(std::move(feature_map)),
      feature_values_(values(features_.parameters())) {
  params_.push_back(
      {"disc.head", uniform_init(init, features_.output_dim() + 1, 1)});
}

Tensor LinearHeadDiscriminator::features(const Tensor& x) const {
  return features_.forward(x, feature_values_);
}

Tensor LinearHeadDiscriminator::augmented_features(const Tensor& x) const {
  return concat_cols({features(x), Tensor::filled({x.rows(), 1}, 1.0)});
}

Tensor LinearHeadDiscriminator::discriminate(const Tensor& x,
                                             const Tensor& cond,
                                             ParamView p) const {
  check_inputs(x, cond);
  check_view("linear-head discriminator", p, 1);
  return matmul(augmented_features(x), p[0]);
}

}  // namespace mcgan::models
