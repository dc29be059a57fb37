#pragma once

// Generators and discriminators built from ndgrad primitives.
//
// A model owns its parameters but its forward functions take the parameter
// values explicitly (a ParamView). Passing tape-tracked copies yields
// gradients; passing the plain values evaluates a frozen model.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcgan/ndgrad.hpp"
#include "mcgan/rng.hpp"

namespace mcgan::models {

using ndgrad::Parameter;
using ndgrad::Tensor;
using ParamView = std::span<const Tensor>;

enum class Activation { identity, relu, prelu, tanh, sigmoid };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct MlpConfig {
  /// Input width, hidden widths..., output width.
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::relu;
  Activation output_activation = Activation::identity;
  double prelu_init = 0.25;
};

/// Fully connected network. Parameters are, per layer, "<prefix>.w<k>"
/// (in x out) and "<prefix>.b<k>", plus "<prefix>.a<k>" slopes after each
/// hidden layer when the activation is PReLU.
class Mlp {
 public:
  Mlp(MlpConfig config, Rng& init, const std::string& prefix);

  Tensor forward(const Tensor& x, ParamView p) const;

  const MlpConfig& config() const { return config_; }
  std::size_t input_dim() const { return config_.layer_sizes.front(); }
  std::size_t output_dim() const { return config_.layer_sizes.back(); }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }

 private:
  MlpConfig config_;
  std::vector<Parameter> params_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) matrix of shape fan_in x fan_out.
Tensor uniform_init(Rng& rng, std::size_t fan_in, std::size_t fan_out);
/// Bias vector of length fan_out with the same bound.
Tensor uniform_bias(Rng& rng, std::size_t fan_in, std::size_t fan_out);

// ---------------------------------------------------------------------------

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::size_t condition_dim() const = 0;
  virtual std::size_t noise_dim() const = 0;
  virtual std::size_t output_dim() const = 0;

  /// Samples for a batch of conditions (B x condition_dim, may have zero
  /// columns) and noise (B x noise_dim).
  virtual Tensor generate(const Tensor& cond, const Tensor& noise,
                          ParamView p) const = 0;
  /// Same with the current parameter values.
  Tensor generate(const Tensor& cond, const Tensor& noise) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  /// Overwrite parameter values (shapes must match).
  void set_values(std::span<const Tensor> values);

 protected:
  void check_inputs(const Tensor& cond, const Tensor& noise) const;
  std::vector<Parameter> params_;
};

class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t condition_dim() const = 0;

  /// Scores (B x 1) for samples x (B x input_dim) and conditions.
  virtual Tensor discriminate(const Tensor& x, const Tensor& cond,
                              ParamView p) const = 0;
  Tensor discriminate(const Tensor& x, const Tensor& cond) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  void set_values(std::span<const Tensor> values);

 protected:
  void check_inputs(const Tensor& x, const Tensor& cond) const;
  std::vector<Parameter> params_;
};

/// Empty condition batch (B x 0).
Tensor no_condition(std::size_t batch);

// ---------------------------------------------------------------------------

/// MLP applied to concat(condition, noise).
class ConditionalGenerator : public Generator {
 public:
  ConditionalGenerator(std::size_t condition_dim, std::size_t noise_dim,
                       std::size_t output_dim,
                       std::vector<std::size_t> hidden, Activation activation,
                       Rng& init);

  std::size_t condition_dim() const override { return condition_dim_; }
  std::size_t noise_dim() const override { return noise_dim_; }
  std::size_t output_dim() const override { return mlp_.output_dim(); }
  using Generator::generate;
  Tensor generate(const Tensor& cond, const Tensor& noise,
                  ParamView p) const override;

 private:
  std::size_t condition_dim_;
  std::size_t noise_dim_;
  Mlp mlp_;
};

/// x = y C + z A + b. Without noise weights the output ignores z.
class AffineGenerator : public Generator {
 public:
  AffineGenerator(std::size_t condition_dim, std::size_t noise_dim,
                  std::size_t output_dim, bool use_noise, Rng& init);

  std::size_t condition_dim() const override { return condition_dim_; }
  std::size_t noise_dim() const override { return noise_dim_; }
  std::size_t output_dim() const override { return output_dim_; }
  using Generator::generate;
  Tensor generate(const Tensor& cond, const Tensor& noise,
                  ParamView p) const override;

 private:
  std::size_t condition_dim_;
  std::size_t noise_dim_;
  std::size_t output_dim_;
  bool use_noise_;
};

struct ArFnnConfig {
  std::size_t dim = 1;           // d
  std::size_t lags = 3;          // p
  std::size_t horizon = 3;       // q
  std::size_t hidden = 50;
  std::size_t residual_blocks = 2;
  double prelu_init = 0.25;
};

/// Autoregressive feed-forward generator. One step maps
/// (last p steps, d noise values) to the next d-dimensional step:
/// affine embed, PReLU, residual blocks h + PReLU(W h + b), affine out.
///
/// As a Generator the condition is the flattened past window (B x p*d,
/// time-major) and the noise is B x q*d; the output is the flattened q-step
/// future.
class ArFnnGenerator : public Generator {
 public:
  ArFnnGenerator(ArFnnConfig config, Rng& init);

  const ArFnnConfig& config() const { return config_; }
  std::size_t condition_dim() const override {
    return config_.lags * config_.dim;
  }
  std::size_t noise_dim() const override {
    return config_.horizon * config_.dim;
  }
  std::size_t output_dim() const override {
    return config_.horizon * config_.dim;
  }

  /// One step: window B x p*d, noise B x d -> B x d.
  Tensor step(const Tensor& window, const Tensor& noise, ParamView p) const;
  /// q chained steps, each fed the window ending at the previous step.
  /// noise is B x q*d; returns B x q*d.
  Tensor generate_path(const Tensor& past, std::size_t q, const Tensor& noise,
                       ParamView p) const;

  using Generator::generate;
  Tensor generate(const Tensor& cond, const Tensor& noise,
                  ParamView p) const override;

 private:
  ArFnnConfig config_;
};

// ---------------------------------------------------------------------------

/// MLP applied to concat(x, condition), one output score.
class MlpDiscriminator : public Discriminator {
 public:
  MlpDiscriminator(std::size_t input_dim, std::size_t condition_dim,
                   std::vector<std::size_t> hidden, Activation activation,
                   Activation output_activation, Rng& init);

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t condition_dim() const override { return condition_dim_; }
  using Discriminator::discriminate;
  Tensor discriminate(const Tensor& x, const Tensor& cond,
                      ParamView p) const override;

 private:
  std::size_t input_dim_;
  std::size_t condition_dim_;
  Mlp mlp_;
};

/// D(x) = x w (+ b when with_bias). Conditions are not supported.
class LinearDiscriminator : public Discriminator {
 public:
  LinearDiscriminator(std::size_t input_dim, bool with_bias, Rng& init);

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t condition_dim() const override { return 0; }
  using Discriminator::discriminate;
  Tensor discriminate(const Tensor& x, const Tensor& cond,
                      ParamView p) const override;

 private:
  std::size_t input_dim_;
  bool with_bias_;
};

/// D(x) = head . (psi(x), 1) with a frozen feature map psi. The only
/// parameter is the head (n + 1 values).
class LinearHeadDiscriminator : public Discriminator {
 public:
  LinearHeadDiscriminator(Mlp feature_map, Rng& init);

  std::size_t input_dim() const override { return features_.input_dim(); }
  std::size_t condition_dim() const override { return 0; }
  std::size_t feature_dim() const { return features_.output_dim(); }

  /// psi(x) with the frozen feature weights, differentiable in x.
  Tensor features(const Tensor& x) const;
  /// (psi(x), 1) rows.
  Tensor augmented_features(const Tensor& x) const;

  using Discriminator::discriminate;
  Tensor discriminate(const Tensor& x, const Tensor& cond,
                      ParamView p) const override;

 private:
  Mlp features_;
  std::vector<Tensor> feature_values_;
};

// ---------------------------------------------------------------------------
// Checkpoints

/// Binary format: "MCGP", u32 version, u64 count, then per parameter
/// u64 name length, name bytes, u64 rank, u64 dims, little-endian f64 data.
void save_binary(const std::filesystem::path& path,
                 std::span<const Parameter> params);
std::vector<Parameter> load_binary(const std::filesystem::path& path);

/// JSON format: [{"name":..., "shape":[...], "data":[...]}], 17 digits.
void save_json(const std::filesystem::path& path,
               std::span<const Parameter> params);
std::vector<Parameter> load_json(const std::filesystem::path& path);

/// Copy loaded values into params, matching by name and shape.
void restore(std::span<Parameter> params, std::span<const Parameter> loaded);

/// FNV-1a over names, shapes and raw value bytes.
std::uint64_t checksum(std::span<const Parameter> params);

}  // namespace mcgan::models
