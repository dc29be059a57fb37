#pragma once

// Numerical checks of the analytic results: optimal discriminators and
// discriminability, the f-divergence identity, noisy-discriminator
// gradients, first-order conditions, and the structure of the regression
// loss gradient.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mcgan/rng.hpp"

namespace mcgan::theory {

struct DiscretePair {
  std::vector<double> support;
  std::vector<double> p_mu;
  std::vector<double> p_nu;
  /// Throws unless both densities are nonnegative and sum to 1 within 1e-12.
  void validate() const;
  /// Indices where p_mu != p_nu.
  std::vector<std::size_t> differing() const;
};

/// Strictly positive random densities on support {0, ..., k-1}.
DiscretePair random_pair(std::size_t k, Rng& rng);

enum class TableVariant { vanilla, least_squares, hinge, energy, f_kl };

const std::vector<TableVariant>& all_table_variants();
std::string to_string(TableVariant v);

struct TableParams {
  double alpha = 1.0;   // least squares
  double beta = 0.0;    // least squares
  double margin = 1.0;  // energy
};

/// Closed-form optimal discriminator at every support point. The f-GAN
/// row uses KL, f(u) = u log u, so D* = log(p_mu / p_nu) + 1.
std::vector<double> optimal_discriminator(TableVariant v, const DiscretePair& pair,
                                          const TableParams& params = {});

/// The (a, c) pair listed for each variant.
struct Constants {
  int a = 1;
  double c = 0.0;
};
Constants table_constants(TableVariant v, const TableParams& params = {});

struct Witness {
  int a = 1;
  double c = 0.0;
  bool holds = false;
  std::vector<std::size_t> violating_points;
};

/// Checks a (D(x) - c)(p_mu(x) - p_nu(x)) > 0 on every differing point.
Witness check_discriminability(std::span<const double> scores,
                               const DiscretePair& pair, int a, double c);

struct FdivCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// lhs = sum D*(p_mu - p_nu) with the vanilla D*; rhs = Div_f(mu || nu_bar)
/// with f(x) = x(x - 1) and nu_bar = (mu + nu) / 2.
FdivCheck fdiv_identity_check(const DiscretePair& pair);

// ---------------------------------------------------------------------------
// 1-D Gaussian toy: mu = N(data_mean, 1), generator x = theta + z with
// z ~ N(0, 1), expectations by 201-point Gauss-Legendre on [-10, 10].

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
Quadrature gauss_legendre(std::size_t n, double a, double b);

struct GaussianToy {
  double data_mean = 0.0;
  std::size_t nodes = 201;
  double lo = -10.0;
  double hi = 10.0;
};

using ScalarFn = std::function<double(double)>;

struct FirstOrderFactors {
  double abs_d = 0.0;  // |E_mu D - E_nu D|
  double abs_h = 0.0;  // |E_z[dG/dtheta D'(G(z))]| = |E_nu D'|
};

FirstOrderFactors first_order_condition_check(const GaussianToy& toy, double theta,
                                              const ScalarFn& d, const ScalarFn& d_prime);

/// Plain gradient descent on the population regression loss (E_mu D - E_nu D)^2.
double train_location(const GaussianToy& toy, const ScalarFn& d, const ScalarFn& d_prime,
                      double theta0, double lr, std::size_t steps);

struct NoisyStudyConfig {
  double theta = 1.0;
  double s1 = 0.1;  // score noise
  double s2 = 0.1;  // input-gradient noise
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
};

struct NoisyStudyResult {
  double clean = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double stderr_mean = 0.0;
  std::size_t zero_trials = 0;
};

/// Gradient -2 d H of the regression loss with the vanilla optimal
/// discriminator perturbed by independent Gaussian noise at every
/// quadrature node (scores by s1, input gradients by s2).
NoisyStudyResult noisy_gradient_study(const GaussianToy& toy, const NoisyStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Network checks built on the models and losses modules.

struct GradientCheck {
  double relative_error = 0.0;
  double gradient_norm = 0.0;
  double mean_discrepancy = 0.0;
};

/// Autodiff gradient of the regression loss against -2 d_phi H with H
/// assembled from per-sample vector-Jacobian products.
GradientCheck gradient_decomposition_check(std::uint64_t seed);

/// Regression-loss gradient with a linear-head discriminator against the
/// gradient of |head . (E_mu[(psi,1)] - E_nu[(psi,1)])|^2.
GradientCheck feature_matching_check(std::uint64_t seed);

// ---------------------------------------------------------------------------

struct SuiteConfig {
  std::uint64_t pair_seed = 0;
  std::size_t pairs = 100;
  std::size_t support = 10;
  double noise_scale = 0.1;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
};

struct SuiteResult {
  nlohmann::json report;
  bool all_pass = false;
};

/// Runs every check and records pass/fail with details.
SuiteResult run_suite(const SuiteConfig& cfg);

}  // namespace mcgan::theory
