#pragma once

// Closed-form Dirac-GAN recurrences: data at 0, generator at theta,
// discriminator D(x) = phi x.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mcgan::dirac {

enum class Variant { gan, nsgan, hinge, mcgan };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

/// simultaneous: both updates read (theta_n, phi_n).
/// alternating: phi is updated first and the theta update reads phi_{n+1},
/// which is what a discriminator-then-generator training loop does.
enum class Schedule { simultaneous, alternating };

struct DiracState {
  double theta = 0.0;
  double phi = 0.0;
};

struct DiracConfig {
  Variant variant = Variant::mcgan;
  double lr = 0.1;
  double c = 0.0;
  std::size_t steps = 5000;
  DiracState init{1.0, 1.0};
  Schedule schedule = Schedule::simultaneous;
  void validate() const;
};

/// f'(x) for f(x) = -log(1 + exp(x)).
double f_prime(double x);
/// h'(w) for the baseline variants (gan: sigmoid(w), nsgan: sigmoid(w) - 1,
/// hinge: -1).
double h_prime(Variant v, double w);

DiracState step(const DiracState& s, const DiracConfig& cfg);
/// steps + 1 states starting at cfg.init.
std::vector<DiracState> trajectory(const DiracConfig& cfg);

enum class Verdict { converged, oscillating, diverged };
std::string to_string(Verdict v);

struct VerdictReport {
  Verdict verdict = Verdict::oscillating;
  /// max(|theta|, |phi|) over the tail window.
  double tail_max = 0.0;
  /// max |theta| over the tail window.
  double tail_max_theta = 0.0;
};

/// Tail window = the last ceil(tail_fraction * size) states.
/// diverged: any non-finite value or |theta| > 1e6 anywhere;
/// converged: max(|theta|, |phi|) < tol over the tail; else oscillating.
VerdictReport convergence_verdict(std::span<const DiracState> traj, double tol,
                                  double tail_fraction);

/// CSV with header `n,theta,phi`.
void write_trajectory_csv(const std::filesystem::path& path,
                          std::span<const DiracState> traj);

}  // namespace mcgan::dirac
