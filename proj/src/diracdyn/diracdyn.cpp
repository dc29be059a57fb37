#include "mcgan/diracdyn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mcgan/error.hpp"

namespace mcgan::dirac {

Variant parse_variant(const std::string& name) {
  if (name == "gan") return Variant::gan;
  if (name == "nsgan") return Variant::nsgan;
  if (name == "hinge") return Variant::hinge;
  if (name == "mcgan") return Variant::mcgan;
  throw ConfigError("unknown Dirac-GAN variant '" + name + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::gan: return "gan";
    case Variant::nsgan: return "nsgan";
    case Variant::hinge: return "hinge";
    case Variant::mcgan: return "mcgan";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::oscillating: return "oscillating";
    case Verdict::diverged: return "diverged";
  }
  return "?";
}

void DiracConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("dirac: step size must be > 0");
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double theta_update(Variant v, const DiracConfig& cfg, double theta, double phi) {
  if (v == Variant::mcgan) {
    return theta - 2.0 * cfg.lr * (phi * theta - phi * cfg.c) * phi;
  }
  return theta - cfg.lr * h_prime(v, phi * theta) * phi;
}

double phi_update(Variant v, const DiracConfig& cfg, double theta, double phi) {
  if (v == Variant::mcgan) return phi + cfg.lr * f_prime(phi * theta) * theta;
  return phi + cfg.lr * f_prime(-phi * theta) * theta;
}

}  // namespace

double f_prime(double x) { return -sigmoid(x); }

double h_prime(Variant v, double w) {
  switch (v) {
    case Variant::gan: return sigmoid(w);
    case Variant::nsgan: return sigmoid(w) - 1.0;
    case Variant::hinge: return -1.0;
    case Variant::mcgan: break;
  }
  throw ConfigError("mcgan has no baseline h");
}

DiracState step(const DiracState& s, const DiracConfig& cfg) {
  if (!std::isfinite(s.theta) || !std::isfinite(s.phi)) {
    throw NumericalError("dirac step: non-finite state");
  }
  DiracState next;
  next.phi = phi_update(cfg.variant, cfg, s.theta, s.phi);
  const double phi_for_theta =
      cfg.schedule == Schedule::alternating ? next.phi : s.phi;
  next.theta = theta_update(cfg.variant, cfg, s.theta, phi_for_theta);
  if (!std::isfinite(next.theta) || !std::isfinite(next.phi)) {
    throw NumericalError("dirac step: non-finite update for " +
                         to_string(cfg.variant));
  }
  return next;
}

std::vector<DiracState> trajectory(const DiracConfig& cfg) {
  cfg.validate();
  std::vector<DiracState> out;
  out.reserve(cfg.steps + 1);
  out.push_back(cfg.init);
  for (std::size_t n = 0; n < cfg.steps; ++n) out.push_back(step(out.back(), cfg));
  return out;
}

VerdictReport convergence_verdict(std::span<const DiracState> traj, double tol,
                                  double tail_fraction) {
  if (traj.empty()) throw ConfigError("convergence_verdict: empty trajectory");
  if (!(tol > 0.0)) throw ConfigError("convergence_verdict: tol must be > 0");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ConfigError("convergence_verdict: tail_fraction must lie in (0,1]");
  }
  VerdictReport r;
  const auto tail = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(traj.size())));
  const std::size_t start = traj.size() - std::max<std::size_t>(tail, 1);
  for (std::size_t i = start; i < traj.size(); ++i) {
    r.tail_max_theta = std::max(r.tail_max_theta, std::abs(traj[i].theta));
    r.tail_max = std::max({r.tail_max, std::abs(traj[i].theta), std::abs(traj[i].phi)});
  }
  const bool blew_up = std::any_of(traj.begin(), traj.end(), [](const DiracState& s) {
    return !std::isfinite(s.theta) || !std::isfinite(s.phi) || std::abs(s.theta) > 1e6;
  });
  if (blew_up) {
    r.verdict = Verdict::diverged;
  } else if (r.tail_max < tol) {
    r.verdict = Verdict::converged;
  } else {
    r.verdict = Verdict::oscillating;
  }
  return r;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          std::span<const DiracState> traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "n,theta,phi\n";
  for (std::size_t n = 0; n < traj.size(); ++n) {
    out << n << ',' << traj[n].theta << ',' << traj[n].phi << '\n';
  }
}

}  // namespace mcgan::dirac
