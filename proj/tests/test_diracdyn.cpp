#include <cmath>

#include "doctest.h"
#include "mcgan/diracdyn.hpp"
#include "mcgan/error.hpp"

using namespace mcgan;
using namespace mcgan::dirac;

namespace {

DiracConfig cfg_for(Variant v, std::size_t steps = 5000) {
  DiracConfig c;
  c.variant = v;
  c.steps = steps;
  return c;
}

}  // namespace

TEST_CASE("single steps by hand") {
  const auto mc = step({1, 1}, cfg_for(Variant::mcgan));
  CHECK(mc.theta == doctest::Approx(0.8).epsilon(1e-15));
  // phi + 0.1 * (-sigmoid(1)) * 1
  CHECK(mc.phi == doctest::Approx(1 - 0.1 / (1 + std::exp(-1.0))));

  const auto hinge = step({1, 1}, cfg_for(Variant::hinge));
  CHECK(hinge.theta == doctest::Approx(1.1));
  // baseline phi update reads f'(-phi theta)
  CHECK(hinge.phi == doctest::Approx(1 - 0.1 / (1 + std::exp(1.0))));

  const auto gan = step({1, 1}, cfg_for(Variant::gan));
  CHECK(gan.theta == doctest::Approx(1 - 0.1 / (1 + std::exp(-1.0))));
  const auto ns = step({1, 1}, cfg_for(Variant::nsgan));
  CHECK(ns.theta == doctest::Approx(1 - 0.1 * (1 / (1 + std::exp(-1.0)) - 1)));

  DiracConfig with_c = cfg_for(Variant::mcgan);
  with_c.c = 0.5;
  CHECK(step({1, 1}, with_c).theta == doctest::Approx(1 - 0.2 * 0.5));
}

TEST_CASE("equilibrium is fixed for every variant and schedule") {
  for (auto v : {Variant::gan, Variant::nsgan, Variant::hinge, Variant::mcgan}) {
    for (auto s : {Schedule::simultaneous, Schedule::alternating}) {
      DiracConfig c = cfg_for(v);
      c.schedule = s;
      const auto next = step({0, 0}, c);
      CHECK(next.theta == 0.0);
      CHECK(next.phi == 0.0);
    }
  }
}

TEST_CASE("trajectory length and determinism") {
  CHECK(trajectory(cfg_for(Variant::gan, 0)).size() == 1);
  const auto a = trajectory(cfg_for(Variant::nsgan, 100));
  const auto b = trajectory(cfg_for(Variant::nsgan, 100));
  REQUIRE(a.size() == 101);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].theta == b[i].theta);
    CHECK(a[i].phi == b[i].phi);
  }
  DiracConfig bad = cfg_for(Variant::gan);
  bad.lr = 0;
  CHECK_THROWS_AS(trajectory(bad), ConfigError);
}

TEST_CASE("mcgan theta contracts while phi settles off zero") {
  const auto traj = trajectory(cfg_for(Variant::mcgan, 500));
  CHECK(std::abs(traj.back().theta) < 1e-3);
  // (0, phi) is a fixed point for every phi, and the printed recurrence
  // stops moving phi once theta is near zero.
  CHECK(traj.back().phi == doctest::Approx(0.48712).epsilon(1e-4));
  // |theta| never grows while lr phi^2 <= 1.
  for (std::size_t n = 0; n + 1 < traj.size(); ++n) {
    if (0.1 * traj[n].phi * traj[n].phi <= 1.0) {
      CHECK(std::abs(traj[n + 1].theta) <= std::abs(traj[n].theta));
    }
  }
}

TEST_CASE("baseline variants keep oscillating") {
  for (auto v : {Variant::gan, Variant::nsgan, Variant::hinge}) {
    const auto traj = trajectory(cfg_for(v));
    const auto r = convergence_verdict(traj, 1e-3, 0.2);
    INFO(to_string(v));
    CHECK(r.verdict != Verdict::converged);
    CHECK(r.tail_max_theta > 0.1);
  }
}

TEST_CASE("verdict rules") {
  std::vector<DiracState> zero(10, DiracState{0, 0});
  CHECK(convergence_verdict(zero, 1e-3, 0.5).verdict == Verdict::converged);
  std::vector<DiracState> alt;
  for (int i = 0; i < 10; ++i) alt.push_back({i % 2 ? 1.0 : -1.0, 0.0});
  const auto r = convergence_verdict(alt, 1e-3, 0.5);
  CHECK(r.verdict == Verdict::oscillating);
  CHECK(r.tail_max == 1.0);
  alt.push_back({1e7, 0});
  CHECK(convergence_verdict(alt, 1e-3, 0.5).verdict == Verdict::diverged);
  CHECK_THROWS_AS(convergence_verdict({}, 1e-3, 0.5), ConfigError);
  CHECK_THROWS_AS(convergence_verdict(zero, 0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(convergence_verdict(zero, 1e-3, 1.5), ConfigError);
}

TEST_CASE("non-finite states are rejected") {
  CHECK_THROWS_AS(step({NAN, 1}, cfg_for(Variant::gan)), NumericalError);
}
