#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mcgan/datagen.hpp"
#include "mcgan/error.hpp"
#include "mcgan/metrics.hpp"
#include "mcgan/rng.hpp"

using namespace mcgan;
using namespace mcgan::metrics;

namespace {

Tensor points_on(const std::vector<std::array<double, 2>>& centers,
                 const std::vector<std::size_t>& modes, std::size_t per_mode) {
  std::vector<double> v;
  for (auto m : modes)
    for (std::size_t k = 0; k < per_mode; ++k) {
      v.push_back(centers[m][0]);
      v.push_back(centers[m][1]);
    }
  return Tensor({v.size() / 2, 2}, v);
}

std::vector<std::size_t> first_modes(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  return m;
}

// One path of length T from a row-major T x d tensor.
Tensor as_single_path(const Tensor& path) { return path.reshape({1, path.size()}); }

Tensor white_noise(std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(T);
  for (auto& x : v) x = rng.normal();
  return Tensor({1, T}, v);
}

}  // namespace

TEST_CASE("mode metrics") {
  const data::GaussianGridSpec spec;
  const auto centers = data::grid_centers(spec);
  const auto real = data::sample_gaussian_grid(spec, 1);

  const auto same = mode_metrics(centers, spec.std, real.points, real.points);
  CHECK(same.registered_modes == 25);
  CHECK(same.tv_norm == 0.0);

  const auto collapsed = mode_metrics(centers, spec.std, real.points, points_on(centers, {7}, 50));
  CHECK(collapsed.registered_modes == 1);
  CHECK(collapsed.registered_points == 50);
  CHECK(collapsed.tv_norm >= 0.0);
  CHECK(collapsed.tv_norm <= 1.0);

  // Uniform over 20 of 25 modes against uniform over 25:
  // 0.5 * (20 * |1/20 - 1/25| + 5 * 1/25) = 0.2.
  const auto r25 = points_on(centers, first_modes(25), 4);
  const auto f20 = points_on(centers, first_modes(20), 5);
  const auto partial = mode_metrics(centers, spec.std, r25, f20);
  CHECK(partial.registered_modes == 20);
  CHECK(partial.tv_norm == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(partial.tv_scaled == doctest::Approx(20.0));

  // Points beyond 3 std are not registered.
  const Tensor off = Tensor::from_rows({{centers[0][0] + 0.031, centers[0][1]},
                                        {centers[0][0] + 0.029, centers[0][1]}});
  const auto reg = register_points(centers, spec.std, off);
  CHECK(!reg[0].has_value());
  CHECK(reg[1] == std::optional<std::size_t>(0));

  CHECK_THROWS_AS(mode_metrics(centers, spec.std, real.points, Tensor({0, 2}, {})), ShapeError);
}

TEST_CASE("abs metric") {
  Rng rng(2);
  std::vector<double> v(600);
  for (auto& x : v) x = rng.normal();
  const Tensor real({100, 6}, v);
  CHECK(abs_metric(real, real, 2) == 0.0);

  const Tensor extremes({2, 1}, {0.0, 1.0});
  const Tensor middle({3, 1}, {0.5, 0.5, 0.5});
  CHECK(std::abs(abs_metric(extremes, middle, 1) - 2.0) <= 1e-12);

  // Two bins: real (0.5, 0.5), fake (1, 0).
  const Tensor fake_low({2, 1}, {0.1, 0.2});
  CHECK(abs_metric(extremes, fake_low, 1, 2) == doctest::Approx(1.0));
  // Values outside the real range fall into the edge bins.
  const Tensor outside({2, 1}, {-5.0, 7.0});
  CHECK(abs_metric(extremes, outside, 1, 2) == 0.0);

  // Row permutations do not change the value.
  std::vector<double> fv(600);
  for (auto& x : fv) x = 0.5 + 1.3 * rng.normal();
  const Tensor fake({100, 6}, fv);
  std::vector<double> perm;
  for (std::size_t r = 100; r-- > 0;)
    for (std::size_t c = 0; c < 6; ++c) perm.push_back(fv[r * 6 + c]);
  const double a = abs_metric(real, fake, 2);
  CHECK(a > 0.0);
  CHECK(abs_metric(real, Tensor({100, 6}, perm), 2) == a);

  CHECK_THROWS_AS(abs_metric(Tensor({2, 1}, {1.0, 1.0}), middle, 1), NumericalError);
  CHECK_THROWS_AS(abs_metric(extremes, middle, 1, 1), ConfigError);
}

TEST_CASE("acf metric") {
  const Tensor ar = as_single_path(
      data::simulate_var(data::VarSpec{.d = 1, .phi = 0.8, .sigma = 0.0, .length = 100000}, 3));
  CHECK(acf_metric(ar, ar, 1) == 0.0);
  const Tensor wn = white_noise(100000, 4);
  CHECK(std::abs(acf_metric(ar, wn, 1, 1) - 0.8) < 0.02);
  // Repeated evaluation is bit-identical.
  CHECK(acf_metric(ar, wn, 1, 3) == acf_metric(ar, wn, 1, 3));
  CHECK_THROWS_AS(acf_metric(ar, wn, 1, 0), ConfigError);
  CHECK_THROWS_AS(acf_metric(Tensor({1, 3}, {1, 1, 1}), wn, 1), NumericalError);
}

TEST_CASE("corr metric") {
  // Zero sample correlation against a perfectly correlated pair.
  const Tensor real({1, 8}, {1, 1, -1, 1, 1, -1, -1, -1});
  const Tensor fake({1, 8}, {1, 1, -1, -1, 1, 1, -1, -1});
  CHECK(corr_metric(real, real, 2) == 0.0);
  CHECK(corr_metric(real, fake, 2) == doctest::Approx(0.5));
  CHECK(corr_metric(fake, real, 2) == corr_metric(real, fake, 2));
  CHECK_THROWS_AS(corr_metric(real, fake, 1), ConfigError);
}

TEST_CASE("r2 relative error") {
  const std::size_t p = 3, q = 3;
  const Tensor path =
      data::simulate_var(data::VarSpec{.d = 2, .phi = 0.8, .sigma = 0.5, .length = 10000}, 5);
  const auto w = data::window(path, p, q);
  const Tensor real = w.joined();
  CHECK(r2_relative_error(real, real, 2, p).relative_error == 0.0);

  // Futures replaced by independent noise: the synthetic model learns
  // nothing, so R2_tstr is about 0.
  Rng rng(6);
  std::vector<double> noisy = real.to_vector();
  for (std::size_t r = 0; r < real.rows(); ++r)
    for (std::size_t k = p * 2; k < real.cols(); ++k) noisy[r * real.cols() + k] = rng.normal();
  const auto res = r2_relative_error(real, Tensor(real.shape(), noisy), 2, p);
  CHECK(res.trtr > 0.3);
  CHECK(std::abs(res.relative_error - 1.0) < 0.1);

  // Noiseless AR path: train-on-real fits exactly.
  std::vector<double> det(60);
  det[0] = 1.0;
  for (std::size_t t = 1; t < det.size(); ++t) det[t] = 0.8 * det[t - 1];
  // Vary the scale across windows so the regression is well posed.
  std::vector<double> rows;
  Rng scale(7);
  for (int n = 0; n < 50; ++n) {
    const double s = scale.uniform(-2, 2);
    for (std::size_t t = 0; t < 6; ++t) rows.push_back(s * det[t]);
  }
  const Tensor lin({50, 6}, rows);
  CHECK(r2_relative_error(lin, lin, 1, p).trtr == doctest::Approx(1.0));

  CHECK_THROWS_AS(r2_relative_error(real, Tensor({2, 6}, std::vector<double>(12)), 2, p),
                  ShapeError);
}

TEST_CASE("full report is zero on identical inputs") {
  const Tensor path =
      data::simulate_var(data::VarSpec{.d = 3, .phi = 0.5, .sigma = 0.3, .length = 3000}, 8);
  const Tensor real = data::window(path, 3, 3).joined();
  const auto r = ts_metrics(real, real, 3, 3);
  CHECK(r.abs_metric == 0.0);
  CHECK(r.acf_metric == 0.0);
  CHECK(*r.corr_metric == 0.0);
  CHECK(r.r2_relative_error == 0.0);
  const auto j = to_json(r);
  for (auto key : {"abs", "acf", "corr", "r2_rel_err"}) CHECK(j.contains(key));
  const Tensor one = data::window(
      data::simulate_var(data::VarSpec{.d = 1, .length = 500}, 9), 3, 3).joined();
  CHECK(!to_json(ts_metrics(one, one, 1, 3)).contains("corr"));
}
