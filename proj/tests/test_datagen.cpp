#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "mcgan/datagen.hpp"
#include "mcgan/error.hpp"

using namespace mcgan;
using namespace mcgan::data;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto dir = std::filesystem::temp_directory_path() / "mcgan_datagen_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

double column_mean(const Tensor& x, std::size_t c, std::size_t from, std::size_t to) {
  double s = 0;
  for (std::size_t r = from; r < to; ++r) s += x.at(r, c);
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("grid lattice and sampling") {
  GaussianGridSpec spec;
  spec.spacing = 3.0;
  const auto centers = grid_centers(spec);
  REQUIRE(centers.size() == 25);
  CHECK(centers.front() == std::array<double, 2>{-6, -6});
  CHECK(centers.back() == std::array<double, 2>{6, 6});
  double sx = 0, sy = 0;
  for (auto c : centers) {
    sx += c[0];
    sy += c[1];
  }
  CHECK(sx == 0.0);
  CHECK(sy == 0.0);

  spec.std = 0.0;
  const auto exact = sample_gaussian_grid(spec, 1);
  for (std::size_t n = 0; n < spec.n_samples; ++n) {
    CHECK(exact.points.at(n, 0) == centers[exact.labels[n]][0]);
    CHECK(exact.points.at(n, 1) == centers[exact.labels[n]][1]);
  }

  spec.std = 0.01;
  const auto a = sample_gaussian_grid(spec, 2);
  const auto b = sample_gaussian_grid(spec, 2);
  CHECK(a.points.to_vector() == b.points.to_vector());
  std::vector<double> counts(25, 0);
  for (auto l : a.labels) counts[l] += 1;
  // Binomial(5000, 1/25): sd = sqrt(5000 * 0.04 * 0.96).
  const double sd = std::sqrt(5000 * 0.04 * 0.96);
  for (double c : counts) CHECK(std::abs(c - 200) < 5 * sd);
}

TEST_CASE("VAR(1) simulation") {
  SUBCASE("AR(1) autocorrelation and stationary variance") {
    VarSpec s{.d = 1, .phi = 0.8, .sigma = 0.0, .length = 100000};
    const Tensor x = simulate_var(s, 3);
    const double m = column_mean(x, 0, 0, s.length);
    double c0 = 0, c1 = 0;
    for (std::size_t t = 0; t < s.length; ++t) c0 += (x[t] - m) * (x[t] - m);
    for (std::size_t t = 1; t < s.length; ++t) c1 += (x[t] - m) * (x[t - 1] - m);
    CHECK(std::abs(c1 / c0 - 0.8) < 0.01);
    const double var = c0 / static_cast<double>(s.length);
    CHECK(std::abs(var - 1.0 / (1.0 - 0.64)) < 0.05 * 2.7778);
  }

  SUBCASE("phi = 0 gives equicorrelated white noise") {
    VarSpec s{.d = 3, .phi = 0.0, .sigma = 0.5, .length = 50000};
    const Tensor x = simulate_var(s, 4);
    double c01 = 0, c00 = 0;
    for (std::size_t t = 0; t < s.length; ++t) {
      c01 += x.at(t, 0) * x.at(t, 1);
      c00 += x.at(t, 0) * x.at(t, 0);
    }
    CHECK(std::abs(c00 / s.length - 1.0) < 0.03);
    CHECK(std::abs(c01 / s.length - 0.5) < 0.03);
    double lag = 0;
    for (std::size_t t = 1; t < s.length; ++t) lag += x.at(t, 0) * x.at(t - 1, 0);
    CHECK(std::abs(lag / s.length) < 0.03);
  }

  SUBCASE("stationarity sanity and reproducibility") {
    VarSpec s{.d = 2, .phi = 0.8, .sigma = 0.8, .length = 20000};
    const Tensor x = simulate_var(s, 5);
    CHECK(x.to_vector() == simulate_var(s, 5).to_vector());
    CHECK(x.to_vector() != simulate_var(s, 6).to_vector());
    // Long-run standard error of a half-sample mean for AR(1):
    // sqrt(var / n * (1 + phi) / (1 - phi)).
    const double half = s.length / 2.0;
    const double se = std::sqrt(2.7778 / half * 9.0);
    for (std::size_t c = 0; c < 2; ++c) {
      const double diff = column_mean(x, c, 0, s.length / 2) -
                          column_mean(x, c, s.length / 2, s.length);
      CHECK(std::abs(diff) < 5 * se * std::sqrt(2.0));
    }
  }

  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(simulate_var(VarSpec{.d = 2, .phi = 1.0}, 1), ConfigError);
    CHECK_THROWS_AS(simulate_var(VarSpec{.d = 3, .phi = 0.5, .sigma = -0.6}, 1),
                    NumericalError);
    CHECK_THROWS_AS(simulate_var(VarSpec{.d = 2, .phi = 0.5, .sigma = 1.0}, 1),
                    NumericalError);
  }
}

TEST_CASE("windowing") {
  std::vector<double> v(20);
  std::iota(v.begin(), v.end(), 0.0);
  const Tensor path({10, 2}, v);
  const auto w = window(path, 3, 3);
  CHECK(w.size() == 5);
  CHECK(window(Tensor({6, 2}, std::vector<double>(v.begin(), v.begin() + 12)), 3, 3).size() == 1);
  CHECK_THROWS_AS(window(Tensor({5, 2}, std::vector<double>(10)), 3, 3), ConfigError);
  const Tensor joined = w.joined();
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t k = 0; k < 12; ++k) CHECK(joined.at(i, k) == v[2 * i + k]);
  // Past ends where future starts.
  CHECK(w.past.at(0, 5) + 1 == w.future.at(0, 0));
}

TEST_CASE("csv ingestion") {
  const auto ok = temp_file("ok.csv", "date,close,volume\n1,10.5,3\n2,11,4\n3,12.25,5\n");
  const auto r = ingest_csv(ok, {"close"});
  CHECK(r.path.shape() == ndgrad::Shape{3, 1});
  CHECK(r.path.to_vector() == std::vector<double>{10.5, 11, 12.25});
  CHECK(r.dropped_count == 0);

  std::string body = "a,b\n";
  for (int i = 0; i < 10; ++i) body += std::to_string(i) + "," + (i == 4 ? "" : "1.5") + "\n";
  const auto gaps = ingest_csv(temp_file("gaps.csv", body));
  CHECK(gaps.path.rows() == 9);
  CHECK(gaps.dropped_count == 1);

  CHECK_THROWS_WITH_AS(ingest_csv(temp_file("bad.csv", "a,b\n1,2\n3,x7\n")),
                       doctest::Contains("row 3"), IoError);
  CHECK_THROWS_AS(ingest_csv(temp_file("empty.csv", "a\nNA\n")), IoError);
  CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv"), IoError);
  CHECK_THROWS_AS(ingest_csv(ok, {"open"}), IoError);

  const Tensor x = simulate_var(VarSpec{.d = 3, .length = 50}, 9);
  const auto out = std::filesystem::temp_directory_path() / "mcgan_datagen_test" / "rt.csv";
  export_csv(out, x, {"x0", "x1", "x2"});
  const auto back = ingest_csv(out);
  REQUIRE(back.path.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back.path[i] - x[i]) <= 1e-12);
  CHECK(back.columns == std::vector<std::string>{"x0", "x1", "x2"});
}

TEST_CASE("stock features") {
  CHECK_THROWS_AS(derive_stock_features(std::vector<double>(30, 5.0), 20), NumericalError);
  CHECK_THROWS_AS(derive_stock_features({1, 2, -1, 3}, 2), NumericalError);
  CHECK_THROWS_AS(derive_stock_features({1, 2, 3}, 3), ConfigError);

  const auto f = derive_stock_features({1.0, std::exp(1.0), std::exp(1.5)}, 2);
  REQUIRE(f.rows() == 1);
  CHECK(f.at(0, 0) == doctest::Approx(0.5));
  // Sample std of returns {1, 0.5}.
  CHECK(f.at(0, 1) == doctest::Approx(std::log(std::sqrt(0.125))));
  CHECK(std::log(std::exp(1.0) / 1.0) == doctest::Approx(1.0));

  const double sigma = 0.2, dt = 1.0 / 252;
  const auto prices = simulate_gbm(100, 0.05, sigma, dt, 5000, 11);
  const auto g = derive_stock_features(prices, 20);
  CHECK(g.rows() == prices.size() - 20);
  double mean_vol = 0;
  for (std::size_t r = 0; r < g.rows(); ++r) mean_vol += std::exp(g.at(r, 1));
  mean_vol /= static_cast<double>(g.rows());
  CHECK(std::abs(mean_vol / (sigma * std::sqrt(dt)) - 1.0) < 0.15);
}
