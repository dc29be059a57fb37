#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mcgan/error.hpp"
#include "mcgan/experiments.hpp"

using namespace mcgan;
using namespace mcgan::experiments;

TEST_CASE("summary drops std for a single value") {
  const auto one = summarize({2.0});
  CHECK(one.mean == 2.0);
  CHECK_FALSE(one.std.has_value());
  CHECK(to_json(one)["std"].is_null());
  const auto two = summarize({1.0, 3.0});
  CHECK(two.mean == 2.0);
  REQUIRE(two.std.has_value());
  CHECK(*two.std == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("dirac experiment reports every variant") {
  DiracExperimentConfig cfg;
  cfg.steps = 200;
  const auto results = run_dirac(cfg);
  CHECK(results.size() == 4);
  const auto s = dirac_summary(results);
  CHECK(s.contains("mcgan"));
  CHECK(s.contains("gan"));
}

TEST_CASE("toy2d is deterministic per seed") {
  Toy2dConfig cfg;
  cfg.iterations = 30;
  cfg.hidden = {16};
  cfg.eval_samples = 200;
  cfg.log_every = 10;
  cfg.seed = 3;
  const auto a = run_toy2d(cfg);
  const auto b = run_toy2d(cfg);
  REQUIRE(a.completed);
  CHECK(a.fake.to_vector() == b.fake.to_vector());
  CHECK(a.report.tv_norm == b.report.tv_norm);
  cfg.seed = 4;
  const auto c = run_toy2d(cfg);
  CHECK(a.fake.to_vector() != c.fake.to_vector());
  CHECK(cfg.to_json()["on_probability"] == true);
}

TEST_CASE("toy2d rejects an mcgan discriminator loss") {
  Toy2dConfig cfg;
  cfg.disc_loss = losses::Variant::mcgan;
  CHECK_THROWS_AS(run_toy2d(cfg), ConfigError);
}

TEST_CASE("var experiment trains both methods on shared data") {
  VarExperimentConfig cfg;
  cfg.var.length = 600;
  cfg.test_length = 600;
  cfg.train.iterations = 10;
  cfg.train.hidden = 8;
  cfg.train.mc_size = 2;
  const auto r = run_var(cfg);
  CHECK(std::isfinite(r.rcgan.report.abs_metric));
  CHECK(std::isfinite(r.mcgan.report.abs_metric));
  const auto again = run_var(cfg);
  CHECK(r.mcgan.report.abs_metric == again.mcgan.report.abs_metric);
}

TEST_CASE("tsgen bypass yields zero metrics and missing files fail") {
  const auto dir = std::filesystem::temp_directory_path() / "mcgan_test_tsgen";
  std::filesystem::create_directories(dir);
  TsgenConfig cfg;
  cfg.csv = dir / "gbm.csv";
  write_gbm_csv(cfg.csv, 400, 1);
  cfg.bypass = true;
  const auto r = run_tsgen(cfg);
  CHECK(r.report.abs_metric == 0.0);
  CHECK(r.report.acf_metric == 0.0);
  cfg.csv = dir / "missing.csv";
  CHECK_THROWS_AS(run_tsgen(cfg), IoError);
  std::filesystem::remove_all(dir);
}
