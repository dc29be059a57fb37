#include <cmath>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "mcgan/diracdyn.hpp"
#include "mcgan/error.hpp"
#include "mcgan/metrics.hpp"
#include "mcgan/trainer.hpp"

using namespace mcgan;
using namespace mcgan::trainer;
using ndgrad::Tensor;

namespace {

struct Toy {
  Rng init;
  models::ConditionalGenerator gen;
  models::MlpDiscriminator disc;
  explicit Toy(std::uint64_t seed)
      : init(seed, "init"),
        gen(0, 2, 2, {16}, models::Activation::relu, init),
        disc(2, 0, {16}, models::Activation::relu, models::Activation::identity, init) {}
};

TensorDataSource blob_source(std::uint64_t seed) {
  Rng rng(seed, "blob");
  return TensorDataSource(losses::normal_noise(rng, 200, 2) * 0.3 + 1.0);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.iterations = 30;
  cfg.disc_steps_per_gen = 2;
  cfg.batch_size = 16;
  cfg.loss.variant = losses::Variant::hinge;
  cfg.gen_loss = GenLossKind::mcgan;
  cfg.regression.mc_size = 4;
  cfg.log_every = 10;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("smoke run on a constant dataset") {
  Rng init(0, "init");
  models::AffineGenerator gen(0, 1, 1, true, init);
  models::LinearDiscriminator disc(1, true, init);
  TensorDataSource data(Tensor::filled({1, 1}, 0.5));
  TrainConfig cfg;
  cfg.iterations = 1;
  cfg.disc_steps_per_gen = 1;
  cfg.batch_size = 1;
  cfg.loss.from_logits = true;
  const RunLog log = train(gen, disc, data, cfg);
  REQUIRE(log.rows.size() == 1);
  CHECK(log.rows[0].step == 1);
}

TEST_CASE("config and data validation") {
  CHECK_THROWS_AS(TensorDataSource(Tensor({0, 2}, {})), ConfigError);
  CHECK_THROWS_AS(TensorDataSource(Tensor::zeros({3, 1}), Tensor::zeros({2, 1})), ShapeError);
  TrainConfig cfg;
  cfg.disc_steps_per_gen = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.log_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.loss.variant = losses::Variant::mcgan;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("same seed gives identical logs and parameters") {
  const auto data = blob_source(1);
  const auto cfg = small_config();
  Toy a(3), b(3);
  const RunLog la = train(a.gen, a.disc, data, cfg);
  const RunLog lb = train(b.gen, b.disc, data, cfg);
  REQUIRE(la.rows.size() == 3);
  REQUIRE(la.rows.size() == lb.rows.size());
  for (std::size_t i = 0; i < la.rows.size(); ++i) {
    CHECK(la.rows[i].step == lb.rows[i].step);
    CHECK(la.rows[i].loss_d == lb.rows[i].loss_d);
    CHECK(la.rows[i].loss_g == lb.rows[i].loss_g);
    CHECK(la.rows[i].mean_discrepancy == lb.rows[i].mean_discrepancy);
  }
  CHECK(models::checksum(a.gen.parameters()) == models::checksum(b.gen.parameters()));
  CHECK(models::checksum(a.disc.parameters()) == models::checksum(b.disc.parameters()));

  Toy c(3);
  auto other = cfg;
  other.seed = 6;
  train(c.gen, c.disc, data, other);
  CHECK(models::checksum(a.gen.parameters()) != models::checksum(c.gen.parameters()));
}

TEST_CASE("linear mcgan under SGD matches the Dirac recurrences") {
  for (double lr : {0.1, 0.05}) {
    Rng init(0, "init");
    models::AffineGenerator gen(0, 1, 1, false, init);
    models::LinearDiscriminator disc(1, false, init);
    gen.set_values(std::vector<Tensor>{Tensor::vector({1.0})});
    disc.set_values(std::vector<Tensor>{Tensor::matrix(1, 1, {1.0})});
    TensorDataSource data(Tensor::zeros({1, 1}));

    TrainConfig cfg;
    cfg.iterations = 300;
    cfg.disc_steps_per_gen = 1;
    cfg.batch_size = 1;
    cfg.loss.variant = losses::Variant::bce;
    cfg.loss.from_logits = true;
    cfg.gen_loss = GenLossKind::mcgan;
    cfg.regression.mc_size = 3;
    cfg.gen_optimizer = {OptimizerKind::sgd, {}, lr};
    cfg.disc_optimizer = {OptimizerKind::sgd, {}, lr};

    std::vector<dirac::DiracState> states;
    TrainHooks hooks;
    hooks.on_step = [&](std::size_t, const models::Generator& g,
                        const models::Discriminator& d) {
      states.push_back({g.parameters()[0].value[0], d.parameters()[0].value[0]});
    };
    train(gen, disc, data, cfg, hooks);

    dirac::DiracConfig dc;
    dc.variant = dirac::Variant::mcgan;
    dc.lr = lr;
    dc.c = 0.0;
    dc.steps = cfg.iterations;
    dc.init = {1.0, 1.0};
    dc.schedule = dirac::Schedule::alternating;
    const auto ref = dirac::trajectory(dc);
    REQUIRE(states.size() == cfg.iterations);
    double worst = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      worst = std::max(worst, std::abs(states[i].theta - ref[i + 1].theta));
      worst = std::max(worst, std::abs(states[i].phi - ref[i + 1].phi));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("generator step leaves the discriminator untouched") {
  const auto data = blob_source(2);
  for (auto kind : {GenLossKind::mcgan, GenLossKind::baseline}) {
    Toy t(4);
    auto cfg = small_config();
    cfg.gen_loss = kind;
    std::uint64_t before = 0;
    std::size_t checked = 0;
    TrainHooks hooks;
    hooks.on_batch = [&](std::size_t, const std::string& phase, const Batch&) {
      if (phase == "gen") before = models::checksum(t.disc.parameters());
    };
    hooks.on_step = [&](std::size_t, const models::Generator&, const models::Discriminator& d) {
      CHECK(models::checksum(d.parameters()) == before);
      ++checked;
    };
    train(t.gen, t.disc, data, cfg, hooks);
    CHECK(checked == cfg.iterations);
  }
}

TEST_CASE("frozen discriminator gives monotone regression descent") {
  Rng init(1, "init");
  models::AffineGenerator gen(0, 1, 1, false, init);
  models::LinearDiscriminator disc(1, true, init);
  disc.set_values(std::vector<Tensor>{Tensor::matrix(1, 1, {0.7}), Tensor::vector({0.2})});
  gen.set_values(std::vector<Tensor>{Tensor::vector({-3.0})});
  TensorDataSource data(Tensor::filled({4, 1}, 2.0));
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.batch_size = 4;
  cfg.loss.variant = losses::Variant::hinge;
  cfg.gen_loss = GenLossKind::mcgan;
  cfg.gen_optimizer = {OptimizerKind::sgd, {}, 0.3};
  cfg.disc_optimizer = {OptimizerKind::sgd, {}, 0.0};
  cfg.log_every = 1;
  const RunLog log = train(gen, disc, data, cfg);
  for (std::size_t i = 1; i < log.rows.size(); ++i)
    CHECK(log.rows[i].loss_g <= log.rows[i - 1].loss_g);
  CHECK(log.rows.back().loss_g < 1e-10);
  CHECK(gen.parameters()[0].value[0] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("loss variant does not shift the data stream") {
  const auto data = blob_source(3);
  auto collect = [&](losses::Variant v, GenLossKind g) {
    Toy t(8);
    auto cfg = small_config();
    cfg.loss.variant = v;
    cfg.gen_loss = g;
    std::vector<std::uint64_t> seen;
    TrainHooks hooks;
    hooks.on_batch = [&](std::size_t, const std::string&, const Batch& b) {
      std::vector<models::Parameter> p{{"x", b.x}};
      seen.push_back(models::checksum(p));
    };
    const RunLog log = train(t.gen, t.disc, data, cfg, hooks);
    return std::make_pair(seen, log.rows.back().loss_d);
  };
  const auto a = collect(losses::Variant::hinge, GenLossKind::mcgan);
  const auto b = collect(losses::Variant::lsgan, GenLossKind::mcgan);
  const auto c = collect(losses::Variant::hinge, GenLossKind::baseline);
  CHECK(a.first == b.first);
  CHECK(a.first == c.first);
  CHECK(a.second != b.second);
}

TEST_CASE("non-finite values abort with context") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto message = [](auto&& run) {
    try {
      run();
    } catch (const NumericalError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };

  // A NaN sample makes the least-squares loss itself NaN.
  Rng init(0, "init");
  models::AffineGenerator gen(0, 1, 1, true, init);
  models::LinearDiscriminator disc(1, true, init);
  TensorDataSource nan_data(Tensor::from_rows({{nan}}));
  auto cfg = small_config();
  cfg.loss.variant = losses::Variant::lsgan;
  const std::string loss_msg = message([&] { train(gen, disc, nan_data, cfg); });
  INFO(loss_msg);
  CHECK(loss_msg.find("loss_d") != std::string::npos);
  CHECK(loss_msg.find("step 1") != std::string::npos);

  // With relu layers the loss can stay finite while gradients do not.
  Toy t(1);
  TensorDataSource data(Tensor::from_rows({{nan, 1.0}, {0.0, 1.0}}));
  const std::string grad_msg = message([&] { train(t.gen, t.disc, data, small_config()); });
  INFO(grad_msg);
  CHECK(grad_msg.find("step 1") != std::string::npos);
  CHECK(grad_msg.find("disc.") != std::string::npos);
}

TEST_CASE("run log csv and snapshots") {
  const auto data = blob_source(4);
  Toy t(2);
  auto cfg = small_config();
  TrainHooks hooks;
  hooks.snapshot = [](std::size_t step, const models::Generator&) {
    return nlohmann::json{{"step", step}};
  };
  const RunLog log = train(t.gen, t.disc, data, cfg, hooks);
  for (std::size_t i = 1; i < log.rows.size(); ++i) CHECK(log.rows[i].step > log.rows[i - 1].step);
  REQUIRE(log.rows[0].metrics.has_value());
  CHECK((*log.rows[0].metrics)["step"] == 10);
  const auto path = std::filesystem::temp_directory_path() / "mcgan_runlog.csv";
  log.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,loss_d,loss_g,mean_discrepancy,wall_ms");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == log.rows.size());
  std::filesystem::remove(path);
}

TEST_CASE("evaluate hook") {
  Rng init(0, "init");
  models::AffineGenerator gen(0, 1, 1, false, init);
  gen.set_values(std::vector<Tensor>{Tensor::vector({0.25})});
  const Tensor real = Tensor::filled({50, 1}, 0.25);
  const std::vector<NamedMetric> set = {
      {"mean_gap",
       [](const Tensor& r, const Tensor& f) {
         return std::abs(ndgrad::mean(r).item() - ndgrad::mean(f).item());
       }},
      {"broken", [](const Tensor&, const Tensor&) -> double { throw NumericalError("boom"); }}};
  EvalConfig ec;
  ec.seed = 3;
  ec.real = real;
  ec.samples = 50;
  const auto r1 = evaluate_hook(gen, set, ec);
  CHECK(r1.values.at("mean_gap") == 0.0);
  CHECK(r1.errors.at("broken") == "boom");
  const auto r2 = evaluate_hook(gen, set, ec);
  CHECK(r1.to_json() == r2.to_json());

  ec.samples = 0;
  const auto empty = evaluate_hook(gen, set, ec);
  CHECK(empty.values.empty());
  CHECK(empty.errors.size() == 2);
  CHECK_THROWS_AS(evaluate_hook(gen, {}, ec), ConfigError);
}
