// mcgan_lab: runs the desk-scale experiments and the theory checks, writing
// CSV/JSON artifacts under <out-dir>/<subcommand>/<seed>/.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
// 3 failed check.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcgan/error.hpp"
#include "mcgan/experiments.hpp"
#include "mcgan/runtime.hpp"
#include "mcgan/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mcgan;

namespace {

constexpr int kUsage = 1;
constexpr int kNumerical = 2;
constexpr int kCheckFailed = 3;

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand. Values from --config fill in anything
// not given on the command line.
struct Common {
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  std::size_t jobs = 1;
  std::string out_dir = "runs";
  std::string config;
};

class Resolver {
 public:
  Resolver(CLI::App* app, const std::string& config_path) : app_(app) {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot read config file " + config_path);
    try {
      in >> file_;
    } catch (const json::exception& e) {
      throw ConfigError("config file " + config_path + ": " + e.what());
    }
    if (!file_.is_object()) throw ConfigError("config file must hold a JSON object");
  }

  // Flag value if given, else the config entry (same name, dashes or
  // underscores), else the current default.
  template <typename T>
  void apply(const std::string& flag, T& value) const {
    if (app_->count("--" + flag) > 0) return;
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    for (const auto& k : {flag, key}) {
      if (file_.contains(k)) {
        try {
          value = file_.at(k).template get<T>();
        } catch (const json::exception& e) {
          throw ConfigError("config key '" + k + "': " + e.what());
        }
        return;
      }
    }
  }

 private:
  CLI::App* app_;
  json file_ = json::object();
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path run_dir(const Common& c, const std::string& sub, std::uint64_t seed) {
  fs::path p = fs::path(c.out_dir) / sub / std::to_string(seed);
  fs::create_directories(p);
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::uint64_t> seeds_of(const Common& c) {
  if (c.repeats == 0) throw ConfigError("--repeats must be >= 1");
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < c.repeats; ++i) s.push_back(c.seed + i);
  return s;
}

// Runs fn(seed) for every seed with at most `jobs` in flight; results keep
// seed order.
template <typename Fn>
auto run_seeds(const Common& c, Fn fn) {
  using R = decltype(fn(std::uint64_t{}));
  const auto seeds = seeds_of(c);
  std::vector<R> out;
  const std::size_t jobs = std::max<std::size_t>(1, c.jobs);
  for (std::size_t i = 0; i < seeds.size(); i += jobs) {
    std::vector<std::future<R>> batch;
    for (std::size_t k = i; k < std::min(seeds.size(), i + jobs); ++k)
      batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, fn,
                                 seeds[k]));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

std::optional<losses::LeakyClamp> parse_clamp(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError("--clamp expects lb,ub,alpha; cannot parse '" + part + "'");
    }
  }
  if (v.size() != 3) throw ConfigError("--clamp expects three values lb,ub,alpha");
  losses::LeakyClamp c{v[0], v[1], v[2]};
  c.validate();
  return c;
}

// Loss names accepted on the command line; "gan" is the usual
// non-saturating vanilla GAN.
losses::Variant parse_loss(const std::string& name) {
  if (name == "gan") return losses::Variant::nsgan;
  return losses::parse_variant(name);
}

// ---------------------------------------------------------------------------

struct DiracFlags {
  double lr = 0.1;
  std::size_t steps = 5000;
  double theta0 = 1.0, phi0 = 1.0;
  std::string schedule = "simultaneous";
  double tol = 1e-3;
  double tail_fraction = 0.1;
};

int cmd_dirac(CLI::App* app, const Common& c, DiracFlags f) {
  Resolver r(app, c.config);
  r.apply("lr", f.lr);
  r.apply("steps", f.steps);
  r.apply("theta0", f.theta0);
  r.apply("phi0", f.phi0);
  r.apply("schedule", f.schedule);
  r.apply("tol", f.tol);
  r.apply("tail-fraction", f.tail_fraction);
  experiments::DiracExperimentConfig cfg;
  cfg.lr = f.lr;
  cfg.steps = f.steps;
  cfg.init = {f.theta0, f.phi0};
  cfg.schedule = f.schedule == "alternating" ? dirac::Schedule::alternating
                 : f.schedule == "simultaneous"
                     ? dirac::Schedule::simultaneous
                     : throw ConfigError("--schedule must be simultaneous or alternating");
  cfg.tol = f.tol;
  cfg.tail_fraction = f.tail_fraction;

  const auto t0 = std::chrono::steady_clock::now();
  const auto results = experiments::run_dirac(cfg);
  const double elapsed = seconds_since(t0);
  // The dynamics are deterministic; the seed only names the output folder.
  const fs::path dir = run_dir(c, "dirac", c.seed);
  for (const auto& res : results)
    dirac::write_trajectory_csv(dir / (dirac::to_string(res.variant) + ".csv"), res.trajectory);
  json resolved = cfg.to_json();
  resolved["seed"] = c.seed;
  write_json(dir / "config.resolved.json", resolved);
  const json summary = experiments::dirac_summary(results);
  write_json(dir / "summary.json", summary);
  write_json(dir / "timing.json", {{"seconds", elapsed}});
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string loss;
  std::size_t mc_size = 10;
  std::size_t steps = 0;
  std::string clamp;
  double lr = 0.0;
};

struct Toy2dFlags : TrainFlags {
  std::string disc_loss = "bce";
  std::size_t eval_samples = 5000;
  double k = 3.0;
};

int cmd_toy2d(CLI::App* app, const Common& common, Toy2dFlags f) {
  Common c = common;
  Resolver r(app, c.config);
  r.apply("seed", c.seed);
  r.apply("repeats", c.repeats);
  experiments::Toy2dConfig base;
  r.apply("loss", f.loss);
  r.apply("disc-loss", f.disc_loss);
  r.apply("mc-size", f.mc_size);
  r.apply("steps", f.steps);
  r.apply("clamp", f.clamp);
  r.apply("lr", f.lr);
  r.apply("eval-samples", f.eval_samples);
  r.apply("k", f.k);
  base.loss = parse_loss(f.loss);
  base.disc_loss = parse_loss(f.disc_loss);
  base.mc_size = f.mc_size;
  base.iterations = f.steps;
  base.clamp = parse_clamp(f.clamp);
  base.adam.learning_rate = f.lr;
  base.eval_samples = f.eval_samples;
  base.k = f.k;

  const auto t0 = std::chrono::steady_clock::now();
  json timing = json::object();
  const auto runs = run_seeds(c, [&](std::uint64_t seed) {
    auto cfg = base;
    cfg.seed = seed;
    const auto ts = std::chrono::steady_clock::now();
    auto res = experiments::run_toy2d(cfg);
    const double secs = seconds_since(ts);
    return std::make_pair(std::move(res), secs);
  });
  std::vector<experiments::Toy2dResult> results;
  for (const auto& [res, secs] : runs) {
    auto cfg = base;
    cfg.seed = res.seed;
    const fs::path dir = run_dir(c, "toy2d", res.seed);
    write_json(dir / "config.resolved.json", cfg.to_json());
    json report = res.completed ? metrics::to_json(res.report) : json{{"error", res.error}};
    report["seed"] = res.seed;
    write_json(dir / "report.json", report);
    if (res.completed) {
      data::export_csv(dir / "samples.csv", res.fake, {"x", "y"});
      res.log.write_csv(dir / "runlog.csv");
    }
    write_json(dir / "timing.json", {{"seconds", secs}});
    timing[std::to_string(res.seed)] = secs;
    results.push_back(res);
  }
  json agg = experiments::toy2d_aggregate(results);
  agg["seeds"] = seeds_of(c);
  const fs::path top = fs::path(c.out_dir) / "toy2d";
  json resolved = base.to_json();
  resolved["seed"] = c.seed;
  resolved["repeats"] = c.repeats;
  write_json(top / "config.resolved.json", resolved);
  write_json(top / "aggregate.json", agg);
  timing["total"] = seconds_since(t0);
  write_json(top / "timing.json", timing);
  std::cout << agg.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct VarFlags : TrainFlags {
  std::size_t d = 2;
  double phi = 0.8;
  double sigma = 0.8;
  std::size_t length = 4000;
  std::size_t test_length = 4000;
};

void apply_train_flags(const Resolver& r, TrainFlags& f,
                       experiments::TsTrainConfig& t) {
  r.apply("loss", f.loss);
  r.apply("mc-size", f.mc_size);
  r.apply("steps", f.steps);
  r.apply("clamp", f.clamp);
  r.apply("lr", f.lr);
  t.loss = parse_loss(f.loss);
  t.mc_size = f.mc_size;
  t.iterations = f.steps;
  t.clamp = parse_clamp(f.clamp);
  t.adam.learning_rate = f.lr;
}

json ts_method_json(const experiments::TsMethodResult& m) { return metrics::to_json(m.report); }

int cmd_var(CLI::App* app, const Common& common, VarFlags f) {
  Common c = common;
  Resolver r(app, c.config);
  r.apply("seed", c.seed);
  r.apply("repeats", c.repeats);
  experiments::VarExperimentConfig base;
  apply_train_flags(r, f, base.train);
  r.apply("d", f.d);
  r.apply("phi", f.phi);
  r.apply("sigma", f.sigma);
  r.apply("length", f.length);
  r.apply("test-length", f.test_length);
  base.var.d = f.d;
  base.var.phi = f.phi;
  base.var.sigma = f.sigma;
  base.var.length = f.length;
  base.test_length = f.test_length;
  base.var.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = run_seeds(c, [&](std::uint64_t seed) {
    auto cfg = base;
    cfg.seed = seed;
    const auto ts = std::chrono::steady_clock::now();
    auto res = experiments::run_var(cfg);
    return std::make_tuple(seed, std::move(res), seconds_since(ts));
  });
  json all = json::object();
  json timing = json::object();
  for (const auto& [seed, res, secs] : runs) {
    auto cfg = base;
    cfg.seed = seed;
    const fs::path dir = run_dir(c, "var", seed);
    write_json(dir / "config.resolved.json", cfg.to_json());
    const json report{{"rcgan", ts_method_json(res.rcgan)},
                      {"mcgan", ts_method_json(res.mcgan)},
                      {"control", metrics::to_json(res.control)},
                      {"seed", seed}};
    write_json(dir / "report.json", report);
    res.rcgan.log.write_csv(dir / "runlog_rcgan.csv");
    res.mcgan.log.write_csv(dir / "runlog_mcgan.csv");
    write_json(dir / "timing.json", {{"seconds", secs}});
    all[std::to_string(seed)] = report;
    timing[std::to_string(seed)] = secs;
  }
  const fs::path top = fs::path(c.out_dir) / "var";
  json resolved = base.to_json();
  resolved["seed"] = c.seed;
  resolved["repeats"] = c.repeats;
  write_json(top / "config.resolved.json", resolved);
  write_json(top / "summary.json", all);
  timing["total"] = seconds_since(t0);
  write_json(top / "timing.json", timing);
  std::cout << all.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TsgenFlags : TrainFlags {
  std::string csv;
  std::string price_column = "price";
  std::vector<std::string> columns;
  std::size_t vol_window = 20;
  bool bypass = false;
  std::size_t synthetic_gbm = 0;
};

int cmd_tsgen(CLI::App* app, const Common& common, TsgenFlags f) {
  Common c = common;
  Resolver r(app, c.config);
  r.apply("seed", c.seed);
  experiments::TsgenConfig cfg;
  apply_train_flags(r, f, cfg.train);
  r.apply("csv", f.csv);
  r.apply("price-column", f.price_column);
  r.apply("columns", f.columns);
  r.apply("vol-window", f.vol_window);
  r.apply("bypass", f.bypass);
  r.apply("synthetic-gbm", f.synthetic_gbm);

  const fs::path dir = fs::path(c.out_dir) / "tsgen" / std::to_string(c.seed);
  if (f.synthetic_gbm > 0) {
    // The synthetic input is itself an output of the run.
    fs::create_directories(dir);
    f.csv = (dir / "gbm.csv").string();
    experiments::write_gbm_csv(f.csv, f.synthetic_gbm, c.seed);
  }
  if (f.csv.empty()) throw ConfigError("tsgen needs --csv or --synthetic-gbm");
  cfg.csv = f.csv;
  cfg.price_column = f.columns.empty() ? f.price_column : "";
  cfg.columns = f.columns;
  cfg.vol_window = f.vol_window;
  cfg.bypass = f.bypass;
  cfg.seed = c.seed;

  const auto t0 = std::chrono::steady_clock::now();
  // Everything is computed before the first write so a failed run leaves
  // no partial outputs.
  const auto res = experiments::run_tsgen(cfg);
  const double secs = seconds_since(t0);
  fs::create_directories(dir);
  json resolved = cfg.to_json();
  resolved["synthetic_gbm"] = f.synthetic_gbm;
  write_json(dir / "config.resolved.json", resolved);
  const json report = experiments::to_json(res);
  write_json(dir / "report.json", report);
  const std::size_t d = res.feature_names.size();
  std::vector<std::string> cols;
  for (std::size_t t = 0; t < res.fake_paths.cols() / d; ++t)
    for (const auto& name : res.feature_names) cols.push_back(name + "_t" + std::to_string(t));
  data::export_csv(dir / "generated.csv", res.fake_paths, cols);
  if (!res.log.rows.empty()) res.log.write_csv(dir / "runlog.csv");
  write_json(dir / "timing.json", {{"seconds", secs}});
  std::cout << report.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TheoryFlags {
  double noise_scale = 0.1;
  std::uint64_t pair_seed = 0;
  std::size_t pairs = 100;
  std::size_t support = 10;
  std::size_t trials = 10000;
};

int cmd_theory(CLI::App* app, const Common& common, TheoryFlags f) {
  Common c = common;
  Resolver r(app, c.config);
  r.apply("seed", c.seed);
  r.apply("noise-scale", f.noise_scale);
  r.apply("pair-seed", f.pair_seed);
  r.apply("pairs", f.pairs);
  r.apply("support", f.support);
  r.apply("trials", f.trials);
  theory::SuiteConfig cfg{f.pair_seed, f.pairs, f.support, f.noise_scale, f.trials, c.seed};

  const auto t0 = std::chrono::steady_clock::now();
  const auto res = theory::run_suite(cfg);
  const double secs = seconds_since(t0);
  const fs::path dir = run_dir(c, "theory", c.seed);
  write_json(dir / "config.resolved.json", {{"seed", cfg.seed},
                                            {"pair_seed", cfg.pair_seed},
                                            {"pairs", cfg.pairs},
                                            {"support", cfg.support},
                                            {"noise_scale", cfg.noise_scale},
                                            {"trials", cfg.trials}});
  write_json(dir / "theory.json", res.report);
  write_json(dir / "timing.json", {{"seconds", secs}});
  std::cout << res.report.dump(2) << '\n';
  if (!res.all_pass) throw CheckFailure("theory: at least one check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  mcgan::tune_allocator();
  CLI::App app{"MCGAN lab: GAN training experiments and theory checks"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Base seed");
    sub->add_option("--repeats", common.repeats, "Number of consecutive seeds");
    sub->add_option("--jobs", common.jobs, "Seeds run concurrently");
    sub->add_option("--out-dir", common.out_dir, "Output root");
    sub->add_option("--config", common.config, "JSON config; flags override it");
  };
  // Defaults come from the library configs.
  auto add_train = [&](CLI::App* sub, TrainFlags& f, const std::string& loss,
                       std::size_t steps, double lr) {
    f.loss = loss;
    f.steps = steps;
    f.lr = lr;
    sub->add_option("--loss", f.loss, "bce|nsgan|gan|hinge|lsgan|wgan|energy|mcgan");
    sub->add_option("--mc-size", f.mc_size, "Monte Carlo size M");
    sub->add_option("--steps", f.steps, "Generator updates");
    sub->add_option("--clamp", f.clamp, "Leaky clamp lb,ub,alpha");
    sub->add_option("--lr", f.lr, "Adam learning rate");
  };

  DiracFlags dirac_f;
  auto* dirac_cmd = app.add_subcommand("dirac", "Dirac-GAN dynamics for all four variants");
  add_common(dirac_cmd);
  dirac_cmd->add_option("--lr", dirac_f.lr, "Step size");
  dirac_cmd->add_option("--steps", dirac_f.steps, "Number of updates");
  dirac_cmd->add_option("--theta0", dirac_f.theta0);
  dirac_cmd->add_option("--phi0", dirac_f.phi0);
  dirac_cmd->add_option("--schedule", dirac_f.schedule, "simultaneous|alternating");
  dirac_cmd->add_option("--tol", dirac_f.tol, "Convergence tolerance");
  dirac_cmd->add_option("--tail-fraction", dirac_f.tail_fraction);

  Toy2dFlags toy_f;
  auto* toy_cmd = app.add_subcommand("toy2d", "25-mode Gaussian grid");
  add_common(toy_cmd);
  const experiments::Toy2dConfig toy_defaults;
  add_train(toy_cmd, toy_f, "mcgan", toy_defaults.iterations,
            toy_defaults.adam.learning_rate);
  toy_cmd->add_option("--disc-loss", toy_f.disc_loss, "Discriminator loss used with mcgan");
  toy_cmd->add_option("--eval-samples", toy_f.eval_samples);
  toy_cmd->add_option("--k", toy_f.k, "Registration radius in standard deviations");

  VarFlags var_f;
  auto* var_cmd = app.add_subcommand("var", "RCGAN vs MCGAN on VAR(1) data");
  add_common(var_cmd);
  const experiments::TsTrainConfig ts_defaults;
  add_train(var_cmd, var_f, losses::to_string(ts_defaults.loss), ts_defaults.iterations,
            ts_defaults.adam.learning_rate);
  var_cmd->add_option("--d", var_f.d, "Dimension");
  var_cmd->add_option("--phi", var_f.phi, "Autoregressive coefficient");
  var_cmd->add_option("--sigma", var_f.sigma, "Noise correlation");
  var_cmd->add_option("--length", var_f.length, "Training path length");
  var_cmd->add_option("--test-length", var_f.test_length, "Test path length");

  TsgenFlags ts_f;
  auto* ts_cmd = app.add_subcommand("tsgen", "Conditional generation on CSV series");
  add_common(ts_cmd);
  add_train(ts_cmd, ts_f, losses::to_string(ts_defaults.loss), ts_defaults.iterations,
            ts_defaults.adam.learning_rate);
  ts_cmd->add_option("--csv", ts_f.csv, "Input CSV");
  ts_cmd->add_option("--price-column", ts_f.price_column);
  ts_cmd->add_option("--columns", ts_f.columns, "Use these columns as features directly");
  ts_cmd->add_option("--vol-window", ts_f.vol_window);
  ts_cmd->add_flag("--bypass", ts_f.bypass, "Evaluate real test windows against themselves");
  ts_cmd->add_option("--synthetic-gbm", ts_f.synthetic_gbm,
                     "Generate a GBM price CSV with this many steps and use it");

  TheoryFlags th_f;
  auto* th_cmd = app.add_subcommand("theory", "Numerical checks of the analytic results");
  add_common(th_cmd);
  th_cmd->add_option("--noise-scale", th_f.noise_scale);
  th_cmd->add_option("--pair-seed", th_f.pair_seed);
  th_cmd->add_option("--pairs", th_f.pairs);
  th_cmd->add_option("--support", th_f.support);
  th_cmd->add_option("--trials", th_f.trials);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (dirac_cmd->parsed()) return cmd_dirac(dirac_cmd, common, dirac_f);
    if (toy_cmd->parsed()) return cmd_toy2d(toy_cmd, common, toy_f);
    if (var_cmd->parsed()) return cmd_var(var_cmd, common, var_f);
    if (ts_cmd->parsed()) return cmd_tsgen(ts_cmd, common, ts_f);
    if (th_cmd->parsed()) return cmd_theory(th_cmd, common, th_f);
  } catch (const CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
