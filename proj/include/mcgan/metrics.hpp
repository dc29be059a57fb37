#pragma once

// Mode coverage metrics for the 2-D grid and the time-series metric suite.
//
// Time-series inputs are path batches: an N x (L*d) tensor whose rows are
// paths of L steps of d values, flattened time-major.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcgan/ndgrad.hpp"

namespace mcgan::metrics {

using ndgrad::Tensor;

struct ModeReport {
  std::size_t registered_modes = 0;
  std::size_t registered_points = 0;
  /// 0.5 * sum_i |p_i - q_i| over mode frequencies, in [0, 1].
  double tv_norm = 0.0;
  /// tv_norm * 100.
  double tv_scaled = 0.0;
};

/// Points are n x 2. A point is registered when its nearest center lies
/// within k * std. Frequencies count registered points per mode divided by
/// the total number of points in the set.
ModeReport mode_metrics(const std::vector<std::array<double, 2>>& centers,
                        double std, const Tensor& real, const Tensor& fake,
                        double k = 3.0);

/// Nearest-center index for each point, or nullopt when not registered.
std::vector<std::optional<std::size_t>> register_points(
    const std::vector<std::array<double, 2>>& centers, double std,
    const Tensor& points, double k = 3.0);

struct TsMetricReport {
  double abs_metric = 0.0;
  double acf_metric = 0.0;
  std::optional<double> corr_metric;  // d > 1 only
  double r2_relative_error = 0.0;
  std::vector<double> abs_per_dim;
  std::vector<double> acf_per_dim;
};

/// Histogram L1 distance per dimension on n_bins bins spanning the real
/// range, averaged over dimensions. Fake values outside the range fall in
/// the edge bins.
double abs_metric(const Tensor& real, const Tensor& fake, std::size_t d,
                  std::size_t n_bins = 50,
                  std::vector<double>* per_dim = nullptr);

/// (1/(d tau)) sum_{k=1..tau} sum_i |rho_r^i(k)/rho_r^i(0) - rho_f^i(k)/rho_f^i(0)|
/// with the biased autocovariance pooled over paths.
double acf_metric(const Tensor& real, const Tensor& fake, std::size_t d,
                  std::size_t max_lag = 1,
                  std::vector<double>* per_dim = nullptr);

/// (1/d^2) sum_{i,j} |corr_r(i,j) - corr_f(i,j)| of contemporaneous values.
double corr_metric(const Tensor& real, const Tensor& fake, std::size_t d);

/// Pearson correlation matrix (d x d, row-major) over all path steps.
std::vector<double> correlation_matrix(const Tensor& paths, std::size_t d);

/// Lag-k autocorrelation rho(k)/rho(0) per dimension.
std::vector<double> autocorrelation(const Tensor& paths, std::size_t d,
                                    std::size_t lag);

struct R2Result {
  double trtr = 0.0;
  double tstr = 0.0;
  double relative_error = 0.0;
};

/// OLS next-step regression on p lags (+ intercept). Samples are every
/// step t >= p of each window. Real and fake windows are split at the same
/// index (train_fraction); both models are scored on the held-out real
/// windows. Returns |R2_trtr - R2_tstr| / |R2_trtr|.
R2Result r2_relative_error(const Tensor& real, const Tensor& fake,
                           std::size_t d, std::size_t p,
                           double train_fraction = 0.8);

/// Applies f to every value.
Tensor transform(const Tensor& paths, const std::function<double(double)>& f);

/// Full report on paths of length (p + q).
TsMetricReport ts_metrics(const Tensor& real, const Tensor& fake, std::size_t d,
                          std::size_t p, std::size_t max_lag = 1,
                          std::size_t n_bins = 50);

/// Named scalars with run metadata. Metric failures are kept per metric.
struct MetricReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<std::string, double> values;
  std::map<std::string, std::string> errors;
  nlohmann::json to_json() const;
};

nlohmann::json to_json(const ModeReport& r);
nlohmann::json to_json(const TsMetricReport& r);

}  // namespace mcgan::metrics
