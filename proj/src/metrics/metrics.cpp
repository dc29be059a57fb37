#include "mcgan/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mcgan/error.hpp"

namespace mcgan::metrics {

std::vector<std::optional<std::size_t>> register_points(
    const std::vector<std::array<double, 2>>& centers, double std,
    const Tensor& points, double k) {
  if (centers.empty()) throw ConfigError("mode metrics: no centers");
  if (!(k > 0.0)) throw ConfigError("mode metrics: k must be > 0");
  if (points.rank() != 2 || points.cols() != 2) {
    throw ShapeError("mode metrics: points must be n x 2, got " +
                     ndgrad::shape_string(points.shape()));
  }
  const double radius2 = (k * std) * (k * std);
  std::vector<std::optional<std::size_t>> out(points.rows());
  for (std::size_t n = 0; n < points.rows(); ++n) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double dx = points.at(n, 0) - centers[c][0];
      const double dy = points.at(n, 1) - centers[c][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        arg = c;
      }
    }
    if (best <= radius2) out[n] = arg;
  }
  return out;
}

ModeReport mode_metrics(const std::vector<std::array<double, 2>>& centers,
                        double std, const Tensor& real, const Tensor& fake,
                        double k) {
  if (fake.rows() == 0 || fake.empty()) throw ShapeError("mode metrics: empty fake set");
  if (real.rows() == 0 || real.empty()) throw ShapeError("mode metrics: empty real set");
  const auto r = register_points(centers, std, real, k);
  const auto f = register_points(centers, std, fake, k);
  std::vector<double> p(centers.size(), 0.0), q(centers.size(), 0.0);
  for (const auto& a : r)
    if (a) p[*a] += 1.0;
  ModeReport rep;
  for (const auto& a : f) {
    if (a) {
      q[*a] += 1.0;
      ++rep.registered_points;
    }
  }
  for (double c : q) rep.registered_modes += c > 0 ? 1 : 0;
  const double nr = static_cast<double>(real.rows());
  const double nf = static_cast<double>(fake.rows());
  double tv = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) tv += std::abs(p[i] / nr - q[i] / nf);
  rep.tv_norm = 0.5 * tv;
  rep.tv_scaled = 100.0 * rep.tv_norm;
  return rep;
}

namespace {

struct PathShape {
  std::size_t n, length, d;
};

PathShape path_shape(const char* who, const Tensor& x, std::size_t d) {
  if (d == 0) throw ConfigError(std::string(who) + ": d must be >= 1");
  if (x.rank() != 2 || x.rows() == 0 || x.cols() == 0 || x.cols() % d != 0) {
    throw ShapeError(std::string(who) + ": paths must be N x (L*" + std::to_string(d) +
                     ") and nonempty, got " + ndgrad::shape_string(x.shape()));
  }
  return {x.rows(), x.cols() / d, d};
}

void same_dims(const char* who, const PathShape& a, const PathShape& b) {
  if (a.d != b.d) throw ShapeError(std::string(who) + ": dimension mismatch");
}

// Biased autocovariances at lags 0..max_lag for dimension i, pooled over paths.
std::vector<double> autocov(const Tensor& x, const PathShape& s, std::size_t i,
                            std::size_t max_lag) {
  const double count = static_cast<double>(s.n * s.length);
  double mean = 0.0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t t = 0; t < s.length; ++t) mean += x.at(n, t * s.d + i);
  mean /= count;
  std::vector<double> out(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t t = 0; t + k < s.length; ++t)
        acc += (x.at(n, t * s.d + i) - mean) * (x.at(n, (t + k) * s.d + i) - mean);
    out[k] = acc / count;
  }
  return out;
}

}  // namespace

double abs_metric(const Tensor& real, const Tensor& fake, std::size_t d,
                  std::size_t n_bins, std::vector<double>* per_dim) {
  const auto rs = path_shape("abs_metric", real, d);
  const auto fs = path_shape("abs_metric", fake, d);
  same_dims("abs_metric", rs, fs);
  if (n_bins < 2) throw ConfigError("abs_metric: n_bins must be >= 2");
  double total = 0.0;
  if (per_dim) per_dim->clear();
  for (std::size_t i = 0; i < d; ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t n = 0; n < rs.n; ++n)
      for (std::size_t t = 0; t < rs.length; ++t) {
        lo = std::min(lo, real.at(n, t * d + i));
        hi = std::max(hi, real.at(n, t * d + i));
      }
    if (!(hi > lo)) {
      throw NumericalError("abs_metric: real values of dimension " + std::to_string(i) +
                           " have zero range");
    }
    const double width = (hi - lo) / static_cast<double>(n_bins);
    auto bin = [&](double v) {
      const double pos = std::floor((v - lo) / width);
      if (!(pos > 0)) return std::size_t{0};
      return std::min(static_cast<std::size_t>(pos), n_bins - 1);
    };
    auto histogram = [&](const Tensor& x, const PathShape& s) {
      std::vector<double> h(n_bins, 0.0);
      for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t t = 0; t < s.length; ++t) h[bin(x.at(n, t * d + i))] += 1.0;
      const double count = static_cast<double>(s.n * s.length);
      for (auto& c : h) c /= count;
      return h;
    };
    const auto hr = histogram(real, rs);
    const auto hf = histogram(fake, fs);
    // |pdf_r - pdf_f| * width with pdf = count / (total * width).
    double dist = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) dist += std::abs(hr[b] - hf[b]);
    if (per_dim) per_dim->push_back(dist);
    total += dist;
  }
  return total / static_cast<double>(d);
}

std::vector<double> autocorrelation(const Tensor& paths, std::size_t d,
                                    std::size_t lag) {
  const auto s = path_shape("autocorrelation", paths, d);
  if (s.length <= lag) throw ConfigError("autocorrelation: path length must exceed the lag");
  std::vector<double> out;
  for (std::size_t i = 0; i < d; ++i) {
    const auto c = autocov(paths, s, i, lag);
    if (!(c[0] > 0.0)) {
      throw NumericalError("autocorrelation: dimension " + std::to_string(i) +
                           " has zero variance");
    }
    out.push_back(c[lag] / c[0]);
  }
  return out;
}

double acf_metric(const Tensor& real, const Tensor& fake, std::size_t d,
                  std::size_t max_lag, std::vector<double>* per_dim) {
  const auto rs = path_shape("acf_metric", real, d);
  const auto fs = path_shape("acf_metric", fake, d);
  same_dims("acf_metric", rs, fs);
  if (max_lag < 1) throw ConfigError("acf_metric: max_lag must be >= 1");
  if (rs.length <= max_lag || fs.length <= max_lag) {
    throw ConfigError("acf_metric: path length must exceed max_lag");
  }
  double total = 0.0;
  if (per_dim) per_dim->clear();
  for (std::size_t i = 0; i < d; ++i) {
    const auto cr = autocov(real, rs, i, max_lag);
    const auto cf = autocov(fake, fs, i, max_lag);
    if (!(cr[0] > 0.0) || !(cf[0] > 0.0)) {
      throw NumericalError("acf_metric: dimension " + std::to_string(i) +
                           " has zero variance");
    }
    double dim_total = 0.0;
    for (std::size_t k = 1; k <= max_lag; ++k)
      dim_total += std::abs(cr[k] / cr[0] - cf[k] / cf[0]);
    if (per_dim) per_dim->push_back(dim_total / static_cast<double>(max_lag));
    total += dim_total;
  }
  return total / static_cast<double>(d * max_lag);
}

std::vector<double> correlation_matrix(const Tensor& paths, std::size_t d) {
  const auto s = path_shape("correlation", paths, d);
  const double count = static_cast<double>(s.n * s.length);
  std::vector<double> mean(d, 0.0), cov(d * d, 0.0);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t t = 0; t < s.length; ++t)
      for (std::size_t i = 0; i < d; ++i) mean[i] += paths.at(n, t * d + i);
  for (auto& m : mean) m /= count;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t t = 0; t < s.length; ++t)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          cov[i * d + j] += (paths.at(n, t * d + i) - mean[i]) * (paths.at(n, t * d + j) - mean[j]);
  for (std::size_t i = 0; i < d; ++i) {
    if (!(cov[i * d + i] > 0.0)) {
      throw NumericalError("correlation: dimension " + std::to_string(i) + " has zero variance");
    }
  }
  std::vector<double> corr(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      corr[i * d + j] = i == j ? 1.0 : cov[i * d + j] / std::sqrt(cov[i * d + i] * cov[j * d + j]);
  return corr;
}

double corr_metric(const Tensor& real, const Tensor& fake, std::size_t d) {
  if (d < 2) throw ConfigError("corr_metric: needs d >= 2");
  same_dims("corr_metric", path_shape("corr_metric", real, d), path_shape("corr_metric", fake, d));
  const auto a = correlation_matrix(real, d);
  const auto b = correlation_matrix(fake, d);
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) total += std::abs(a[k] - b[k]);
  return total / static_cast<double>(d * d);
}

namespace {

struct Regression {
  Eigen::MatrixXd x;  // samples x (p*d + 1)
  Eigen::MatrixXd y;  // samples x d
};

Regression regression_rows(const Tensor& paths, const PathShape& s, std::size_t p,
                           std::size_t from, std::size_t to) {
  const std::size_t per = s.length - p;
  const auto rows = static_cast<Eigen::Index>((to - from) * per);
  Regression r{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(p * s.d + 1)),
               Eigen::MatrixXd(rows, static_cast<Eigen::Index>(s.d))};
  Eigen::Index row = 0;
  for (std::size_t n = from; n < to; ++n) {
    for (std::size_t t = p; t < s.length; ++t, ++row) {
      for (std::size_t k = 0; k < p * s.d; ++k)
        r.x(row, static_cast<Eigen::Index>(k)) = paths.at(n, (t - p) * s.d + k);
      r.x(row, static_cast<Eigen::Index>(p * s.d)) = 1.0;
      for (std::size_t i = 0; i < s.d; ++i)
        r.y(row, static_cast<Eigen::Index>(i)) = paths.at(n, t * s.d + i);
    }
  }
  return r;
}

// Mean over output dimensions of 1 - SSE/SST.
double r_squared(const Eigen::MatrixXd& coef, const Regression& test) {
  const Eigen::MatrixXd pred = test.x * coef;
  double total = 0.0;
  for (Eigen::Index i = 0; i < test.y.cols(); ++i) {
    const double mean = test.y.col(i).mean();
    const double sse = (test.y.col(i) - pred.col(i)).squaredNorm();
    const double sst = (test.y.col(i).array() - mean).square().sum();
    if (!(sst > 0.0)) throw NumericalError("r2: held-out targets have zero variance");
    total += 1.0 - sse / sst;
  }
  return total / static_cast<double>(test.y.cols());
}

Eigen::MatrixXd least_squares(const Regression& train) {
  return train.x.colPivHouseholderQr().solve(train.y);
}

}  // namespace

R2Result r2_relative_error(const Tensor& real, const Tensor& fake, std::size_t d,
                           std::size_t p, double train_fraction) {
  const auto rs = path_shape("r2", real, d);
  const auto fs = path_shape("r2", fake, d);
  if (rs.length != fs.length || rs.d != fs.d) {
    throw ShapeError("r2: real and fake windows differ in shape");
  }
  if (p < 1 || rs.length <= p) throw ConfigError("r2: need 1 <= p < window length");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("r2: train_fraction must lie in (0,1)");
  }
  const auto split = static_cast<std::size_t>(train_fraction * static_cast<double>(rs.n));
  if (split == 0 || split >= rs.n) throw ConfigError("r2: too few real windows to split");
  const std::size_t fake_split =
      std::min(fs.n, static_cast<std::size_t>(train_fraction * static_cast<double>(fs.n)));
  if (fake_split == 0) throw ConfigError("r2: too few fake windows");
  const auto test = regression_rows(real, rs, p, split, rs.n);
  R2Result r;
  r.trtr = r_squared(least_squares(regression_rows(real, rs, p, 0, split)), test);
  r.tstr = r_squared(least_squares(regression_rows(fake, fs, p, 0, fake_split)), test);
  if (!(r.trtr > 0.0)) {
    throw NumericalError("r2: train-on-real R^2 = " + std::to_string(r.trtr) +
                         " <= 0; the regression task is uninformative");
  }
  r.relative_error = std::abs(r.trtr - r.tstr) / std::abs(r.trtr);
  return r;
}

Tensor transform(const Tensor& paths, const std::function<double(double)>& f) {
  auto v = paths.to_vector();
  for (auto& x : v) x = f(x);
  return Tensor(paths.shape(), std::move(v));
}

TsMetricReport ts_metrics(const Tensor& real, const Tensor& fake, std::size_t d,
                          std::size_t p, std::size_t max_lag, std::size_t n_bins) {
  TsMetricReport r;
  r.abs_metric = abs_metric(real, fake, d, n_bins, &r.abs_per_dim);
  r.acf_metric = acf_metric(real, fake, d, max_lag, &r.acf_per_dim);
  if (d > 1) r.corr_metric = corr_metric(real, fake, d);
  r.r2_relative_error = r2_relative_error(real, fake, d, p).relative_error;
  return r;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["values"] = values;
  j["errors"] = errors;
  return j;
}

nlohmann::json to_json(const ModeReport& r) {
  return {{"modes", r.registered_modes},
          {"points", r.registered_points},
          {"tv_norm", r.tv_norm},
          {"tv_scaled", r.tv_scaled}};
}

nlohmann::json to_json(const TsMetricReport& r) {
  nlohmann::json j = {{"abs", r.abs_metric},
                      {"acf", r.acf_metric},
                      {"r2_rel_err", r.r2_relative_error},
                      {"abs_per_dim", r.abs_per_dim},
                      {"acf_per_dim", r.acf_per_dim}};
  if (r.corr_metric) j["corr"] = *r.corr_metric;
  return j;
}

}  // namespace mcgan::metrics
