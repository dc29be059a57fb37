#include "mcgan/datagen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mcgan/error.hpp"
#include "mcgan/rng.hpp"

namespace mcgan::data {

std::vector<std::array<double, 2>> grid_centers(const GaussianGridSpec& spec) {
  std::vector<std::array<double, 2>> out;
  const double half = (static_cast<double>(spec.modes_per_side) - 1.0) / 2.0;
  for (std::size_t i = 0; i < spec.modes_per_side; ++i)
    for (std::size_t j = 0; j < spec.modes_per_side; ++j)
      out.push_back({(static_cast<double>(i) - half) * spec.spacing,
                     (static_cast<double>(j) - half) * spec.spacing});
  return out;
}

GridSample sample_gaussian_grid(const GaussianGridSpec& spec, std::uint64_t seed) {
  if (spec.n_samples < 1) throw ConfigError("grid: n_samples must be >= 1");
  if (spec.modes_per_side < 1) throw ConfigError("grid: modes_per_side must be >= 1");
  GridSample s;
  s.centers = grid_centers(spec);
  Rng rng(seed, "grid");
  std::vector<double> xy(spec.n_samples * 2);
  s.labels.resize(spec.n_samples);
  for (std::size_t n = 0; n < spec.n_samples; ++n) {
    const std::size_t k = rng.below(s.centers.size());
    s.labels[n] = k;
    xy[2 * n] = s.centers[k][0] + spec.std * rng.normal();
    xy[2 * n + 1] = s.centers[k][1] + spec.std * rng.normal();
  }
  s.points = Tensor({spec.n_samples, 2}, std::move(xy));
  return s;
}

void VarSpec::validate() const {
  if (d < 1) throw ConfigError("var: d must be >= 1");
  if (!(std::abs(phi) < 1.0)) throw ConfigError("var: |phi| must be < 1");
  if (length < 1) throw ConfigError("var: length must be >= 1");
  if (d > 1) {
    const double lower = -1.0 / (static_cast<double>(d) - 1.0);
    if (!(sigma > lower && sigma < 1.0)) {
      throw NumericalError("var: innovation covariance is not positive definite "
                           "(need " + std::to_string(lower) + " < sigma < 1)");
    }
  }
}

Tensor simulate_var(const VarSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(d, d, spec.sigma);
  cov.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("var: innovation covariance is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  Rng rng(seed, "var");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d), e(d);
  std::vector<double> out;
  out.reserve(spec.length * spec.d);
  for (std::size_t t = 0; t < spec.burn_in + spec.length; ++t) {
    for (Eigen::Index i = 0; i < d; ++i) e[i] = rng.normal();
    x = spec.phi * x + L * e;
    if (t >= spec.burn_in) out.insert(out.end(), x.data(), x.data() + d);
  }
  return Tensor({spec.length, spec.d}, std::move(out));
}

Tensor WindowedSeries::joined() const { return ndgrad::concat_cols({past, future}); }

WindowedSeries window(const Tensor& path, std::size_t p, std::size_t q) {
  if (path.rank() != 2) {
    throw ShapeError("window: path must be T x d, got " + ndgrad::shape_string(path.shape()));
  }
  const std::size_t T = path.rows(), d = path.cols();
  if (p < 1 || q < 1) throw ConfigError("window: p and q must be >= 1");
  if (T < p + q) {
    throw ConfigError("window: path of length " + std::to_string(T) +
                      " is shorter than p + q = " + std::to_string(p + q));
  }
  const std::size_t n = T - p - q + 1;
  std::vector<double> past, future;
  past.reserve(n * p * d);
  future.reserve(n * q * d);
  auto v = path.data();
  for (std::size_t i = 0; i < n; ++i) {
    past.insert(past.end(), v.begin() + static_cast<std::ptrdiff_t>(i * d),
                v.begin() + static_cast<std::ptrdiff_t>((i + p) * d));
    future.insert(future.end(), v.begin() + static_cast<std::ptrdiff_t>((i + p) * d),
                  v.begin() + static_cast<std::ptrdiff_t>((i + p + q) * d));
  }
  WindowedSeries w;
  w.p = p;
  w.q = q;
  w.d = d;
  w.past = Tensor({n, p * d}, std::move(past));
  w.future = Tensor({n, q * d}, std::move(future));
  return w;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

bool is_missing(const std::string& cell) {
  std::string lower;
  for (char c : cell) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

}  // namespace

IngestResult ingest_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  for (auto& h : split_csv_line(line)) header.push_back(trim(h));

  std::vector<std::size_t> selected;
  IngestResult result;
  if (columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) selected.push_back(i);
    result.columns = header;
  } else {
    for (const auto& name : columns) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw IoError(path.string() + ": no column named '" + name + "'");
      }
      selected.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    result.columns = columns;
  }

  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> row;
    bool missing = false;
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const std::size_t c = selected[k];
      const std::string cell = c < cells.size() ? trim(cells[c]) : std::string();
      if (is_missing(cell)) {
        missing = true;
        continue;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw IoError(path.string() + ": row " + std::to_string(line_no) +
                      ", column '" + header.at(c) + "': cannot parse '" + cell + "'");
      }
      row.push_back(v);
    }
    if (missing) {
      ++result.dropped_count;
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw IoError(path.string() + ": no complete rows");
  result.path = Tensor({rows, selected.size()}, std::move(values));
  return result;
}

void export_csv(const std::filesystem::path& path, const Tensor& values,
                const std::vector<std::string>& columns) {
  if (values.rank() != 2 || values.cols() != columns.size()) {
    throw ShapeError("export_csv: " + std::to_string(columns.size()) +
                     " column names for values of shape " +
                     ndgrad::shape_string(values.shape()));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) out << (c ? "," : "") << values.at(r, c);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Tensor derive_stock_features(const std::vector<double>& prices,
                             std::size_t vol_window) {
  if (vol_window < 2) throw ConfigError("stock features: vol_window must be >= 2");
  if (prices.size() <= vol_window) {
    throw ConfigError("stock features: need more than vol_window = " +
                      std::to_string(vol_window) + " prices, got " +
                      std::to_string(prices.size()));
  }
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (!(prices[t] > 0.0)) {
      throw NumericalError("stock features: non-positive price at row " + std::to_string(t));
    }
  }
  std::vector<double> r(prices.size());  // r[t] = log(P_t / P_{t-1}), t >= 1
  for (std::size_t t = 1; t < prices.size(); ++t) r[t] = std::log(prices[t] / prices[t - 1]);
  std::vector<double> out;
  std::size_t rows = 0;
  for (std::size_t t = vol_window; t < prices.size(); ++t) {
    double mean = 0.0;
    for (std::size_t k = t + 1 - vol_window; k <= t; ++k) mean += r[k];
    mean /= static_cast<double>(vol_window);
    double ss = 0.0;
    for (std::size_t k = t + 1 - vol_window; k <= t; ++k) ss += (r[k] - mean) * (r[k] - mean);
    const double vol = std::sqrt(ss / static_cast<double>(vol_window - 1));
    if (!(vol > 0.0)) {
      throw NumericalError("stock features: degenerate (zero) volatility at row " +
                           std::to_string(t));
    }
    out.push_back(r[t]);
    out.push_back(std::log(vol));
    ++rows;
  }
  return Tensor({rows, 2}, std::move(out));
}

std::vector<double> simulate_gbm(double s0, double mu, double sigma, double dt,
                                 std::size_t n, std::uint64_t seed) {
  if (!(s0 > 0.0) || !(sigma >= 0.0) || !(dt > 0.0)) {
    throw ConfigError("gbm: need s0 > 0, sigma >= 0, dt > 0");
  }
  Rng rng(seed, "gbm");
  std::vector<double> s(n + 1);
  s[0] = s0;
  const double drift = (mu - 0.5 * sigma * sigma) * dt;
  const double scale = sigma * std::sqrt(dt);
  for (std::size_t t = 1; t <= n; ++t) s[t] = s[t - 1] * std::exp(drift + scale * rng.normal());
  return s;
}

}  // namespace mcgan::data
