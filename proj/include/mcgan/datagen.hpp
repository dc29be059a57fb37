#pragma once

// Synthetic datasets (2-D Gaussian grid, VAR(1), GBM prices), windowing of
// multivariate paths, CSV ingestion/export and stock features.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcgan/ndgrad.hpp"

namespace mcgan::data {

using ndgrad::Tensor;

struct GaussianGridSpec {
  std::size_t modes_per_side = 5;
  double spacing = 2.0;
  double std = 0.01;
  std::size_t n_samples = 5000;
};

/// Lattice centers, row-major from the lowest (x, y) corner, centered at 0.
std::vector<std::array<double, 2>> grid_centers(const GaussianGridSpec& spec);

struct GridSample {
  Tensor points;                   // n x 2
  std::vector<std::size_t> labels;  // index into centers
  std::vector<std::array<double, 2>> centers;
};

GridSample sample_gaussian_grid(const GaussianGridSpec& spec, std::uint64_t seed);

struct VarSpec {
  std::size_t d = 2;
  double phi = 0.8;
  double sigma = 0.8;
  std::size_t length = 1000;
  std::size_t burn_in = 200;
  void validate() const;
};

/// X_t = phi X_{t-1} + eps_t, eps ~ N(0, Sigma), Sigma_ii = 1,
/// Sigma_ij = sigma. Returns length x d after discarding burn_in steps.
Tensor simulate_var(const VarSpec& spec, std::uint64_t seed);

/// (past, future) pairs sliced with stride 1. Rows are flattened
/// time-major: past row i holds path[i..i+p) and future row i holds
/// path[i+p..i+p+q).
struct WindowedSeries {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t d = 0;
  Tensor past;    // N x p*d
  Tensor future;  // N x q*d
  std::size_t size() const { return past.rows(); }
  /// past || future, N x (p+q)*d.
  Tensor joined() const;
};

WindowedSeries window(const Tensor& path, std::size_t p, std::size_t q);

struct IngestResult {
  Tensor path;  // rows x columns
  std::vector<std::string> columns;
  std::size_t dropped_count = 0;
};

/// Reads a header + comma-separated numeric rows. `columns` selects columns
/// by header name (empty: every column). Rows with an empty, "NA" or "NaN"
/// cell in a selected column are dropped and counted.
IngestResult ingest_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& columns = {});

/// Writes a header and rows with 17 significant digits.
void export_csv(const std::filesystem::path& path, const Tensor& values,
                const std::vector<std::string>& columns);

/// (log return, log rolling volatility) rows. Row k uses the returns
/// ending at price index vol_window + k; the rolling volatility is the
/// sample standard deviation of the last vol_window log returns.
Tensor derive_stock_features(const std::vector<double>& prices,
                             std::size_t vol_window = 20);

/// Geometric Brownian motion prices S_0..S_n with drift mu and volatility
/// sigma per unit time, step dt.
std::vector<double> simulate_gbm(double s0, double mu, double sigma, double dt,
                                 std::size_t n, std::uint64_t seed);

}  // namespace mcgan::data
