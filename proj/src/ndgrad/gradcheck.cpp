#include "mcgan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mcgan/error.hpp"

namespace mcgan::ndgrad {

std::vector<Tensor> numeric_gradient(const ScalarFn& f,
                                     std::span<const Tensor> at,
                                     double step) {
  std::vector<Tensor> point;
  for (const auto& t : at) point.push_back(t.detach());
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < point.size(); ++k) {
    const Tensor base = point[k];
    std::vector<double> g(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      std::vector<double> v = base.to_vector();
      v[i] = base[i] + step;
      point[k] = Tensor(base.shape(), v);
      const double up = f(point).item();
      v[i] = base[i] - step;
      point[k] = Tensor(base.shape(), v);
      const double down = f(point).item();
      g[i] = (up - down) / (2.0 * step);
    }
    point[k] = base;
    out.emplace_back(base.shape(), std::move(g));
  }
  return out;
}

std::vector<Tensor> tape_gradient(const ScalarFn& f,
                                  std::span<const Tensor> at) {
  Tape tape;
  std::vector<Tensor> leaves;
  for (const auto& t : at) leaves.push_back(tape.track(t.detach()));
  const Tensor loss = f(leaves);
  return tape.backward(loss).wrt(leaves);
}

double relative_error(std::span<const Tensor> a, std::span<const Tensor> b,
                      double floor) {
  if (a.size() != b.size()) throw ShapeError("relative_error: count mismatch");
  double diff = 0.0, scale = floor;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].shape() != b[k].shape()) {
      throw ShapeError("relative_error: shapes " + shape_string(a[k].shape()) +
                       " and " + shape_string(b[k].shape()));
    }
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      diff = std::max(diff, std::abs(a[k][i] - b[k][i]));
      scale = std::max({scale, std::abs(a[k][i]), std::abs(b[k][i])});
    }
  }
  return diff / scale;
}

}  // namespace mcgan::ndgrad
