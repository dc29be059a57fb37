#include <cmath>

#include "mcgan/error.hpp"
#include "mcgan/ndgrad.hpp"

namespace mcgan::ndgrad {
namespace {

void check_sizes(std::span<const Parameter> params,
                 std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) +
                     " parameters but " + std::to_string(grads.size()) +
                     " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].value.size() != grads[i].size()) {
      throw ShapeError("optimizer: gradient for '" + params[i].name +
                       "' has shape " + shape_string(grads[i].shape()) +
                       ", parameter has " +
                       shape_string(params[i].value.shape()));
    }
  }
}

}  // namespace

std::vector<Tensor> values(std::span<const Parameter> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value.detach());
  return out;
}

void check_finite(std::span<const Parameter> params,
                  std::span<const Tensor> grads) {
  check_sizes(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : grads[i].data()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient for parameter '" +
                             params[i].name + "'");
      }
    }
  }
}

AdamState::AdamState(AdamConfig config, std::span<const Parameter> params)
    : config_(config) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void AdamState::step(std::span<Parameter> params,
                     std::span<const Tensor> grads) {
  check_finite(params, grads);
  if (params.size() != m_.size()) {
    throw ShapeError("adam: state built for " + std::to_string(m_.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = grads[i].data();
    auto& m = m_[i];
    auto& v = v_[i];
    std::vector<double> next = params[i].value.to_vector();
    for (std::size_t j = 0; j < next.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      next[j] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
    params[i].value = Tensor(params[i].value.shape(), std::move(next));
  }
}

void SgdState::step(std::span<Parameter> params,
                    std::span<const Tensor> grads) {
  check_finite(params, grads);
  ++step_count_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = grads[i].data();
    std::vector<double> next = params[i].value.to_vector();
    for (std::size_t j = 0; j < next.size(); ++j) next[j] -= learning_rate_ * g[j];
    params[i].value = Tensor(params[i].value.shape(), std::move(next));
  }
}

}  // namespace mcgan::ndgrad
