#pragma once

// Central finite differences for checking tape gradients.

#include <functional>
#include <span>
#include <vector>

#include "mcgan/ndgrad.hpp"

namespace mcgan::ndgrad {

using ScalarFn = std::function<Tensor(std::span<const Tensor>)>;

/// Central-difference gradient of f at the given point, one tensor per input.
std::vector<Tensor> numeric_gradient(const ScalarFn& f,
                                     std::span<const Tensor> at,
                                     double step = 1e-5);

/// Tape gradient of f at the given point.
std::vector<Tensor> tape_gradient(const ScalarFn& f,
                                  std::span<const Tensor> at);

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|, floor), over all
/// components of all tensors.
double relative_error(std::span<const Tensor> a, std::span<const Tensor> b,
                      double floor = 1e-12);

}  // namespace mcgan::ndgrad
