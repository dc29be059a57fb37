#pragma once

// Dense double-precision tensors with a reverse-mode gradient tape.
//
// Tensors are immutable values: every primitive returns a fresh tensor. A
// tensor is either detached (plain data) or attached to a Tape, in which
// case the primitive that produced it is recorded there. Gradients only
// flow to tensors created with Tape::track.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcgan::ndgrad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class Tape;

class Tensor {
 public:
  /// Empty tensor (shape {0}).
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  bool empty() const { return data_->empty(); }
  /// Leading dimension of a 2-D tensor (1 for scalars/vectors).
  std::size_t rows() const;
  /// Trailing dimension of a 2-D tensor (length for vectors).
  std::size_t cols() const;

  std::span<const double> data() const { return *data_; }
  std::vector<double> to_vector() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t r, std::size_t c) const;
  /// Value of a single-element tensor.
  double item() const;

  bool attached() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  /// Same value, no tape.
  Tensor detach() const;
  /// Same data, new shape (product must match). Recorded when attached.
  Tensor reshape(Shape shape) const;

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

/// Gradients of one backward pass, keyed by tracked leaf.
class Gradients {
 public:
  /// Gradient with respect to a tensor returned by Tape::track. Leaves the
  /// loss does not depend on get a zero gradient.
  Tensor wrt(const Tensor& leaf) const;
  std::vector<Tensor> wrt(std::span<const Tensor> leaves) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> grads_;
};

/// Mutable view into the gradient buffer of one operand; empty when the
/// operand is not on the tape.
using GradSlot = std::span<double>;
using BackwardFn =
    std::function<void(std::span<const double> grad_out,
                       std::span<const GradSlot> operand_grads)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Register a leaf whose gradient will be reported by backward().
  Tensor track(const Tensor& value);
  std::vector<Tensor> track(std::span<const Tensor> values);

  /// Reverse pass from a 0-d (or single-element) loss recorded on this tape.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }

  /// Low-level hook used by the primitives.
  Tensor record(Shape shape, std::vector<double> data,
                const std::vector<const Tensor*>& operands,
                BackwardFn backward);

 private:
  struct Node {
    std::size_t size = 0;
    std::vector<std::size_t> operands;  // node index per operand, or npos
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives. Elementwise binary ops accept identical shapes or a
// single-element operand on either side.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
/// x (n x m) plus a bias row (m or 1 x m) added to every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean across columns of each row: (n x m) -> (n x 1).
Tensor row_mean(const Tensor& x);

Tensor square(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
/// max(0,x) + alpha*min(0,x) with a learnable single-element slope.
Tensor prelu(const Tensor& x, const Tensor& alpha);
Tensor log(const Tensor& x);
Tensor exp(const Tensor& x);
/// Elementwise max(x, c) for a constant c.
Tensor maximum(const Tensor& x, double c);

/// Concatenate 2-D tensors with equal row counts along columns.
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_cols(std::initializer_list<Tensor> parts);
/// Concatenate 2-D tensors with equal column counts along rows.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

// Composites.
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor shift(const Tensor& x, double c);
Tensor minimum(const Tensor& x, double c);
/// log(1 + exp(x)) without overflow.
Tensor softplus(const Tensor& x);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& x);
Tensor operator+(const Tensor& x, double c);
Tensor operator+(double c, const Tensor& x);
Tensor operator-(const Tensor& x, double c);
Tensor operator-(double c, const Tensor& x);
Tensor operator*(const Tensor& x, double c);
Tensor operator*(double c, const Tensor& x);

// ---------------------------------------------------------------------------
// Optimizers.

/// A named trainable array.
struct Parameter {
  std::string name;
  Tensor value;
};

std::vector<Tensor> values(std::span<const Parameter> params);

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam with one moment pair per parameter.
class AdamState {
 public:
  AdamState(AdamConfig config, std::span<const Parameter> params);

  /// Apply one update in place. Throws NumericalError naming the parameter
  /// if any gradient component is non-finite (parameters are untouched).
  void step(std::span<Parameter> params, std::span<const Tensor> grads);

  const AdamConfig& config() const { return config_; }
  std::size_t step_count() const { return step_count_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t step_count_ = 0;
};

/// Plain gradient descent, theta <- theta - lr * g.
class SgdState {
 public:
  explicit SgdState(double learning_rate) : learning_rate_(learning_rate) {}
  void step(std::span<Parameter> params, std::span<const Tensor> grads);
  std::size_t step_count() const { return step_count_; }

 private:
  double learning_rate_;
  std::size_t step_count_ = 0;
};

/// Throws NumericalError unless every gradient component is finite.
void check_finite(std::span<const Parameter> params,
                  std::span<const Tensor> grads);

}  // namespace mcgan::ndgrad
