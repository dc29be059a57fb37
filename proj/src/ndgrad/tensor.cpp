#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mcgan/error.hpp"
#include "mcgan/ndgrad.hpp"

namespace mcgan::ndgrad {
namespace {

constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor()
    : shape_{0}, data_(std::make_shared<const std::vector<double>>()) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)),
      data_(std::make_shared<const std::vector<double>>(std::move(data))) {
  if (product(shape_) != data_->size()) {
    throw ShapeError("tensor: shape " + shape_string(shape_) + " holds " +
                     std::to_string(product(shape_)) + " values, got " +
                     std::to_string(data_->size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  std::vector<double> data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
  return Tensor({n, n}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.size() >= 2) return shape_[0];
  return 1;
}

std::size_t Tensor::cols() const {
  if (shape_.size() >= 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  return 1;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return (*data_)[r * cols() + c];
}

double Tensor::item() const {
  if (data_->size() != 1) {
    throw ShapeError("item: tensor of shape " + shape_string(shape_) +
                     " is not a single value");
  }
  return (*data_)[0];
}

Tensor Tensor::detach() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = 0;
  return t;
}

Tensor Tensor::reshape(Shape shape) const {
  if (product(shape) != size()) {
    throw ShapeError("reshape: cannot view " + shape_string(shape_) + " as " +
                     shape_string(shape));
  }
  if (!attached()) {
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }
  return tape_->record(std::move(shape), *data_, {this},
                       [](std::span<const double> g,
                          std::span<const GradSlot> slots) {
                         for (std::size_t i = 0; i < g.size(); ++i)
                           slots[0][i] += g[i];
                       });
}

// ---------------------------------------------------------------------------

Tensor Tape::track(const Tensor& value) {
  Node node;
  node.size = value.size();
  nodes_.push_back(std::move(node));
  Tensor t = value;
  t.tape_ = this;
  t.node_ = nodes_.size() - 1;
  return t;
}

std::vector<Tensor> Tape::track(std::span<const Tensor> values) {
  std::vector<Tensor> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(track(v));
  return out;
}

Tensor Tape::record(Shape shape, std::vector<double> data,
                    const std::vector<const Tensor*>& operands,
                    BackwardFn backward) {
  Node node;
  node.size = data.size();
  node.operands.reserve(operands.size());
  for (const Tensor* op : operands) {
    if (op->attached()) {
      if (op->tape() != this) {
        throw ShapeError("operands recorded on different tapes");
      }
      node.operands.push_back(op->node());
    } else {
      node.operands.push_back(kNoNode);
    }
  }
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  Tensor t(std::move(shape), std::move(data));
  t.tape_ = this;
  t.node_ = nodes_.size() - 1;
  return t;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw ShapeError("backward: loss must be a single value, got shape " +
                     shape_string(loss.shape()));
  }
  if (loss.tape() != this) {
    throw ShapeError("backward: loss is not recorded on this tape");
  }
  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  out.grads_[loss.node()] = {1.0};

  std::vector<GradSlot> slots;
  for (std::size_t i = loss.node() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (out.grads_[i].empty() || !node.backward) continue;
    slots.assign(node.operands.size(), GradSlot{});
    bool any = false;
    for (std::size_t k = 0; k < node.operands.size(); ++k) {
      const std::size_t p = node.operands[k];
      if (p == kNoNode) continue;
      auto& buf = out.grads_[p];
      if (buf.empty()) buf.assign(nodes_[p].size, 0.0);
      any = true;
    }
    if (!any) continue;
    // Spans are taken after every buffer exists so none is invalidated.
    for (std::size_t k = 0; k < node.operands.size(); ++k) {
      const std::size_t p = node.operands[k];
      if (p != kNoNode) slots[k] = GradSlot(out.grads_[p]);
    }
    node.backward(out.grads_[i], slots);
  }
  return out;
}

Tensor Gradients::wrt(const Tensor& leaf) const {
  if (leaf.tape() != tape_) {
    throw ShapeError("gradient requested for a tensor not on this tape");
  }
  const auto& g = grads_.at(leaf.node());
  if (g.empty()) return Tensor::zeros(leaf.shape());
  return Tensor(leaf.shape(), g);
}

std::vector<Tensor> Gradients::wrt(std::span<const Tensor> leaves) const {
  std::vector<Tensor> out;
  out.reserve(leaves.size());
  for (const auto& l : leaves) out.push_back(wrt(l));
  return out;
}

}  // namespace mcgan::ndgrad
