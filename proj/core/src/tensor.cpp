#include "rntraj/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rntraj/error.hpp"

namespace rntraj {

using detail::TensorImpl;

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {

thread_local GradTape* active_tape = nullptr;

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_to_string(shape));
  }
}

std::shared_ptr<TensorImpl> new_impl(Shape shape, std::vector<double> data) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return impl;
}

std::vector<double>& grad_of(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

void ensure_finite(std::string_view op, const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite result");
  }
}

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_to_string(a) + " and " + shape_to_string(b));
}

// Wraps a freshly computed result and records it on the active tape when any
// input needs a gradient.
Tensor finish(std::string_view op, std::vector<const Tensor*> inputs, Shape shape, std::vector<double> data,
              std::function<void(const GradTape::Node&)> backward) {
  ensure_finite(op, data);
  auto out = new_impl(std::move(shape), std::move(data));
  GradTape* tape = GradTape::active();
  bool needs_grad = std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
  if (tape != nullptr && needs_grad) {
    out->requires_grad = true;
    GradTape::Node node;
    node.inputs.reserve(inputs.size());
    for (const Tensor* t : inputs) node.inputs.push_back(t->impl());
    node.output = out;
    node.backward = std::move(backward);
    tape->record(std::move(node));
  }
  return make_tensor_from_impl(std::move(out));
}

void require_defined(std::string_view op, const Tensor& t) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

template <typename Forward, typename Derivative>
Tensor unary(std::string_view op, const Tensor& a, Forward f, Derivative df) {
  require_defined(op, a);
  std::vector<double> out(a.numel());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return finish(op, {&a}, a.shape(), std::move(out), [df](const GradTape::Node& n) {
    auto& x = *n.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const auto& y = n.output->data;
    const auto& gy = n.output->grad;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(x.data[i], y[i]);
  });
}

bool is_row_broadcast(const Shape& a, const Shape& b) {
  if (a == b) return false;
  std::size_t last = a.back();
  return shape_numel(b) == last && (b.size() == 1 || (b.size() == 2 && b[0] == 1));
}

Tensor add_or_sub(std::string_view op, const Tensor& a, const Tensor& b, double sign) {
  require_defined(op, a);
  require_defined(op, b);
  const bool broadcast = is_row_broadcast(a.shape(), b.shape());
  if (!broadcast && a.shape() != b.shape()) shape_mismatch(op, a.shape(), b.shape());
  const std::size_t width = b.numel();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * bd[broadcast ? i % width : i];
  return finish(op, {&a, &b}, a.shape(), std::move(out), [sign, broadcast, width](const GradTape::Node& n) {
    const auto& gy = n.output->grad;
    if (n.inputs[0]->requires_grad) {
      auto& ga = grad_of(*n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (n.inputs[1]->requires_grad) {
      auto& gb = grad_of(*n.inputs[1]);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[broadcast ? i % width : i] += sign * gy[i];
    }
  });
}

std::size_t normalize_axis(std::string_view op, int axis, std::size_t rank) {
  int r = static_cast<int>(rank);
  int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range");
  return static_cast<std::size_t>(a);
}

// View of a shape as (outer, axis extent, inner) around one axis.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor make_tensor_from_impl(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                     shape_to_string(shape));
  }
  impl_ = new_impl(std::move(shape), std::move(data));
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape(shape);
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value) {
  check_shape(shape);
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> data;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& row : rows) {
    if (row.size() != cols) throw ShapeError("matrix rows must have equal length");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

const Shape& Tensor::shape() const {
  if (!impl_) throw ShapeError("undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::numel() const { return defined() ? impl_->data.size() : 0; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("dimension index out of range for shape " + shape_to_string(s));
  return s[axis];
}

std::span<const double> Tensor::data() const {
  if (!impl_) return {};
  return impl_->data;
}

std::span<double> Tensor::data_mut() {
  if (!impl_) return {};
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_to_string(shape()));
  return impl_->data[0];
}

double Tensor::at(std::size_t flat_index) const { return impl_->data.at(flat_index); }

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (impl_) impl_->requires_grad = value;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!impl_) return {};
  return impl_->grad;
}

std::span<double> Tensor::grad_mut() {
  if (!impl_) return {};
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::clear_grad() {
  if (impl_) impl_->grad.clear();
}

Tensor Tensor::clone() const {
  if (!impl_) return {};
  return Tensor(impl_->shape, impl_->data);
}

// ---------------------------------------------------------------------------

GradTape* GradTape::active() noexcept { return active_tape; }

GradTape::Scope::Scope(GradTape& tape) : previous_(active_tape) { active_tape = &tape; }

GradTape::Scope::~Scope() { active_tape = previous_; }

void GradTape::record(Node node) {
  node.output->tape = this;
  node.output->tape_index = nodes_.size();
  nodes_.push_back(std::move(node));
}

void GradTape::reset() {
  for (auto& n : nodes_) n.output->tape = nullptr;
  nodes_.clear();
  consumed_ = false;
  visits_ = 0;
}

void GradTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_to_string(loss.shape()) : std::string("undefined")));
  }
  if (consumed_) throw std::logic_error("backward: tape already replayed; reset() before reuse");
  const auto& impl = loss.impl();
  if (impl->tape != this) throw std::logic_error("backward: loss was not recorded on this tape");
  consumed_ = true;
  visits_ = 0;
  grad_of(*impl)[0] += 1.0;
  for (std::size_t i = impl->tape_index + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    ++visits_;
    if (node.output->grad.empty()) continue;
    node.backward(node);
  }
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_mismatch("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      const double* brow = &bd[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return finish("matmul", {&a, &b}, {m, n}, std::move(out), [m, k, n](const GradTape::Node& node) {
    const auto& gy = node.output->grad;
    auto& A = *node.inputs[0];
    auto& B = *node.inputs[1];
    if (A.requires_grad) {
      auto& ga = grad_of(A);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += gy[i * n + j] * B.data[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (B.requires_grad) {
      auto& gb = grad_of(B);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.data[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * gy[i * n + j];
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return add_or_sub("add", a, b, 1.0); }

Tensor sub(const Tensor& a, const Tensor& b) { return add_or_sub("sub", a, b, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined("mul_elementwise", a);
  require_defined("mul_elementwise", b);
  if (a.shape() != b.shape()) shape_mismatch("mul_elementwise", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return finish("mul_elementwise", {&a, &b}, a.shape(), std::move(out), [](const GradTape::Node& n) {
    const auto& gy = n.output->grad;
    auto& A = *n.inputs[0];
    auto& B = *n.inputs[1];
    // Same tensor on both sides: both branches accumulate, giving 2x.
    if (A.requires_grad) {
      auto& ga = grad_of(A);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * B.data[i];
    }
    if (B.requires_grad) {
      auto& gb = grad_of(B);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * A.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary("scalar_mul", a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary("add_scalar", a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::fabs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor minimum(const Tensor& a, double cap) {
  return unary("minimum", a, [cap](double x) { return x < cap ? x : cap; },
               [cap](double x, double) { return x < cap ? 1.0 : 0.0; });
}

Tensor huber(const Tensor& residual, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be positive");
  return unary(
      "huber", residual,
      [delta](double r) {
        double ar = std::fabs(r);
        return ar <= delta ? 0.5 * r * r : delta * (ar - 0.5 * delta);
      },
      [delta](double r, double) { return std::fabs(r) <= delta ? r : (r > 0.0 ? delta : -delta); });
}

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double total = 0.0;
  for (double v : a.data()) total += v;
  return finish("sum", {&a}, {1}, {total}, [](const GradTape::Node& n) {
    auto& x = *n.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const double g = n.output->grad[0];
    for (auto& v : gx) v += g;
  });
}

Tensor mean(const Tensor& a) {
  require_defined("mean", a);
  double total = 0.0;
  for (double v : a.data()) total += v;
  const double count = static_cast<double>(a.numel());
  return finish("mean", {&a}, {1}, {total / count}, [count](const GradTape::Node& n) {
    auto& x = *n.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const double g = n.output->grad[0] / count;
    for (auto& v : gx) v += g;
  });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  for (const auto& p : parts) require_defined("concat", p);
  const Shape& first = parts[0].shape();
  const std::size_t ax = normalize_axis("concat", axis, first.size());
  Shape out_shape = first;
  out_shape[ax] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_mismatch("concat", first, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != ax && s[i] != first[i]) shape_mismatch("concat", first, s);
    }
    out_shape[ax] += s[ax];
  }
  const AxisSplit out_split = split_at(out_shape, ax);
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const AxisSplit s = split_at(p.shape(), ax);
    auto pd = p.data();
    const std::size_t block = s.extent * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pd.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                  out.begin() + static_cast<std::ptrdiff_t>(o * out_split.extent * out_split.inner + offset * s.inner));
    }
    offset += s.extent;
  }
  std::vector<const Tensor*> inputs;
  for (const auto& p : parts) inputs.push_back(&p);
  return finish("concat", std::move(inputs), out_shape, std::move(out), [ax, out_split, offsets](const GradTape::Node& n) {
    const auto& gy = n.output->grad;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      auto& x = *n.inputs[k];
      if (!x.requires_grad) continue;
      auto& gx = grad_of(x);
      const AxisSplit s = split_at(x.shape, ax);
      const std::size_t block = s.extent * s.inner;
      for (std::size_t o = 0; o < s.outer; ++o) {
        const std::size_t src = o * out_split.extent * out_split.inner + offsets[k] * s.inner;
        for (std::size_t j = 0; j < block; ++j) gx[o * block + j] += gy[src + j];
      }
    }
  });
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined("reshape", a);
  check_shape(shape);
  if (shape_numel(shape) != a.numel()) shape_mismatch("reshape", a.shape(), shape);
  std::vector<double> out(a.data().begin(), a.data().end());
  return finish("reshape", {&a}, std::move(shape), std::move(out), [](const GradTape::Node& n) {
    auto& x = *n.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const auto& gy = n.output->grad;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
  });
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
  require_defined("slice", a);
  const std::size_t ax = normalize_axis("slice", axis, a.rank());
  if (begin >= end || end > a.dim(ax)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for shape " + shape_to_string(a.shape()));
  }
  const AxisSplit in = split_at(a.shape(), ax);
  Shape out_shape = a.shape();
  out_shape[ax] = end - begin;
  const std::size_t width = (end - begin) * in.inner;
  std::vector<double> out(in.outer * width);
  auto ad = a.data();
  for (std::size_t o = 0; o < in.outer; ++o) {
    std::copy_n(ad.begin() + static_cast<std::ptrdiff_t>(o * in.extent * in.inner + begin * in.inner), width,
                out.begin() + static_cast<std::ptrdiff_t>(o * width));
  }
  return finish("slice", {&a}, std::move(out_shape), std::move(out), [in, begin, width](const GradTape::Node& n) {
    auto& x = *n.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const auto& gy = n.output->grad;
    for (std::size_t o = 0; o < in.outer; ++o) {
      const std::size_t dst = o * in.extent * in.inner + begin * in.inner;
      for (std::size_t j = 0; j < width; ++j) gx[dst + j] += gy[o * width + j];
    }
  });
}

Tensor softmax_lastdim(const Tensor& a) {
  require_defined("softmax_lastdim", a);
  const std::size_t width = a.shape().back();
  const std::size_t rows = a.numel() / width;
  std::vector<double> out(a.numel());
  auto ad = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &ad[r * width];
    double* y = &out[r * width];
    const double peak = *std::max_element(x, x + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += (y[j] = std::exp(x[j] - peak));
    for (std::size_t j = 0; j < width; ++j) y[j] /= total;
  }
  return finish("softmax_lastdim", {&a}, a.shape(), std::move(out), [rows, width](const GradTape::Node& n) {
    auto& x = *n.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const auto& y = n.output->data;
    const auto& gy = n.output->grad;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += gy[r * width + j] * y[r * width + j];
      for (std::size_t j = 0; j < width; ++j) gx[r * width + j] += y[r * width + j] * (gy[r * width + j] - dot);
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined("transpose", a);
  if (a.rank() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_to_string(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  auto ad = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  }
  return finish("transpose", {&a}, {n, m}, std::move(out), [m, n](const GradTape::Node& node) {
    auto& x = *node.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = grad_of(x);
    const auto& gy = node.output->grad;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += gy[j * m + i];
    }
  });
}

Tensor forward_op(std::string_view op_name, std::span<const Tensor> inputs, const OpAttributes& attrs) {
  auto arity = [&](std::size_t expected) {
    if (inputs.size() != expected) {
      throw ShapeError(std::string(op_name) + ": expected " + std::to_string(expected) + " inputs, got " +
                       std::to_string(inputs.size()));
    }
  };
  if (op_name == "concat") return concat(inputs, attrs.axis);
  if (op_name == "matmul") return arity(2), matmul(inputs[0], inputs[1]);
  if (op_name == "add") return arity(2), add(inputs[0], inputs[1]);
  if (op_name == "sub") return arity(2), sub(inputs[0], inputs[1]);
  if (op_name == "mul_elementwise") return arity(2), mul(inputs[0], inputs[1]);
  arity(1);
  const Tensor& x = inputs[0];
  if (op_name == "scalar_mul") return scale(x, attrs.scalar);
  if (op_name == "relu") return relu(x);
  if (op_name == "sigmoid") return sigmoid(x);
  if (op_name == "tanh") return tanh(x);
  if (op_name == "exp") return exp(x);
  if (op_name == "log") return log(x);
  if (op_name == "sum") return sum(x);
  if (op_name == "mean") return mean(x);
  if (op_name == "reshape") return reshape(x, attrs.shape);
  if (op_name == "slice") return slice(x, attrs.axis, attrs.begin, attrs.end);
  if (op_name == "softmax_lastdim") return softmax_lastdim(x);
  if (op_name == "transpose") return transpose(x);
  if (op_name == "abs") return abs(x);
  throw std::invalid_argument("forward_op: unknown op '" + std::string(op_name) + "'");
}

}  // namespace rntraj
