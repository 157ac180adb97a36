#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rntraj {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class GradTape;

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  const GradTape* tape = nullptr;  // tape that recorded this tensor as an op output
  std::size_t tape_index = 0;
};

}  // namespace detail

/// Dense row-major array of doubles that can take part in reverse-mode
/// differentiation.
///
/// A Tensor is a handle: copies share storage, `clone()` makes a deep copy.
/// Operations never mutate their operands, so sharing is only observable
/// through `data_mut()`/`grad_mut()`, which optimizers and checkpoint loading
/// use to update parameters in place.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<const double> data() const;
  std::span<double> data_mut();
  double item() const;
  double at(std::size_t flat_index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> grad_mut();
  /// Allocates (if needed) and fills the gradient with zeros.
  void zero_grad();
  void clear_grad();

  /// Deep copy of the values; the copy is a fresh leaf without gradient.
  Tensor clone() const;
  bool shares_storage_with(const Tensor& other) const noexcept { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl>& impl() const noexcept { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor make_tensor_from_impl(std::shared_ptr<detail::TensorImpl> impl);

  std::shared_ptr<detail::TensorImpl> impl_;
};

Tensor make_tensor_from_impl(std::shared_ptr<detail::TensorImpl> impl);

/// Records differentiable operations in creation order, then replays them in
/// reverse to propagate gradients.
///
/// Operations record onto the tape made active by a `GradTape::Scope` on the
/// current thread, and only when at least one input requires a gradient.
/// Without an active tape every operation is a plain forward computation.
class GradTape {
 public:
  struct Node {
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    std::function<void(const Node&)> backward;
  };

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// Populates `grad` of every reachable tensor that requires one. Gradients
  /// add onto whatever the leaves already hold. A tape can be replayed once;
  /// call `reset()` before recording the next computation.
  void backward(const Tensor& loss);
  void reset();

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_backward_visits() const noexcept { return visits_; }

  void record(Node node);

  static GradTape* active() noexcept;

  class Scope {
   public:
    explicit Scope(GradTape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    GradTape* previous_;
  };

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
  std::size_t visits_ = 0;
};

// Differentiable operations. All check shapes (ShapeError) and reject
// non-finite results (NumericError).

/// (m, k) x (k, n) -> (m, n)
Tensor matmul(const Tensor& a, const Tensor& b);
/// Equal shapes, or `b` a vector matching the last dimension of `a`, which is
/// then added to every row.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);
/// Elementwise min(a, cap); gradient passes only where a < cap.
Tensor minimum(const Tensor& a, double cap);
/// Elementwise Huber penalty of a residual with threshold `delta`.
Tensor huber(const Tensor& residual, double delta);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Concatenate along `axis`; all other dimensions must agree. Negative axes
/// count from the end.
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);
Tensor reshape(const Tensor& a, Shape shape);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end);
Tensor softmax_lastdim(const Tensor& a);
Tensor transpose(const Tensor& a);

/// Extra arguments for the ops that take more than tensors.
struct OpAttributes {
  double scalar = 1.0;
  int axis = -1;
  Shape shape;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Name-based dispatch over the operation set, e.g. "matmul", "relu",
/// "scalar_mul" (uses attrs.scalar), "slice" (attrs.axis/begin/end).
Tensor forward_op(std::string_view op_name, std::span<const Tensor> inputs, const OpAttributes& attrs = {});

}  // namespace rntraj
