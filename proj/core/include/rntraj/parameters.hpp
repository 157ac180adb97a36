#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rntraj/rng.hpp"
#include "rntraj/tensor.hpp"

namespace rntraj {

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Ordered, named collection of model weights. Order is insertion order and
/// is what checkpoints and optimizers iterate over.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor value);
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::vector<NamedTensor>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  /// Handles sharing storage with the stored parameters.
  std::vector<Tensor> tensors() const;

  void set_trainable(bool trainable);
  void zero_grad();

  /// Deep copy (fresh storage, same trainable flags, no gradients).
  ParameterSet clone() const;

  /// Overwrite values from `other`, which must hold the same names and shapes.
  void assign_from(const ParameterSet& other);

  /// Bitwise equality of names, shapes and values.
  bool identical_to(const ParameterSet& other) const;

 private:
  std::vector<NamedTensor> entries_;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace rntraj
