#include "rntraj/parameters.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rntraj {

Tensor& ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.back().value;
}

Tensor& ParameterSet::get(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Tensor& ParameterSet::get(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

bool ParameterSet::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value);
  return out;
}

void ParameterSet::set_trainable(bool trainable) {
  for (auto& e : entries_) {
    e.value.set_requires_grad(trainable);
    if (!trainable) e.value.clear_grad();
  }
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet copy;
  for (const auto& e : entries_) {
    Tensor t = e.value.clone();
    t.set_requires_grad(e.value.requires_grad());
    copy.entries_.push_back({e.name, std::move(t)});
  }
  return copy;
}

void ParameterSet::assign_from(const ParameterSet& other) {
  if (other.size() != size()) throw std::invalid_argument("assign_from: parameter count mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries_[i];
    auto& dst = entries_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw std::invalid_argument("assign_from: parameter '" + dst.name + "' does not match '" + src.name + "'");
    }
    auto values = dst.value.data_mut();
    std::copy(src.value.data().begin(), src.value.data().end(), values.begin());
  }
}

bool ParameterSet::identical_to(const ParameterSet& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.shape() != b.value.shape()) return false;
    if (std::memcmp(a.value.data().data(), b.value.data().data(), a.value.numel() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data_mut()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace rntraj
