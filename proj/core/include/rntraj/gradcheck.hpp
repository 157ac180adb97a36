#pragma once

#include <functional>
#include <span>

#include "rntraj/tensor.hpp"

namespace rntraj {

/// Compares reverse-mode gradients of a scalar function against central
/// differences and returns max_i |g_ad - g_fd| / max(1, |g_fd|).
///
/// Throws NumericError if any probe evaluation is non-finite.
double finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-6);

/// Same check over several existing leaf tensors at once, perturbing each
/// entry of each parameter in place (values are restored afterwards). The
/// parameters' current gradients are cleared.
double finite_difference_check(const std::function<Tensor()>& f, std::span<Tensor> params, double h = 1e-6);

}  // namespace rntraj
