#include "rntraj/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rntraj/error.hpp"

namespace rntraj {

namespace {

double probe(const std::function<Tensor()>& f) {
  const double v = f().item();
  if (!std::isfinite(v)) throw NumericError("finite_difference_check: non-finite probe evaluation");
  return v;
}

}  // namespace

double finite_difference_check(const std::function<Tensor()>& f, std::span<Tensor> params, double h) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    GradTape tape;
    GradTape::Scope scope(tape);
    Tensor loss = f();
    tape.backward(loss);
  }

  double worst = 0.0;
  for (auto& p : params) {
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.data_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = probe(f);
      values[i] = saved - h;
      const double down = probe(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(numeric)));
    }
    p.clear_grad();
  }
  return worst;
}

double finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor leaf = x.clone();
  Tensor params[] = {leaf};
  return finite_difference_check([&] { return f(leaf); }, params, h);
}

}  // namespace rntraj
