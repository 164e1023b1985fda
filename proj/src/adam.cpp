#include "safe/adam.hpp"

#include <cmath>

namespace safe {

void adam_step(ParamMap& params, AdamState& state) {
  for (auto& [name, p] : params) {
    if (!p.has_grad())
      throw InternalError("adam_step: parameter '" + name + "' has no gradient");
  }
  state.step += 1;
  const Real t = static_cast<Real>(state.step);
  const Real bc1 = 1.0 - std::pow(state.beta1, t);
  const Real bc2 = 1.0 - std::pow(state.beta2, t);
  for (auto& [name, p] : params) {
    const Array& g = p.grad();
    Array& m = state.m.try_emplace(name, Array::Zero(g.size())).first->second;
    Array& v = state.v.try_emplace(name, Array::Zero(g.size())).first->second;
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    p.value() -= state.lr * (m / bc1) / ((v / bc2).sqrt() + state.eps_hat);
  }
}

}  // namespace safe
