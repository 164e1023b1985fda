#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "safe/tensor.hpp"

namespace safe {

/// Adam state for one parameter set. Moment buffers are keyed by parameter
/// name and created lazily on the first step; `step` counts applied updates
/// and drives bias correction.
struct AdamState {
  std::int64_t step = 0;
  Real lr = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps_hat = 1e-8;
  std::map<std::string, Array> m;
  std::map<std::string, Array> v;
};

/// One bias-corrected Adam update over every parameter. Gradients must be
/// populated and are left untouched; the caller zeroes them.
void adam_step(ParamMap& params, AdamState& state);

}  // namespace safe
