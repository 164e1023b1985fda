#include "safe/distill.hpp"

#include <cmath>

namespace safe::train {

void DistillationWeights::validate() const {
  for (Real v : {gamma, delta, eta})
    if (v < 0.0 || v > 1.0)
      throw ConfigError("distillation weights must lie in [0,1]");
  if (std::abs(gamma + delta + eta - 1.0) > 1e-12)
    throw ConfigError("distillation weights must sum to 1, got " +
                      std::to_string(gamma + delta + eta));
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
}

DistillationWeights make_weights(Real gamma, Real kappa, Real temperature) {
  DistillationWeights w;
  w.gamma = gamma;
  w.delta = (1.0 - gamma) * kappa;
  w.eta = 1.0 - (gamma + w.delta);
  w.temperature = temperature;
  w.validate();
  return w;
}

std::vector<DistillationWeights> hyper_grid() {
  std::vector<DistillationWeights> grid;
  for (Real gamma : {0.3, 0.5, 0.7})
    for (Real kappa : {0.3, 0.5, 0.7})
      grid.push_back(make_weights(gamma, kappa, 1.0));
  return grid;
}

Ablation ablation_from(const std::string& name) {
  if (name == "wAB") return Ablation::WAB;
  if (name == "w/oA") return Ablation::WoA;
  if (name == "w/oB") return Ablation::WoB;
  if (name == "w/oAB") return Ablation::WoAB;
  throw ConfigError("unknown ablation '" + name + "' (valid: wAB, w/oA, w/oB, w/oAB)");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::WAB: return "wAB";
    case Ablation::WoA: return "w/oA";
    case Ablation::WoB: return "w/oB";
    case Ablation::WoAB: return "w/oAB";
  }
  return "wAB";
}

DistillationWeights resolve_weights(DistillationWeights w, Ablation a) {
  w.validate();
  switch (a) {
    case Ablation::WAB:
      break;
    case Ablation::WoA: {
      const Real rest = w.gamma + w.eta;
      if (rest <= 0.0) throw ConfigError("w/oA leaves no loss terms");
      w = {w.gamma / rest, 0.0, w.eta / rest, w.temperature};
      break;
    }
    case Ablation::WoB: {
      const Real rest = w.gamma + w.delta;
      if (rest <= 0.0) throw ConfigError("w/oB leaves no loss terms");
      w = {w.gamma / rest, w.delta / rest, 0.0, w.temperature};
      break;
    }
    case Ablation::WoAB:
      w = {1.0, 0.0, 0.0, w.temperature};
      break;
  }
  w.validate();
  return w;
}

Tensor student_loss(const Tensor& s_cls, const Tensor& s_dia, const Tensor& s_dib,
                    const Tensor* teacher_a_logits, const Tensor* teacher_b_logits,
                    const std::vector<int>& labels, const DistillationWeights& w) {
  w.validate();
  Tensor loss = scale(cross_entropy(softmax_t(s_cls, 1.0), labels), w.gamma);
  if (w.delta > 0.0) {
    if (!teacher_a_logits)
      throw ConfigError("student_loss: delta > 0 requires teacher-A logits");
    loss = add(loss, scale(kl_div(softmax_t(s_dia, w.temperature),
                                  softmax_t(*teacher_a_logits, w.temperature)),
                           w.delta));
  }
  if (w.eta > 0.0) {
    if (!teacher_b_logits)
      throw ConfigError("student_loss: eta > 0 requires teacher-B logits");
    loss = add(loss, scale(kl_div(softmax_t(s_dib, w.temperature),
                                  softmax_t(*teacher_b_logits, w.temperature)),
                           w.eta));
  }
  return loss;
}

}  // namespace safe::train
