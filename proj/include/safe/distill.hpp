#pragma once

#include <string>
#include <vector>

#include "safe/ops.hpp"
#include "safe/tensor.hpp"

namespace safe::train {

/// Simplex weights for the composite objective: gamma on the cls-head cross
/// entropy, delta on the teacher-A distillation KL, eta on the teacher-B
/// distillation KL. gamma+delta+eta must equal 1 within 1e-12.
struct DistillationWeights {
  Real gamma = 0.5;
  Real delta = 0.25;
  Real eta = 0.25;
  Real temperature = 1.0;

  void validate() const;
};

/// delta = (1-gamma)*kappa, eta = 1-(gamma+delta).
DistillationWeights make_weights(Real gamma, Real kappa, Real temperature = 1.0);

/// The 9 grid points: gamma and kappa each in {0.3, 0.5, 0.7}, T = 1.
std::vector<DistillationWeights> hyper_grid();

enum class Ablation { WAB, WoA, WoB, WoAB };

Ablation ablation_from(const std::string& name);  // wAB, w/oA, w/oB, w/oAB
std::string to_string(Ablation a);

/// Ablation switches zero and renormalize the simplex: w/oB forces eta=0,
/// w/oA forces delta=0 (each renormalized), w/oAB forces gamma=1.
DistillationWeights resolve_weights(DistillationWeights w, Ablation a);

/// L = gamma·CE(softmax(s_cls), y)
///   + delta·KL(softmax_T(s_dia), softmax_T(tA))
///   + eta·KL(softmax_T(s_dib), softmax_T(tB)).
/// Zero-weight terms are not computed at all, so gamma=1 training is
/// bit-identical to a plain cross-entropy loop and absent teachers are
/// only required when their weight is positive. Teacher logits must be
/// detached (no gradient flows into them regardless).
Tensor student_loss(const Tensor& s_cls, const Tensor& s_dia, const Tensor& s_dib,
                    const Tensor* teacher_a_logits, const Tensor* teacher_b_logits,
                    const std::vector<int>& labels, const DistillationWeights& w);

}  // namespace safe::train
