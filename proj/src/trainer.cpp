#include "safe/trainer.hpp"

#include <cstdio>

namespace safe::train {

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
}

ParamMap snapshot(const ParamMap& params) {
  ParamMap out;
  for (const auto& [name, t] : params)
    out[name] = Tensor::from_array(t.shape(), t.value(), true);
  return out;
}

// Parameters outside the recorded graph (e.g. unused heads under an
// ablation) have a zero gradient by definition; populate it so the Adam
// contract holds.
void fill_missing_grads(ParamMap& params) {
  for (auto& [name, t] : params)
    if (!t.has_grad()) accumulate_grad(*t.node(), Array::Zero(t.size()));
}

void check_splits(const std::vector<prep::PreparedSample>& train_set,
                  const std::vector<prep::PreparedSample>& val_set) {
  if (train_set.empty()) throw ConfigError("training split is empty");
  if (val_set.empty()) throw ConfigError("validation split is empty");
  bool has0 = false, has1 = false;
  for (const auto& s : train_set) (s.label ? has1 : has0) = true;
  if (!has0 || !has1)
    std::fprintf(stderr, "warning: training split contains a single class; proceeding\n");
}

bool improves(const FitResult& res, bool have_best, Real f1, Real recall) {
  if (!have_best) return true;
  if (f1 > res.best_f1) return true;
  return f1 == res.best_f1 && recall > res.best_recall;
}

void record_epoch(FitResult& res, bool& have_best, const ParamMap& params, int epoch,
                  Real train_loss, const eval::MetricsReport& val, bool verbose) {
  if (improves(res, have_best, val.f1, val.recall)) {
    res.best_params = snapshot(params);
    res.best_epoch = epoch;
    res.best_f1 = val.f1;
    res.best_precision = val.precision;
    res.best_recall = val.recall;
    have_best = true;
  }
  res.history.push_back({epoch, train_loss, val.f1, val.precision, val.recall});
  if (verbose)
    std::printf("epoch %d  train_loss %.4f  val_f1 %.4f  val_p %.4f  val_r %.4f\n",
                epoch, train_loss, val.f1, val.precision, val.recall);
}

eval::MetricsReport report_from(const std::vector<prep::PreparedSample>& samples,
                                const std::vector<int>& preds,
                                const std::vector<Real>& p_vuln) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  auto report = eval::compute_metrics(preds, labels);
  report.predictions.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    report.predictions.push_back({samples[i].id, labels[i], preds[i], p_vuln[i]});
  return report;
}

// Generic minibatch loop: batch_loss(indices) must run forward+loss for the
// given sample indices and return the loss tensor; eval_val() produces the
// per-epoch validation report.
template <typename BatchLoss, typename EvalVal>
FitResult run_epochs(ParamMap& params, const TrainConfig& tcfg, std::size_t n_train,
                     BatchLoss&& batch_loss, EvalVal&& eval_val) {
  if (tcfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (tcfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  AdamState adam;
  adam.lr = tcfg.lr;
  std::mt19937_64 shuffle_rng(tcfg.seed + 1);
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  FitResult res;
  bool have_best = false;
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    Real loss_sum = 0.0;
    for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end = std::min(n_train, start + static_cast<std::size_t>(tcfg.batch_size));
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      Tensor loss = batch_loss(batch);
      backward(loss);
      fill_missing_grads(params);
      adam_step(params, adam);
      zero_grads(params);
      loss_sum += loss.item() * static_cast<Real>(batch.size());
    }
    record_epoch(res, have_best, params, epoch, loss_sum / static_cast<Real>(n_train),
                 eval_val(), tcfg.verbose);
  }
  return res;
}

std::vector<int> argmax_labels(const Tensor& logits, std::vector<Real>* p_vuln) {
  const Tensor probs = softmax_t(logits, 1.0);
  std::vector<int> out;
  const Index b = probs.shape()[0];
  for (Index i = 0; i < b; ++i) {
    const Real p0 = probs.value()[2 * i], p1 = probs.value()[2 * i + 1];
    out.push_back(p1 > p0 ? 1 : 0);  // exact tie resolves to 0
    if (p_vuln) p_vuln->push_back(p1);
  }
  return out;
}

}  // namespace

nlohmann::json FitResult::metrics_json() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  j["f1"] = best_f1;
  j["precision"] = best_precision;
  j["recall"] = best_recall;
  return j;
}

FitResult train_teacher_a(const std::vector<prep::PreparedSample>& train_set,
                          const std::vector<prep::PreparedSample>& val_set,
                          const model::TeacherAConfig& mcfg, const TrainConfig& tcfg) {
  check_splits(train_set, val_set);
  model::TeacherA m(mcfg, tcfg.seed);
  return run_epochs(
      m.params, tcfg, train_set.size(),
      [&](const std::vector<std::size_t>& batch) {
        m.train_mode = true;
        std::vector<Tensor> rows;
        std::vector<int> labels;
        for (std::size_t i : batch) {
          rows.push_back(m.forward(train_set[i].code_seq));
          labels.push_back(train_set[i].label);
        }
        Tensor logits = rows.size() == 1 ? rows[0] : concat(rows, 0);
        return cross_entropy(softmax_t(logits, 1.0), labels);
      },
      [&] {
        m.train_mode = false;
        return evaluate_teacher_a(m, val_set);
      });
}

FitResult train_teacher_b(const std::vector<prep::PreparedSample>& train_set,
                          const std::vector<prep::PreparedSample>& val_set,
                          const model::TeacherBConfig& mcfg, const TrainConfig& tcfg) {
  check_splits(train_set, val_set);
  model::TeacherB m(mcfg, tcfg.seed);
  return run_epochs(
      m.params, tcfg, train_set.size(),
      [&](const std::vector<std::size_t>& batch) {
        m.train_mode = true;
        std::vector<Tensor> rows;
        std::vector<int> labels;
        for (std::size_t i : batch) {
          rows.push_back(m.forward(train_set[i].struct_graph));
          labels.push_back(train_set[i].label);
        }
        Tensor logits = rows.size() == 1 ? rows[0] : concat(rows, 0);
        return cross_entropy(softmax_t(logits, 1.0), labels);
      },
      [&] {
        m.train_mode = false;
        return evaluate_teacher_b(m, val_set);
      });
}

FitResult train_student(const std::vector<prep::PreparedSample>& train_set,
                        const std::vector<prep::PreparedSample>& val_set,
                        const model::StudentConfig& mcfg, const TrainConfig& tcfg,
                        const DistillationWeights& weights, model::TeacherA* teacher_a,
                        model::TeacherB* teacher_b) {
  check_splits(train_set, val_set);
  const DistillationWeights w = resolve_weights(weights, tcfg.ablation);

  // Frozen teachers with dropout off produce constant logits; compute them
  // once per sample instead of once per epoch.
  std::vector<Array> ta_cache, tb_cache;
  if (w.delta > 0.0) {
    if (!teacher_a) throw ConfigError("train_student: ablation needs a teacher-A checkpoint");
    teacher_a->train_mode = false;
    ta_cache.reserve(train_set.size());
    for (const auto& s : train_set) ta_cache.push_back(teacher_a->forward(s.code_seq).value());
  }
  if (w.eta > 0.0) {
    if (!teacher_b) throw ConfigError("train_student: ablation needs a teacher-B checkpoint");
    teacher_b->train_mode = false;
    tb_cache.reserve(train_set.size());
    for (const auto& s : train_set) tb_cache.push_back(teacher_b->forward(s.struct_graph).value());
  }

  model::Student m(mcfg, tcfg.seed);
  return run_epochs(
      m.params, tcfg, train_set.size(),
      [&](const std::vector<std::size_t>& batch) {
        std::vector<bpe::TokenSequence> seqs;
        std::vector<int> labels;
        for (std::size_t i : batch) {
          seqs.push_back(train_set[i].code_seq);
          labels.push_back(train_set[i].label);
        }
        auto out = m.forward_batch(seqs);
        const Index b = static_cast<Index>(batch.size());
        Tensor ta, tb;
        if (w.delta > 0.0) {
          Array rows(b * 2);
          for (Index i = 0; i < b; ++i) {
            rows[2 * i] = ta_cache[batch[static_cast<std::size_t>(i)]][0];
            rows[2 * i + 1] = ta_cache[batch[static_cast<std::size_t>(i)]][1];
          }
          ta = Tensor::from_array({b, 2}, std::move(rows));
        }
        if (w.eta > 0.0) {
          Array rows(b * 2);
          for (Index i = 0; i < b; ++i) {
            rows[2 * i] = tb_cache[batch[static_cast<std::size_t>(i)]][0];
            rows[2 * i + 1] = tb_cache[batch[static_cast<std::size_t>(i)]][1];
          }
          tb = Tensor::from_array({b, 2}, std::move(rows));
        }
        return student_loss(out.cls, out.dia, out.dib, ta.defined() ? &ta : nullptr,
                            tb.defined() ? &tb : nullptr, labels, w);
      },
      [&] { return evaluate_student(m, val_set); });
}

Prediction predict(model::Student& m, const bpe::TokenSequence& seq) {
  auto out = m.forward(seq);
  const Tensor probs = softmax_t(out.cls, 1.0);
  Prediction p;
  p.p_safe = probs.value()[0];
  p.p_vulnerable = probs.value()[1];
  p.label = p.p_vulnerable > p.p_safe ? 1 : 0;
  return p;
}

eval::MetricsReport evaluate_student(model::Student& m,
                                     const std::vector<prep::PreparedSample>& samples) {
  std::vector<int> preds;
  std::vector<Real> p_vuln;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t end = std::min(samples.size(), start + kChunk);
    std::vector<bpe::TokenSequence> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(samples[i].code_seq);
    auto out = m.forward_batch(seqs);
    auto chunk = argmax_labels(out.cls, &p_vuln);
    preds.insert(preds.end(), chunk.begin(), chunk.end());
  }
  return report_from(samples, preds, p_vuln);
}

eval::MetricsReport evaluate_teacher_a(model::TeacherA& m,
                                       const std::vector<prep::PreparedSample>& samples) {
  const bool was_training = m.train_mode;
  m.train_mode = false;
  std::vector<int> preds;
  std::vector<Real> p_vuln;
  for (const auto& s : samples) {
    auto chunk = argmax_labels(m.forward(s.code_seq), &p_vuln);
    preds.push_back(chunk[0]);
  }
  m.train_mode = was_training;
  return report_from(samples, preds, p_vuln);
}

eval::MetricsReport evaluate_teacher_b(model::TeacherB& m,
                                       const std::vector<prep::PreparedSample>& samples) {
  std::vector<int> preds;
  std::vector<Real> p_vuln;
  for (const auto& s : samples) {
    auto chunk = argmax_labels(m.forward(s.struct_graph), &p_vuln);
    preds.push_back(chunk[0]);
  }
  return report_from(samples, preds, p_vuln);
}

}  // namespace safe::train
