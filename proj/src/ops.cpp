#include "safe/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace safe {

namespace {

constexpr Real kLogFloor = 1e-12;

Tensor make_op(Shape shape, Array value, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> fn) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool needs_grad = false;
  for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
  n->requires_grad = needs_grad;
  if (needs_grad) {
    n->parents.reserve(inputs.size());
    for (auto& t : inputs) n->parents.push_back(t.node());
    n->backprop = std::move(fn);
  }
  return Tensor(std::move(n));
}

void push_grad(const NodePtr& p, const Array& g) {
  if (p->requires_grad) accumulate_grad(*p, g);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

ConstMatMap as_mat(const NodePtr& n) {
  return ConstMatMap(n->value.data(), n->shape[0], n->shape[1]);
}

Array flat(const Mat& m) {
  return Eigen::Map<const Array>(m.data(), m.size());
}

void require_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2)
    throw ShapeError(std::string(op) + ": expected 2-D tensor, got " +
                     shape_str(t.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), a.value() + b.value(), {a, b},
                 [an, bn](TensorNode& n) {
                   push_grad(an, n.grad);
                   push_grad(bn, n.grad);
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), a.value() - b.value(), {a, b},
                 [an, bn](TensorNode& n) {
                   push_grad(an, n.grad);
                   push_grad(bn, Array(-n.grad));
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), a.value() * b.value(), {a, b},
                 [an, bn](TensorNode& n) {
                   push_grad(an, Array(n.grad * bn->value));
                   push_grad(bn, Array(n.grad * an->value));
                 });
}

Tensor neg(const Tensor& a) {
  auto an = a.node();
  return make_op(a.shape(), Array(-a.value()), {a},
                 [an](TensorNode& n) { push_grad(an, Array(-n.grad)); });
}

Tensor scale(const Tensor& a, Real c) {
  auto an = a.node();
  return make_op(a.shape(), Array(a.value() * c), {a},
                 [an, c](TensorNode& n) { push_grad(an, Array(n.grad * c)); });
}

Tensor broadcast_add(const Tensor& x, const Tensor& row) {
  require_2d(x, "broadcast_add");
  const Index r = x.shape()[0], c = x.shape()[1];
  if (row.size() != c)
    throw ShapeError("broadcast_add: row length " + shape_str(row.shape()) +
                     " does not match columns of " + shape_str(x.shape()));
  Mat out = as_mat(x.node());
  Eigen::Map<const Eigen::RowVectorXd> rv(row.value().data(), c);
  out.rowwise() += rv;
  auto xn = x.node(), rn = row.node();
  return make_op(x.shape(), flat(out), {x, row}, [xn, rn, r, c](TensorNode& n) {
    push_grad(xn, n.grad);
    if (rn->requires_grad) {
      ConstMatMap g(n.grad.data(), r, c);
      Eigen::RowVectorXd rsum = g.colwise().sum();
      accumulate_grad(*rn, Eigen::Map<const Array>(rsum.data(), c));
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const Index m = a.shape()[0], n_ = b.shape()[1];
  Mat out = as_mat(a.node()) * as_mat(b.node());
  auto an = a.node(), bn = b.node();
  return make_op({m, n_}, flat(out), {a, b}, [an, bn, m, n_](TensorNode& n) {
    ConstMatMap g(n.grad.data(), m, n_);
    if (an->requires_grad) {
      Mat ga = g * as_mat(bn).transpose();
      accumulate_grad(*an, flat(ga));
    }
    if (bn->requires_grad) {
      Mat gb = as_mat(an).transpose() * g;
      accumulate_grad(*bn, flat(gb));
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const Index r = a.shape()[0], c = a.shape()[1];
  Mat out = as_mat(a.node()).transpose();
  auto an = a.node();
  return make_op({c, r}, flat(out), {a}, [an, r, c](TensorNode& n) {
    ConstMatMap g(n.grad.data(), c, r);
    Mat gt = g.transpose();
    push_grad(an, flat(gt));
  });
}

Tensor tanh(const Tensor& a) {
  auto an = a.node();
  return make_op(a.shape(), Array(a.value().tanh()), {a}, [an](TensorNode& n) {
    push_grad(an, Array(n.grad * (1.0 - n.value.square())));
  });
}

Tensor relu(const Tensor& a) {
  auto an = a.node();
  return make_op(a.shape(), Array(a.value().max(0.0)), {a}, [an](TensorNode& n) {
    push_grad(an, Array(n.grad * (n.value > 0.0).cast<Real>()));
  });
}

Tensor sum(const Tensor& a) {
  auto an = a.node();
  return make_op({1}, Array::Constant(1, a.value().sum()), {a},
                 [an](TensorNode& n) {
                   push_grad(an, Array::Constant(an->value.size(), n.grad[0]));
                 });
}

Tensor mean_axis(const Tensor& a, int axis) {
  require_2d(a, "mean_axis");
  if (axis != 0 && axis != 1) throw ShapeError("mean_axis: axis must be 0 or 1");
  const Index r = a.shape()[0], c = a.shape()[1];
  auto an = a.node();
  if (axis == 0) {
    Eigen::RowVectorXd m = as_mat(an).colwise().mean();
    return make_op({1, c}, Eigen::Map<const Array>(m.data(), c), {a},
                   [an, r, c](TensorNode& n) {
                     if (!an->requires_grad) return;
                     Mat g(r, c);
                     Eigen::Map<const Eigen::RowVectorXd> gr(n.grad.data(), c);
                     g.rowwise() = gr / static_cast<Real>(r);
                     accumulate_grad(*an, flat(g));
                   });
  }
  Eigen::VectorXd m = as_mat(an).rowwise().mean();
  return make_op({r, 1}, Eigen::Map<const Array>(m.data(), r), {a},
                 [an, r, c](TensorNode& n) {
                   if (!an->requires_grad) return;
                   Mat g(r, c);
                   Eigen::Map<const Eigen::VectorXd> gc(n.grad.data(), r);
                   g.colwise() = gc / static_cast<Real>(c);
                   accumulate_grad(*an, flat(g));
                 });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_2d(p, "concat");
  const Index fixed = parts[0].shape()[axis == 0 ? 1 : 0];
  Index total = 0;
  for (const auto& p : parts) {
    const Index f = p.shape()[axis == 0 ? 1 : 0];
    if (f != fixed)
      throw ShapeError("concat: incompatible part shape " + shape_str(p.shape()) +
                       " vs " + shape_str(parts[0].shape()));
    total += p.shape()[axis];
  }
  const Index rows = axis == 0 ? total : fixed;
  const Index cols = axis == 0 ? fixed : total;
  Mat out(rows, cols);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    const Index len = p.shape()[axis];
    offsets.push_back(off);
    if (axis == 0)
      out.middleRows(off, len) = as_mat(p.node());
    else
      out.middleCols(off, len) = as_mat(p.node());
    off += len;
  }
  std::vector<NodePtr> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op({rows, cols}, flat(out), parts,
                 [nodes, offsets, axis, rows, cols](TensorNode& n) {
                   ConstMatMap g(n.grad.data(), rows, cols);
                   for (std::size_t i = 0; i < nodes.size(); ++i) {
                     const auto& p = nodes[i];
                     if (!p->requires_grad) continue;
                     const Index len = p->shape[axis];
                     Mat gp = axis == 0 ? g.middleRows(offsets[i], len).eval()
                                        : g.middleCols(offsets[i], len).eval();
                     accumulate_grad(*p, flat(gp));
                   }
                 });
}

Tensor slice_rows(const Tensor& a, Index r0, Index r1) {
  require_2d(a, "slice_rows");
  const Index r = a.shape()[0], c = a.shape()[1];
  if (r0 < 0 || r1 > r || r0 >= r1)
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + "," +
                     std::to_string(r1) + ") invalid for " + shape_str(a.shape()));
  Mat out = as_mat(a.node()).middleRows(r0, r1 - r0);
  auto an = a.node();
  return make_op({r1 - r0, c}, flat(out), {a}, [an, r0, r1, r, c](TensorNode& n) {
    if (!an->requires_grad) return;
    Mat g = Mat::Zero(r, c);
    g.middleRows(r0, r1 - r0) = ConstMatMap(n.grad.data(), r1 - r0, c);
    accumulate_grad(*an, flat(g));
  });
}

Tensor slice_cols(const Tensor& a, Index c0, Index c1) {
  require_2d(a, "slice_cols");
  const Index r = a.shape()[0], c = a.shape()[1];
  if (c0 < 0 || c1 > c || c0 >= c1)
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") invalid for " + shape_str(a.shape()));
  Mat out = as_mat(a.node()).middleCols(c0, c1 - c0);
  auto an = a.node();
  return make_op({r, c1 - c0}, flat(out), {a}, [an, c0, c1, r, c](TensorNode& n) {
    if (!an->requires_grad) return;
    Mat g = Mat::Zero(r, c);
    g.middleCols(c0, c1 - c0) = ConstMatMap(n.grad.data(), r, c1 - c0);
    accumulate_grad(*an, flat(g));
  });
}

Tensor embedding(const Tensor& table, const std::vector<std::int64_t>& ids) {
  require_2d(table, "embedding");
  const Index v = table.shape()[0], d = table.shape()[1];
  for (auto id : ids)
    if (id < 0 || id >= v)
      throw DataError("embedding: id " + std::to_string(id) +
                      " out of range for table " + shape_str(table.shape()));
  const Index n_rows = static_cast<Index>(ids.size());
  Mat out(n_rows, d);
  auto tm = as_mat(table.node());
  for (Index i = 0; i < n_rows; ++i) out.row(i) = tm.row(ids[static_cast<std::size_t>(i)]);
  auto tn = table.node();
  return make_op({n_rows, d}, flat(out), {table}, [tn, ids, n_rows, d](TensorNode& n) {
    if (!tn->requires_grad) return;
    if (tn->grad.size() == 0) tn->grad = Array::Zero(tn->value.size());
    MatMap gt(tn->grad.data(), tn->shape[0], tn->shape[1]);
    ConstMatMap g(n.grad.data(), n_rows, d);
    for (Index i = 0; i < n_rows; ++i)
      gt.row(ids[static_cast<std::size_t>(i)]) += g.row(i);
  });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, Index k) {
  require_2d(x, "conv1d");
  require_2d(w, "conv1d");
  const Index t = x.shape()[0], d = x.shape()[1];
  if (k < 1 || t < k)
    throw ShapeError("conv1d: width " + std::to_string(k) + " invalid for input " +
                     shape_str(x.shape()));
  if (w.shape()[0] != k * d)
    throw ShapeError("conv1d: weight " + shape_str(w.shape()) +
                     " does not match width*dim " + std::to_string(k * d));
  const Index f = w.shape()[1];
  if (b.size() != f)
    throw ShapeError("conv1d: bias " + shape_str(b.shape()) + " vs filters " +
                     std::to_string(f));
  const Index steps = t - k + 1;
  // im2col: each output step sees k consecutive input rows flattened.
  Mat cols(steps, k * d);
  auto xm = as_mat(x.node());
  for (Index s = 0; s < steps; ++s)
    for (Index j = 0; j < k; ++j)
      cols.block(s, j * d, 1, d) = xm.row(s + j);
  Mat out = cols * as_mat(w.node());
  Eigen::Map<const Eigen::RowVectorXd> bias(b.value().data(), f);
  out.rowwise() += bias;
  auto xn = x.node(), wn = w.node(), bn = b.node();
  return make_op({steps, f}, flat(out), {x, w, b},
                 [xn, wn, bn, cols, k, d, f, steps, t](TensorNode& n) {
                   ConstMatMap g(n.grad.data(), steps, f);
                   if (wn->requires_grad) {
                     Mat gw = cols.transpose() * g;
                     accumulate_grad(*wn, flat(gw));
                   }
                   if (bn->requires_grad) {
                     Eigen::RowVectorXd gb = g.colwise().sum();
                     accumulate_grad(*bn, Eigen::Map<const Array>(gb.data(), f));
                   }
                   if (xn->requires_grad) {
                     Mat gcols = g * as_mat(wn).transpose();
                     Mat gx = Mat::Zero(t, d);
                     for (Index s = 0; s < steps; ++s)
                       for (Index j = 0; j < k; ++j)
                         gx.row(s + j) += gcols.block(s, j * d, 1, d);
                     accumulate_grad(*xn, flat(gx));
                   }
                 });
}

Tensor max_over_time(const Tensor& x) {
  require_2d(x, "max_over_time");
  const Index t = x.shape()[0], f = x.shape()[1];
  if (t < 1) throw ShapeError("max_over_time: empty time axis");
  auto xm = as_mat(x.node());
  Mat out(1, f);
  std::vector<Index> arg(static_cast<std::size_t>(f));
  for (Index c = 0; c < f; ++c) {
    Index best = 0;
    for (Index r = 1; r < t; ++r)
      if (xm(r, c) > xm(best, c)) best = r;
    arg[static_cast<std::size_t>(c)] = best;
    out(0, c) = xm(best, c);
  }
  auto xn = x.node();
  return make_op({1, f}, flat(out), {x}, [xn, arg, t, f](TensorNode& n) {
    if (!xn->requires_grad) return;
    Mat g = Mat::Zero(t, f);
    for (Index c = 0; c < f; ++c) g(arg[static_cast<std::size_t>(c)], c) = n.grad[c];
    accumulate_grad(*xn, flat(g));
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  require_2d(x, "layer_norm");
  const Index r = x.shape()[0], c = x.shape()[1];
  if (gamma.size() != c || beta.size() != c)
    throw ShapeError("layer_norm: gain/offset " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " vs columns of " + shape_str(x.shape()));
  auto xm = as_mat(x.node());
  Mat xhat(r, c);
  Eigen::VectorXd inv_std(r);
  for (Index i = 0; i < r; ++i) {
    const Real mu = xm.row(i).mean();
    const Real var = (xm.row(i).array() - mu).square().mean();
    const Real is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = (xm.row(i).array() - mu) * is;
  }
  Eigen::Map<const Eigen::RowVectorXd> gv(gamma.value().data(), c);
  Eigen::Map<const Eigen::RowVectorXd> bv(beta.value().data(), c);
  Mat out = (xhat.array().rowwise() * gv.array()).rowwise() + bv.array();
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return make_op({r, c}, flat(out), {x, gamma, beta},
                 [xn, gn, bn, xhat, inv_std, r, c](TensorNode& n) {
                   ConstMatMap g(n.grad.data(), r, c);
                   if (gn->requires_grad) {
                     Eigen::RowVectorXd gg = (g.array() * xhat.array()).colwise().sum();
                     accumulate_grad(*gn, Eigen::Map<const Array>(gg.data(), c));
                   }
                   if (bn->requires_grad) {
                     Eigen::RowVectorXd gb = g.colwise().sum();
                     accumulate_grad(*bn, Eigen::Map<const Array>(gb.data(), c));
                   }
                   if (xn->requires_grad) {
                     Eigen::Map<const Eigen::RowVectorXd> gv2(gn->value.data(), c);
                     Mat gx(r, c);
                     for (Index i = 0; i < r; ++i) {
                       Eigen::RowVectorXd dxhat =
                           (g.row(i).array() * gv2.array()).matrix();
                       const Real m1 = dxhat.mean();
                       const Real m2 = (dxhat.array() * xhat.row(i).array()).mean();
                       gx.row(i) = ((dxhat.array() - m1 - xhat.row(i).array() * m2) *
                                    inv_std(i))
                                       .matrix();
                     }
                     accumulate_grad(*xn, flat(gx));
                   }
                 });
}

Tensor softmax_t(const Tensor& logits, Real temperature) {
  if (temperature <= 0.0)
    throw ConfigError("softmax_t: temperature must be positive, got " +
                      std::to_string(temperature));
  const bool one_d = logits.shape().size() == 1;
  const Index r = one_d ? 1 : logits.shape()[0];
  const Index c = one_d ? logits.shape()[0] : logits.shape()[1];
  ConstMatMap lm(logits.value().data(), r, c);
  Mat p(r, c);
  for (Index i = 0; i < r; ++i) {
    Eigen::ArrayXd row = lm.row(i).array() / temperature;
    const Real mx = row.maxCoeff();
    Eigen::ArrayXd e = (row - mx).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  auto ln = logits.node();
  return make_op(logits.shape(), flat(p), {logits},
                 [ln, r, c, temperature](TensorNode& n) {
                   if (!ln->requires_grad) return;
                   ConstMatMap g(n.grad.data(), r, c);
                   ConstMatMap pm(n.value.data(), r, c);
                   Mat gx(r, c);
                   for (Index i = 0; i < r; ++i) {
                     const Real dot = (g.row(i).array() * pm.row(i).array()).sum();
                     gx.row(i) = (pm.row(i).array() * (g.row(i).array() - dot) /
                                  temperature)
                                     .matrix();
                   }
                   accumulate_grad(*ln, flat(gx));
                 });
}

Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  require_2d(probs, "cross_entropy");
  const Index b = probs.shape()[0], c = probs.shape()[1];
  if (static_cast<Index>(labels.size()) != b)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch " + shape_str(probs.shape()));
  for (int y : labels)
    if (y < 0 || y >= c)
      throw DataError("cross_entropy: label " + std::to_string(y) + " outside {0,1}");
  ConstMatMap pm(probs.value().data(), b, c);
  Real loss = 0.0;
  for (Index i = 0; i < b; ++i)
    loss -= std::log(std::max(pm(i, labels[static_cast<std::size_t>(i)]), kLogFloor));
  loss /= static_cast<Real>(b);
  auto pn = probs.node();
  return make_op({1}, Array::Constant(1, loss), {probs},
                 [pn, labels, b, c](TensorNode& n) {
                   if (!pn->requires_grad) return;
                   ConstMatMap pm2(pn->value.data(), b, c);
                   Mat g = Mat::Zero(b, c);
                   for (Index i = 0; i < b; ++i) {
                     const int y = labels[static_cast<std::size_t>(i)];
                     const Real p = pm2(i, y);
                     if (p >= kLogFloor)
                       g(i, y) = -n.grad[0] / (static_cast<Real>(b) * p);
                   }
                   accumulate_grad(*pn, flat(g));
                 });
}

Tensor kl_div(const Tensor& p, const Tensor& q) {
  require_2d(p, "kl_div");
  require_2d(q, "kl_div");
  require_same_shape(p, q, "kl_div");
  const Index b = p.shape()[0], c = p.shape()[1];
  ConstMatMap pm(p.value().data(), b, c);
  ConstMatMap qm(q.value().data(), b, c);
  for (Index i = 0; i < b; ++i) {
    const Real sp = pm.row(i).sum(), sq = qm.row(i).sum();
    if (std::abs(sp - 1.0) > 1e-6)
      throw DataError("kl_div: row " + std::to_string(i) + " of p sums to " +
                      std::to_string(sp) + ", not 1");
    if (std::abs(sq - 1.0) > 1e-6)
      throw DataError("kl_div: row " + std::to_string(i) + " of q sums to " +
                      std::to_string(sq) + ", not 1");
  }
  Real value = 0.0;
  for (Index i = 0; i < b; ++i)
    for (Index j = 0; j < c; ++j) {
      const Real qv = qm(i, j);
      if (qv > 0.0)
        value += qv * (std::log(std::max(qv, kLogFloor)) -
                       std::log(std::max(pm(i, j), kLogFloor)));
    }
  value /= static_cast<Real>(b);
  // The teacher distribution q is a fixed target: only p is a parent.
  auto pn = p.node();
  Mat qcopy = qm;
  return make_op({1}, Array::Constant(1, value), {p},
                 [pn, qcopy, b, c](TensorNode& n) {
                   if (!pn->requires_grad) return;
                   ConstMatMap pm2(pn->value.data(), b, c);
                   Mat g = Mat::Zero(b, c);
                   for (Index i = 0; i < b; ++i)
                     for (Index j = 0; j < c; ++j) {
                       const Real pv = pm2(i, j), qv = qcopy(i, j);
                       if (qv > 0.0 && pv >= kLogFloor)
                         g(i, j) = -n.grad[0] * qv / (static_cast<Real>(b) * pv);
                     }
                   accumulate_grad(*pn, flat(g));
                 });
}

Tensor dropout(const Tensor& x, Real rate, std::mt19937_64& rng, bool train) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (!train || rate == 0.0) return x;
  const Real keep = 1.0 - rate;
  Array mask(x.size());
  for (Index i = 0; i < x.size(); ++i)
    mask[i] = uniform_real(rng) < keep ? 1.0 / keep : 0.0;
  auto xn = x.node();
  return make_op(x.shape(), Array(x.value() * mask), {x},
                 [xn, mask](TensorNode& n) {
                   push_grad(xn, Array(n.grad * mask));
                 });
}

Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v,
                      int heads, std::vector<Mat>* probs_out) {
  require_2d(q, "attention_core");
  require_same_shape(q, k, "attention_core");
  require_same_shape(q, v, "attention_core");
  const Index a = q.shape()[0], d = q.shape()[1];
  if (heads < 1 || d % heads != 0)
    throw ShapeError("attention_core: model dim " + std::to_string(d) +
                     " not divisible by " + std::to_string(heads) + " heads");
  const Index dh = d / heads;
  const Real inv_sqrt = 1.0 / std::sqrt(static_cast<Real>(dh));
  auto qm = as_mat(q.node());
  auto km = as_mat(k.node());
  auto vm = as_mat(v.node());
  Mat out(a, d);
  std::vector<Mat> probs(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Index off = h * dh;
    Mat s = qm.middleCols(off, dh) * km.middleCols(off, dh).transpose() * inv_sqrt;
    Mat p(a, a);
    for (Index i = 0; i < a; ++i) {
      Eigen::ArrayXd row = s.row(i).array();
      const Real mx = row.maxCoeff();
      Eigen::ArrayXd e = (row - mx).exp();
      p.row(i) = (e / e.sum()).matrix();
    }
    out.middleCols(off, dh) = p * vm.middleCols(off, dh);
    probs[static_cast<std::size_t>(h)] = std::move(p);
  }
  if (probs_out) *probs_out = probs;
  auto qn = q.node(), kn = k.node(), vn = v.node();
  return make_op({a, d}, flat(out), {q, k, v},
                 [qn, kn, vn, probs, heads, a, d, dh, inv_sqrt](TensorNode& n) {
                   ConstMatMap g(n.grad.data(), a, d);
                   Mat gq = Mat::Zero(a, d), gk = Mat::Zero(a, d), gv = Mat::Zero(a, d);
                   auto qm2 = as_mat(qn);
                   auto km2 = as_mat(kn);
                   auto vm2 = as_mat(vn);
                   for (int h = 0; h < heads; ++h) {
                     const Index off = h * dh;
                     const Mat& p = probs[static_cast<std::size_t>(h)];
                     Mat go = g.middleCols(off, dh);
                     gv.middleCols(off, dh) = p.transpose() * go;
                     Mat gp = go * vm2.middleCols(off, dh).transpose();
                     Mat gs(a, a);
                     for (Index i = 0; i < a; ++i) {
                       const Real dot = (gp.row(i).array() * p.row(i).array()).sum();
                       gs.row(i) = (p.row(i).array() * (gp.row(i).array() - dot)).matrix();
                     }
                     gq.middleCols(off, dh) = gs * km2.middleCols(off, dh) * inv_sqrt;
                     gk.middleCols(off, dh) = gs.transpose() * qm2.middleCols(off, dh) * inv_sqrt;
                   }
                   push_grad(qn, flat(gq));
                   push_grad(kn, flat(gk));
                   push_grad(vn, flat(gv));
                 });
}

}  // namespace safe
