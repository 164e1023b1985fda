#include "safe/models.hpp"

#include <cmath>

namespace safe::model {

Logits to_logits(const Tensor& t, Head head) {
  if (t.size() != 2)
    throw ShapeError("to_logits: expected 2 values, got " + shape_str(t.shape()));
  Logits out;
  out.head = head;
  out.values = {t.value()[0], t.value()[1]};
  for (Real v : out.values)
    if (!std::isfinite(v)) throw InternalError("non-finite logit");
  return out;
}

Tensor uniform_init(const Shape& shape, Real limit, std::mt19937_64& rng) {
  Array a(shape_numel(shape));
  for (Index i = 0; i < a.size(); ++i)
    a[i] = (uniform_real(rng) * 2.0 - 1.0) * limit;
  return Tensor::from_array(shape, std::move(a), true);
}

Tensor xavier_init(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const Real limit = std::sqrt(6.0 / static_cast<Real>(fan_in + fan_out));
  return uniform_init({fan_in, fan_out}, limit, rng);
}

namespace {

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return broadcast_add(matmul(x, w), b);
}

}  // namespace

// ---------------------------------------------------------------------------
// Teacher-A

void TeacherAConfig::validate() const {
  if (vocab_size <= 0) throw ConfigError("teacher-A: vocab_size must be positive");
  if (embed_dim <= 0) throw ConfigError("teacher-A: embed_dim must be positive");
  if (filter_widths.empty()) throw ConfigError("teacher-A: no filter widths");
  for (Index w : filter_widths)
    if (w < 1) throw ConfigError("teacher-A: filter width must be >= 1");
  if (filters_per_width <= 0) throw ConfigError("teacher-A: filters_per_width must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("teacher-A: dropout_rate must be in [0,1)");
}

TeacherA::TeacherA(TeacherAConfig config, std::uint64_t seed) : cfg(std::move(config)) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  params["embed"] = uniform_init({cfg.vocab_size, cfg.embed_dim}, 0.05, rng);
  for (Index w : cfg.filter_widths) {
    const std::string tag = "conv" + std::to_string(w);
    params[tag + ".w"] = xavier_init(w * cfg.embed_dim, cfg.filters_per_width, rng);
    params[tag + ".b"] = Tensor::zeros({cfg.filters_per_width}, true);
  }
  const Index pooled = static_cast<Index>(cfg.filter_widths.size()) * cfg.filters_per_width;
  params["fc.w"] = xavier_init(pooled, 2, rng);
  params["fc.b"] = Tensor::zeros({2}, true);
  dropout_rng.seed(seed ^ 0x9e3779b97f4a7c15ULL);
}

Tensor TeacherA::forward(const bpe::TokenSequence& seq) {
  Index max_width = 1;
  for (Index w : cfg.filter_widths) max_width = std::max(max_width, w);
  std::vector<std::int64_t> ids(seq.ids.begin(),
                                seq.ids.begin() + static_cast<std::ptrdiff_t>(seq.attn_len));
  while (static_cast<Index>(ids.size()) < max_width) ids.push_back(bpe::kPad);

  Tensor h = embedding(params.at("embed"), ids);
  std::vector<Tensor> pooled;
  for (Index w : cfg.filter_widths) {
    const std::string tag = "conv" + std::to_string(w);
    Tensor c = conv1d(h, params.at(tag + ".w"), params.at(tag + ".b"), w);
    pooled.push_back(max_over_time(safe::tanh(c)));
  }
  Tensor features = pooled.size() == 1 ? pooled[0] : concat(pooled, 1);
  features = dropout(features, cfg.dropout_rate, dropout_rng, train_mode);
  return affine(features, params.at("fc.w"), params.at("fc.b"));
}

// ---------------------------------------------------------------------------
// Teacher-B

void TeacherBConfig::validate() const {
  if (vocab_size <= 0) throw ConfigError("teacher-B: vocab_size must be positive");
  if (embed_dim <= 0) throw ConfigError("teacher-B: embed_dim must be positive");
  if (gnn_layers < 1) throw ConfigError("teacher-B: gnn_layers must be >= 1");
  if (hidden_dim <= 0) throw ConfigError("teacher-B: hidden_dim must be positive");
  if (window < 2) throw ConfigError("teacher-B: window must be >= 2");
}

TeacherB::TeacherB(TeacherBConfig config, std::uint64_t seed) : cfg(config) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  params["embed"] = uniform_init({cfg.vocab_size, cfg.embed_dim}, 0.05, rng);
  for (Index z = 1; z <= cfg.gnn_layers; ++z) {
    const Index in_dim = z == 1 ? cfg.embed_dim : cfg.hidden_dim;
    params["gnn" + std::to_string(z) + ".w"] = xavier_init(in_dim, cfg.hidden_dim, rng);
  }
  params["fc.w"] = xavier_init(2 * cfg.hidden_dim, 2, rng);
  params["fc.b"] = Tensor::zeros({2}, true);
}

Tensor TeacherB::forward(const graph::TokenGraph& g) {
  if (g.node_count() == 0) {
    Tensor zeros = Tensor::zeros({1, 2 * cfg.hidden_dim});
    return affine(zeros, params.at("fc.w"), params.at("fc.b"));
  }
  const Index n = g.node_count();
  // symmetric degree normalization of the self-looped adjacency
  Mat ahat(n, n);
  Eigen::VectorXd dinv(n);
  for (Index i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(g.adjacency.row(i).sum());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      ahat(i, j) = g.adjacency(i, j) * dinv(i) * dinv(j);
  Tensor norm_adj = Tensor::from_array({n, n}, Eigen::Map<const Array>(ahat.data(), n * n));

  Tensor h = embedding(params.at("embed"), g.feature_init());
  for (Index z = 1; z <= cfg.gnn_layers; ++z) {
    const Tensor& w = params.at("gnn" + std::to_string(z) + ".w");
    Tensor pre = matmul(matmul(norm_adj, h), w);
    h = relu(w.shape()[0] == w.shape()[1] ? add(pre, h) : pre);
  }
  Tensor readout = concat({mean_axis(h, 0), max_over_time(h)}, 1);
  return affine(readout, params.at("fc.w"), params.at("fc.b"));
}

// ---------------------------------------------------------------------------
// Student

void StudentConfig::validate() const {
  if (vocab_size <= 0) throw ConfigError("student: vocab_size must be positive");
  if (embed_dim <= 0) throw ConfigError("student: embed_dim must be positive");
  if (heads < 1 || embed_dim % heads != 0)
    throw ConfigError("student: embed_dim " + std::to_string(embed_dim) +
                      " must divide by heads " + std::to_string(heads));
  if (layers < 0) throw ConfigError("student: layers must be >= 0");
  if (ffn_dim <= 0) throw ConfigError("student: ffn_dim must be positive");
  if (seq_len < 5) throw ConfigError("student: seq_len must be >= 5");
}

Student::Student(StudentConfig config, std::uint64_t seed) : cfg(config) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  params["tok_embed"] = uniform_init({cfg.vocab_size, cfg.embed_dim}, 0.05, rng);
  params["pos_embed"] = uniform_init({cfg.seq_len, cfg.embed_dim}, 0.05, rng);
  // Residual-branch outputs (wo, ffn.w2) start scaled by 1/sqrt(2*layers);
  // post-norm stacks train unstably from a plain Xavier start.
  const Real residual_scale =
      cfg.layers > 0 ? 1.0 / std::sqrt(2.0 * static_cast<Real>(cfg.layers)) : 1.0;
  for (Index z = 1; z <= cfg.layers; ++z) {
    const std::string tag = "layer" + std::to_string(z);
    for (const char* proj : {"wq", "wk", "wv"})
      params[tag + ".attn." + proj] = xavier_init(cfg.embed_dim, cfg.embed_dim, rng);
    params[tag + ".attn.wo"] = xavier_init(cfg.embed_dim, cfg.embed_dim, rng);
    params[tag + ".attn.wo"].value() *= residual_scale;
    for (const char* bias : {"bq", "bk", "bv", "bo"})
      params[tag + ".attn." + bias] = Tensor::zeros({cfg.embed_dim}, true);
    params[tag + ".ln1.gain"] = Tensor::full({cfg.embed_dim}, 1.0, true);
    params[tag + ".ln1.bias"] = Tensor::zeros({cfg.embed_dim}, true);
    params[tag + ".ffn.w1"] = xavier_init(cfg.embed_dim, cfg.ffn_dim, rng);
    params[tag + ".ffn.b1"] = Tensor::zeros({cfg.ffn_dim}, true);
    params[tag + ".ffn.w2"] = xavier_init(cfg.ffn_dim, cfg.embed_dim, rng);
    params[tag + ".ffn.w2"].value() *= residual_scale;
    params[tag + ".ffn.b2"] = Tensor::zeros({cfg.embed_dim}, true);
    params[tag + ".ln2.gain"] = Tensor::full({cfg.embed_dim}, 1.0, true);
    params[tag + ".ln2.bias"] = Tensor::zeros({cfg.embed_dim}, true);
  }
  for (const char* head : {"head_cls", "head_dia", "head_dib"}) {
    params[std::string(head) + ".w"] = xavier_init(cfg.embed_dim, 2, rng);
    params[std::string(head) + ".b"] = Tensor::zeros({2}, true);
  }
}

StudentOutput Student::forward(const bpe::TokenSequence& seq, StudentTrace* trace) {
  return forward_batch(std::span<const bpe::TokenSequence>(&seq, 1), trace);
}

StudentOutput Student::forward_batch(std::span<const bpe::TokenSequence> seqs,
                                     StudentTrace* trace) {
  if (seqs.empty()) throw ShapeError("student forward: empty batch");
  std::vector<std::int64_t> all_ids, all_pos;
  std::vector<Index> offsets;
  Index total = 0;
  for (const auto& seq : seqs) {
    if (static_cast<Index>(seq.ids.size()) != cfg.seq_len)
      throw ShapeError("student forward: sequence length " +
                       std::to_string(seq.ids.size()) + " != configured " +
                       std::to_string(cfg.seq_len));
    if (seq.attn_len < 4 || seq.attn_len > cfg.seq_len || seq.sep_pos >= cfg.seq_len ||
        seq.cls_pos >= seq.attn_len || seq.dia_pos >= seq.attn_len ||
        seq.dib_pos >= seq.attn_len)
      throw ShapeError("student forward: special-token positions outside the sequence");
    offsets.push_back(total);
    for (Index i = 0; i < seq.attn_len; ++i) {
      all_ids.push_back(seq.ids[static_cast<std::size_t>(i)]);
      all_pos.push_back(i);
    }
    total += seq.attn_len;
  }
  const Index b = static_cast<Index>(seqs.size());

  if (trace) trace->attention.assign(static_cast<std::size_t>(cfg.layers), {});

  // Pad rows are skipped entirely: attention over the attn_len prefix equals
  // masking pad scores at -inf, and the heads only read prefix positions.
  Tensor h = add(embedding(params.at("tok_embed"), all_ids),
                 embedding(params.at("pos_embed"), all_pos));
  for (Index z = 1; z <= cfg.layers; ++z) {
    const std::string tag = "layer" + std::to_string(z);
    Tensor q = affine(h, params.at(tag + ".attn.wq"), params.at(tag + ".attn.bq"));
    Tensor k = affine(h, params.at(tag + ".attn.wk"), params.at(tag + ".attn.bk"));
    Tensor v = affine(h, params.at(tag + ".attn.wv"), params.at(tag + ".attn.bv"));
    std::vector<Tensor> contexts;
    contexts.reserve(seqs.size());
    for (Index i = 0; i < b; ++i) {
      const Index off = offsets[static_cast<std::size_t>(i)];
      const Index len = seqs[static_cast<std::size_t>(i)].attn_len;
      std::vector<Mat>* probs = nullptr;
      std::vector<Mat> probs_store;
      if (trace) probs = &probs_store;
      Tensor ctx = attention_core(slice_rows(q, off, off + len),
                                  slice_rows(k, off, off + len),
                                  slice_rows(v, off, off + len),
                                  static_cast<int>(cfg.heads), probs);
      if (trace)
        trace->attention[static_cast<std::size_t>(z - 1)].push_back(std::move(probs_store));
      contexts.push_back(std::move(ctx));
    }
    Tensor mha = contexts.size() == 1 ? contexts[0] : concat(contexts, 0);
    mha = affine(mha, params.at(tag + ".attn.wo"), params.at(tag + ".attn.bo"));
    Tensor m = layer_norm(add(mha, h), params.at(tag + ".ln1.gain"),
                          params.at(tag + ".ln1.bias"));
    Tensor f = affine(relu(affine(m, params.at(tag + ".ffn.w1"), params.at(tag + ".ffn.b1"))),
                      params.at(tag + ".ffn.w2"), params.at(tag + ".ffn.b2"));
    h = layer_norm(add(f, m), params.at(tag + ".ln2.gain"), params.at(tag + ".ln2.bias"));
  }

  std::vector<std::int64_t> cls_rows, dia_rows, dib_rows;
  for (Index i = 0; i < b; ++i) {
    const Index off = offsets[static_cast<std::size_t>(i)];
    const auto& seq = seqs[static_cast<std::size_t>(i)];
    cls_rows.push_back(off + seq.cls_pos);
    dia_rows.push_back(off + seq.dia_pos);
    dib_rows.push_back(off + seq.dib_pos);
  }
  StudentOutput out;
  out.cls = affine(embedding(h, cls_rows), params.at("head_cls.w"), params.at("head_cls.b"));
  out.dia = affine(embedding(h, dia_rows), params.at("head_dia.w"), params.at("head_dia.b"));
  out.dib = affine(embedding(h, dib_rows), params.at("head_dib.w"), params.at("head_dib.b"));
  return out;
}

}  // namespace safe::model
