#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "safe/bpe.hpp"
#include "safe/ops.hpp"
#include "safe/tensor.hpp"
#include "safe/token_graph.hpp"

namespace safe::model {

enum class Head { cls, dia, dib, teacherA, teacherB };

/// A two-class logit pair read off one output head.
struct Logits {
  std::array<Real, 2> values{0.0, 0.0};
  Head head = Head::cls;
};

/// Extracts and validates (finite values) a [1×2] tensor row.
Logits to_logits(const Tensor& t, Head head);

// Deterministic initializers built on the raw mt19937_64 stream so results
// are identical across standard libraries.
Tensor uniform_init(const Shape& shape, Real limit, std::mt19937_64& rng);
Tensor xavier_init(Index fan_in, Index fan_out, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Teacher-A: convolutional token-sequence classifier

struct TeacherAConfig {
  std::int64_t vocab_size = 0;
  Index embed_dim = 64;
  std::vector<Index> filter_widths = {3, 4, 5};
  Index filters_per_width = 32;
  Real dropout_rate = 0.1;

  void validate() const;
};

/// Embed, run one valid 1-D convolution per filter width, tanh,
/// max-over-time, concatenate, dropout (train mode only), affine to 2
/// logits. Sequences shorter than the widest filter are padded internally.
struct TeacherA {
  TeacherAConfig cfg;
  ParamMap params;
  bool train_mode = false;
  std::mt19937_64 dropout_rng{0};

  TeacherA(TeacherAConfig config, std::uint64_t seed);

  Tensor forward(const bpe::TokenSequence& seq);  // [1×2]
};

// ---------------------------------------------------------------------------
// Teacher-B: graph network over the token graph

struct TeacherBConfig {
  std::int64_t vocab_size = 0;
  Index embed_dim = 64;
  Index gnn_layers = 2;
  Index hidden_dim = 64;
  int window = 5;

  void validate() const;
};

/// Node features are embeddings; each layer computes
/// H <- relu(Ahat·H·W + H) with Ahat the symmetrically degree-normalized
/// adjacency (self-loops included). Readout concatenates the mean and max
/// over nodes; an empty graph reads out zeros.
struct TeacherB {
  TeacherBConfig cfg;
  ParamMap params;
  bool train_mode = false;

  TeacherB(TeacherBConfig config, std::uint64_t seed);

  Tensor forward(const graph::TokenGraph& g);  // [1×2]
};

// ---------------------------------------------------------------------------
// Student: transformer encoder with cls/dia/dib heads

struct StudentConfig {
  std::int64_t vocab_size = 0;
  Index embed_dim = 64;
  Index layers = 4;
  Index heads = 4;
  Index ffn_dim = 256;
  Index seq_len = 512;

  void validate() const;
};

struct StudentOutput {
  Tensor cls;  // [B×2]
  Tensor dia;
  Tensor dib;
};

// Per-layer, per-sample, per-head attention matrices; test instrumentation.
struct StudentTrace {
  std::vector<std::vector<std::vector<Mat>>> attention;
};

/// Token + learned positional embeddings, then `layers` encoder blocks:
/// M = LN(MHA(H) + H), H = LN(FFN(M) + M), post-norm order. Only the
/// attn_len prefix of each sequence is computed; pad positions are never
/// attended to (equivalent to masking their scores at -inf) and never reach
/// the heads. Three affine heads read the cls/dia/dib positions of the last
/// layer.
struct Student {
  StudentConfig cfg;
  ParamMap params;

  Student(StudentConfig config, std::uint64_t seed);

  StudentOutput forward(const bpe::TokenSequence& seq, StudentTrace* trace = nullptr);
  StudentOutput forward_batch(std::span<const bpe::TokenSequence> seqs,
                              StudentTrace* trace = nullptr);
};

}  // namespace safe::model
