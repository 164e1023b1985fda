#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "safe/error.hpp"

namespace safe::bpe {

// Reserved special-token ids. They occupy the bottom of every vocabulary.
inline constexpr std::int64_t kPad = 0;
inline constexpr std::int64_t kCls = 1;
inline constexpr std::int64_t kSep = 2;
inline constexpr std::int64_t kDia = 3;
inline constexpr std::int64_t kDib = 4;
inline constexpr std::int64_t kUnk = 5;
inline constexpr std::int64_t kNumSpecials = 6;

/// Byte-pair vocabulary. Ids are contiguous from 0: the six specials, then
/// the base byte alphabet in byte order, then one id per merge output (in
/// merge order, skipping strings that already have an id). Replaying
/// `merges` over `alphabet` regenerates `id_of` exactly, which is what the
/// loader does.
struct Vocab {
  std::map<std::string, std::int64_t> id_of;
  std::vector<std::string> token_of;  // inverse table, indexed by id
  std::vector<std::pair<std::string, std::string>> merges;
  std::vector<std::string> alphabet;  // single-byte symbols, sorted

  std::int64_t size() const { return static_cast<std::int64_t>(token_of.size()); }
  std::int64_t lookup(const std::string& symbol) const;
};

/// Greedy highest-count pair merging over whitespace-pre-split words until
/// the vocabulary reaches vocab_size or no pair occurs twice. Ties break
/// lexicographically by pair. vocab_size must cover the specials plus the
/// corpus byte alphabet; at exactly that budget the result has zero merges.
Vocab train_bpe(const std::vector<std::string>& corpus, std::int64_t vocab_size);

/// Applies merges in order (per word; whitespace symbols block cross-word
/// matches), then maps symbols to ids, [unk] for anything outside the
/// vocabulary. decode(encode(x)) == x whenever every byte of x is in the
/// training alphabet.
std::vector<std::int64_t> encode(const Vocab& v, const std::string& text);

/// Concatenates the token strings; exact inverse of encode over the
/// training alphabet.
std::string decode(const Vocab& v, const std::vector<std::int64_t>& ids);

/// Fixed-length model input: [cls], body (truncated to l-4), [dia], [dib],
/// [sep], then [pad] up to l.
struct TokenSequence {
  std::vector<std::int64_t> ids;
  std::int64_t cls_pos = 0;
  std::int64_t dia_pos = 0;
  std::int64_t dib_pos = 0;
  std::int64_t sep_pos = 0;
  std::int64_t attn_len = 0;  // count of non-pad positions
};

TokenSequence assemble(const Vocab& v, const std::vector<std::int64_t>& body_ids,
                       std::int64_t l);

// Vocab file: JSON {"alphabet": [...], "merges": [[a,b],...],
// "specials": {...}, "version": 1}.
std::string vocab_to_json(const Vocab& v);
Vocab vocab_from_json(const std::string& text);
void save_vocab(const Vocab& v, const std::string& path);
Vocab load_vocab(const std::string& path);

/// FNV-1a over the canonical JSON rendering; ties checkpoints to the
/// vocabulary they were trained with.
std::string vocab_hash(const Vocab& v);

}  // namespace safe::bpe
