#include "safe/bpe.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace safe::bpe {

namespace {

using Word = std::vector<std::string>;

const char* kSpecialNames[kNumSpecials] = {"[pad]", "[cls]", "[sep]",
                                           "[dia]", "[dib]", "[unk]"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (is_space(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

Word symbolize(const std::string& word) {
  Word w;
  w.reserve(word.size());
  for (char c : word) w.emplace_back(1, c);
  return w;
}

void add_token(Vocab& v, const std::string& s) {
  if (v.id_of.count(s)) return;
  v.id_of[s] = v.size();
  v.token_of.push_back(s);
}

// Left-to-right single-pass application of one merge inside a word.
bool apply_merge(Word& w, const std::string& a, const std::string& b) {
  bool applied = false;
  Word out;
  out.reserve(w.size());
  std::size_t i = 0;
  while (i < w.size()) {
    if (i + 1 < w.size() && w[i] == a && w[i + 1] == b) {
      out.push_back(a + b);
      i += 2;
      applied = true;
    } else {
      out.push_back(w[i]);
      ++i;
    }
  }
  if (applied) w = std::move(out);
  return applied;
}

// Vocab symbols are raw byte strings (a multi-byte UTF-8 character starts
// out as several one-byte symbols), so the JSON encoding maps each byte to
// the U+0000..U+00FF codepoint and back.
std::string latin1_escape(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char b : raw) {
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
    } else {
      out.push_back(static_cast<char>(0xC0 | (b >> 6)));
      out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
    }
  }
  return out;
}

std::string latin1_unescape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      i += 1;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < text.size()) {
      const unsigned char c2 = static_cast<unsigned char>(text[i + 1]);
      const unsigned int code = ((c & 0x1Fu) << 6) | (c2 & 0x3Fu);
      if (code > 0xFF) throw FormatError("vocab: symbol codepoint above U+00FF");
      out.push_back(static_cast<char>(code));
      i += 2;
    } else {
      throw FormatError("vocab: malformed symbol escape");
    }
  }
  return out;
}

}  // namespace

std::int64_t Vocab::lookup(const std::string& symbol) const {
  auto it = id_of.find(symbol);
  return it == id_of.end() ? kUnk : it->second;
}

Vocab train_bpe(const std::vector<std::string>& corpus, std::int64_t vocab_size) {
  // Dedupe words; frequencies weight the pair counts. The alphabet covers
  // every corpus byte including whitespace, so whitespace encodes as plain
  // symbols even though merges are only ever counted within words.
  std::map<std::string, long> word_freq;
  std::set<char> bytes;
  for (const auto& line : corpus) {
    for (char c : line) bytes.insert(c);
    for (auto& w : split_words(line)) ++word_freq[w];
  }
  if (word_freq.empty()) throw DataError("train_bpe: empty corpus");

  Vocab v;
  for (const char* s : kSpecialNames) add_token(v, s);
  for (char c : bytes) v.alphabet.emplace_back(1, c);
  for (const auto& s : v.alphabet) add_token(v, s);

  if (vocab_size < v.size())
    throw ConfigError("train_bpe: vocab_size " + std::to_string(vocab_size) +
                      " below specials+alphabet " + std::to_string(v.size()));

  std::vector<std::pair<Word, long>> words;
  words.reserve(word_freq.size());
  for (const auto& [text, freq] : word_freq) words.emplace_back(symbolize(text), freq);

  while (v.size() < vocab_size) {
    // std::map iteration is ordered by pair, so the first strictly-greater
    // count wins and ties resolve to the lexicographically smallest pair.
    std::map<std::pair<std::string, std::string>, long> counts;
    for (const auto& [w, freq] : words)
      for (std::size_t i = 0; i + 1 < w.size(); ++i)
        counts[{w[i], w[i + 1]}] += freq;
    const std::pair<std::string, std::string>* best = nullptr;
    long best_count = 1;  // a pair must repeat to merge
    for (const auto& [pair, count] : counts)
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    if (!best) break;
    const auto [a, b] = *best;
    for (auto& [w, freq] : words) apply_merge(w, a, b);
    v.merges.emplace_back(a, b);
    add_token(v, a + b);
  }
  return v;
}

std::vector<std::int64_t> encode(const Vocab& v, const std::string& text) {
  // Merges never contain whitespace (training pre-splits on it), so the
  // whitespace symbols in the stream block cross-word matches and one pass
  // over the whole text equals per-word application.
  Word w = symbolize(text);
  std::unordered_set<std::string> present(w.begin(), w.end());
  for (const auto& [a, b] : v.merges) {
    if (!present.count(a) || !present.count(b)) continue;
    if (apply_merge(w, a, b)) present.insert(a + b);
  }
  std::vector<std::int64_t> ids;
  ids.reserve(w.size());
  for (const auto& s : w) ids.push_back(v.lookup(s));
  return ids;
}

std::string decode(const Vocab& v, const std::vector<std::int64_t>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::int64_t id = ids[i];
    if (id < 0 || id >= v.size())
      throw DataError("decode: id " + std::to_string(id) + " out of range");
    out += v.token_of[static_cast<std::size_t>(id)];
  }
  return out;
}

TokenSequence assemble(const Vocab& v, const std::vector<std::int64_t>& body_ids,
                       std::int64_t l) {
  (void)v;
  if (l < 5)
    throw ConfigError("assemble: sequence length must be at least 5, got " +
                      std::to_string(l));
  const std::int64_t body = std::min<std::int64_t>(
      static_cast<std::int64_t>(body_ids.size()), l - 4);
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(l), kPad);
  seq.cls_pos = 0;
  seq.ids[0] = kCls;
  for (std::int64_t i = 0; i < body; ++i)
    seq.ids[static_cast<std::size_t>(1 + i)] = body_ids[static_cast<std::size_t>(i)];
  seq.dia_pos = 1 + body;
  seq.dib_pos = 2 + body;
  seq.sep_pos = 3 + body;
  seq.ids[static_cast<std::size_t>(seq.dia_pos)] = kDia;
  seq.ids[static_cast<std::size_t>(seq.dib_pos)] = kDib;
  seq.ids[static_cast<std::size_t>(seq.sep_pos)] = kSep;
  seq.attn_len = body + 4;
  return seq;
}

std::string vocab_to_json(const Vocab& v) {
  nlohmann::json j;
  j["version"] = 1;
  nlohmann::json alphabet = nlohmann::json::array();
  for (const auto& s : v.alphabet) alphabet.push_back(latin1_escape(s));
  j["alphabet"] = alphabet;
  j["merges"] = nlohmann::json::array();
  for (const auto& [a, b] : v.merges)
    j["merges"].push_back({latin1_escape(a), latin1_escape(b)});
  nlohmann::json specials;
  for (std::int64_t i = 0; i < kNumSpecials; ++i)
    specials[kSpecialNames[i]] = i;
  j["specials"] = specials;
  return j.dump();
}

Vocab vocab_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocab: invalid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"] != 1)
    throw FormatError("vocab: unsupported or missing version");
  if (!j.contains("alphabet") || !j.contains("merges"))
    throw FormatError("vocab: missing alphabet or merges");
  Vocab v;
  for (const char* s : kSpecialNames) add_token(v, s);
  for (const auto& s : j["alphabet"]) {
    v.alphabet.push_back(latin1_unescape(s.get<std::string>()));
    add_token(v, v.alphabet.back());
  }
  for (const auto& m : j["merges"]) {
    if (!m.is_array() || m.size() != 2) throw FormatError("vocab: malformed merge");
    const std::string a = latin1_unescape(m[0].get<std::string>());
    const std::string b = latin1_unescape(m[1].get<std::string>());
    v.merges.emplace_back(a, b);
    add_token(v, a + b);
  }
  return v;
}

void save_vocab(const Vocab& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocab file: " + path);
  out << vocab_to_json(v);
}

Vocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocab file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return vocab_from_json(ss.str());
}

std::string vocab_hash(const Vocab& v) {
  const std::string text = vocab_to_json(v);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace safe::bpe
