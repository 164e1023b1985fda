#include "safe/corpusgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

namespace safe::corpus {

namespace {

using Rng = std::mt19937_64;

const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v = {"scan", "read", "fill",  "merge", "pack",
                                             "load", "sync", "push",  "fetch", "mix"};
  return v;
}
const std::vector<std::string>& nouns() {
  static const std::vector<std::string> v = {"buffer", "table", "queue",  "block", "frame",
                                             "chunk",  "cache", "window", "record", "slot"};
  return v;
}
const std::vector<std::string>& array_names() {
  static const std::vector<std::string> v = {"buf", "data", "arr", "items", "bytes", "src"};
  return v;
}
const std::vector<std::string>& bound_names() {
  static const std::vector<std::string> v = {"n", "len", "count", "limit", "total"};
  return v;
}
const std::vector<std::string>& acc_names() {
  static const std::vector<std::string> v = {"acc", "sum", "out", "res", "val"};
  return v;
}
const std::vector<std::string>& index_names() {
  static const std::vector<std::string> v = {"i", "j", "k", "idx", "pos"};
  return v;
}
const std::vector<std::string>& flag_names() {
  static const std::vector<std::string> v = {"flag", "mode", "state", "level", "opt"};
  return v;
}
const std::vector<std::string>& handle_names() {
  static const std::vector<std::string> v = {"h", "fd", "handle", "res", "slot"};
  return v;
}
const std::vector<std::string>& value_names() {
  static const std::vector<std::string> v = {"v", "x", "tmp", "cur", "item"};
  return v;
}
// acquire/release pairs stay consistent within one sample
const std::vector<std::array<std::string, 3>>& resource_apis() {
  static const std::vector<std::array<std::string, 3>> v = {
      {"acquire_handle", "release_handle", "consume"},
      {"open_res", "close_res", "process"},
      {"grab_slot", "drop_slot", "apply_op"},
      {"lock_region", "unlock_region", "touch"}};
  return v;
}

std::string pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[rng() % pool.size()];
}

std::string pick_distinct(Rng& rng, const std::vector<std::string>& pool,
                          std::set<std::string>& used) {
  std::string s = pick(rng, pool);
  while (used.count(s)) s = pick(rng, pool);
  used.insert(s);
  return s;
}

long pick_const(Rng& rng, long lo, long hi) {
  return lo + static_cast<long>(rng() % static_cast<unsigned long>(hi - lo + 1));
}

std::string fn_name(Rng& rng) { return pick(rng, verbs()) + "_" + pick(rng, nouns()); }

std::string gen_loop_bound(Rng& rng, bool vulnerable) {
  std::set<std::string> used;
  const std::string fn = fn_name(rng);
  const std::string buf = pick_distinct(rng, array_names(), used);
  const std::string n = pick_distinct(rng, bound_names(), used);
  const std::string acc = pick_distinct(rng, acc_names(), used);
  const std::string i = pick_distinct(rng, index_names(), used);
  const long cap = pick_const(rng, 4, 64);
  const std::string tmp = pick_distinct(rng, value_names(), used);
  const bool filler = rng() % 2 == 0;

  std::string body;
  body += "int " + fn + "(int *" + buf + ", int " + n + ") {\n";
  body += "  int " + acc + " = 0;\n";
  if (filler) body += "  int " + tmp + " = " + n + " * 2;\n";
  body += "  int " + i + ";\n";
  if (vulnerable) {
    body += "  for (" + i + " = 0; " + i + " <= " + n + "; " + i + " = " + i + " + 1) {\n";
    body += "    " + acc + " = " + acc + " + " + buf + "[" + i + "];\n";
    body += "  }\n";
  } else {
    body += "  for (" + i + " = 0; " + i + " < " + n + "; " + i + " = " + i + " + 1) {\n";
    body += "    if (" + i + " < " + std::to_string(cap) + ") {\n";
    body += "      " + acc + " = " + acc + " + " + buf + "[" + i + "];\n";
    body += "    }\n";
    body += "  }\n";
  }
  body += "  return " + acc + ";\n}";
  return body;
}

std::string gen_branch_use(Rng& rng, bool vulnerable) {
  std::set<std::string> used;
  const std::string fn = fn_name(rng);
  const std::string flag = pick_distinct(rng, flag_names(), used);
  const std::string v = pick_distinct(rng, value_names(), used);
  const std::string out = pick_distinct(rng, acc_names(), used);
  const long k1 = pick_const(rng, 1, 32);
  const long k2 = pick_const(rng, 1, 32);

  std::string body;
  body += "int " + fn + "(int " + flag + ", int " + v + ") {\n";
  body += "  int " + out + ";\n";
  body += "  if (" + flag + " > 0) {\n";
  body += "    " + out + " = " + v + " + " + std::to_string(k1) + ";\n";
  body += "  }";
  if (!vulnerable) {
    body += " else {\n";
    body += "    " + out + " = " + std::to_string(k2) + ";\n";
    body += "  }";
  }
  body += "\n  return " + out + ";\n}";
  return body;
}

std::string gen_resource_leak(Rng& rng, bool vulnerable) {
  std::set<std::string> used;
  const std::string fn = fn_name(rng);
  const std::string n = pick_distinct(rng, bound_names(), used);
  const std::string h = pick_distinct(rng, handle_names(), used);
  const std::string r = pick_distinct(rng, acc_names(), used);
  const auto api = resource_apis()[rng() % resource_apis().size()];
  const long k1 = pick_const(rng, 1, 16);

  std::string body;
  body += "int " + fn + "(int " + n + ") {\n";
  body += "  int " + h + " = " + api[0] + "(" + n + ");\n";
  body += "  int " + r + " = 0;\n";
  body += "  if (" + n + " < " + std::to_string(k1) + ") {\n";
  if (!vulnerable) body += "    " + api[1] + "(" + h + ");\n";
  body += "    return 0 - 1;\n";
  body += "  }\n";
  body += "  " + r + " = " + api[2] + "(" + h + ", " + n + ");\n";
  body += "  " + api[1] + "(" + h + ");\n";
  body += "  return " + r + ";\n}";
  return body;
}

std::string gen_index_clamp(Rng& rng, bool vulnerable) {
  std::set<std::string> used;
  const std::string fn = fn_name(rng);
  const std::string p = pick_distinct(rng, array_names(), used);
  const std::string n = pick_distinct(rng, bound_names(), used);
  const std::string idx = pick_distinct(rng, index_names(), used);
  const std::string v = pick_distinct(rng, value_names(), used);
  const long cap = pick_const(rng, 4, 64);
  const long off = pick_const(rng, 1, 64);

  std::string body;
  body += "int " + fn + "(int *" + p + ", int " + n + ") {\n";
  if (vulnerable)
    body += "  int " + idx + " = " + n + " + " + std::to_string(off) + ";\n";
  else
    body += "  int " + idx + " = " + n + " % " + std::to_string(cap) + ";\n";
  body += "  int " + v + " = " + p + "[" + idx + "];\n";
  body += "  return " + v + ";\n}";
  return body;
}

std::string gen_sample(Rng& rng, int family, bool vulnerable) {
  switch (family) {
    case kFamilyLoopBound: return gen_loop_bound(rng, vulnerable);
    case kFamilyBranchUse: return gen_branch_use(rng, vulnerable);
    case kFamilyResourceLeak: return gen_resource_leak(rng, vulnerable);
    default: return gen_index_clamp(rng, vulnerable);
  }
}

}  // namespace

int family_of(const std::string& sample_id) {
  const auto dash = sample_id.rfind("-f");
  if (dash == std::string::npos) return 0;
  return std::atoi(sample_id.c_str() + dash + 2);
}

data::Dataset generate(std::uint64_t seed, int n, double vulnerable_ratio) {
  if (n < 10) throw ConfigError("corpus generate: n must be >= 10");
  if (!(vulnerable_ratio > 0.0 && vulnerable_ratio < 1.0))
    throw ConfigError("corpus generate: vulnerable_ratio must be in (0,1)");

  Rng rng(seed);
  const int nv = static_cast<int>(std::llround(n * vulnerable_ratio));
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < nv; ++i) labels[static_cast<std::size_t>(i)] = 1;
  for (std::size_t i = labels.size(); i > 1; --i)
    std::swap(labels[i - 1], labels[rng() % i]);

  std::vector<data::CodeSample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int family = 1 + static_cast<int>(rng() % 4);
    const bool vulnerable = labels[static_cast<std::size_t>(i)] == 1;
    char id[32];
    std::snprintf(id, sizeof(id), "s%06d-f%d", i, family);
    samples.push_back({id, gen_sample(rng, family, vulnerable), vulnerable ? 1 : 0});
  }

  data::Dataset ds;
  ds.name = "synthetic";
  const int n_train = static_cast<int>(std::llround(n * 0.70));
  const int n_val = static_cast<int>(std::llround(n * 0.15));
  for (int i = 0; i < n; ++i) {
    if (i < n_train)
      ds.train.push_back(samples[static_cast<std::size_t>(i)]);
    else if (i < n_train + n_val)
      ds.val.push_back(samples[static_cast<std::size_t>(i)]);
    else
      ds.test.push_back(samples[static_cast<std::size_t>(i)]);
  }
  return ds;
}

}  // namespace safe::corpus
