#include "safe/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace safe::train {

namespace {

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f64_le(std::string& out, Real v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

Real read_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  Real v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  nlohmann::json header;
  header["kind"] = c.kind;
  header["config"] = c.config;
  header["vocab_hash"] = c.vocab_hash;
  header["metrics"] = c.metrics;
  nlohmann::json plist = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : c.params) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = offset;
    plist.push_back(entry);
    offset += static_cast<std::uint64_t>(t.size()) * 8;
  }
  header["params"] = plist;
  const std::string header_text = header.dump();

  std::string blob;
  blob.reserve(16 + header_text.size() + offset);
  blob += kCheckpointMagic;
  blob.push_back(static_cast<char>(kCheckpointVersion));
  put_u32_le(blob, static_cast<std::uint32_t>(header_text.size()));
  blob += header_text;
  for (const auto& [name, t] : c.params)
    for (Index i = 0; i < t.size(); ++i) append_f64_le(blob, t.value()[i]);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

  const std::size_t magic_len = std::strlen(kCheckpointMagic);
  if (bytes.size() < magic_len + 5 ||
      std::memcmp(bytes.data(), kCheckpointMagic, magic_len) != 0)
    throw FormatError("checkpoint: bad magic in " + path);
  if (p[magic_len] != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(static_cast<int>(p[magic_len])));
  const std::uint32_t header_len = get_u32_le(p + magic_len + 1);
  const std::size_t header_start = magic_len + 5;
  if (header_start + header_len > bytes.size())
    throw FormatError("checkpoint: truncated header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_start, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: invalid header JSON: ") + e.what());
  }
  if (!header.contains("kind") || !header.contains("params"))
    throw FormatError("checkpoint: header missing kind or params");

  Checkpoint c;
  c.kind = header["kind"].get<std::string>();
  c.config = header.value("config", nlohmann::json::object());
  c.vocab_hash = header.value("vocab_hash", std::string());
  c.metrics = header.value("metrics", nlohmann::json::object());

  const std::size_t blob_start = header_start + header_len;
  for (const auto& entry : header["params"]) {
    const std::string name = entry["name"].get<std::string>();
    Shape shape;
    for (const auto& d : entry["shape"]) shape.push_back(d.get<Index>());
    const std::uint64_t offset = entry["offset"].get<std::uint64_t>();
    const Index count = shape_numel(shape);
    if (blob_start + offset + static_cast<std::uint64_t>(count) * 8 > bytes.size())
      throw FormatError("checkpoint: truncated parameter blob for '" + name + "'");
    Array a(count);
    for (Index i = 0; i < count; ++i)
      a[i] = read_f64_le(p + blob_start + offset + static_cast<std::uint64_t>(i) * 8);
    c.params.emplace_back(name, Tensor::from_array(shape, std::move(a), false));
  }
  return c;
}

Checkpoint make_checkpoint(const std::string& kind, nlohmann::json config,
                           const std::string& vocab_hash, nlohmann::json metrics,
                           const ParamMap& params) {
  Checkpoint c;
  c.kind = kind;
  c.config = std::move(config);
  c.vocab_hash = vocab_hash;
  c.metrics = std::move(metrics);
  for (const auto& [name, t] : params)
    c.params.emplace_back(name, Tensor::from_array(t.shape(), t.value(), false));
  return c;
}

void load_params(const Checkpoint& c, ParamMap& target) {
  std::set<std::string> ckpt_names, model_names;
  for (const auto& [name, t] : c.params) ckpt_names.insert(name);
  for (const auto& [name, t] : target) model_names.insert(name);
  if (ckpt_names != model_names) {
    std::string msg = "checkpoint parameter names do not match the model;";
    for (const auto& n : ckpt_names)
      if (!model_names.count(n)) msg += " unexpected '" + n + "'";
    for (const auto& n : model_names)
      if (!ckpt_names.count(n)) msg += " missing '" + n + "'";
    throw FormatError(msg);
  }
  for (const auto& [name, t] : c.params) {
    Tensor& dst = target.at(name);
    if (dst.shape() != t.shape())
      throw FormatError("checkpoint parameter '" + name + "' has shape " +
                        shape_str(t.shape()) + ", model expects " +
                        shape_str(dst.shape()));
    dst.value() = t.value();
  }
}

nlohmann::json to_json(const model::TeacherAConfig& c) {
  nlohmann::json j;
  j["vocab_size"] = c.vocab_size;
  j["embed_dim"] = c.embed_dim;
  j["filter_widths"] = c.filter_widths;
  j["filters_per_width"] = c.filters_per_width;
  j["dropout_rate"] = c.dropout_rate;
  return j;
}

nlohmann::json to_json(const model::TeacherBConfig& c) {
  nlohmann::json j;
  j["vocab_size"] = c.vocab_size;
  j["embed_dim"] = c.embed_dim;
  j["gnn_layers"] = c.gnn_layers;
  j["hidden_dim"] = c.hidden_dim;
  j["window"] = c.window;
  return j;
}

nlohmann::json to_json(const model::StudentConfig& c) {
  nlohmann::json j;
  j["vocab_size"] = c.vocab_size;
  j["embed_dim"] = c.embed_dim;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["ffn_dim"] = c.ffn_dim;
  j["seq_len"] = c.seq_len;
  return j;
}

model::TeacherAConfig teacher_a_config_from(const nlohmann::json& j) {
  model::TeacherAConfig c;
  c.vocab_size = j.at("vocab_size").get<std::int64_t>();
  c.embed_dim = j.at("embed_dim").get<Index>();
  c.filter_widths.clear();
  for (const auto& w : j.at("filter_widths")) c.filter_widths.push_back(w.get<Index>());
  c.filters_per_width = j.at("filters_per_width").get<Index>();
  c.dropout_rate = j.at("dropout_rate").get<Real>();
  return c;
}

model::TeacherBConfig teacher_b_config_from(const nlohmann::json& j) {
  model::TeacherBConfig c;
  c.vocab_size = j.at("vocab_size").get<std::int64_t>();
  c.embed_dim = j.at("embed_dim").get<Index>();
  c.gnn_layers = j.at("gnn_layers").get<Index>();
  c.hidden_dim = j.at("hidden_dim").get<Index>();
  c.window = j.at("window").get<int>();
  return c;
}

model::StudentConfig student_config_from(const nlohmann::json& j) {
  model::StudentConfig c;
  c.vocab_size = j.at("vocab_size").get<std::int64_t>();
  c.embed_dim = j.at("embed_dim").get<Index>();
  c.layers = j.at("layers").get<Index>();
  c.heads = j.at("heads").get<Index>();
  c.ffn_dim = j.at("ffn_dim").get<Index>();
  c.seq_len = j.at("seq_len").get<Index>();
  return c;
}

namespace {

void freeze(ParamMap& params) {
  for (auto& [name, t] : params) {
    Tensor detached = t.detach();  // requires_grad = false
    t = detached;
  }
}

void check_kind(const Checkpoint& c, const char* expected) {
  if (c.kind != expected)
    throw FormatError("checkpoint kind '" + c.kind + "' where '" + expected +
                      "' was expected");
}

}  // namespace

model::TeacherA teacher_a_from(const Checkpoint& c, bool frozen) {
  check_kind(c, "teacher_a");
  model::TeacherA m(teacher_a_config_from(c.config.at("model")), 0);
  load_params(c, m.params);
  if (frozen) freeze(m.params);
  return m;
}

model::TeacherB teacher_b_from(const Checkpoint& c, bool frozen) {
  check_kind(c, "teacher_b");
  model::TeacherB m(teacher_b_config_from(c.config.at("model")), 0);
  load_params(c, m.params);
  if (frozen) freeze(m.params);
  return m;
}

model::Student student_from(const Checkpoint& c, bool frozen) {
  check_kind(c, "student");
  model::Student m(student_config_from(c.config.at("model")), 0);
  load_params(c, m.params);
  if (frozen) freeze(m.params);
  return m;
}

}  // namespace safe::train
