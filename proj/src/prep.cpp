#include "safe/prep.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace safe::prep {

namespace {

bool all_whitespace(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

frontend::AstNode ast_node_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw FormatError("ast import: node missing \"kind\"");
  frontend::AstNode n;
  n.kind = j["kind"].get<std::string>();
  if (j.contains("text") && !j["text"].is_null()) {
    frontend::LexToken tok;
    tok.text = j["text"].get<std::string>();
    const auto lexed = frontend::lex(tok.text);
    tok.kind = lexed.size() == 1 ? lexed[0].kind : frontend::TokenKind::Operator;
    n.token = tok;
    return n;
  }
  if (j.contains("children"))
    for (const auto& c : j["children"]) n.children.push_back(ast_node_from_json(c));
  return n;
}

}  // namespace

std::string normalize_code(const std::string& code) {
  std::string out;
  for (const auto& tok : frontend::lex(code)) {
    if (!out.empty()) out += ' ';
    out += tok.text;
  }
  return out;
}

std::vector<std::int64_t> content_ids(const bpe::Vocab& v, const std::string& text) {
  std::vector<std::int64_t> out;
  for (std::int64_t id : bpe::encode(v, text)) {
    const std::string& tok = v.token_of[static_cast<std::size_t>(id)];
    if (!all_whitespace(tok)) out.push_back(id);
  }
  return out;
}

std::string structure_line(const std::string& code, frontend::StructureMode mode,
                           const frontend::AstNode* imported_ast) {
  if (imported_ast) {
    if (mode == frontend::StructureMode::Ast)
      return frontend::serialize(frontend::flatten_ast(*imported_ast));
    frontend::StructureSequence seq;
    for (const auto* leaf : frontend::collect_leaves(*imported_ast))
      seq.items.push_back({frontend::StructureItemKind::Terminal, leaf->token->text});
    const auto dfg = frontend::extract_dfg(*imported_ast);
    // mirror structure_sequence_of's dfg linearization over the import
    std::vector<const frontend::DfgEdge*> edges;
    for (const auto& e : dfg.edges) edges.push_back(&e);
    std::sort(edges.begin(), edges.end(),
              [&](const frontend::DfgEdge* a, const frontend::DfgEdge* b) {
                const auto ka = std::make_pair(dfg.nodes[a->to].leaf_index,
                                               dfg.nodes[a->from].leaf_index);
                const auto kb = std::make_pair(dfg.nodes[b->to].leaf_index,
                                               dfg.nodes[b->from].leaf_index);
                return ka < kb;
              });
    for (const auto* e : edges) {
      seq.items.push_back({frontend::StructureItemKind::Open, "dfg_edge"});
      seq.items.push_back({frontend::StructureItemKind::Terminal, dfg.nodes[e->from].name});
      seq.items.push_back({frontend::StructureItemKind::Terminal,
                           std::to_string(dfg.nodes[e->from].leaf_index)});
      seq.items.push_back({frontend::StructureItemKind::Terminal,
                           std::to_string(dfg.nodes[e->to].leaf_index)});
      seq.items.push_back({frontend::StructureItemKind::Close, "dfg_edge"});
    }
    return frontend::serialize(seq);
  }
  return frontend::serialize(frontend::structure_sequence_of(code, mode));
}

std::vector<std::string> code_lines(const std::vector<data::CodeSample>& samples) {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(normalize_code(s.code));
  return out;
}

namespace {

const frontend::AstNode* find_import(const AstImportMap* imports, const std::string& id) {
  if (!imports) return nullptr;
  auto it = imports->find(id);
  return it == imports->end() ? nullptr : &it->second;
}

}  // namespace

std::vector<std::string> structure_lines(const std::vector<data::CodeSample>& samples,
                                         frontend::StructureMode mode,
                                         const AstImportMap* imports) {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back(structure_line(s.code, mode, find_import(imports, s.id)));
  return out;
}

PreparedSample prepare_sample(const data::CodeSample& s, const bpe::Vocab& code_vocab,
                              const bpe::Vocab& struct_vocab, Index seq_len,
                              frontend::StructureMode mode, int window,
                              const frontend::AstNode* imported_ast) {
  PreparedSample out;
  out.id = s.id;
  out.label = s.label;
  out.code_seq = bpe::assemble(code_vocab, content_ids(code_vocab, normalize_code(s.code)),
                               seq_len);
  std::vector<std::int64_t> struct_ids;
  for (std::int64_t id :
       content_ids(struct_vocab, structure_line(s.code, mode, imported_ast)))
    if (id >= bpe::kNumSpecials) struct_ids.push_back(id);  // graph excludes specials
  out.struct_graph = graph::build_token_graph(struct_ids, window);
  return out;
}

const std::vector<PreparedSample>& Prepared::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "' (valid: train, val, test)");
}

Prepared prepare(const data::Dataset& ds, Index seq_len, std::int64_t vocab_size,
                 frontend::StructureMode mode, int window, const AstImportMap* imports) {
  return prepare_with_vocabs(ds, bpe::train_bpe(code_lines(ds.train), vocab_size),
                             bpe::train_bpe(structure_lines(ds.train, mode, imports),
                                            vocab_size),
                             seq_len, mode, window, imports);
}

Prepared prepare_with_vocabs(const data::Dataset& ds, bpe::Vocab code_vocab,
                             bpe::Vocab struct_vocab, Index seq_len,
                             frontend::StructureMode mode, int window,
                             const AstImportMap* imports) {
  Prepared p;
  p.mode = mode;
  p.code_vocab = std::move(code_vocab);
  p.struct_vocab = std::move(struct_vocab);
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    auto& dst = split == &ds.train ? p.train : split == &ds.val ? p.val : p.test;
    dst.reserve(split->size());
    for (const auto& s : *split)
      dst.push_back(prepare_sample(s, p.code_vocab, p.struct_vocab, seq_len, mode, window,
                                   find_import(imports, s.id)));
  }
  return p;
}

std::vector<std::pair<std::string, frontend::AstNode>> load_ast_json(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open AST import file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ast import: invalid JSON: ") + e.what());
  }
  std::vector<std::pair<std::string, frontend::AstNode>> out;
  auto read_one = [&](const nlohmann::json& node) {
    if (!node.contains("id") || !node["id"].is_string())
      throw FormatError("ast import: sample object missing \"id\"");
    out.emplace_back(node["id"].get<std::string>(), ast_node_from_json(node));
  };
  if (j.is_array())
    for (const auto& node : j) read_one(node);
  else
    read_one(j);
  return out;
}

}  // namespace safe::prep
