#include <algorithm>

#include "safe/error.hpp"
#include "safe/frontend.hpp"

namespace safe::frontend {

namespace {

void flatten_into(const AstNode& n, std::vector<StructureToken>& out) {
  if (n.is_leaf()) {
    out.push_back({StructureItemKind::Terminal, n.token->text});
    return;
  }
  out.push_back({StructureItemKind::Open, n.kind});
  for (const auto& c : n.children) flatten_into(c, out);
  out.push_back({StructureItemKind::Close, n.kind});
}

std::string escape_terminal(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

StructureSequence flatten_ast(const AstNode& root) {
  StructureSequence seq;
  flatten_into(root, seq.items);
  return seq;
}

std::vector<std::string> terminals(const StructureSequence& seq) {
  std::vector<std::string> out;
  for (const auto& item : seq.items)
    if (item.kind == StructureItemKind::Terminal) out.push_back(item.text);
  return out;
}

std::string serialize(const StructureSequence& seq) {
  std::string out;
  bool first = true;
  for (const auto& item : seq.items) {
    if (!first) out += ' ';
    first = false;
    switch (item.kind) {
      case StructureItemKind::Open: out += "⟨" + item.text + "⟩"; break;
      case StructureItemKind::Close: out += "⟨/" + item.text + "⟩"; break;
      case StructureItemKind::Terminal: out += escape_terminal(item.text); break;
    }
  }
  return out;
}

StructureMode structure_mode_from(const std::string& name) {
  if (name == "ast") return StructureMode::Ast;
  if (name == "dfg") return StructureMode::Dfg;
  throw ConfigError("unknown structure mode '" + name + "' (expected ast or dfg)");
}

std::string to_string(StructureMode mode) {
  return mode == StructureMode::Ast ? "ast" : "dfg";
}

StructureSequence structure_sequence_of(const std::string& source, StructureMode mode) {
  const AstNode root = parse_source(source);
  if (mode == StructureMode::Ast) return flatten_ast(root);

  StructureSequence seq;
  for (const AstNode* l : collect_leaves(root))
    seq.items.push_back({StructureItemKind::Terminal, l->token->text});

  DataFlowGraph dfg = extract_dfg(root);
  // One bracketed group per edge, ordered by (use, def) leaf index.
  std::vector<const DfgEdge*> edges;
  for (const auto& e : dfg.edges) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [&](const DfgEdge* a, const DfgEdge* b) {
    const auto ka = std::make_pair(dfg.nodes[a->to].leaf_index, dfg.nodes[a->from].leaf_index);
    const auto kb = std::make_pair(dfg.nodes[b->to].leaf_index, dfg.nodes[b->from].leaf_index);
    return ka < kb;
  });
  for (const DfgEdge* e : edges) {
    seq.items.push_back({StructureItemKind::Open, "dfg_edge"});
    seq.items.push_back({StructureItemKind::Terminal, dfg.nodes[e->from].name});
    seq.items.push_back({StructureItemKind::Terminal, std::to_string(dfg.nodes[e->from].leaf_index)});
    seq.items.push_back({StructureItemKind::Terminal, std::to_string(dfg.nodes[e->to].leaf_index)});
    seq.items.push_back({StructureItemKind::Close, "dfg_edge"});
  }
  return seq;
}

}  // namespace safe::frontend
