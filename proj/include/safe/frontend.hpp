#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace safe::frontend {

enum class TokenKind {
  Identifier,
  Keyword,
  Number,
  StringLiteral,
  CharLiteral,
  Operator,
  Punctuation,
};

struct LexToken {
  std::string text;
  TokenKind kind = TokenKind::Operator;
  int line = 1;
  int col = 1;
};

/// Total lexer for C-like source. Comments and whitespace are dropped;
/// unknown bytes become single-character operator tokens, so this never
/// fails on arbitrary input.
std::vector<LexToken> lex(const std::string& source);

bool is_keyword(const std::string& word);

/// One AST node. Leaves hold exactly one token; the in-order leaf traversal
/// of a parse tree reproduces the lexer token stream.
struct AstNode {
  std::string kind;
  std::vector<AstNode> children;
  std::optional<LexToken> token;  // leaves only

  bool is_leaf() const { return token.has_value(); }
};

/// Total recursive-descent parse of the mini-C grammar. Unparseable spans
/// are wrapped in `error` nodes holding their raw tokens; the function never
/// throws on any token stream.
AstNode parse(const std::vector<LexToken>& tokens);
AstNode parse_source(const std::string& source);

/// Collects leaves in traversal order.
std::vector<const AstNode*> collect_leaves(const AstNode& root);

// ---------------------------------------------------------------------------
// Structure sequences (bracketed AST linearization)

enum class StructureItemKind { Open, Close, Terminal };

struct StructureToken {
  StructureItemKind kind;
  std::string text;  // node kind for Open/Close, token text for Terminal
};

struct StructureSequence {
  std::vector<StructureToken> items;
};

/// Depth-first emission: Open(kind) before a non-leaf's children and
/// Close(kind) after; Terminal(text) for leaves.
StructureSequence flatten_ast(const AstNode& root);

std::vector<std::string> terminals(const StructureSequence& seq);

/// One-line rendering: Open as "⟨kind⟩", Close as "⟨/kind⟩", terminals
/// verbatim with backslash, tab, newline and carriage return escaped.
std::string serialize(const StructureSequence& seq);

// ---------------------------------------------------------------------------
// Data-flow graph (reaching definitions)

enum class VarRole { Def, Use };

struct DfgNode {
  std::string name;
  VarRole role;
  std::int64_t leaf_index;  // -1 marks the synthetic entry definition
};

struct DfgEdge {
  std::size_t from;  // def node
  std::size_t to;    // use node
};

struct DataFlowGraph {
  std::vector<DfgNode> nodes;
  std::vector<DfgEdge> edges;
};

/// Reaching definitions over the AST: flow-sensitive along statement
/// sequences (an assignment kills earlier definitions of the name),
/// branch-join as union, one loop-back pass so loop-body definitions reach
/// uses at the top of the next iteration. Parameters count as definitions at
/// function entry; uses with no prior definition link to a synthetic entry
/// definition at leaf index -1.
DataFlowGraph extract_dfg(const AstNode& root);

enum class StructureMode { Ast, Dfg };

StructureMode structure_mode_from(const std::string& name);
std::string to_string(StructureMode mode);

/// ast mode: flatten_ast(parse(lex(source))). dfg mode: the terminal token
/// stream followed by one ⟨dfg_edge⟩ group per edge ordered by (use, def)
/// leaf index, each holding the variable name and both leaf indices.
StructureSequence structure_sequence_of(const std::string& source, StructureMode mode);

}  // namespace safe::frontend
