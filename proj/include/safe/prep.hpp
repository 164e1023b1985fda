#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safe/bpe.hpp"
#include "safe/dataset.hpp"
#include "safe/frontend.hpp"
#include "safe/token_graph.hpp"

namespace safe::prep {

/// One sample ready for all three models: the assembled code token sequence
/// (student and teacher-A) and the structure-sequence token graph
/// (teacher-B).
struct PreparedSample {
  std::string id;
  int label = 0;
  bpe::TokenSequence code_seq;
  graph::TokenGraph struct_graph;
};

/// Lexer token texts joined with single spaces; total on arbitrary bytes.
std::string normalize_code(const std::string& code);

/// Encode and drop whitespace-only tokens; the models never consume word
/// separators.
std::vector<std::int64_t> content_ids(const bpe::Vocab& v, const std::string& text);

/// Serialized structure line for one sample (ast or dfg mode), optionally
/// from an imported AST instead of the built-in parser.
std::string structure_line(const std::string& code, frontend::StructureMode mode,
                           const frontend::AstNode* imported_ast = nullptr);

/// Externally supplied ASTs keyed by sample id; they bypass the built-in
/// parser when present.
using AstImportMap = std::map<std::string, frontend::AstNode>;

// Vocabulary training corpora: normalized code lines / structure lines.
std::vector<std::string> code_lines(const std::vector<data::CodeSample>& samples);
std::vector<std::string> structure_lines(const std::vector<data::CodeSample>& samples,
                                         frontend::StructureMode mode,
                                         const AstImportMap* imports = nullptr);

PreparedSample prepare_sample(const data::CodeSample& s, const bpe::Vocab& code_vocab,
                              const bpe::Vocab& struct_vocab, Index seq_len,
                              frontend::StructureMode mode, int window,
                              const frontend::AstNode* imported_ast = nullptr);

struct Prepared {
  bpe::Vocab code_vocab;
  bpe::Vocab struct_vocab;
  frontend::StructureMode mode = frontend::StructureMode::Ast;
  std::vector<PreparedSample> train, val, test;

  const std::vector<PreparedSample>& split(const std::string& name) const;
};

/// Trains both vocabularies on the train split (code text for the code
/// vocab, serialized structure lines for the structure vocab), then prepares
/// every split. Pure function of its inputs.
Prepared prepare(const data::Dataset& ds, Index seq_len, std::int64_t vocab_size,
                 frontend::StructureMode mode, int window,
                 const AstImportMap* imports = nullptr);

/// Same but with already-trained vocabularies (the train commands reload
/// the vocab files written by prepare instead of retraining them).
Prepared prepare_with_vocabs(const data::Dataset& ds, bpe::Vocab code_vocab,
                             bpe::Vocab struct_vocab, Index seq_len,
                             frontend::StructureMode mode, int window,
                             const AstImportMap* imports = nullptr);

/// AST import file: a JSON array of {"id", "kind", "children", "text"}
/// sample trees (or a single such object). Returns id -> tree.
std::vector<std::pair<std::string, frontend::AstNode>> load_ast_json(
    const std::string& path);

}  // namespace safe::prep
