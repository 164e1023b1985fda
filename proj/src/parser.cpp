#include <unordered_set>

#include "safe/frontend.hpp"

namespace safe::frontend {

namespace {

const std::unordered_set<std::string>& type_start_words() {
  static const std::unordered_set<std::string> words = {
      "void", "char",  "short",  "int",      "long",  "float",
      "double", "signed", "unsigned", "const", "static", "struct",
      "union", "enum", "volatile", "inline", "extern", "register"};
  return words;
}

std::string leaf_kind_of(const LexToken& t) {
  switch (t.kind) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Number:
    case TokenKind::StringLiteral:
    case TokenKind::CharLiteral: return "literal";
    case TokenKind::Operator: return "operator";
    case TokenKind::Punctuation: return "punctuation";
  }
  return "operator";
}

AstNode leaf(const LexToken& t) { return AstNode{leaf_kind_of(t), {}, t}; }

AstNode node(std::string kind, std::vector<AstNode> children = {}) {
  return AstNode{std::move(kind), std::move(children), std::nullopt};
}

// Binary operators by precedence level, weakest first.
const std::vector<std::vector<std::string>>& precedence_table() {
  static const std::vector<std::vector<std::string>> table = {
      {"||"}, {"&&"}, {"|"}, {"^"}, {"&"},
      {"==", "!="}, {"<", ">", "<=", ">="},
      {"<<", ">>"}, {"+", "-"}, {"*", "/", "%"}};
  return table;
}

const std::unordered_set<std::string>& assign_ops() {
  static const std::unordered_set<std::string> ops = {
      "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
  return ops;
}

class Parser {
 public:
  explicit Parser(const std::vector<LexToken>& toks) : toks_(toks) {}

  AstNode run() {
    AstNode unit = node("translation_unit");
    std::vector<AstNode> pending_error;
    while (!eof()) {
      const std::size_t mark = pos_;
      if (auto fn = parse_function_definition()) {
        flush_error(unit, pending_error);
        unit.children.push_back(std::move(*fn));
        continue;
      }
      pos_ = mark;
      if (auto decl = parse_declaration()) {
        flush_error(unit, pending_error);
        unit.children.push_back(std::move(*decl));
        continue;
      }
      pos_ = mark;
      pending_error.push_back(leaf(toks_[pos_]));
      ++pos_;
    }
    flush_error(unit, pending_error);
    return unit;
  }

 private:
  const std::vector<LexToken>& toks_;
  std::size_t pos_ = 0;

  bool eof() const { return pos_ >= toks_.size(); }
  const LexToken& peek() const { return toks_[pos_]; }
  bool at(const std::string& text) const { return !eof() && peek().text == text; }
  bool at_kind(TokenKind k) const { return !eof() && peek().kind == k; }

  std::optional<AstNode> accept(const std::string& text) {
    if (!at(text)) return std::nullopt;
    return leaf(toks_[pos_++]);
  }
  std::optional<AstNode> accept_kind(TokenKind k) {
    if (!at_kind(k)) return std::nullopt;
    return leaf(toks_[pos_++]);
  }

  static void flush_error(AstNode& parent, std::vector<AstNode>& buffer) {
    if (buffer.empty()) return;
    parent.children.push_back(node("error", std::move(buffer)));
    buffer.clear();
  }

  bool at_type_start() const {
    return !eof() && peek().kind == TokenKind::Keyword && type_start_words().count(peek().text);
  }

  // type := type-words+ '*'*   (e.g. "unsigned long", "const char *")
  std::optional<AstNode> parse_type() {
    if (!at_type_start()) return std::nullopt;
    AstNode ty = node("type");
    while (at_type_start()) {
      ty.children.push_back(leaf(toks_[pos_++]));
      // struct/union/enum tags
      if ((ty.children.back().token->text == "struct" ||
           ty.children.back().token->text == "union" ||
           ty.children.back().token->text == "enum") &&
          at_kind(TokenKind::Identifier)) {
        ty.children.push_back(leaf(toks_[pos_++]));
      }
    }
    while (at("*")) ty.children.push_back(*accept("*"));
    return ty;
  }

  // parameter := type '*'* identifier? ('[' expr? ']')?
  std::optional<AstNode> parse_parameter() {
    auto ty = parse_type();
    if (!ty) return std::nullopt;
    AstNode p = node("parameter");
    p.children.push_back(std::move(*ty));
    if (at_kind(TokenKind::Identifier)) p.children.push_back(leaf(toks_[pos_++]));
    if (at("[")) {
      p.children.push_back(*accept("["));
      if (!at("]")) {
        if (auto e = parse_expression()) p.children.push_back(std::move(*e));
      }
      if (auto rb = accept("]")) p.children.push_back(std::move(*rb));
    }
    return p;
  }

  std::optional<AstNode> parse_parameter_list() {
    auto lp = accept("(");
    if (!lp) return std::nullopt;
    AstNode list = node("parameter_list");
    list.children.push_back(std::move(*lp));
    if (!at(")")) {
      while (true) {
        auto p = parse_parameter();
        if (!p) return std::nullopt;
        list.children.push_back(std::move(*p));
        if (auto comma = accept(",")) {
          list.children.push_back(std::move(*comma));
          continue;
        }
        break;
      }
    }
    auto rp = accept(")");
    if (!rp) return std::nullopt;
    list.children.push_back(std::move(*rp));
    return list;
  }

  std::optional<AstNode> parse_function_definition() {
    auto ty = parse_type();
    if (!ty) return std::nullopt;
    auto name = accept_kind(TokenKind::Identifier);
    if (!name) return std::nullopt;
    auto params = parse_parameter_list();
    if (!params) return std::nullopt;
    auto body = parse_compound_statement();
    if (!body) return std::nullopt;
    return node("function_definition",
                {std::move(*ty), std::move(*name), std::move(*params), std::move(*body)});
  }

  std::optional<AstNode> parse_compound_statement() {
    auto lb = accept("{");
    if (!lb) return std::nullopt;
    AstNode block = node("compound_statement");
    block.children.push_back(std::move(*lb));
    std::vector<AstNode> pending_error;
    while (!eof() && !at("}")) {
      const std::size_t mark = pos_;
      if (auto st = parse_statement()) {
        flush_error(block, pending_error);
        block.children.push_back(std::move(*st));
        continue;
      }
      pos_ = mark;
      consume_error_span(pending_error);
    }
    flush_error(block, pending_error);
    if (auto rb = accept("}")) block.children.push_back(std::move(*rb));
    return block;
  }

  // Swallows tokens up to and including the next ';' at brace depth zero,
  // or up to (not including) the closing '}' of the enclosing block.
  void consume_error_span(std::vector<AstNode>& buffer) {
    int depth = 0;
    while (!eof()) {
      const LexToken& t = peek();
      if (t.text == "{") ++depth;
      if (t.text == "}") {
        if (depth == 0) return;
        --depth;
      }
      buffer.push_back(leaf(toks_[pos_++]));
      if (t.text == ";" && depth == 0) return;
    }
  }

  std::optional<AstNode> parse_statement() {
    if (at("{")) return parse_compound_statement();
    if (at("if")) return parse_if_statement();
    if (at("while")) return parse_while_statement();
    if (at("for")) return parse_for_statement();
    if (at("return")) return parse_return_statement();
    if (at("break") || at("continue")) {
      AstNode jump = node("jump_statement");
      jump.children.push_back(leaf(toks_[pos_++]));
      auto semi = accept(";");
      if (!semi) return std::nullopt;
      jump.children.push_back(std::move(*semi));
      return jump;
    }
    if (at_type_start()) return parse_declaration();
    if (auto semi = accept(";"))
      return node("expression_statement", {std::move(*semi)});
    auto expr = parse_expression();
    if (!expr) return std::nullopt;
    auto semi = accept(";");
    if (!semi) return std::nullopt;
    return node("expression_statement", {std::move(*expr), std::move(*semi)});
  }

  std::optional<AstNode> parse_if_statement() {
    AstNode st = node("if_statement");
    st.children.push_back(*accept("if"));
    auto lp = accept("(");
    if (!lp) return std::nullopt;
    st.children.push_back(std::move(*lp));
    auto cond = parse_expression();
    if (!cond) return std::nullopt;
    st.children.push_back(std::move(*cond));
    auto rp = accept(")");
    if (!rp) return std::nullopt;
    st.children.push_back(std::move(*rp));
    auto then = parse_statement();
    if (!then) return std::nullopt;
    st.children.push_back(std::move(*then));
    if (auto el = accept("else")) {
      st.children.push_back(std::move(*el));
      auto alt = parse_statement();
      if (!alt) return std::nullopt;
      st.children.push_back(std::move(*alt));
    }
    return st;
  }

  std::optional<AstNode> parse_while_statement() {
    AstNode st = node("while_statement");
    st.children.push_back(*accept("while"));
    auto lp = accept("(");
    if (!lp) return std::nullopt;
    st.children.push_back(std::move(*lp));
    auto cond = parse_expression();
    if (!cond) return std::nullopt;
    st.children.push_back(std::move(*cond));
    auto rp = accept(")");
    if (!rp) return std::nullopt;
    st.children.push_back(std::move(*rp));
    auto body = parse_statement();
    if (!body) return std::nullopt;
    st.children.push_back(std::move(*body));
    return st;
  }

  std::optional<AstNode> parse_for_statement() {
    AstNode st = node("for_statement");
    st.children.push_back(*accept("for"));
    auto lp = accept("(");
    if (!lp) return std::nullopt;
    st.children.push_back(std::move(*lp));
    // init clause: declaration, expression ';', or bare ';'
    if (at_type_start()) {
      auto decl = parse_declaration();
      if (!decl) return std::nullopt;
      st.children.push_back(std::move(*decl));
    } else if (auto semi = accept(";")) {
      st.children.push_back(std::move(*semi));
    } else {
      auto init = parse_expression();
      if (!init) return std::nullopt;
      st.children.push_back(std::move(*init));
      auto semi2 = accept(";");
      if (!semi2) return std::nullopt;
      st.children.push_back(std::move(*semi2));
    }
    if (!at(";")) {
      auto cond = parse_expression();
      if (!cond) return std::nullopt;
      st.children.push_back(std::move(*cond));
    }
    auto semi3 = accept(";");
    if (!semi3) return std::nullopt;
    st.children.push_back(std::move(*semi3));
    if (!at(")")) {
      auto step = parse_expression();
      if (!step) return std::nullopt;
      st.children.push_back(std::move(*step));
    }
    auto rp = accept(")");
    if (!rp) return std::nullopt;
    st.children.push_back(std::move(*rp));
    auto body = parse_statement();
    if (!body) return std::nullopt;
    st.children.push_back(std::move(*body));
    return st;
  }

  std::optional<AstNode> parse_return_statement() {
    AstNode st = node("return_statement");
    st.children.push_back(*accept("return"));
    if (!at(";")) {
      auto e = parse_expression();
      if (!e) return std::nullopt;
      st.children.push_back(std::move(*e));
    }
    auto semi = accept(";");
    if (!semi) return std::nullopt;
    st.children.push_back(std::move(*semi));
    return st;
  }

  // declarator := '*'* identifier ('[' expr? ']')? ('=' assignment)?
  std::optional<AstNode> parse_declarator() {
    AstNode d = node("declarator");
    while (at("*")) d.children.push_back(*accept("*"));
    auto name = accept_kind(TokenKind::Identifier);
    if (!name) return std::nullopt;
    d.children.push_back(std::move(*name));
    if (at("[")) {
      d.children.push_back(*accept("["));
      if (!at("]")) {
        auto e = parse_expression();
        if (!e) return std::nullopt;
        d.children.push_back(std::move(*e));
      }
      auto rb = accept("]");
      if (!rb) return std::nullopt;
      d.children.push_back(std::move(*rb));
    }
    if (auto eq = accept("=")) {
      d.children.push_back(std::move(*eq));
      auto init = parse_assignment();
      if (!init) return std::nullopt;
      d.children.push_back(std::move(*init));
    }
    return d;
  }

  std::optional<AstNode> parse_declaration() {
    auto ty = parse_type();
    if (!ty) return std::nullopt;
    AstNode decl = node("declaration");
    decl.children.push_back(std::move(*ty));
    while (true) {
      auto d = parse_declarator();
      if (!d) return std::nullopt;
      decl.children.push_back(std::move(*d));
      if (auto comma = accept(",")) {
        decl.children.push_back(std::move(*comma));
        continue;
      }
      break;
    }
    auto semi = accept(";");
    if (!semi) return std::nullopt;
    decl.children.push_back(std::move(*semi));
    return decl;
  }

  std::optional<AstNode> parse_expression() { return parse_assignment(); }

  std::optional<AstNode> parse_assignment() {
    const std::size_t mark = pos_;
    auto lhs = parse_binary(0);
    if (!lhs) return std::nullopt;
    if (!eof() && peek().kind == TokenKind::Operator && assign_ops().count(peek().text)) {
      AstNode op = leaf(toks_[pos_++]);
      auto rhs = parse_assignment();  // right-associative
      if (!rhs) {
        pos_ = mark;
        return std::nullopt;
      }
      return node("assignment", {std::move(*lhs), std::move(op), std::move(*rhs)});
    }
    return lhs;
  }

  std::optional<AstNode> parse_binary(std::size_t level) {
    const auto& table = precedence_table();
    if (level >= table.size()) return parse_unary();
    auto lhs = parse_binary(level + 1);
    if (!lhs) return std::nullopt;
    while (!eof() && peek().kind == TokenKind::Operator) {
      const auto& ops = table[level];
      bool matches = false;
      for (const auto& op : ops) matches = matches || op == peek().text;
      if (!matches) break;
      AstNode op = leaf(toks_[pos_++]);
      auto rhs = parse_binary(level + 1);
      if (!rhs) return std::nullopt;
      lhs = node("binary_expression", {std::move(*lhs), std::move(op), std::move(*rhs)});
    }
    return lhs;
  }

  std::optional<AstNode> parse_unary() {
    if (!eof() &&
        (peek().text == "!" || peek().text == "~" || peek().text == "-" ||
         peek().text == "+" || peek().text == "*" || peek().text == "&" ||
         peek().text == "++" || peek().text == "--" || peek().text == "sizeof")) {
      AstNode op = leaf(toks_[pos_++]);
      auto operand = parse_unary();
      if (!operand) return std::nullopt;
      return node("unary_expression", {std::move(op), std::move(*operand)});
    }
    return parse_postfix();
  }

  std::optional<AstNode> parse_postfix() {
    auto base = parse_primary();
    if (!base) return std::nullopt;
    while (!eof()) {
      if (at("(")) {
        AstNode call = node("call_expression");
        call.children.push_back(std::move(*base));
        call.children.push_back(*accept("("));
        if (!at(")")) {
          while (true) {
            auto arg = parse_assignment();
            if (!arg) return std::nullopt;
            call.children.push_back(std::move(*arg));
            if (auto comma = accept(",")) {
              call.children.push_back(std::move(*comma));
              continue;
            }
            break;
          }
        }
        auto rp = accept(")");
        if (!rp) return std::nullopt;
        call.children.push_back(std::move(*rp));
        base = std::move(call);
        continue;
      }
      if (at("[")) {
        AstNode sub = node("subscript_expression");
        sub.children.push_back(std::move(*base));
        sub.children.push_back(*accept("["));
        auto idx = parse_expression();
        if (!idx) return std::nullopt;
        sub.children.push_back(std::move(*idx));
        auto rb = accept("]");
        if (!rb) return std::nullopt;
        sub.children.push_back(std::move(*rb));
        base = std::move(sub);
        continue;
      }
      if (at(".") || at("->")) {
        AstNode mem = node("member_expression");
        mem.children.push_back(std::move(*base));
        mem.children.push_back(leaf(toks_[pos_++]));
        auto name = accept_kind(TokenKind::Identifier);
        if (!name) return std::nullopt;
        mem.children.push_back(std::move(*name));
        base = std::move(mem);
        continue;
      }
      if (at("++") || at("--")) {
        base = node("unary_expression", {std::move(*base), leaf(toks_[pos_++])});
        continue;
      }
      break;
    }
    return base;
  }

  std::optional<AstNode> parse_primary() {
    if (at_kind(TokenKind::Identifier)) return leaf(toks_[pos_++]);
    if (at_kind(TokenKind::Number) || at_kind(TokenKind::StringLiteral) ||
        at_kind(TokenKind::CharLiteral))
      return leaf(toks_[pos_++]);
    if (at("(")) {
      AstNode group = node("paren_expression");
      group.children.push_back(*accept("("));
      auto inner = parse_expression();
      if (!inner) return std::nullopt;
      group.children.push_back(std::move(*inner));
      auto rp = accept(")");
      if (!rp) return std::nullopt;
      group.children.push_back(std::move(*rp));
      return group;
    }
    return std::nullopt;
  }
};

void collect_leaves_impl(const AstNode& n, std::vector<const AstNode*>& out) {
  if (n.is_leaf()) {
    out.push_back(&n);
    return;
  }
  for (const auto& c : n.children) collect_leaves_impl(c, out);
}

}  // namespace

AstNode parse(const std::vector<LexToken>& tokens) { return Parser(tokens).run(); }

AstNode parse_source(const std::string& source) { return parse(lex(source)); }

std::vector<const AstNode*> collect_leaves(const AstNode& root) {
  std::vector<const AstNode*> out;
  collect_leaves_impl(root, out);
  return out;
}

}  // namespace safe::frontend
