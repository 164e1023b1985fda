#include <map>
#include <set>

#include "safe/frontend.hpp"

namespace safe::frontend {

namespace {

// name -> reaching def leaf indices (-1 is the synthetic entry def)
using Env = std::map<std::string, std::set<std::int64_t>>;

Env merge(const Env& a, const Env& b) {
  Env out = a;
  for (const auto& [k, v] : b) out[k].insert(v.begin(), v.end());
  return out;
}

bool is_ident_leaf(const AstNode& n) { return n.is_leaf() && n.kind == "identifier"; }
bool is_text_leaf(const AstNode& n, const char* t) { return n.is_leaf() && n.token->text == t; }

class DfgBuilder {
 public:
  explicit DfgBuilder(const AstNode& root) {
    std::int64_t counter = 0;
    index_leaves(root, counter);
  }

  DataFlowGraph build(const AstNode& root) {
    Env globals;
    walk_unit(root, globals);
    return std::move(graph_);
  }

 private:
  std::map<const AstNode*, std::int64_t> leaf_index_;
  std::map<std::tuple<std::string, int, std::int64_t>, std::size_t> node_ids_;
  std::set<std::pair<std::size_t, std::size_t>> edge_set_;
  DataFlowGraph graph_;

  void index_leaves(const AstNode& n, std::int64_t& counter) {
    if (n.is_leaf()) {
      leaf_index_[&n] = counter++;
      return;
    }
    for (const auto& c : n.children) index_leaves(c, counter);
  }

  std::size_t node_id(const std::string& name, VarRole role, std::int64_t leaf) {
    const auto key = std::make_tuple(name, role == VarRole::Def ? 0 : 1, leaf);
    auto it = node_ids_.find(key);
    if (it != node_ids_.end()) return it->second;
    graph_.nodes.push_back({name, role, leaf});
    const std::size_t id = graph_.nodes.size() - 1;
    node_ids_[key] = id;
    return id;
  }

  void add_edge(std::size_t from, std::size_t to) {
    if (edge_set_.insert({from, to}).second) graph_.edges.push_back({from, to});
  }

  void record_def(Env& env, const std::string& name, const AstNode& ident) {
    const std::int64_t leaf = leaf_index_.at(&ident);
    node_id(name, VarRole::Def, leaf);
    env[name] = {leaf};  // strong update kills earlier defs on this path
  }

  void record_use(Env& env, const std::string& name, const AstNode& ident) {
    const std::size_t use = node_id(name, VarRole::Use, leaf_index_.at(&ident));
    auto& defs = env[name];
    if (defs.empty()) defs.insert(-1);  // unresolved: synthetic entry def
    for (std::int64_t d : defs) add_edge(node_id(name, VarRole::Def, d), use);
  }

  // ---- translation unit -------------------------------------------------

  void walk_unit(const AstNode& unit, Env& globals) {
    if (unit.kind != "translation_unit") {
      if (unit.kind == "function_definition") {
        Env env = globals;
        walk_function(unit, env);
      }
      return;
    }
    for (const auto& c : unit.children) {
      if (c.kind == "function_definition") {
        Env env = globals;
        walk_function(c, env);
      } else if (c.kind == "declaration") {
        walk_declaration(c, globals);
      }
    }
  }

  void walk_function(const AstNode& fn, Env& env) {
    for (const auto& c : fn.children) {
      if (c.kind == "parameter_list") {
        for (const auto& p : c.children) {
          if (p.kind != "parameter") continue;
          for (const auto& pc : p.children)
            if (is_ident_leaf(pc)) {
              record_def(env, pc.token->text, pc);
              break;
            }
        }
      } else if (c.kind == "compound_statement") {
        walk_stmt(c, env);
      }
    }
  }

  // ---- statements --------------------------------------------------------

  void walk_stmt(const AstNode& n, Env& env) {
    if (n.kind == "compound_statement") {
      for (const auto& c : n.children)
        if (!c.is_leaf()) walk_stmt(c, env);
      return;
    }
    if (n.kind == "declaration") {
      walk_declaration(n, env);
      return;
    }
    if (n.kind == "expression_statement") {
      for (const auto& c : n.children)
        if (!c.is_leaf() || is_ident_leaf(c)) walk_expr(c, env);
      return;
    }
    if (n.kind == "return_statement") {
      for (const auto& c : n.children)
        if (!c.is_leaf() || is_ident_leaf(c)) walk_expr(c, env);
      return;
    }
    if (n.kind == "if_statement") {
      walk_if(n, env);
      return;
    }
    if (n.kind == "while_statement") {
      walk_while(n, env);
      return;
    }
    if (n.kind == "for_statement") {
      walk_for(n, env);
      return;
    }
    // jump_statement, error and anything else: no variable flow recorded.
  }

  void walk_declaration(const AstNode& decl, Env& env) {
    for (const auto& d : decl.children) {
      if (d.kind != "declarator") continue;
      const AstNode* name = nullptr;
      for (const auto& c : d.children) {
        if (is_ident_leaf(c) && !name) {
          name = &c;
          continue;
        }
        if (!c.is_leaf() || is_ident_leaf(c)) walk_expr(c, env);  // sizes, initializer
      }
      if (name) record_def(env, name->token->text, *name);
    }
  }

  void walk_if(const AstNode& n, Env& env) {
    // children: if ( cond ) then [else alt]
    const AstNode& cond = n.children[2];
    walk_expr(cond, env);
    Env then_env = env;
    walk_stmt(n.children[4], then_env);
    if (n.children.size() >= 7) {
      Env else_env = env;
      walk_stmt(n.children[6], else_env);
      env = merge(then_env, else_env);
    } else {
      env = merge(env, then_env);
    }
  }

  void walk_while(const AstNode& n, Env& env) {
    const AstNode& cond = n.children[2];
    const AstNode& body = n.children[4];
    Env first = env;
    walk_expr(cond, first);
    walk_stmt(body, first);
    // single loop-back pass: body defs reach the next iteration's uses
    Env looped = merge(env, first);
    walk_expr(cond, looped);
    walk_stmt(body, looped);
    env = merge(env, looped);  // zero iterations possible
  }

  void walk_for(const AstNode& n, Env& env) {
    const AstNode* init = nullptr;
    const AstNode* cond = nullptr;
    const AstNode* step = nullptr;
    const AstNode* body = &n.children.back();
    int phase = 0;
    for (std::size_t i = 1; i + 1 < n.children.size(); ++i) {
      const AstNode& c = n.children[i];
      if (is_text_leaf(c, "(") || is_text_leaf(c, ")")) continue;
      if (is_text_leaf(c, ";")) {
        ++phase;
        continue;
      }
      if (c.kind == "declaration") {
        init = &c;
        phase = 1;  // the declaration carries its own ';'
        continue;
      }
      if (phase == 0) init = &c;
      else if (phase == 1) cond = &c;
      else step = &c;
    }
    if (init) {
      if (init->kind == "declaration")
        walk_declaration(*init, env);
      else
        walk_expr(*init, env);
    }
    Env first = env;
    if (cond) walk_expr(*cond, first);
    walk_stmt(*body, first);
    if (step) walk_expr(*step, first);
    Env looped = merge(env, first);
    if (cond) walk_expr(*cond, looped);
    walk_stmt(*body, looped);
    if (step) walk_expr(*step, looped);
    env = merge(env, looped);
  }

  // ---- expressions --------------------------------------------------------

  void walk_expr(const AstNode& n, Env& env) {
    if (n.is_leaf()) {
      if (is_ident_leaf(n)) record_use(env, n.token->text, n);
      return;
    }
    if (n.kind == "assignment") {
      const AstNode& lhs = n.children[0];
      const std::string op = n.children[1].token->text;
      walk_expr(n.children[2], env);
      walk_lhs(lhs, env, /*compound=*/op != "=");
      return;
    }
    if (n.kind == "unary_expression") {
      const bool prefix = n.children[0].is_leaf() && n.children[0].kind != "identifier" &&
                          n.children[0].kind != "literal";
      const AstNode& op = prefix ? n.children[0] : n.children[1];
      const AstNode& operand = prefix ? n.children[1] : n.children[0];
      const std::string& text = op.token->text;
      if (text == "++" || text == "--") {
        // read-modify-write
        if (is_ident_leaf(operand)) {
          record_use(env, operand.token->text, operand);
          record_def(env, operand.token->text, operand);
        } else {
          walk_expr(operand, env);
        }
      } else {
        walk_expr(operand, env);
      }
      return;
    }
    if (n.kind == "call_expression") {
      // the callee name is not a variable occurrence
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const AstNode& c = n.children[i];
        if (i == 0 && is_ident_leaf(c)) continue;
        walk_expr(c, env);
      }
      return;
    }
    if (n.kind == "member_expression") {
      walk_expr(n.children[0], env);  // base only; the member name is not a variable
      return;
    }
    for (const auto& c : n.children) walk_expr(c, env);
  }

  // Assignment target. Strong update for scalar, subscript and member
  // targets; a deref target (*p = v) reads the pointer instead.
  void walk_lhs(const AstNode& lhs, Env& env, bool compound) {
    if (is_ident_leaf(lhs)) {
      if (compound) record_use(env, lhs.token->text, lhs);
      record_def(env, lhs.token->text, lhs);
      return;
    }
    if (lhs.kind == "paren_expression") {
      walk_lhs(lhs.children[1], env, compound);
      return;
    }
    if (lhs.kind == "subscript_expression") {
      walk_expr(lhs.children[2], env);  // index
      walk_lhs(lhs.children[0], env, compound);
      return;
    }
    if (lhs.kind == "member_expression") {
      walk_lhs(lhs.children[0], env, compound);
      return;
    }
    // *p = v and other shapes: reads only
    walk_expr(lhs, env);
  }
};

}  // namespace

DataFlowGraph extract_dfg(const AstNode& root) {
  DfgBuilder builder(root);
  return builder.build(root);
}

}  // namespace safe::frontend
