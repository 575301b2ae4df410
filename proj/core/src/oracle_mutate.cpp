#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <unordered_set>

#include "analearn/oracle.hpp"

namespace analearn::oracle {

using minijs::NodeKind;
using minijs::detail::BuilderNode;
using NodePtr = std::unique_ptr<BuilderNode>;

namespace {

NodePtr make(NodeKind kind, std::optional<std::string> value = std::nullopt) {
  return std::make_unique<BuilderNode>(kind, std::move(value));
}

void index_builder(BuilderNode* node, std::unordered_map<NodeId, BuilderNode*>& by_origin) {
  if (node->origin != minijs::kNoNode) by_origin[node->origin] = node;
  for (auto& child : node->children) index_builder(child.get(), by_origin);
}

struct Edit {
  std::unique_ptr<BuilderNode> root;
  std::unordered_map<NodeId, BuilderNode*> by_origin;

  explicit Edit(const Ast& ast) : root(minijs::detail::to_builder(ast)) {
    index_builder(root.get(), by_origin);
  }
};

Mutant finish(const Ast& base, Edit edit, MutationKind kind, NodeId site, std::string payload) {
  minijs::detail::FinalizeResult fin = minijs::detail::finalize(*edit.root);
  Mutant m;
  m.kind = kind;
  m.site = site;
  m.payload = std::move(payload);
  m.id_map.reserve(fin.id_map.size() + 4);
  for (auto [from, to] : fin.id_map) m.id_map.emplace(from, to);
  m.id_map.emplace(base.synthetic_global, fin.ast.synthetic_global);
  m.id_map.emplace(base.synthetic_undefined, fin.ast.synthetic_undefined);
  m.id_map.emplace(base.synthetic_null, fin.ast.synthetic_null);
  m.id_map.emplace(base.synthetic_this, fin.ast.synthetic_this);
  m.program = dataset::make_program(minijs::render(fin.ast));
  return m;
}

std::unordered_set<std::string> used_names(const Ast& ast) {
  std::unordered_set<std::string> names;
  for (const minijs::Node& node : ast.nodes) {
    if (node.value) names.insert(*node.value);
  }
  return names;
}

std::string fresh_name(const std::unordered_set<std::string>& used, const std::string& stem) {
  for (int i = 0;; ++i) {
    std::string candidate = stem + std::to_string(i);
    if (!used.contains(candidate)) return candidate;
  }
}

struct Declaration {
  std::string name;
  NodeId node;
  NodeId scope;  // enclosing function, kNoNode for top level
  bool is_function;
};

std::vector<Declaration> collect_declarations(const Ast& ast) {
  std::vector<Declaration> decls;
  for (NodeId id = 0; id < ast.size(); ++id) {
    if (ast.is_synthetic(id)) continue;
    const minijs::Node& node = ast.node(id);
    if (node.kind == NodeKind::VarDeclaration || node.kind == NodeKind::Parameter) {
      decls.push_back({*node.value, id, ast.enclosing_function(id), false});
    } else if (node.kind == NodeKind::FunctionDeclaration) {
      decls.push_back({*node.value, id, ast.enclosing_function(id), true});
    }
  }
  return decls;
}

bool scope_visible_from(const Ast& ast, NodeId scope, NodeId site) {
  if (scope == minijs::kNoNode) return true;
  for (NodeId fn = ast.enclosing_function(site); fn != minijs::kNoNode;
       fn = ast.enclosing_function(fn)) {
    if (fn == scope) return true;
  }
  return false;
}

// Identifier occurrences that are names of variables/functions, as opposed to
// member properties and object keys.
bool renameable_occurrence(const Ast& ast, NodeId id) {
  const minijs::Node& node = ast.node(id);
  if (node.kind == NodeKind::VarDeclaration || node.kind == NodeKind::Parameter ||
      node.kind == NodeKind::FunctionDeclaration || node.kind == NodeKind::FunctionExpression) {
    return true;
  }
  if (node.kind != NodeKind::Identifier || ast.is_synthetic(id)) return false;
  NodeId parent = ast.parent_of(id);
  if (parent == minijs::kNoNode) return false;
  const minijs::Node& p = ast.node(parent);
  if (p.kind == NodeKind::MemberExpression && node.index_in_parent == 1) return false;
  if (p.kind == NodeKind::ObjectExpression && node.index_in_parent % 2 == 0) return false;
  return true;
}

std::optional<Mutant> rename_mutant(const Ast& ast, NodeId site, MutationKind kind) {
  const minijs::Node& node = ast.node(site);
  if (!node.value || !renameable_occurrence(ast, site)) return std::nullopt;
  const std::string& name = *node.value;

  std::vector<Declaration> decls = collect_declarations(ast);
  const Declaration* decl = nullptr;
  int count = 0;
  for (const Declaration& d : decls) {
    if (d.name == name) {
      decl = &d;
      ++count;
    }
  }
  if (count != 1) return std::nullopt;  // shadowed or undeclared: skip
  bool want_function = kind == MutationKind::RenameUserFunction;
  if (decl->is_function != want_function) return std::nullopt;

  std::string fresh = name + "_";
  std::unordered_set<std::string> used = used_names(ast);
  while (used.contains(fresh)) fresh += "_";

  Edit edit(ast);
  for (NodeId id = 0; id < ast.size(); ++id) {
    if (ast.is_synthetic(id)) continue;
    if (ast.node(id).value == node.value && renameable_occurrence(ast, id)) {
      edit.by_origin.at(id)->value = fresh;
    }
  }
  return finish(ast, std::move(edit), kind, site, name + "->" + fresh);
}

// Insertion slot for statement-level mutations: parent block and child index.
struct StatementSlot {
  NodeId parent;
  std::uint32_t index;
};

std::optional<StatementSlot> statement_slot(const Ast& ast, NodeId site) {
  if (ast.is_synthetic(site)) return std::nullopt;
  NodeId stmt = ast.enclosing_statement(site);
  if (stmt == minijs::kNoNode) {
    if (ast.node(site).kind != NodeKind::Program) return std::nullopt;
    return StatementSlot{site, 0};
  }
  return StatementSlot{ast.parent_of(stmt), ast.node(stmt).index_in_parent};
}

void insert_statement(Edit& edit, const StatementSlot& slot, NodePtr stmt) {
  BuilderNode* parent = edit.by_origin.at(slot.parent);
  parent->children.insert(parent->children.begin() + slot.index, std::move(stmt));
}

NodePtr dead_code_statement(const std::string& inner_name, bool reuse) {
  auto guard = make(NodeKind::IfStatement);
  guard->add(make(NodeKind::LiteralBoolean, "false"));
  auto block = make(NodeKind::BlockStatement);
  if (reuse) {
    auto assign = make(NodeKind::Assignment);
    assign->add(make(NodeKind::Identifier, inner_name));
    assign->add(make(NodeKind::Identifier, inner_name));
    block->add(std::move(assign));
  } else {
    block->add(make(NodeKind::VarDeclaration, inner_name))
        ->add(make(NodeKind::LiteralNumber, "0"));
  }
  guard->add(std::move(block));
  return guard;
}

std::string format_number(double v) {
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%g", v);
  }
  return buf;
}

}  // namespace

std::string_view mutation_kind_name(MutationKind kind) {
  switch (kind) {
    case MutationKind::AddDeadCode: return "add-dead-code";
    case MutationKind::RenameVariable: return "rename-variable";
    case MutationKind::RenameUserFunction: return "rename-user-function";
    case MutationKind::AddSideEffectFreeExpr: return "add-side-effect-free-expr";
    case MutationKind::AddMethodArgument: return "add-method-argument";
    case MutationKind::AddMethodParameter: return "add-method-parameter";
    case MutationKind::ChangeConstant: return "change-constant";
  }
  return {};
}

bool is_ema(MutationKind kind) {
  return kind == MutationKind::AddDeadCode || kind == MutationKind::RenameVariable ||
         kind == MutationKind::RenameUserFunction ||
         kind == MutationKind::AddSideEffectFreeExpr;
}

std::vector<Mutant> mutate_ema(const Ast& ast, NodeId site) {
  std::vector<Mutant> out;
  if (!ast.valid(site) || ast.is_synthetic(site)) return out;

  std::optional<StatementSlot> slot = statement_slot(ast, site);
  std::unordered_set<std::string> used = used_names(ast);

  if (slot) {
    // Dead code reusing an in-scope variable, when one is visible at the site.
    std::vector<Declaration> decls = collect_declarations(ast);
    const Declaration* reusable = nullptr;
    for (const Declaration& d : decls) {
      if (d.is_function || d.node >= site) continue;
      if (!scope_visible_from(ast, d.scope, site)) continue;
      reusable = &d;  // keep the last one declared before the site
    }
    if (reusable != nullptr) {
      Edit edit(ast);
      insert_statement(edit, *slot, dead_code_statement(reusable->name, true));
      out.push_back(finish(ast, std::move(edit), MutationKind::AddDeadCode, site,
                           "reuse " + reusable->name));
    }
    {
      std::string name = fresh_name(used, "dead");
      Edit edit(ast);
      insert_statement(edit, *slot, dead_code_statement(name, false));
      out.push_back(finish(ast, std::move(edit), MutationKind::AddDeadCode, site, name));
    }
  }

  if (auto renamed = rename_mutant(ast, site, MutationKind::RenameVariable)) {
    out.push_back(std::move(*renamed));
  }
  if (auto renamed = rename_mutant(ast, site, MutationKind::RenameUserFunction)) {
    out.push_back(std::move(*renamed));
  }

  if (slot) {
    std::string name = fresh_name(used, "tmp");
    Edit edit(ast);
    auto decl = make(NodeKind::VarDeclaration, name);
    decl->add(make(NodeKind::LiteralNumber, "1"));
    insert_statement(edit, *slot, std::move(decl));
    out.push_back(
        finish(ast, std::move(edit), MutationKind::AddSideEffectFreeExpr, site, name));
  }
  return out;
}

std::vector<Mutant> mutate_gj(const Ast& ast, NodeId site) {
  std::vector<Mutant> out;
  if (!ast.valid(site) || ast.is_synthetic(site)) return out;

  // Append an argument to the nearest enclosing call.
  NodeId call = site;
  while (call != minijs::kNoNode && ast.node(call).kind != NodeKind::CallExpression &&
         ast.node(call).kind != NodeKind::NewExpression) {
    call = ast.parent_of(call);
  }
  if (call != minijs::kNoNode) {
    auto append_argument = [&](NodePtr expr, const std::string& payload) {
      Edit edit(ast);
      auto arg = make(NodeKind::Argument);
      arg->add(std::move(expr));
      edit.by_origin.at(call)->children.push_back(std::move(arg));
      out.push_back(
          finish(ast, std::move(edit), MutationKind::AddMethodArgument, site, payload));
    };
    for (const Declaration& d : collect_declarations(ast)) {
      if (d.is_function || d.node >= call) continue;
      if (!scope_visible_from(ast, d.scope, call)) continue;
      append_argument(make(NodeKind::Identifier, d.name), "arg " + d.name);
    }
    append_argument(make(NodeKind::ThisExpression), "arg this");
    append_argument(make(NodeKind::ObjectExpression), "arg {}");
    append_argument(make(NodeKind::LiteralNumber, "42"), "arg 42");
  }

  // Append a parameter to the nearest enclosing function.
  NodeId fn = site;
  while (fn != minijs::kNoNode && ast.node(fn).kind != NodeKind::FunctionDeclaration &&
         ast.node(fn).kind != NodeKind::FunctionExpression) {
    fn = ast.parent_of(fn);
  }
  if (fn != minijs::kNoNode) {
    std::string name = fresh_name(used_names(ast), "p");
    Edit edit(ast);
    BuilderNode* builder_fn = edit.by_origin.at(fn);
    builder_fn->children.insert(builder_fn->children.end() - 1,
                                make(NodeKind::Parameter, name));
    out.push_back(finish(ast, std::move(edit), MutationKind::AddMethodParameter, site, name));
  }

  // Change the first constant in the site's subtree.
  NodeId literal = minijs::kNoNode;
  NodeId subtree_end = site + ast.subtree_size(site);
  for (NodeId id = site; id < subtree_end; ++id) {
    NodeKind k = ast.node(id).kind;
    if (k == NodeKind::LiteralNumber || k == NodeKind::LiteralString) {
      literal = id;
      break;
    }
  }
  if (literal != minijs::kNoNode) {
    if (ast.node(literal).kind == NodeKind::LiteralNumber) {
      double current = std::stod(*ast.node(literal).value);
      const double pool[] = {0.0, 1.0, -1.0, 42.0, current + 1.0};
      for (double v : pool) {
        if (v == current) continue;
        std::string text = format_number(std::abs(v));
        if (text.find('e') != std::string::npos) continue;
        Edit edit(ast);
        BuilderNode* node = edit.by_origin.at(literal);
        if (v < 0) {
          // Negative numbers are unary expressions, not literals.
          auto negated = make(NodeKind::UnaryExpression, "-");
          negated->origin = minijs::kNoNode;
          negated->add(make(NodeKind::LiteralNumber, text));
          node->kind = negated->kind;
          node->value = negated->value;
          node->children = std::move(negated->children);
          node->origin = minijs::kNoNode;  // the literal node does not survive
        } else {
          node->value = text;
        }
        out.push_back(finish(ast, std::move(edit), MutationKind::ChangeConstant, site,
                             "num " + format_number(v)));
      }
    } else {
      const std::string& current = *ast.node(literal).value;
      for (const std::string& v : {std::string(), std::string("mutant")}) {
        if (v == current) continue;
        Edit edit(ast);
        edit.by_origin.at(literal)->value = v;
        out.push_back(
            finish(ast, std::move(edit), MutationKind::ChangeConstant, site, "str \"" + v + "\""));
      }
    }
  }
  return out;
}

std::optional<Example> transport_example(const Example& ex, const Mutant& mutant) {
  auto map_node = [&mutant](NodeId id) -> std::optional<NodeId> {
    auto it = mutant.id_map.find(id);
    if (it == mutant.id_map.end()) return std::nullopt;
    return it->second;
  };

  Example out = ex;
  out.program = mutant.program;
  auto query = map_node(ex.query);
  if (!query) return std::nullopt;
  out.query = *query;
  out.call_trace.clear();
  for (NodeId site : ex.call_trace) {
    auto mapped = map_node(site);
    if (!mapped) return std::nullopt;
    out.call_trace.push_back(*mapped);
  }
  if (const auto* label = std::get_if<dataset::PointsToLabel>(&ex.label)) {
    dataset::PointsToLabel mapped_label = *label;
    mapped_label.accept.clear();
    for (NodeId node : label->accept) {
      auto mapped = map_node(node);
      if (!mapped) return std::nullopt;
      mapped_label.accept.push_back(*mapped);
    }
    std::sort(mapped_label.accept.begin(), mapped_label.accept.end());
    out.label = std::move(mapped_label);
  }
  return out;
}

}  // namespace analearn::oracle
