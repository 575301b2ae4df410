#include "analearn/minijs.hpp"

#include <array>
#include <cassert>
#include <memory>
#include <sstream>

namespace analearn::minijs {

namespace {

constexpr std::array<std::string_view, kNodeKindCount> kKindNames = {
    "Program",
    "VarDeclaration",
    "Assignment",
    "Identifier",
    "LiteralNumber",
    "LiteralString",
    "LiteralBoolean",
    "LiteralNull",
    "ObjectExpression",
    "ArrayExpression",
    "NewExpression",
    "CallExpression",
    "MemberExpression",
    "FunctionDeclaration",
    "FunctionExpression",
    "Parameter",
    "Argument",
    "ReturnStatement",
    "ExpressionStatement",
    "IfStatement",
    "TryStatement",
    "CatchClause",
    "ThisExpression",
    "BlockStatement",
    "UnaryExpression",
    "BinaryExpression",
};

}  // namespace

std::string_view node_kind_name(NodeKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<NodeKind> node_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

NodeId Ast::left_sibling(NodeId id) const {
  const Node& n = nodes[id];
  if (n.parent == kNoNode || n.index_in_parent == 0) return kNoNode;
  return nodes[n.parent].children[n.index_in_parent - 1];
}

NodeId Ast::right_sibling(NodeId id) const {
  const Node& n = nodes[id];
  if (n.parent == kNoNode) return kNoNode;
  const auto& sibs = nodes[n.parent].children;
  if (n.index_in_parent + 1 >= sibs.size()) return kNoNode;
  return sibs[n.index_in_parent + 1];
}

std::uint32_t Ast::subtree_size(NodeId id) const {
  std::uint32_t total = 1;
  for (NodeId child : nodes[id].children) total += subtree_size(child);
  return total;
}

NodeId Ast::enclosing_function(NodeId id) const {
  NodeId cur = nodes[id].parent;
  while (cur != kNoNode) {
    NodeKind k = nodes[cur].kind;
    if (k == NodeKind::FunctionDeclaration || k == NodeKind::FunctionExpression) return cur;
    cur = nodes[cur].parent;
  }
  return kNoNode;
}

NodeId Ast::enclosing_statement(NodeId id) const {
  NodeId cur = id;
  while (cur != kNoNode) {
    NodeId p = nodes[cur].parent;
    if (p != kNoNode &&
        (nodes[p].kind == NodeKind::Program || nodes[p].kind == NodeKind::BlockStatement)) {
      return cur;
    }
    cur = p;
  }
  return kNoNode;
}

bool structurally_equal(const Ast& a, const Ast& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const Node& x = a.nodes[i];
    const Node& y = b.nodes[i];
    if (x.kind != y.kind || x.value != y.value || x.parent != y.parent ||
        x.children != y.children) {
      return false;
    }
  }
  return true;
}

bool is_read_event(TraceEventKind kind) {
  return kind == TraceEventKind::ObjectRead || kind == TraceEventKind::ThisRead ||
         kind == TraceEventKind::ParamRead;
}

std::string format_trace(const Trace& trace) {
  std::ostringstream out;
  for (const TraceEvent& ev : trace.events) {
    switch (ev.kind) {
      case TraceEventKind::Alloc: out << "ALLOC"; break;
      case TraceEventKind::ObjectRead: out << "READ"; break;
      case TraceEventKind::ThisRead: out << "THISREAD"; break;
      case TraceEventKind::ParamRead: out << "PARAMREAD"; break;
      case TraceEventKind::MethodEnter: out << "ENTER"; break;
      case TraceEventKind::MethodExit: out << "EXIT"; break;
    }
    if (ev.object == kNoObject) {
      out << " -";
    } else {
      out << ' ' << ev.object;
    }
    out << ' ' << ev.node;
    for (NodeId site : ev.call_trace) out << ' ' << site;
    out << '\n';
  }
  return out.str();
}

namespace detail {

namespace {

void count_nodes(const BuilderNode& n, std::size_t& total) {
  ++total;
  for (const auto& c : n.children) count_nodes(*c, total);
}

NodeId emit(const BuilderNode& n, NodeId parent, std::uint32_t index, FinalizeResult& out) {
  NodeId id = static_cast<NodeId>(out.ast.nodes.size());
  out.ast.nodes.push_back(Node{n.kind, n.value, {}, parent, index});
  if (n.origin != kNoNode) out.id_map.emplace_back(n.origin, id);
  for (std::uint32_t i = 0; i < n.children.size(); ++i) {
    NodeId child = emit(*n.children[i], id, i, out);
    out.ast.nodes[id].children.push_back(child);
  }
  return id;
}

NodeId append_leaf(Ast& ast, NodeKind kind, std::optional<std::string> value) {
  NodeId id = static_cast<NodeId>(ast.nodes.size());
  Node& program = ast.nodes[0];
  ast.nodes.push_back(
      Node{kind, std::move(value), {}, 0, static_cast<std::uint32_t>(program.children.size())});
  ast.nodes[0].children.push_back(id);
  return id;
}

}  // namespace

FinalizeResult finalize(const BuilderNode& root) {
  assert(root.kind == NodeKind::Program);
  FinalizeResult out;
  std::size_t total = 0;
  count_nodes(root, total);
  out.ast.nodes.reserve(total + 4);
  emit(root, kNoNode, 0, out);
  out.ast.synthetic_global = append_leaf(out.ast, NodeKind::Identifier, "global");
  out.ast.synthetic_undefined = append_leaf(out.ast, NodeKind::Identifier, "undefined");
  out.ast.synthetic_null = append_leaf(out.ast, NodeKind::LiteralNull, std::nullopt);
  out.ast.synthetic_this = append_leaf(out.ast, NodeKind::ThisExpression, std::nullopt);
  return out;
}

namespace {

std::unique_ptr<BuilderNode> copy_subtree(const Ast& ast, NodeId id) {
  auto node = std::make_unique<BuilderNode>(ast.node(id).kind, ast.node(id).value);
  node->origin = id;
  for (NodeId child : ast.node(id).children) {
    if (ast.is_synthetic(child)) continue;
    node->children.push_back(copy_subtree(ast, child));
  }
  return node;
}

}  // namespace

std::unique_ptr<BuilderNode> to_builder(const Ast& ast) { return copy_subtree(ast, ast.root()); }

}  // namespace detail

}  // namespace analearn::minijs
