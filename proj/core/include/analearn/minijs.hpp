#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// MiniJS: a small JavaScript-like language with a parser, canonical printer
// and an instrumented interpreter. The interpreter records a trace of object
// allocations and reads which downstream modules turn into labeled analysis
// examples. The language is defined normatively in docs/minilang.md.
namespace analearn::minijs {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

using ObjectId = std::uint64_t;
inline constexpr ObjectId kNoObject = std::numeric_limits<ObjectId>::max();

enum class NodeKind : std::uint8_t {
  Program,
  VarDeclaration,
  Assignment,
  Identifier,
  LiteralNumber,
  LiteralString,
  LiteralBoolean,
  LiteralNull,
  ObjectExpression,
  ArrayExpression,
  NewExpression,
  CallExpression,
  MemberExpression,
  FunctionDeclaration,
  FunctionExpression,
  Parameter,
  Argument,
  ReturnStatement,
  ExpressionStatement,
  IfStatement,
  TryStatement,
  CatchClause,
  ThisExpression,
  BlockStatement,
  UnaryExpression,
  BinaryExpression,
};

inline constexpr int kNodeKindCount = 26;

std::string_view node_kind_name(NodeKind kind);
std::optional<NodeKind> node_kind_from_name(std::string_view name);

struct Node {
  NodeKind kind = NodeKind::Program;
  std::optional<std::string> value;  // terminal token: name or literal text
  std::vector<NodeId> children;
  NodeId parent = kNoNode;
  std::uint32_t index_in_parent = 0;
};

// Program tree with dense pre-order node ids. Every tree carries four
// synthetic leaves as the final children of Program (targets of the DSL's
// GoToGlobal/GoToUndef/GoToNull/GoToThis moves); they are not rendered.
struct Ast {
  std::vector<Node> nodes;
  NodeId synthetic_global = kNoNode;
  NodeId synthetic_undefined = kNoNode;
  NodeId synthetic_null = kNoNode;
  NodeId synthetic_this = kNoNode;

  NodeId root() const { return 0; }
  std::size_t size() const { return nodes.size(); }
  const Node& node(NodeId id) const { return nodes[id]; }
  bool valid(NodeId id) const { return id < nodes.size(); }
  bool is_synthetic(NodeId id) const {
    return id == synthetic_global || id == synthetic_undefined ||
           id == synthetic_null || id == synthetic_this;
  }

  NodeId parent_of(NodeId id) const { return nodes[id].parent; }
  NodeId first_child(NodeId id) const {
    return nodes[id].children.empty() ? kNoNode : nodes[id].children.front();
  }
  NodeId last_child(NodeId id) const {
    return nodes[id].children.empty() ? kNoNode : nodes[id].children.back();
  }
  NodeId left_sibling(NodeId id) const;
  NodeId right_sibling(NodeId id) const;
  // Number of nodes in the subtree rooted at id (including id).
  std::uint32_t subtree_size(NodeId id) const;
  // Nearest proper ancestor that is a function declaration/expression, or
  // kNoNode when id sits in the top-level scope.
  NodeId enclosing_function(NodeId id) const;
  // Nearest self-or-ancestor in statement position (child of a Program or
  // BlockStatement), or kNoNode.
  NodeId enclosing_statement(NodeId id) const;
};

bool structurally_equal(const Ast& a, const Ast& b);

struct SyntaxError : std::runtime_error {
  SyntaxError(std::string message, int line, int column)
      : std::runtime_error(std::move(message)), line(line), column(column) {}
  int line;
  int column;
};

Ast parse(std::string_view source);

// Canonical source text; parse(render(ast)) is structurally identical.
std::string render(const Ast& ast);

// One-line rendering of a subtree, truncated for display.
std::string render_snippet(const Ast& ast, NodeId id, std::size_t max_len = 60);

enum class TraceEventKind : std::uint8_t {
  Alloc,
  ObjectRead,
  ThisRead,
  ParamRead,
  MethodEnter,
  MethodExit,
};

struct TraceEvent {
  TraceEventKind kind;
  ObjectId object = kNoObject;
  NodeId node = kNoNode;
  // Call-site node ids, most recent first. Present on ThisRead/ParamRead.
  std::vector<NodeId> call_trace;
};

struct Trace {
  std::vector<TraceEvent> events;
};

bool is_read_event(TraceEventKind kind);
std::string format_trace(const Trace& trace);

struct RuntimeErrorInfo {
  NodeId node = kNoNode;
  std::string message;
};

struct InterpretOptions {
  int max_call_depth = 32;
};

struct InterpretResult {
  Trace trace;
  // Set when execution faulted; `trace` then holds the prefix up to the fault.
  std::optional<RuntimeErrorInfo> error;
};

InterpretResult interpret(const Ast& ast, const InterpretOptions& options = {});

namespace detail {

// Mutable tree used by the parser and by program mutations. finalize() assigns
// pre-order ids, appends the synthetic leaves and reports where tagged nodes
// ended up.
struct BuilderNode {
  NodeKind kind = NodeKind::Program;
  std::optional<std::string> value;
  std::vector<std::unique_ptr<BuilderNode>> children;
  NodeId origin = kNoNode;  // id this node had in the source tree, if any

  BuilderNode() = default;
  BuilderNode(NodeKind k, std::optional<std::string> v) : kind(k), value(std::move(v)) {}
  BuilderNode* add(std::unique_ptr<BuilderNode> child) {
    children.push_back(std::move(child));
    return children.back().get();
  }
};

struct FinalizeResult {
  Ast ast;
  // origin id -> new id for every tagged node that survived.
  std::vector<std::pair<NodeId, NodeId>> id_map;
};

// `root` must be a Program node without synthetic children.
FinalizeResult finalize(const BuilderNode& root);

// Deep copies the tree, dropping synthetic leaves and tagging each copy with
// the id it had in `ast`.
std::unique_ptr<BuilderNode> to_builder(const Ast& ast);

}  // namespace detail

}  // namespace analearn::minijs
