#include <cassert>
#include <sstream>
#include <string>

#include "analearn/minijs.hpp"

namespace analearn::minijs {

namespace {

int binary_precedence(const std::string& op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  return 6;  // * / %
}

constexpr int kUnaryPrec = 7;
constexpr int kPostfixPrec = 8;

class Renderer {
 public:
  explicit Renderer(const Ast& ast) : ast_(ast) {}

  std::string program() {
    for (NodeId stmt : ast_.node(ast_.root()).children) {
      if (ast_.is_synthetic(stmt)) continue;
      statement(stmt, 0);
    }
    return std::move(out_).str();
  }

  std::string subtree(NodeId id) {
    const Node& n = ast_.node(id);
    switch (n.kind) {
      case NodeKind::Program: return program();
      case NodeKind::VarDeclaration:
      case NodeKind::Assignment:
      case NodeKind::FunctionDeclaration:
      case NodeKind::ReturnStatement:
      case NodeKind::ExpressionStatement:
      case NodeKind::IfStatement:
      case NodeKind::TryStatement:
      case NodeKind::BlockStatement: statement(id, 0); break;
      case NodeKind::CatchClause:
        out_ << "catch (" << *ast_.node(n.children[0]).value << ") ";
        block_body(n.children[1], 0);
        break;
      case NodeKind::Parameter: out_ << *n.value; break;
      case NodeKind::Argument: expression(n.children[0], 0); break;
      default: expression(id, 0); break;
    }
    return std::move(out_).str();
  }

 private:
  void indent(int depth) {
    for (int i = 0; i < depth; ++i) out_ << "  ";
  }

  void statement(NodeId id, int depth) {
    const Node& n = ast_.node(id);
    indent(depth);
    switch (n.kind) {
      case NodeKind::VarDeclaration:
        out_ << "var " << *n.value;
        if (!n.children.empty()) {
          out_ << " = ";
          expression(n.children[0], 0);
        }
        out_ << ";\n";
        break;
      case NodeKind::Assignment: {
        maybe_parenthesized(n.children[0]);
        out_ << " = ";
        expression(n.children[1], 0);
        out_ << ";\n";
        break;
      }
      case NodeKind::FunctionDeclaration: {
        out_ << "function " << *n.value;
        function_tail(id, depth);
        out_ << "\n";
        break;
      }
      case NodeKind::ReturnStatement:
        out_ << "return";
        if (!n.children.empty()) {
          out_ << ' ';
          expression(n.children[0], 0);
        }
        out_ << ";\n";
        break;
      case NodeKind::ExpressionStatement:
        maybe_parenthesized(n.children[0]);
        out_ << ";\n";
        break;
      case NodeKind::IfStatement: if_statement(id, depth); break;
      case NodeKind::TryStatement: {
        out_ << "try ";
        block_body(n.children[0], depth);
        const Node& clause = ast_.node(n.children[1]);
        out_ << " catch (" << *ast_.node(clause.children[0]).value << ") ";
        block_body(clause.children[1], depth);
        out_ << "\n";
        break;
      }
      case NodeKind::BlockStatement:
        block_body(id, depth);
        out_ << "\n";
        break;
      default: assert(false && "not a statement kind"); break;
    }
  }

  void if_statement(NodeId id, int depth) {
    const Node& n = ast_.node(id);
    out_ << "if (";
    expression(n.children[0], 0);
    out_ << ") ";
    block_body(n.children[1], depth);
    if (n.children.size() > 2) {
      NodeId alt = n.children[2];
      out_ << " else ";
      if (ast_.node(alt).kind == NodeKind::IfStatement) {
        if_statement(alt, depth);
        return;
      }
      block_body(alt, depth);
    }
    out_ << "\n";
  }

  void block_body(NodeId id, int depth) {
    out_ << "{\n";
    for (NodeId stmt : ast_.node(id).children) statement(stmt, depth + 1);
    indent(depth);
    out_ << "}";
  }

  void function_tail(NodeId fn, int depth) {
    const Node& n = ast_.node(fn);
    out_ << "(";
    for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
      if (i > 0) out_ << ", ";
      out_ << *ast_.node(n.children[i]).value;
    }
    out_ << ") ";
    block_body(n.children.back(), depth);
  }

  // A statement-initial `{` or `function` would parse as a block or a
  // declaration; wrap the expression in parentheses in that case.
  void maybe_parenthesized(NodeId id) {
    if (starts_ambiguously(id)) {
      out_ << "(";
      expression(id, 0);
      out_ << ")";
    } else {
      expression(id, 0);
    }
  }

  bool starts_ambiguously(NodeId id) const {
    NodeId cur = id;
    while (true) {
      const Node& n = ast_.node(cur);
      switch (n.kind) {
        case NodeKind::ObjectExpression:
        case NodeKind::FunctionExpression: return true;
        case NodeKind::BinaryExpression:
        case NodeKind::MemberExpression:
        case NodeKind::CallExpression: cur = n.children[0]; break;
        default: return false;
      }
    }
  }

  void expression(NodeId id, int parent_prec) {
    const Node& n = ast_.node(id);
    switch (n.kind) {
      case NodeKind::Identifier: out_ << *n.value; break;
      case NodeKind::LiteralNumber: out_ << *n.value; break;
      case NodeKind::LiteralBoolean: out_ << *n.value; break;
      case NodeKind::LiteralNull: out_ << "null"; break;
      case NodeKind::ThisExpression: out_ << "this"; break;
      case NodeKind::LiteralString: string_literal(*n.value); break;
      case NodeKind::ObjectExpression: {
        out_ << "{";
        for (std::size_t i = 0; i + 1 < n.children.size(); i += 2) {
          if (i > 0) out_ << ", ";
          out_ << *ast_.node(n.children[i]).value << ": ";
          expression(n.children[i + 1], 0);
        }
        out_ << "}";
        break;
      }
      case NodeKind::ArrayExpression: {
        out_ << "[";
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (i > 0) out_ << ", ";
          expression(n.children[i], 0);
        }
        out_ << "]";
        break;
      }
      case NodeKind::MemberExpression: {
        member_object(n.children[0]);
        out_ << "." << *ast_.node(n.children[1]).value;
        break;
      }
      case NodeKind::CallExpression: {
        NodeId callee = n.children[0];
        if (ast_.node(callee).kind == NodeKind::FunctionExpression) {
          out_ << "(";
          expression(callee, 0);
          out_ << ")";
        } else {
          expression(callee, kPostfixPrec);
        }
        argument_list(n, 1);
        break;
      }
      case NodeKind::NewExpression: {
        out_ << "new ";
        expression(n.children[0], kPostfixPrec);
        argument_list(n, 1);
        break;
      }
      case NodeKind::FunctionExpression: {
        out_ << "function";
        if (n.value) out_ << ' ' << *n.value;
        function_tail(id, 0);
        break;
      }
      case NodeKind::UnaryExpression: {
        bool wrap = kUnaryPrec < parent_prec;
        if (wrap) out_ << "(";
        out_ << *n.value;
        if (*n.value == "typeof") out_ << ' ';
        NodeId operand = n.children[0];
        if (ast_.node(operand).kind == NodeKind::UnaryExpression) {
          out_ << "(";
          expression(operand, 0);
          out_ << ")";
        } else {
          expression(operand, kUnaryPrec);
        }
        if (wrap) out_ << ")";
        break;
      }
      case NodeKind::BinaryExpression: {
        int prec = binary_precedence(*n.value);
        bool wrap = prec < parent_prec;
        if (wrap) out_ << "(";
        expression(n.children[0], prec);
        out_ << ' ' << *n.value << ' ';
        expression(n.children[1], prec + 1);
        if (wrap) out_ << ")";
        break;
      }
      default: assert(false && "not an expression kind"); break;
    }
  }

  // `42.x` would lex the dot into the number; parenthesize literal receivers.
  void member_object(NodeId id) {
    NodeKind k = ast_.node(id).kind;
    if (k == NodeKind::LiteralNumber || k == NodeKind::FunctionExpression) {
      out_ << "(";
      expression(id, 0);
      out_ << ")";
    } else {
      expression(id, kPostfixPrec);
    }
  }

  void argument_list(const Node& call, std::size_t first) {
    out_ << "(";
    for (std::size_t i = first; i < call.children.size(); ++i) {
      if (i > first) out_ << ", ";
      expression(ast_.node(call.children[i]).children[0], 0);
    }
    out_ << ")";
  }

  void string_literal(const std::string& value) {
    out_ << '"';
    for (char c : value) {
      switch (c) {
        case '"': out_ << "\\\""; break;
        case '\\': out_ << "\\\\"; break;
        case '\n': out_ << "\\n"; break;
        case '\t': out_ << "\\t"; break;
        default: out_ << c; break;
      }
    }
    out_ << '"';
  }

  const Ast& ast_;
  std::ostringstream out_;
};

}  // namespace

std::string render(const Ast& ast) { return Renderer(ast).program(); }

std::string render_snippet(const Ast& ast, NodeId id, std::size_t max_len) {
  std::string text = Renderer(ast).subtree(id);
  std::string flat;
  flat.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    if (c == '\n' || c == '\t' || c == ' ') {
      if (!flat.empty() && !in_space) flat.push_back(' ');
      in_space = true;
    } else {
      flat.push_back(c);
      in_space = false;
    }
  }
  while (!flat.empty() && flat.back() == ' ') flat.pop_back();
  if (flat.size() > max_len) {
    flat.resize(max_len - 3);
    flat += "...";
  }
  return flat;
}

}  // namespace analearn::minijs
