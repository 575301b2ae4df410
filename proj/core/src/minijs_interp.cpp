#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "analearn/minijs.hpp"

namespace analearn::minijs {

namespace {

struct Value {
  enum class Type : std::uint8_t { Undefined, Null, Boolean, Number, String, Object };

  Type type = Type::Undefined;
  bool boolean = false;
  double number = 0.0;
  std::string string;
  ObjectId object = kNoObject;

  bool is_object() const { return type == Type::Object; }

  static Value undefined() { return {}; }
  static Value null() { return Value{Type::Null, false, 0.0, {}, kNoObject}; }
  static Value boolean_of(bool b) { return Value{Type::Boolean, b, 0.0, {}, kNoObject}; }
  static Value number_of(double n) { return Value{Type::Number, false, n, {}, kNoObject}; }
  static Value string_of(std::string s) {
    return Value{Type::String, false, 0.0, std::move(s), kNoObject};
  }
  static Value object_of(ObjectId id) { return Value{Type::Object, false, 0.0, {}, id}; }
};

struct Env {
  std::map<std::string, Value> vars;
  std::shared_ptr<Env> parent;

  explicit Env(std::shared_ptr<Env> p = nullptr) : parent(std::move(p)) {}

  Value* find(const std::string& name) {
    for (Env* e = this; e != nullptr; e = e->parent.get()) {
      auto it = e->vars.find(name);
      if (it != e->vars.end()) return &it->second;
    }
    return nullptr;
  }
};

struct HeapObject {
  enum class Kind : std::uint8_t { Plain, Array, Function, Boxed };

  Kind kind = Kind::Plain;
  std::map<std::string, Value> props;
  std::vector<Value> elems;           // Array
  NodeId fn_node = kNoNode;           // Function
  std::shared_ptr<Env> fn_env;        // Function
  Value boxed;                        // Boxed
};

// Non-fatal fault; catchable by MiniJS try/catch.
struct MiniError {
  NodeId node;
  std::string message;
};

struct ReturnSignal {
  Value value;
};

bool is_array_builtin(const std::string& name) {
  return name == "map" || name == "filter" || name == "forEach" || name == "some" ||
         name == "every" || name == "find" || name == "slice";
}

class Interpreter {
 public:
  Interpreter(const Ast& ast, const InterpretOptions& options)
      : ast_(ast), options_(options), global_env_(std::make_shared<Env>()) {}

  InterpretResult run() {
    InterpretResult result;
    collect_first_this_reads();
    global_object_ = alloc_object(HeapObject::Kind::Plain, ast_.synthetic_global);
    emit_read(global_object_, ast_.synthetic_global);
    emit_read(global_object_, ast_.synthetic_this);
    this_stack_.push_back(global_object_);
    auto top_this = first_this_.find(ast_.root());
    if (top_this != first_this_.end()) {
      emit(TraceEvent{TraceEventKind::ThisRead, global_object_, top_this->second, call_trace()});
    }
    try {
      for (NodeId stmt : ast_.node(ast_.root()).children) {
        if (ast_.is_synthetic(stmt)) continue;
        exec_statement(stmt);
      }
    } catch (const MiniError& err) {
      result.error = RuntimeErrorInfo{err.node, err.message};
    } catch (const ReturnSignal&) {
      result.error = RuntimeErrorInfo{ast_.root(), "return outside function"};
    }
    result.trace.events = std::move(events_);
    return result;
  }

 private:
  // --- trace plumbing ---

  void emit(TraceEvent ev) { events_.push_back(std::move(ev)); }

  void emit_read(ObjectId obj, NodeId node) {
    emit(TraceEvent{TraceEventKind::ObjectRead, obj, node, {}});
  }

  void read_if_object(const Value& v, NodeId node) {
    if (v.is_object()) emit_read(v.object, node);
  }

  std::vector<NodeId> call_trace() const {
    return {call_sites_.rbegin(), call_sites_.rend()};  // most recent first
  }

  ObjectId alloc_object(HeapObject::Kind kind, NodeId at) {
    ObjectId id = heap_.size();
    heap_.push_back(HeapObject{kind, {}, {}, kNoNode, nullptr, Value::undefined()});
    emit(TraceEvent{TraceEventKind::Alloc, id, at, {}});
    return id;
  }

  HeapObject& heap(ObjectId id) { return heap_[id]; }

  // One ThisRead per entered scope, anchored at the scope's first lexical
  // `this`. Scopes that never mention `this` produce no event.
  void collect_first_this_reads() {
    for (NodeId id = 0; id < ast_.size(); ++id) {
      if (ast_.node(id).kind != NodeKind::ThisExpression || ast_.is_synthetic(id)) continue;
      NodeId owner = ast_.enclosing_function(id);
      if (owner == kNoNode) owner = ast_.root();
      first_this_.emplace(owner, id);  // keeps the first in pre-order
    }
  }

  // --- statements ---

  void exec_statement(NodeId id) {
    const Node& n = ast_.node(id);
    switch (n.kind) {
      case NodeKind::VarDeclaration: {
        Value v = n.children.empty() ? Value::undefined() : eval(n.children[0]);
        current_env().vars[*n.value] = v;
        break;
      }
      case NodeKind::Assignment: exec_assignment(id); break;
      case NodeKind::FunctionDeclaration: {
        Value fn = make_function(id);
        current_env().vars[*n.value] = fn;
        break;
      }
      case NodeKind::ReturnStatement: {
        Value v = n.children.empty() ? Value::undefined() : eval(n.children[0]);
        if (call_sites_.empty()) throw MiniError{id, "return outside function"};
        throw ReturnSignal{v};
      }
      case NodeKind::ExpressionStatement: eval(n.children[0]); break;
      case NodeKind::IfStatement: {
        if (truthy(eval(n.children[0]))) {
          exec_statement(n.children[1]);
        } else if (n.children.size() > 2) {
          exec_statement(n.children[2]);
        }
        break;
      }
      case NodeKind::TryStatement: exec_try(id); break;
      case NodeKind::BlockStatement:
        for (NodeId stmt : n.children) exec_statement(stmt);
        break;
      default: throw MiniError{id, "not a statement"};
    }
  }

  void exec_assignment(NodeId id) {
    const Node& n = ast_.node(id);
    NodeId target = n.children[0];
    if (ast_.node(target).kind == NodeKind::Identifier) {
      Value v = eval(n.children[1]);
      const std::string& name = *ast_.node(target).value;
      if (Value* slot = current_env().find(name)) {
        *slot = v;
      } else {
        global_env_->vars[name] = v;  // undeclared targets become globals
      }
    } else {
      const Node& member = ast_.node(target);
      Value obj = eval(member.children[0]);
      if (!obj.is_object()) throw MiniError{target, "property assignment on non-object"};
      Value v = eval(n.children[1]);
      const std::string& prop = *ast_.node(member.children[1]).value;
      if (heap(obj.object).kind == HeapObject::Kind::Array && prop == "length") {
        throw MiniError{target, "cannot assign array length"};
      }
      heap(obj.object).props[prop] = v;
    }
  }

  void exec_try(NodeId id) {
    const Node& n = ast_.node(id);
    try {
      exec_statement(n.children[0]);
    } catch (const MiniError& err) {
      const Node& clause = ast_.node(n.children[1]);
      NodeId param = clause.children[0];
      ObjectId err_obj = alloc_object(HeapObject::Kind::Plain, param);
      heap(err_obj).props["message"] = Value::string_of(err.message);
      emit(TraceEvent{TraceEventKind::ParamRead, err_obj, param, call_trace()});
      current_env().vars[*ast_.node(param).value] = Value::object_of(err_obj);
      exec_statement(clause.children[1]);
    }
  }

  // --- expressions ---

  Env& current_env() { return *env_stack_.back(); }

  Value eval(NodeId id) {
    const Node& n = ast_.node(id);
    switch (n.kind) {
      case NodeKind::LiteralNumber: return Value::number_of(std::stod(*n.value));
      case NodeKind::LiteralString: return Value::string_of(*n.value);
      case NodeKind::LiteralBoolean: return Value::boolean_of(*n.value == "true");
      case NodeKind::LiteralNull: return Value::null();
      case NodeKind::Identifier: return eval_identifier(id);
      case NodeKind::ThisExpression: {
        Value v = Value::object_of(this_stack_.back());
        emit_read(v.object, id);
        return v;
      }
      case NodeKind::ObjectExpression: {
        ObjectId obj = alloc_object(HeapObject::Kind::Plain, id);
        for (std::size_t i = 0; i + 1 < n.children.size(); i += 2) {
          Value v = eval(n.children[i + 1]);
          heap(obj).props[*ast_.node(n.children[i]).value] = v;
        }
        emit_read(obj, id);
        return Value::object_of(obj);
      }
      case NodeKind::ArrayExpression: {
        ObjectId obj = alloc_object(HeapObject::Kind::Array, id);
        for (NodeId elem : n.children) {
          Value v = eval(elem);
          heap(obj).elems.push_back(v);
        }
        emit_read(obj, id);
        return Value::object_of(obj);
      }
      case NodeKind::FunctionExpression: return make_function(id);
      case NodeKind::MemberExpression: {
        Value obj = eval(n.children[0]);
        Value v = member_read(obj, id);
        read_if_object(v, n.children[1]);
        return v;
      }
      case NodeKind::UnaryExpression: return eval_unary(id);
      case NodeKind::BinaryExpression: return eval_binary(id);
      case NodeKind::CallExpression: {
        Value v = eval_call(id);
        read_if_object(v, id);
        return v;
      }
      case NodeKind::NewExpression: {
        Value v = eval_new(id);
        read_if_object(v, id);
        return v;
      }
      default: throw MiniError{id, "not an expression"};
    }
  }

  Value eval_identifier(NodeId id) {
    const std::string& name = *ast_.node(id).value;
    if (name == "undefined") return Value::undefined();
    if (name == "global") {
      emit_read(global_object_, id);
      return Value::object_of(global_object_);
    }
    if (name == "call" || name == "apply" || name == "Object" || name == "Number") {
      throw MiniError{id, "builtin '" + name + "' is not a value"};
    }
    Value* slot = current_env().find(name);
    if (slot == nullptr) throw MiniError{id, "undefined variable '" + name + "'"};
    read_if_object(*slot, id);
    return *slot;
  }

  Value make_function(NodeId id) {
    ObjectId obj = alloc_object(HeapObject::Kind::Function, id);
    heap(obj).fn_node = id;
    heap(obj).fn_env = env_stack_.back();
    emit_read(obj, id);
    return Value::object_of(obj);
  }

  Value member_read(const Value& obj, NodeId member_node) {
    const Node& n = ast_.node(member_node);
    if (!obj.is_object()) throw MiniError{member_node, "property access on non-object"};
    const std::string& prop = *ast_.node(n.children[1]).value;
    HeapObject& h = heap(obj.object);
    if (h.kind == HeapObject::Kind::Array && prop == "length") {
      return Value::number_of(static_cast<double>(h.elems.size()));
    }
    auto it = h.props.find(prop);
    return it == h.props.end() ? Value::undefined() : it->second;
  }

  Value eval_unary(NodeId id) {
    const Node& n = ast_.node(id);
    const std::string& op = *n.value;
    Value v = eval(n.children[0]);
    if (op == "!") return Value::boolean_of(!truthy(v));
    if (op == "typeof") return Value::string_of(type_name(v));
    if (v.type != Value::Type::Number) throw MiniError{id, "unary '" + op + "' on non-number"};
    return Value::number_of(op == "-" ? -v.number : v.number);
  }

  Value eval_binary(NodeId id) {
    const Node& n = ast_.node(id);
    const std::string& op = *n.value;
    if (op == "&&") {
      Value lhs = eval(n.children[0]);
      return truthy(lhs) ? eval(n.children[1]) : lhs;
    }
    if (op == "||") {
      Value lhs = eval(n.children[0]);
      return truthy(lhs) ? lhs : eval(n.children[1]);
    }
    Value lhs = eval(n.children[0]);
    Value rhs = eval(n.children[1]);
    if (op == "==") return Value::boolean_of(loose_equal(lhs, rhs));
    if (op == "!=") return Value::boolean_of(!loose_equal(lhs, rhs));
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      // Relational comparison is defined on numbers only; anything else
      // compares false (so e.g. `x >= undefined` filters everything out).
      if (lhs.type != Value::Type::Number || rhs.type != Value::Type::Number) {
        return Value::boolean_of(false);
      }
      if (op == "<") return Value::boolean_of(lhs.number < rhs.number);
      if (op == "<=") return Value::boolean_of(lhs.number <= rhs.number);
      if (op == ">") return Value::boolean_of(lhs.number > rhs.number);
      return Value::boolean_of(lhs.number >= rhs.number);
    }
    if (op == "+") {
      if (lhs.type == Value::Type::Number && rhs.type == Value::Type::Number) {
        return Value::number_of(lhs.number + rhs.number);
      }
      if (lhs.type == Value::Type::String && rhs.type == Value::Type::String) {
        return Value::string_of(lhs.string + rhs.string);
      }
      throw MiniError{id, "bad operands for '+'"};
    }
    if (lhs.type != Value::Type::Number || rhs.type != Value::Type::Number) {
      throw MiniError{id, "arithmetic on non-numbers"};
    }
    if (op == "-") return Value::number_of(lhs.number - rhs.number);
    if (op == "*") return Value::number_of(lhs.number * rhs.number);
    if (op == "/") return Value::number_of(lhs.number / rhs.number);
    return Value::number_of(std::fmod(lhs.number, rhs.number));
  }

  static bool truthy(const Value& v) {
    switch (v.type) {
      case Value::Type::Undefined:
      case Value::Type::Null: return false;
      case Value::Type::Boolean: return v.boolean;
      case Value::Type::Number: return v.number != 0.0 && !std::isnan(v.number);
      case Value::Type::String: return !v.string.empty();
      case Value::Type::Object: return true;
    }
    return false;
  }

  static bool loose_equal(const Value& a, const Value& b) {
    if (a.type != b.type) return false;
    switch (a.type) {
      case Value::Type::Undefined:
      case Value::Type::Null: return true;
      case Value::Type::Boolean: return a.boolean == b.boolean;
      case Value::Type::Number: return a.number == b.number;
      case Value::Type::String: return a.string == b.string;
      case Value::Type::Object: return a.object == b.object;
    }
    return false;
  }

  std::string type_name(const Value& v) {
    switch (v.type) {
      case Value::Type::Undefined: return "undefined";
      case Value::Type::Null: return "object";
      case Value::Type::Boolean: return "boolean";
      case Value::Type::Number: return "number";
      case Value::Type::String: return "string";
      case Value::Type::Object:
        return heap_[v.object].kind == HeapObject::Kind::Function ? "function" : "object";
    }
    return "undefined";
  }

  // --- calls ---

  struct EvaluatedArgs {
    std::vector<Value> values;
    std::vector<NodeId> nodes;  // the Argument wrapper nodes
  };

  EvaluatedArgs eval_arguments(const Node& call, std::size_t first) {
    EvaluatedArgs args;
    for (std::size_t i = first; i < call.children.size(); ++i) {
      NodeId arg_node = call.children[i];
      Value v = eval(ast_.node(arg_node).children[0]);
      read_if_object(v, arg_node);  // the value is observed at the argument slot
      args.values.push_back(v);
      args.nodes.push_back(arg_node);
    }
    return args;
  }

  Value eval_call(NodeId id) {
    const Node& n = ast_.node(id);
    NodeId callee = n.children[0];
    const Node& callee_node = ast_.node(callee);

    if (callee_node.kind == NodeKind::Identifier) {
      const std::string& name = *callee_node.value;
      if (name == "call" || name == "apply") {
        EvaluatedArgs args = eval_arguments(n, 1);
        return builtin_call_apply(id, name == "apply", args);
      }
      if (name == "Object" || name == "Number") {
        throw MiniError{id, "constructor '" + name + "' requires 'new'"};
      }
      Value fn = eval_identifier(callee);
      EvaluatedArgs args = eval_arguments(n, 1);
      return invoke(fn, global_object_, args.values, id);
    }

    if (callee_node.kind == NodeKind::MemberExpression) {
      Value recv = eval(callee_node.children[0]);
      const std::string& prop = *ast_.node(callee_node.children[1]).value;
      if (recv.is_object() && heap(recv.object).kind == HeapObject::Kind::Array &&
          is_array_builtin(prop)) {
        EvaluatedArgs args = eval_arguments(n, 1);
        return builtin_array_method(id, recv.object, prop, args);
      }
      Value fn = member_read(recv, callee);
      read_if_object(fn, callee_node.children[1]);
      EvaluatedArgs args = eval_arguments(n, 1);
      if (!recv.is_object()) throw MiniError{id, "method call on non-object"};
      return invoke(fn, recv.object, args.values, id);
    }

    Value fn = eval(callee);
    EvaluatedArgs args = eval_arguments(n, 1);
    return invoke(fn, global_object_, args.values, id);
  }

  Value eval_new(NodeId id) {
    const Node& n = ast_.node(id);
    NodeId callee = n.children[0];
    const Node& callee_node = ast_.node(callee);

    if (callee_node.kind == NodeKind::Identifier && *callee_node.value == "Object") {
      EvaluatedArgs args = eval_arguments(n, 1);
      // Object(v) returns v unchanged when v is already an object; it only
      // allocates for primitives and for the no-argument form.
      if (!args.values.empty() && args.values[0].is_object()) return args.values[0];
      if (args.values.empty() || args.values[0].type == Value::Type::Null ||
          args.values[0].type == Value::Type::Undefined) {
        return Value::object_of(alloc_object(HeapObject::Kind::Plain, id));
      }
      ObjectId boxed = alloc_object(HeapObject::Kind::Boxed, id);
      heap(boxed).boxed = args.values[0];
      return Value::object_of(boxed);
    }
    if (callee_node.kind == NodeKind::Identifier && *callee_node.value == "Number") {
      EvaluatedArgs args = eval_arguments(n, 1);
      if (!args.values.empty() && args.values[0].is_object()) {
        throw MiniError{id, "new Number of an object"};
      }
      ObjectId boxed = alloc_object(HeapObject::Kind::Boxed, id);
      heap(boxed).boxed = args.values.empty() ? Value::number_of(0) : args.values[0];
      return Value::object_of(boxed);
    }

    Value fn = eval(callee);
    EvaluatedArgs args = eval_arguments(n, 1);
    ObjectId fresh = alloc_object(HeapObject::Kind::Plain, id);
    invoke(fn, fresh, args.values, id);  // constructor return value is ignored
    return Value::object_of(fresh);
  }

  Value builtin_call_apply(NodeId site, bool is_apply, const EvaluatedArgs& args) {
    if (args.values.empty()) throw MiniError{site, "call/apply needs a function"};
    ObjectId this_obj = bind_this_argument(args, 1);
    std::vector<Value> fn_args;
    if (is_apply) {
      if (args.values.size() > 2) {
        const Value& arr = args.values[2];
        if (!arr.is_object() || heap(arr.object).kind != HeapObject::Kind::Array) {
          throw MiniError{site, "apply arguments must be an array"};
        }
        fn_args = heap(arr.object).elems;
      }
    } else {
      fn_args.assign(args.values.begin() + std::min<std::size_t>(2, args.values.size()),
                     args.values.end());
    }
    return invoke(args.values[0], this_obj, fn_args, site);
  }

  // Fig.-4-style binding for an explicit thisArg at `index`: absent, null and
  // undefined fall back to the global object; primitives are boxed fresh.
  ObjectId bind_this_argument(const EvaluatedArgs& args, std::size_t index) {
    if (args.values.size() <= index) return global_object_;
    const Value& v = args.values[index];
    if (v.is_object()) return v.object;
    if (v.type == Value::Type::Null || v.type == Value::Type::Undefined) return global_object_;
    ObjectId boxed = alloc_object(HeapObject::Kind::Boxed, args.nodes[index]);
    heap(boxed).boxed = v;
    return boxed;
  }

  Value builtin_array_method(NodeId site, ObjectId recv, const std::string& name,
                             const EvaluatedArgs& args) {
    if (name == "slice") {
      std::vector<Value> elems = heap(recv).elems;
      auto index_arg = [&](std::size_t i, double fallback) {
        if (args.values.size() <= i) return fallback;
        if (args.values[i].type != Value::Type::Number) {
          throw MiniError{site, "slice index must be a number"};
        }
        double v = args.values[i].number;
        if (v < 0) v += static_cast<double>(elems.size());
        return std::max(0.0, std::min(v, static_cast<double>(elems.size())));
      };
      double begin = index_arg(0, 0.0);
      double end = index_arg(1, static_cast<double>(elems.size()));
      ObjectId out = alloc_object(HeapObject::Kind::Array, site);
      for (std::size_t i = static_cast<std::size_t>(begin); i < static_cast<std::size_t>(end); ++i) {
        heap(out).elems.push_back(elems[i]);
      }
      return Value::object_of(out);
    }

    if (args.values.empty()) throw MiniError{site, "'" + name + "' needs a callback"};
    Value cb = args.values[0];
    ObjectId this_obj = bind_this_argument(args, 1);
    std::vector<Value> elems = heap(recv).elems;

    if (name == "forEach") {
      for (const Value& e : elems) invoke(cb, this_obj, {e}, site);
      return Value::undefined();
    }
    if (name == "some" || name == "every") {
      bool want = name == "some";
      for (const Value& e : elems) {
        if (truthy(invoke(cb, this_obj, {e}, site)) == want) return Value::boolean_of(want);
      }
      return Value::boolean_of(!want);
    }
    if (name == "find") {
      for (const Value& e : elems) {
        if (truthy(invoke(cb, this_obj, {e}, site))) return e;
      }
      return Value::undefined();
    }

    ObjectId out = kNoObject;
    std::vector<Value> results;
    for (const Value& e : elems) {
      Value r = invoke(cb, this_obj, {e}, site);
      if (name == "map") {
        results.push_back(r);
      } else if (truthy(r)) {  // filter
        results.push_back(e);
      }
    }
    out = alloc_object(HeapObject::Kind::Array, site);
    heap(out).elems = std::move(results);
    return Value::object_of(out);
  }

  Value invoke(const Value& fn, ObjectId this_obj, const std::vector<Value>& args, NodeId site) {
    if (!fn.is_object() || heap(fn.object).kind != HeapObject::Kind::Function) {
      throw MiniError{site, "calling a non-function"};
    }
    if (call_sites_.size() >= static_cast<std::size_t>(options_.max_call_depth)) {
      throw MiniError{site, "call depth exceeded"};
    }
    NodeId fn_node = heap(fn.object).fn_node;
    const Node& decl = ast_.node(fn_node);

    call_sites_.push_back(site);
    emit(TraceEvent{TraceEventKind::MethodEnter, kNoObject, site, {}});
    env_stack_.push_back(std::make_shared<Env>(heap(fn.object).fn_env));
    this_stack_.push_back(this_obj);

    std::size_t param_count = decl.children.size() - 1;
    for (std::size_t i = 0; i < param_count; ++i) {
      NodeId param = decl.children[i];
      Value v = i < args.size() ? args[i] : Value::undefined();
      current_env().vars[*ast_.node(param).value] = v;
      if (v.is_object()) {
        emit(TraceEvent{TraceEventKind::ParamRead, v.object, param, call_trace()});
      }
    }
    auto this_node = first_this_.find(fn_node);
    if (this_node != first_this_.end()) {
      emit(TraceEvent{TraceEventKind::ThisRead, this_obj, this_node->second, call_trace()});
    }

    Value result = Value::undefined();
    try {
      exec_statement(decl.children.back());
    } catch (const ReturnSignal& ret) {
      result = ret.value;
    } catch (...) {
      leave_function(site);
      throw;
    }
    leave_function(site);
    return result;
  }

  void leave_function(NodeId site) {
    emit(TraceEvent{TraceEventKind::MethodExit, kNoObject, site, {}});
    this_stack_.pop_back();
    env_stack_.pop_back();
    call_sites_.pop_back();
  }

  const Ast& ast_;
  InterpretOptions options_;
  std::vector<TraceEvent> events_;
  std::vector<HeapObject> heap_;
  ObjectId global_object_ = kNoObject;
  std::shared_ptr<Env> global_env_;
  std::vector<std::shared_ptr<Env>> env_stack_{global_env_};
  std::vector<ObjectId> this_stack_;
  std::vector<NodeId> call_sites_;  // innermost last
  std::unordered_map<NodeId, NodeId> first_this_;
};

}  // namespace

InterpretResult interpret(const Ast& ast, const InterpretOptions& options) {
  return Interpreter(ast, options).run();
}

}  // namespace analearn::minijs
