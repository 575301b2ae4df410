#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "analearn/minijs.hpp"

// Tree-navigation analysis languages: decision trees whose guards accumulate
// a context of observations about the analyzed AST and whose leaves either
// navigate to the answer position (points-to) or emit an allocation verdict.
namespace analearn::dsl {

using minijs::Ast;
using minijs::NodeId;
using minijs::Trace;
using minijs::kNoNode;

enum class Lang : std::uint8_t { PointsTo, Alloc };

enum class Move : std::uint8_t {
  // core
  Up,
  Left,
  Right,
  DownFirst,
  DownLast,
  Top,
  // points-to only
  GoToGlobal,
  GoToUndef,
  GoToNull,
  GoToThis,
  UpUntilFunc,
  GoToCaller,
  // alloc only
  PrevNodeValue,
  PrevNodeType,
};

enum class Write : std::uint8_t {
  WriteValue,
  WritePos,
  WriteType,
  HasLeft,
  HasRight,
  HasChild,
  HasCaller,         // points-to only
  HasPrevNodeValue,  // alloc only
};

std::string_view move_name(Move m);
std::string_view write_name(Write w);
bool move_in_lang(Move m, Lang lang);
bool write_in_lang(Write w, Lang lang);

// Instruction alphabets in the canonical (tie-breaking) order.
std::span<const Move> moves_of(Lang lang);
std::span<const Write> writes_of(Lang lang);

struct Instruction {
  enum class Kind : std::uint8_t { Move, Write } kind;
  Move move{};
  Write write{};

  static Instruction of(Move m) { return {Kind::Move, m, {}}; }
  static Instruction of(Write w) { return {Kind::Write, {}, w}; }
  bool operator==(const Instruction&) const = default;
};

// One observation written by a guard. Node kinds, strings and numbers are
// distinct even when they look alike ("1" never equals 1).
struct Token {
  enum class Kind : std::uint8_t { NodeKind, Str, Num } kind;
  minijs::NodeKind node_kind{};
  std::string str;
  std::uint64_t num = 0;

  static Token of(minijs::NodeKind k) { return {Kind::NodeKind, k, {}, 0}; }
  static Token of_str(std::string s) { return {Kind::Str, {}, std::move(s), 0}; }
  static Token of_num(std::uint64_t n) { return {Kind::Num, {}, {}, n}; }
  bool operator==(const Token&) const = default;
  // Total order used only for deterministic tie-breaking.
  bool operator<(const Token& other) const;
};

using Context = std::vector<Token>;

std::string token_to_string(const Token& t);

// Where a navigation currently stands: a node, or one of the lattice poles
// reached through a failed or approximating move.
struct Position {
  enum class Kind : std::uint8_t { Node, Bottom, Top } kind = Kind::Node;
  NodeId node = kNoNode;

  static Position at(NodeId n) { return {Kind::Node, n}; }
  static Position bottom() { return {Kind::Bottom, kNoNode}; }
  static Position top() { return {Kind::Top, kNoNode}; }
  bool is_node() const { return kind == Kind::Node; }
  bool operator==(const Position&) const = default;
};

struct ExecState {
  const Ast* tree = nullptr;
  Position pos;
  Context ctx;
  std::vector<NodeId> call_trace;  // most recent first; unused by L_alloc
  const Trace* trace = nullptr;

  ExecState(const Ast& ast, NodeId start, std::vector<NodeId> calls, const Trace* tr)
      : tree(&ast), pos(Position::at(start)), call_trace(std::move(calls)), trace(tr) {}
};

// Analysis output lattice: node answers (points-to) or alloc verdicts, plus
// the shared Top/Bottom poles.
struct LatticeResult {
  enum class Kind : std::uint8_t { Node, Top, Bottom, NewAlloc, NoAlloc } kind = Kind::Bottom;
  NodeId node = kNoNode;

  static LatticeResult at(NodeId n) { return {Kind::Node, n}; }
  static LatticeResult top() { return {Kind::Top, kNoNode}; }
  static LatticeResult bottom() { return {Kind::Bottom, kNoNode}; }
  static LatticeResult new_alloc() { return {Kind::NewAlloc, kNoNode}; }
  static LatticeResult no_alloc() { return {Kind::NoAlloc, kNoNode}; }
  bool operator==(const LatticeResult&) const = default;
};

std::string lattice_result_to_string(const LatticeResult& r);

enum class AllocVerdict : std::uint8_t { NewAlloc, NoAlloc, Top };

// Decision tree over guards and actions (leaves are move sequences for
// points-to, verdicts for alloc).
struct DslProgram {
  struct Branch;

  Lang lang = Lang::PointsTo;
  bool is_leaf = true;
  std::vector<Move> action;              // points-to leaf
  AllocVerdict verdict = AllocVerdict::Top;  // alloc leaf
  std::shared_ptr<const Branch> branch;  // set when !is_leaf

  static DslProgram leaf(std::vector<Move> action);
  static DslProgram leaf(AllocVerdict verdict);
  // Guards must contain at least one Write.
  static DslProgram branch_on(std::vector<Instruction> guard, Context expected, DslProgram then_p,
                              DslProgram else_p);
};

struct DslProgram::Branch {
  std::vector<Instruction> guard;
  Context expected;
  DslProgram then_p;
  DslProgram else_p;
};

// Single-instruction semantics. Both require s.pos to be a node.
ExecState mv(Move m, ExecState s);
Token wr(Write w, const ExecState& s);

// Allocation-free stepping core shared by exec_program and the enumerative
// learner. GoToCaller consumes call-trace entries by advancing caller_index.
struct StepState {
  Position pos;
  std::uint32_t caller_index = 0;
};

StepState apply_move(Move m, StepState s, const Ast& t, std::span<const NodeId> call_trace);
Token apply_write(Write w, const StepState& s, const Ast& t, std::span<const NodeId> call_trace);

// Runs a guard left to right from an empty context; a move that falls off the
// tree drops the remainder and returns the context collected so far.
Context exec_guard(std::span<const Instruction> guard, ExecState s);

struct ExecOutcome {
  LatticeResult result;
  // Nodes visited or inspected, in first-visit order (mutation candidates).
  std::vector<NodeId> read_set;
};

ExecOutcome exec_program(const DslProgram& p, const Ast& tree, NodeId start,
                         std::vector<NodeId> call_trace, const Trace& trace);

// Textual program format used by .dsl files.
DslProgram parse_program(std::string_view text);
std::string render_program(const DslProgram& p);

std::string instruction_to_string(const Instruction& inst);

}  // namespace analearn::dsl
