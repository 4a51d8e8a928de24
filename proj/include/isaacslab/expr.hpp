#pragma once

// Arithmetic expressions for model coefficients.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative; -x^2 = -(x^2)
//   primary := number | name | name '(' args ')' | '(' sum ')'
//
// Variables come from a fixed vocabulary: s, x1..xd, u1_1..u1_k, u2_1..u2_k,
// u_1..u_k (single-controller models) and p1..pd. `pi` is a named constant.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isaacslab/errors.hpp"

namespace isaacslab::expr {

enum class ErrorKind { Syntax, UnknownIdentifier, Arity, Unbound, Domain };

class ExprError : public Error {
 public:
  ExprError(ErrorKind kind, std::size_t position, const std::string& message);

  ErrorKind kind() const { return kind_; }
  /// Byte offset into the source text (0 for errors without a location).
  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::size_t position_;
  std::string message_;
};

enum class VarKind : std::uint8_t { Time, State, Control1, Control2, Control, Costate };

struct Variable {
  VarKind kind = VarKind::Time;
  int index = 0;  // zero-based component

  std::string name() const;
  bool is_control() const {
    return kind == VarKind::Control1 || kind == VarKind::Control2 || kind == VarKind::Control;
  }
  friend auto operator<=>(const Variable&, const Variable&) = default;
};

/// Parses a vocabulary name such as "x2" or "u1_3"; returns false otherwise.
bool parse_variable_name(std::string_view name, Variable& out);

enum class NodeKind : std::uint8_t { Constant, Variable, Negate, Binary, Call };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };
enum class Func : std::uint8_t { Sin, Cos, Exp, Log, Abs, Sqrt, Min, Max, Clamp, Sign, Step, Pow };

std::string_view func_name(Func f);
std::size_t func_arity(Func f);

struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;
  Variable var{};
  BinaryOp op = BinaryOp::Add;
  Func func = Func::Sin;
  std::vector<Node> children;
  SourceSpan span{};
};

/// Structural equality: kinds, operators, constants (bitwise) and variables.
/// Source spans are ignored.
bool structurally_equal(const Node& a, const Node& b);

/// Values bound to the variable vocabulary during evaluation.
struct Bindings {
  double s = 0.0;
  std::span<const double> x{};
  std::span<const double> u1{};
  std::span<const double> u2{};
  std::span<const double> u{};
  std::span<const double> p{};
};

/// Immutable expression tree. Cheap to copy; safe for concurrent reads.
class Ast {
 public:
  Ast() = default;
  Ast(std::shared_ptr<const Node> root, std::string source);

  static Ast constant(double value);

  const Node& root() const { return *root_; }
  bool empty() const { return root_ == nullptr; }
  const std::string& source() const { return source_; }

  double evaluate(const Bindings& env) const;
  std::set<Variable> variables() const;
  bool is_constant() const { return root_ && root_->kind == NodeKind::Constant; }

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

Ast parse(std::string_view text);

/// Evaluates with named bindings; every free variable must be present.
double eval(const Ast& ast, const std::map<std::string, double>& env);

std::set<std::string> free_vars(const Ast& ast);

/// Fully parenthesised rendering. Any tree the parser can produce re-parses to
/// a structurally equal tree (negative constants, which only folding creates,
/// come back as negations).
std::string to_string(const Ast& ast);

/// Collapses variable-free subtrees into constants. Subtrees whose evaluation
/// raises a domain error are left intact so the error surfaces at run time.
Ast fold_constants(const Ast& ast);

}  // namespace isaacslab::expr
