#include "isaacslab/expr.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

namespace isaacslab::expr {

namespace {

std::string error_prefix(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "syntax error";
    case ErrorKind::UnknownIdentifier: return "unknown identifier";
    case ErrorKind::Arity: return "wrong arity";
    case ErrorKind::Unbound: return "unbound variable";
    case ErrorKind::Domain: return "domain error";
  }
  return "expression error";
}

struct FuncEntry {
  std::string_view name;
  Func func;
  std::size_t arity;
};

constexpr std::array<FuncEntry, 12> kFunctions{{
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},
    {"abs", Func::Abs, 1},
    {"sqrt", Func::Sqrt, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
    {"clamp", Func::Clamp, 3},
    {"sign", Func::Sign, 1},
    {"step", Func::Step, 1},
    {"pow", Func::Pow, 2},
}};

const FuncEntry* find_function(std::string_view name) {
  for (const auto& entry : kFunctions) {
    if (entry.name == name) return &entry;
  }
  return nullptr;
}

bool parse_index(std::string_view digits, int& out) {
  if (digits.empty() || digits.front() == '0') return false;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  return ec == std::errc{} && ptr == digits.data() + digits.size() && out >= 1;
}

enum class Tok { Number, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t pos = 0;
  std::size_t end = 0;
  std::string_view text;
  double number = 0.0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { advance(); }

  Node parse_all() {
    Node n = parse_sum();
    if (tok_.kind != Tok::End) fail(tok_.pos, "unexpected '" + std::string(tok_.text) + "'");
    return n;
  }

 private:
  static constexpr int kMaxDepth = 200;

  [[noreturn]] void fail(std::size_t pos, const std::string& msg) const {
    throw ExprError(ErrorKind::Syntax, pos, msg);
  }

  void advance() {
    std::size_t i = cursor_;
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
    tok_ = Token{};
    tok_.pos = i;
    if (i >= text_.size()) {
      tok_.kind = Tok::End;
      tok_.end = i;
      tok_.text = "end of input";
      cursor_ = i;
      return;
    }
    const char c = text_[i];
    auto single = [&](Tok k) {
      tok_.kind = k;
      tok_.end = i + 1;
      tok_.text = text_.substr(i, 1);
      cursor_ = i + 1;
    };
    switch (c) {
      case '+': return single(Tok::Plus);
      case '-': return single(Tok::Minus);
      case '*': return single(Tok::Star);
      case '/': return single(Tok::Slash);
      case '^': return single(Tok::Caret);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case ',': return single(Tok::Comma);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
      if (j < text_.size() && text_[j] == '.') {
        ++j;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
      }
      if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
        if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
          while (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) ++k;
          j = k;
        } else {
          fail(j, "malformed exponent");
        }
      }
      const std::string_view lexeme = text_.substr(i, j - i);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
      if (ec != std::errc{} || ptr != lexeme.data() + lexeme.size() || !std::isfinite(value)) {
        fail(i, "malformed number '" + std::string(lexeme) + "'");
      }
      tok_.kind = Tok::Number;
      tok_.number = value;
      tok_.end = j;
      tok_.text = lexeme;
      cursor_ = j;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) {
        ++j;
      }
      tok_.kind = Tok::Name;
      tok_.end = j;
      tok_.text = text_.substr(i, j - i);
      cursor_ = j;
      return;
    }
    fail(i, std::string("unexpected character '") + c + "'");
  }

  void enter(std::size_t pos) {
    if (++depth_ > kMaxDepth) fail(pos, "expression nested too deeply");
  }

  Node parse_sum() {
    enter(tok_.pos);
    Node lhs = parse_product();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const BinaryOp op = tok_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      advance();
      Node rhs = parse_product();
      lhs = make_binary(op, std::move(lhs), std::move(rhs));
    }
    --depth_;
    return lhs;
  }

  Node parse_product() {
    Node lhs = parse_unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const BinaryOp op = tok_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      advance();
      Node rhs = parse_unary();
      lhs = make_binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Node parse_power() {
    Node base = parse_primary();
    if (tok_.kind == Tok::Caret) {
      advance();
      enter(tok_.pos);
      // The exponent may carry its own sign: 2^-1, 2^-3^2 = 2^(-(3^2)).
      Node exponent = parse_unary();
      --depth_;
      return make_binary(BinaryOp::Pow, std::move(base), std::move(exponent));
    }
    return base;
  }

  Node parse_unary() {
    if (tok_.kind == Tok::Minus) {
      const std::size_t pos = tok_.pos;
      advance();
      enter(pos);
      Node operand = parse_unary();
      --depth_;
      Node n;
      n.kind = NodeKind::Negate;
      n.span = {pos, operand.span.end};
      n.children.push_back(std::move(operand));
      return n;
    }
    return parse_power();
  }

  Node parse_primary() {
    const Token t = tok_;
    switch (t.kind) {
      case Tok::Number: {
        advance();
        Node n;
        n.kind = NodeKind::Constant;
        n.value = t.number;
        n.span = {t.pos, t.end};
        return n;
      }
      case Tok::LParen: {
        advance();
        Node inner = parse_sum();
        if (tok_.kind != Tok::RParen) fail(tok_.pos, "expected ')'");
        advance();
        return inner;
      }
      case Tok::Name: return parse_name(t);
      case Tok::End: fail(t.pos, "unexpected end of input");
      default: fail(t.pos, "unexpected '" + std::string(t.text) + "'");
    }
  }

  Node parse_name(const Token& t) {
    advance();
    if (tok_.kind == Tok::LParen) {
      const FuncEntry* entry = find_function(t.text);
      if (entry == nullptr) {
        throw ExprError(ErrorKind::UnknownIdentifier, t.pos,
                        "unknown function '" + std::string(t.text) + "'");
      }
      advance();
      Node call;
      call.kind = NodeKind::Call;
      call.func = entry->func;
      if (tok_.kind != Tok::RParen) {
        call.children.push_back(parse_sum());
        while (tok_.kind == Tok::Comma) {
          advance();
          call.children.push_back(parse_sum());
        }
      }
      if (tok_.kind != Tok::RParen) fail(tok_.pos, "expected ',' or ')'");
      call.span = {t.pos, tok_.end};
      advance();
      if (call.children.size() != entry->arity) {
        throw ExprError(ErrorKind::Arity, t.pos,
                        std::string(entry->name) + " expects " + std::to_string(entry->arity) +
                            " argument(s), got " + std::to_string(call.children.size()));
      }
      return call;
    }
    Node n;
    n.span = {t.pos, t.end};
    if (t.text == "pi") {
      n.kind = NodeKind::Constant;
      n.value = std::numbers::pi;
      return n;
    }
    if (find_function(t.text) != nullptr) {
      throw ExprError(ErrorKind::Syntax, tok_.pos,
                      "function '" + std::string(t.text) + "' must be called");
    }
    Variable var;
    if (!parse_variable_name(t.text, var)) {
      throw ExprError(ErrorKind::UnknownIdentifier, t.pos,
                      "unknown identifier '" + std::string(t.text) + "'");
    }
    n.kind = NodeKind::Variable;
    n.var = var;
    return n;
  }

  static Node make_binary(BinaryOp op, Node lhs, Node rhs) {
    Node n;
    n.kind = NodeKind::Binary;
    n.op = op;
    n.span = {lhs.span.begin, rhs.span.end};
    n.children.push_back(std::move(lhs));
    n.children.push_back(std::move(rhs));
    return n;
  }

  std::string_view text_;
  std::size_t cursor_ = 0;
  Token tok_;
  int depth_ = 0;
};

[[noreturn]] void domain_error(const Node& n, const std::string& what) {
  throw ExprError(ErrorKind::Domain, n.span.begin, what);
}

double checked(const Node& n, double result, std::initializer_list<double> inputs,
               const char* what) {
  if (std::isnan(result)) {
    for (double in : inputs) {
      if (std::isnan(in)) return result;
    }
    domain_error(n, what);
  }
  return result;
}

template <class Lookup>
double eval_node(const Node& n, const Lookup& lookup) {
  switch (n.kind) {
    case NodeKind::Constant: return n.value;
    case NodeKind::Variable: return lookup(n);
    case NodeKind::Negate: return -eval_node(n.children[0], lookup);
    case NodeKind::Binary: {
      const double a = eval_node(n.children[0], lookup);
      const double b = eval_node(n.children[1], lookup);
      switch (n.op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
          if (b == 0.0) domain_error(n, "division by zero");
          return a / b;
        case BinaryOp::Pow: {
          if (b == 2.0) return a * a;
          if (a == 0.0 && b < 0.0) domain_error(n, "zero raised to a negative power");
          return checked(n, std::pow(a, b), {a, b}, "negative base with non-integer exponent");
        }
      }
      break;
    }
    case NodeKind::Call: {
      const auto& c = n.children;
      const double a = eval_node(c[0], lookup);
      switch (n.func) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Log:
          if (!(a > 0.0) && !std::isnan(a)) domain_error(n, "log of non-positive value");
          return std::log(a);
        case Func::Abs: return std::fabs(a);
        case Func::Sqrt:
          if (a < 0.0) domain_error(n, "sqrt of negative value");
          return std::sqrt(a);
        case Func::Min: {
          const double b = eval_node(c[1], lookup);
          return b < a ? b : a;
        }
        case Func::Max: {
          const double b = eval_node(c[1], lookup);
          return b > a ? b : a;
        }
        case Func::Clamp: {
          const double lo = eval_node(c[1], lookup);
          const double hi = eval_node(c[2], lookup);
          if (lo > hi) domain_error(n, "clamp with lower bound above upper bound");
          return a < lo ? lo : (a > hi ? hi : a);
        }
        case Func::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case Func::Step: return a >= 0.0 ? 1.0 : 0.0;
        case Func::Pow: {
          const double b = eval_node(c[1], lookup);
          if (a == 0.0 && b < 0.0) domain_error(n, "zero raised to a negative power");
          return checked(n, std::pow(a, b), {a, b}, "negative base with non-integer exponent");
        }
      }
      break;
    }
  }
  return 0.0;
}

void collect_vars(const Node& n, std::set<Variable>& out) {
  if (n.kind == NodeKind::Variable) out.insert(n.var);
  for (const auto& c : n.children) collect_vars(c, out);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void render(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Constant: {
      if (std::signbit(n.value)) {
        out += "(-";
        out += format_number(-n.value);
        out += ')';
      } else {
        out += format_number(n.value);
      }
      return;
    }
    case NodeKind::Variable: out += n.var.name(); return;
    case NodeKind::Negate:
      out += "(-";
      render(n.children[0], out);
      out += ')';
      return;
    case NodeKind::Binary: {
      static constexpr std::array<const char*, 5> kOps{" + ", " - ", " * ", " / ", " ^ "};
      out += '(';
      render(n.children[0], out);
      out += kOps[static_cast<std::size_t>(n.op)];
      render(n.children[1], out);
      out += ')';
      return;
    }
    case NodeKind::Call: {
      out += func_name(n.func);
      out += '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ", ";
        render(n.children[i], out);
      }
      out += ')';
      return;
    }
  }
}

bool has_variables(const Node& n) {
  if (n.kind == NodeKind::Variable) return true;
  for (const auto& c : n.children) {
    if (has_variables(c)) return true;
  }
  return false;
}

Node fold(const Node& n) {
  if (n.kind == NodeKind::Constant || n.kind == NodeKind::Variable) return n;
  if (!has_variables(n)) {
    try {
      Node c;
      c.kind = NodeKind::Constant;
      c.value = eval_node(n, [](const Node&) { return 0.0; });
      c.span = n.span;
      return c;
    } catch (const ExprError&) {
      // keep the subtree so evaluation reports the error
    }
  }
  Node copy = n;
  for (auto& child : copy.children) child = fold(child);
  return copy;
}

}  // namespace

ExprError::ExprError(ErrorKind kind, std::size_t position, const std::string& message)
    : Error(error_prefix(kind) + " at position " + std::to_string(position) + ": " + message),
      kind_(kind),
      position_(position),
      message_(message) {}

std::string Variable::name() const {
  const std::string idx = std::to_string(index + 1);
  switch (kind) {
    case VarKind::Time: return "s";
    case VarKind::State: return "x" + idx;
    case VarKind::Control1: return "u1_" + idx;
    case VarKind::Control2: return "u2_" + idx;
    case VarKind::Control: return "u_" + idx;
    case VarKind::Costate: return "p" + idx;
  }
  return "?";
}

bool parse_variable_name(std::string_view name, Variable& out) {
  int idx = 0;
  if (name == "s") {
    out = {VarKind::Time, 0};
    return true;
  }
  if (name.starts_with("u1_") && parse_index(name.substr(3), idx)) {
    out = {VarKind::Control1, idx - 1};
    return true;
  }
  if (name.starts_with("u2_") && parse_index(name.substr(3), idx)) {
    out = {VarKind::Control2, idx - 1};
    return true;
  }
  if (name.starts_with("u_") && parse_index(name.substr(2), idx)) {
    out = {VarKind::Control, idx - 1};
    return true;
  }
  if (name.starts_with("x") && parse_index(name.substr(1), idx)) {
    out = {VarKind::State, idx - 1};
    return true;
  }
  if (name.starts_with("p") && parse_index(name.substr(1), idx)) {
    out = {VarKind::Costate, idx - 1};
    return true;
  }
  return false;
}

std::string_view func_name(Func f) {
  for (const auto& entry : kFunctions) {
    if (entry.func == f) return entry.name;
  }
  return "?";
}

std::size_t func_arity(Func f) {
  for (const auto& entry : kFunctions) {
    if (entry.func == f) return entry.arity;
  }
  return 0;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case NodeKind::Constant:
      if (std::bit_cast<std::uint64_t>(a.value) != std::bit_cast<std::uint64_t>(b.value)) {
        return false;
      }
      break;
    case NodeKind::Variable:
      if (a.var != b.var) return false;
      break;
    case NodeKind::Binary:
      if (a.op != b.op) return false;
      break;
    case NodeKind::Call:
      if (a.func != b.func) return false;
      break;
    case NodeKind::Negate: break;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

Ast::Ast(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {}

Ast Ast::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = value;
  return Ast(std::move(n), format_number(value));
}

double Ast::evaluate(const Bindings& env) const {
  return eval_node(*root_, [&env](const Node& n) -> double {
    const auto idx = static_cast<std::size_t>(n.var.index);
    std::span<const double> slot;
    switch (n.var.kind) {
      case VarKind::Time: return env.s;
      case VarKind::State: slot = env.x; break;
      case VarKind::Control1: slot = env.u1; break;
      case VarKind::Control2: slot = env.u2; break;
      case VarKind::Control: slot = env.u; break;
      case VarKind::Costate: slot = env.p; break;
    }
    if (idx >= slot.size()) {
      throw ExprError(ErrorKind::Unbound, n.span.begin, "'" + n.var.name() + "' is not bound");
    }
    return slot[idx];
  });
}

std::set<Variable> Ast::variables() const {
  std::set<Variable> out;
  if (root_) collect_vars(*root_, out);
  return out;
}

Ast parse(std::string_view text) {
  bool blank = true;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
  }
  if (blank) throw ExprError(ErrorKind::Syntax, 0, "empty expression");
  Parser parser(text);
  return Ast(std::make_shared<const Node>(parser.parse_all()), std::string(text));
}

double eval(const Ast& ast, const std::map<std::string, double>& env) {
  return eval_node(ast.root(), [&env](const Node& n) -> double {
    const auto it = env.find(n.var.name());
    if (it == env.end()) {
      throw ExprError(ErrorKind::Unbound, n.span.begin, "'" + n.var.name() + "' is not bound");
    }
    return it->second;
  });
}

std::set<std::string> free_vars(const Ast& ast) {
  std::set<std::string> out;
  for (const auto& v : ast.variables()) out.insert(v.name());
  return out;
}

std::string to_string(const Ast& ast) {
  std::string out;
  render(ast.root(), out);
  return out;
}

Ast fold_constants(const Ast& ast) {
  return Ast(std::make_shared<const Node>(fold(ast.root())), ast.source());
}

}  // namespace isaacslab::expr
