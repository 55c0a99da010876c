#include "rclab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "rclab/error.hpp"

namespace rclab::expr {

// ---------------------------------------------------------------------------
// SymbolTable

SymbolTable::SymbolTable(std::vector<std::string> coords,
                         std::vector<std::pair<std::string, double>> params, bool with_velocities)
    : coords_(std::move(coords)), with_velocities_(with_velocities) {
  active_ = coords_;
  if (with_velocities_) {
    for (const auto& c : coords_) active_.push_back(velocity_name(c));
  }
  for (auto& [name, value] : params) {
    param_names_.push_back(name);
    param_values_.push_back(value);
  }
  std::vector<std::string> all = active_;
  all.insert(all.end(), param_names_.begin(), param_names_.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].empty()) throw ValidationError("empty symbol name");
    if (all[i] == "pi") throw ValidationError("symbol name 'pi' is reserved");
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i] == all[j]) throw ValidationError("duplicate symbol name '" + all[i] + "'");
    }
  }
}

std::optional<std::size_t> SymbolTable::find_active(std::string_view name) const {
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> SymbolTable::find_param(std::string_view name) const {
  for (std::size_t i = 0; i < param_names_.size(); ++i) {
    if (param_names_[i] == name) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Nodes

bool is_unary(Op op) {
  switch (op) {
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Tan:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
      return true;
    default:
      return false;
  }
}

bool is_binary(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
      return true;
    default:
      return false;
  }
}

bool is_function(Op op) { return is_unary(op) && op != Op::Neg; }

std::string_view function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

namespace {

std::optional<Op> function_from_name(std::string_view name) {
  for (Op op : {Op::Sin, Op::Cos, Op::Tan, Op::Exp, Op::Log, Op::Sqrt}) {
    if (function_name(op) == name) return op;
  }
  return std::nullopt;
}

}  // namespace

bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Const:
      return a.value == b.value && std::signbit(a.value) == std::signbit(b.value);
    case Op::Pi:
      return true;
    case Op::Var:
    case Op::Param:
      return a.index == b.index;
    default:
      break;
  }
  if (is_unary(a.op)) return structurally_equal(*a.lhs, *b.lhs);
  return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
}

NodePtr make_const(double v, std::size_t offset) {
  return std::make_shared<const Node>(Node{Op::Const, v, 0, nullptr, nullptr, offset});
}
NodePtr make_pi(std::size_t offset) {
  return std::make_shared<const Node>(Node{Op::Pi, 0.0, 0, nullptr, nullptr, offset});
}
NodePtr make_var(std::size_t index, std::size_t offset) {
  return std::make_shared<const Node>(Node{Op::Var, 0.0, index, nullptr, nullptr, offset});
}
NodePtr make_param(std::size_t index, std::size_t offset) {
  return std::make_shared<const Node>(Node{Op::Param, 0.0, index, nullptr, nullptr, offset});
}
NodePtr make_unary(Op op, NodePtr arg, std::size_t offset) {
  return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(arg), nullptr, offset});
}
NodePtr make_binary(Op op, NodePtr lhs, NodePtr rhs, std::size_t offset) {
  return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(lhs), std::move(rhs), offset});
}

namespace {

bool node_depends(const Node& n, std::size_t first, std::size_t last) {
  if (n.op == Op::Var) return n.index >= first && n.index < last;
  if (n.lhs && node_depends(*n.lhs, first, last)) return true;
  if (n.rhs && node_depends(*n.rhs, first, last)) return true;
  return false;
}

bool has_var(const Node& n) {
  if (n.op == Op::Var) return true;
  return (n.lhs && has_var(*n.lhs)) || (n.rhs && has_var(*n.rhs));
}

}  // namespace

bool Expression::depends_on_range(std::size_t first, std::size_t last) const {
  return root_ && node_depends(*root_, first, last);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, const SymbolTable& table) : src_(src), table_(table) {}

  NodePtr run() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = expression();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      if (accept('+')) {
        lhs = make_binary(Op::Add, lhs, term(), at);
      } else if (accept('-')) {
        lhs = make_binary(Op::Sub, lhs, term(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      if (accept('*')) {
        lhs = make_binary(Op::Mul, lhs, unary(), at);
      } else if (accept('/')) {
        lhs = make_binary(Op::Div, lhs, unary(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    skip_ws();
    std::size_t at = pos_;
    if (accept('-')) return make_unary(Op::Neg, unary(), at);
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_ws();
    std::size_t at = pos_;
    if (accept('^')) return make_binary(Op::Pow, base, unary(), at);
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const std::size_t at = pos_;
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expression();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", at);
  }

  NodePtr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
        while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
        end = e;
      }
    }
    const std::string text(src_.substr(at, end - at));
    if (text == ".") throw ParseError("malformed number", at);
    char* stop = nullptr;
    const double v = std::strtod(text.c_str(), &stop);
    if (stop != text.c_str() + text.size() || !std::isfinite(v)) throw ParseError("malformed number", at);
    pos_ = end;
    return make_const(v, at);
  }

  NodePtr identifier() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
      ++end;
    }
    const std::string_view name = src_.substr(at, end - at);
    pos_ = end;
    if (auto fn = function_from_name(name)) {
      if (!accept('(')) throw ParseError("function '" + std::string(name) + "' expects one argument", pos_);
      NodePtr arg = expression();
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == ',') {
        throw ParseError("arity mismatch: '" + std::string(name) + "' takes one argument", pos_);
      }
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return make_unary(*fn, arg, at);
    }
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      throw ParseError("unknown function '" + std::string(name) + "'", at);
    }
    if (name == "pi") return make_pi(at);
    if (auto idx = table_.find_active(name)) return make_var(*idx, at);
    if (auto idx = table_.find_param(name)) return make_param(*idx, at);
    throw ParseError("unknown identifier '" + std::string(name) + "'", at);
  }

  std::string_view src_;
  const SymbolTable& table_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse(std::string_view source, const SymbolTable& table) {
  return Expression(Parser(source, table).run());
}

// ---------------------------------------------------------------------------
// Printer

namespace {

void print_node(const Node& n, const SymbolTable& table, std::string& out) {
  switch (n.op) {
    case Op::Const: {
      char buf[40];
      const double v = std::fabs(n.value);
      if (v == std::floor(v) && v < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
      }
      if (std::signbit(n.value)) {
        out += "(-";
        out += buf;
        out += ")";
      } else {
        out += buf;
      }
      return;
    }
    case Op::Pi:
      out += "pi";
      return;
    case Op::Var:
      out += table.active_name(n.index);
      return;
    case Op::Param:
      out += table.param_names().at(n.index);
      return;
    case Op::Neg:
      out += "(-";
      print_node(*n.lhs, table, out);
      out += ")";
      return;
    default:
      break;
  }
  if (is_function(n.op)) {
    out += function_name(n.op);
    out += "(";
    print_node(*n.lhs, table, out);
    out += ")";
    return;
  }
  const char* sym = "+";
  switch (n.op) {
    case Op::Sub: sym = "-"; break;
    case Op::Mul: sym = "*"; break;
    case Op::Div: sym = "/"; break;
    case Op::Pow: sym = "^"; break;
    default: break;
  }
  out += "(";
  print_node(*n.lhs, table, out);
  out += sym;
  print_node(*n.rhs, table, out);
  out += ")";
}

}  // namespace

std::string to_string(const Expression& e, const SymbolTable& table) {
  std::string out;
  print_node(e.root(), table, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

constexpr int kMaxIntegerExponent = 1024;

std::optional<int> integer_exponent(double k) {
  if (k == std::floor(k) && std::fabs(k) <= kMaxIntegerExponent) return static_cast<int>(k);
  return std::nullopt;
}

double checked(double v, const Node& n) {
  if (!std::isfinite(v)) throw DomainError("non-finite intermediate value", n.offset);
  return v;
}

double ipow(double x, int k) {
  double result = 1.0;
  double base = x;
  unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
  while (e) {
    if (e & 1u) result *= base;
    e >>= 1u;
    if (e) base *= base;
  }
  return k < 0 ? 1.0 / result : result;
}

double eval_node(const Node& n, std::span<const double> x, std::span<const double> p) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Pi: return std::numbers::pi;
    case Op::Var: return x[n.index];
    case Op::Param: return p[n.index];
    default: break;
  }
  const double a = eval_node(*n.lhs, x, p);
  switch (n.op) {
    case Op::Neg: return -a;
    case Op::Sin: return checked(std::sin(a), n);
    case Op::Cos: return checked(std::cos(a), n);
    case Op::Tan:
      if (std::cos(a) == 0.0) throw DomainError("tan at a pole", n.offset);
      return checked(std::tan(a), n);
    case Op::Exp: return checked(std::exp(a), n);
    case Op::Log:
      if (a <= 0.0) throw DomainError("log of non-positive value", n.offset);
      return std::log(a);
    case Op::Sqrt:
      if (a <= 0.0) throw DomainError("sqrt of non-positive value", n.offset);
      return std::sqrt(a);
    default: break;
  }
  const double b = eval_node(*n.rhs, x, p);
  switch (n.op) {
    case Op::Add: return checked(a + b, n);
    case Op::Sub: return checked(a - b, n);
    case Op::Mul: return checked(a * b, n);
    case Op::Div:
      if (b == 0.0) throw DomainError("division by zero", n.offset);
      return checked(a / b, n);
    case Op::Pow: {
      if (!has_var(*n.rhs)) {
        if (auto k = integer_exponent(b)) {
          if (a == 0.0 && *k < 0) throw DomainError("0 raised to a negative power", n.offset);
          return checked(ipow(a, *k), n);
        }
      }
      if (a <= 0.0) throw DomainError("non-integer power of non-positive base", n.offset);
      return checked(std::pow(a, b), n);
    }
    default: break;
  }
  throw DomainError("unhandled node", n.offset);
}

// Second-order dual number over N active variables. Inactive values carry no
// derivative storage.
struct D2 {
  double v = 0.0;
  bool active = false;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
};

D2 constant(double v) { return D2{v, false, {}, {}}; }

// Fill the lower triangle with f(i, j) and mirror, so symmetry is exact.
template <typename F>
void fill_symmetric(Eigen::MatrixXd& m, F&& f) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double s = f(i, j);
      m(i, j) = s;
      m(j, i) = s;
    }
  }
}

// g(u) given g, g', g'' at u.
D2 chain(const D2& u, double f, double f1, double f2, const Node& n) {
  checked(f, n);
  if (!u.active) return constant(f);
  D2 r;
  r.v = f;
  r.active = true;
  r.g = f1 * u.g;
  r.h.resize(u.h.rows(), u.h.cols());
  fill_symmetric(r.h, [&](Eigen::Index i, Eigen::Index j) {
    return f1 * u.h(i, j) + f2 * (u.g[i] * u.g[j]);
  });
  return r;
}

D2 add(const D2& a, const D2& b, double sign, const Node& n) {
  D2 r;
  r.v = checked(a.v + sign * b.v, n);
  if (!a.active && !b.active) return r;
  r.active = true;
  if (a.active && b.active) {
    r.g = a.g + sign * b.g;
    r.h = a.h + sign * b.h;
  } else if (a.active) {
    r.g = a.g;
    r.h = a.h;
  } else {
    r.g = sign * b.g;
    r.h = sign * b.h;
  }
  return r;
}

D2 mul(const D2& a, const D2& b, const Node& n) {
  D2 r;
  r.v = checked(a.v * b.v, n);
  if (!a.active && !b.active) return r;
  r.active = true;
  if (!b.active) {
    r.g = b.v * a.g;
    r.h = b.v * a.h;
    return r;
  }
  if (!a.active) {
    r.g = a.v * b.g;
    r.h = a.v * b.h;
    return r;
  }
  r.g = a.v * b.g + b.v * a.g;
  r.h.resize(a.h.rows(), a.h.cols());
  fill_symmetric(r.h, [&](Eigen::Index i, Eigen::Index j) {
    return a.v * b.h(i, j) + b.v * a.h(i, j) + (a.g[i] * b.g[j] + b.g[i] * a.g[j]);
  });
  return r;
}

D2 reciprocal(const D2& u, const Node& n) {
  if (u.v == 0.0) throw DomainError("division by zero", n.offset);
  const double inv = 1.0 / u.v;
  return chain(u, inv, -inv * inv, 2.0 * inv * inv * inv, n);
}

D2 integer_power(const D2& x, int k, const Node& n) {
  if (k == 0) return constant(1.0);
  if (x.v == 0.0 && k < 0) throw DomainError("0 raised to a negative power", n.offset);
  unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
  D2 result = constant(1.0);
  D2 base = x;
  bool first = true;
  while (e) {
    if (e & 1u) {
      result = first ? base : mul(result, base, n);
      first = false;
    }
    e >>= 1u;
    if (e) base = mul(base, base, n);
  }
  return k < 0 ? reciprocal(result, n) : result;
}

D2 eval2_node(const Node& n, std::span<const double> x, std::span<const double> p) {
  const auto N = static_cast<Eigen::Index>(x.size());
  switch (n.op) {
    case Op::Const: return constant(n.value);
    case Op::Pi: return constant(std::numbers::pi);
    case Op::Param: return constant(p[n.index]);
    case Op::Var: {
      D2 r;
      r.v = x[n.index];
      r.active = true;
      r.g = Eigen::VectorXd::Zero(N);
      r.g[static_cast<Eigen::Index>(n.index)] = 1.0;
      r.h = Eigen::MatrixXd::Zero(N, N);
      return r;
    }
    default: break;
  }
  const D2 a = eval2_node(*n.lhs, x, p);
  switch (n.op) {
    case Op::Neg: return chain(a, -a.v, -1.0, 0.0, n);
    case Op::Sin: {
      const double s = std::sin(a.v), c = std::cos(a.v);
      return chain(a, s, c, -s, n);
    }
    case Op::Cos: {
      const double s = std::sin(a.v), c = std::cos(a.v);
      return chain(a, c, -s, -c, n);
    }
    case Op::Tan: {
      if (std::cos(a.v) == 0.0) throw DomainError("tan at a pole", n.offset);
      const double t = std::tan(a.v);
      const double sec2 = 1.0 + t * t;
      return chain(a, t, sec2, 2.0 * t * sec2, n);
    }
    case Op::Exp: {
      const double e = std::exp(a.v);
      return chain(a, e, e, e, n);
    }
    case Op::Log: {
      if (a.v <= 0.0) throw DomainError("log of non-positive value", n.offset);
      const double inv = 1.0 / a.v;
      return chain(a, std::log(a.v), inv, -inv * inv, n);
    }
    case Op::Sqrt: {
      if (a.v <= 0.0) throw DomainError("sqrt of non-positive value", n.offset);
      const double s = std::sqrt(a.v);
      return chain(a, s, 0.5 / s, -0.25 / (s * a.v), n);
    }
    default: break;
  }
  switch (n.op) {
    case Op::Add: return add(a, eval2_node(*n.rhs, x, p), 1.0, n);
    case Op::Sub: return add(a, eval2_node(*n.rhs, x, p), -1.0, n);
    case Op::Mul: return mul(a, eval2_node(*n.rhs, x, p), n);
    case Op::Div: return mul(a, reciprocal(eval2_node(*n.rhs, x, p), n), n);
    case Op::Pow: {
      if (!has_var(*n.rhs)) {
        const double k = eval_node(*n.rhs, x, p);
        if (auto ik = integer_exponent(k)) return integer_power(a, *ik, n);
        if (a.v <= 0.0) throw DomainError("non-integer power of non-positive base", n.offset);
        const double f = std::pow(a.v, k);
        return chain(a, f, k * f / a.v, k * (k - 1.0) * f / (a.v * a.v), n);
      }
      if (a.v <= 0.0) throw DomainError("non-integer power of non-positive base", n.offset);
      const D2 b = eval2_node(*n.rhs, x, p);
      const double inv = 1.0 / a.v;
      const D2 log_a = chain(a, std::log(a.v), inv, -inv * inv, n);
      const D2 prod = mul(b, log_a, n);
      const double e = std::exp(prod.v);
      return chain(prod, e, e, e, n);
    }
    default: break;
  }
  throw DomainError("unhandled node", n.offset);
}

}  // namespace

double evaluate(const Expression& e, std::span<const double> point, std::span<const double> params) {
  return eval_node(e.root(), point, params);
}

Dual2Value eval2(const Expression& e, std::span<const double> point, std::span<const double> params) {
  const auto N = static_cast<Eigen::Index>(point.size());
  D2 r = eval2_node(e.root(), point, params);
  Dual2Value out;
  out.value = r.v;
  if (r.active) {
    out.gradient = std::move(r.g);
    out.hessian = std::move(r.h);
  } else {
    out.gradient = Eigen::VectorXd::Zero(N);
    out.hessian = Eigen::MatrixXd::Zero(N, N);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

NodePtr substitute_node(const NodePtr& n, std::span<const NodePtr> repl) {
  switch (n->op) {
    case Op::Const:
    case Op::Pi:
    case Op::Param:
      return n;
    case Op::Var:
      return repl[n->index];
    default:
      break;
  }
  if (is_unary(n->op)) return make_unary(n->op, substitute_node(n->lhs, repl), n->offset);
  return make_binary(n->op, substitute_node(n->lhs, repl), substitute_node(n->rhs, repl), n->offset);
}

}  // namespace

Expression substitute(const Expression& e, std::span<const NodePtr> replacements) {
  return Expression(substitute_node(e.root_ptr(), replacements));
}

}  // namespace rclab::expr
