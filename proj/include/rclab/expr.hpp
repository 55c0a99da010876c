#pragma once

// Expression language for Lagrangians, force maps, control laws and point maps.
//
// Grammar (see docs/grammar.md):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | identifier | identifier '(' expr ')' | '(' expr ')'
//
// Identifiers resolve against a SymbolTable: coordinates, their velocities
// `<coord>_dot`, named parameters, the constant `pi`, and the functions
// sin cos tan exp log sqrt.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rclab::expr {

/// Names visible to expressions. Active variables are the coordinates followed
/// by their velocities (when enabled); parameters carry default values.
class SymbolTable {
 public:
  SymbolTable() = default;
  SymbolTable(std::vector<std::string> coords,
              std::vector<std::pair<std::string, double>> params,
              bool with_velocities = true);

  static std::string velocity_name(std::string_view coord) { return std::string(coord) + "_dot"; }

  std::size_t num_coords() const noexcept { return coords_.size(); }
  std::size_t num_active() const noexcept { return active_.size(); }
  std::size_t num_params() const noexcept { return param_names_.size(); }
  bool has_velocities() const noexcept { return with_velocities_; }

  const std::vector<std::string>& coords() const noexcept { return coords_; }
  const std::string& active_name(std::size_t i) const { return active_.at(i); }
  const std::vector<std::string>& param_names() const noexcept { return param_names_; }
  const std::vector<double>& param_values() const noexcept { return param_values_; }

  std::optional<std::size_t> find_active(std::string_view name) const;
  std::optional<std::size_t> find_param(std::string_view name) const;

 private:
  std::vector<std::string> coords_;
  std::vector<std::string> active_;
  std::vector<std::string> param_names_;
  std::vector<double> param_values_;
  bool with_velocities_ = true;
};

enum class Op { Const, Pi, Var, Param, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Exp, Log, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression tree node. `offset` is the source byte offset used in
/// diagnostics; it does not take part in structural equality.
struct Node {
  Op op = Op::Const;
  double value = 0.0;      // Const
  std::size_t index = 0;   // Var (active index) / Param (parameter index)
  NodePtr lhs;             // unary operand or left operand
  NodePtr rhs;             // right operand
  std::size_t offset = 0;
};

bool structurally_equal(const Node& a, const Node& b);

NodePtr make_const(double v, std::size_t offset = 0);
NodePtr make_pi(std::size_t offset = 0);
NodePtr make_var(std::size_t index, std::size_t offset = 0);
NodePtr make_param(std::size_t index, std::size_t offset = 0);
NodePtr make_unary(Op op, NodePtr arg, std::size_t offset = 0);
NodePtr make_binary(Op op, NodePtr lhs, NodePtr rhs, std::size_t offset = 0);

bool is_unary(Op op);
bool is_binary(Op op);
bool is_function(Op op);
std::string_view function_name(Op op);

/// A parsed expression. Cheap to copy; the tree is shared and immutable.
class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  bool empty() const noexcept { return !root_; }

  /// True when some Var node refers to an active index in [first, last).
  bool depends_on_range(std::size_t first, std::size_t last) const;
  bool depends_on(std::size_t index) const { return depends_on_range(index, index + 1); }

  friend bool operator==(const Expression& a, const Expression& b) {
    if (!a.root_ || !b.root_) return a.root_ == b.root_;
    return structurally_equal(*a.root_, *b.root_);
  }

 private:
  NodePtr root_;
};

Expression parse(std::string_view source, const SymbolTable& table);

/// Fully parenthesised text that parses back to a structurally equal tree.
std::string to_string(const Expression& e, const SymbolTable& table);

/// Value, gradient and Hessian with respect to the active variables.
struct Dual2Value {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Plain value evaluation (no derivatives).
double evaluate(const Expression& e, std::span<const double> point, std::span<const double> params);

/// Second-order forward-mode evaluation. The Hessian is symmetric bit for bit.
Dual2Value eval2(const Expression& e, std::span<const double> point, std::span<const double> params);

/// Replace every Var node i by `replacements[i]` (which may reference a different table).
Expression substitute(const Expression& e, std::span<const NodePtr> replacements);

}  // namespace rclab::expr
