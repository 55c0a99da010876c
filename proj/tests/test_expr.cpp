#include <doctest.h>

#include <cmath>
#include <vector>

#include "rclab/error.hpp"
#include "rclab/expr.hpp"

using namespace rclab;
using namespace rclab::expr;

namespace {

SymbolTable xy_table() { return SymbolTable({"x", "y"}, {{"k", 2.0}}, true); }

double eval_at(const std::string& text, std::vector<double> point) {
  const auto t = xy_table();
  return evaluate(parse(text, t), point, t.param_values());
}

}  // namespace

TEST_CASE("precedence and associativity") {
  // point = (x, y, x_dot, y_dot)
  CHECK(eval_at("-x^2", {3, 0, 0, 0}) == -9.0);
  CHECK(eval_at("2^3^2", {0, 0, 0, 0}) == 512.0);
  CHECK(eval_at("1 - 2 - 3", {0, 0, 0, 0}) == -4.0);
  CHECK(eval_at("8 / 4 / 2", {0, 0, 0, 0}) == 1.0);
  CHECK(eval_at("x^-1", {4, 0, 0, 0}) == 0.25);
  CHECK(eval_at("k*x_dot + y_dot", {0, 0, 3, 1}) == 7.0);
  CHECK(eval_at("2*pi", {0, 0, 0, 0}) == doctest::Approx(2 * M_PI).epsilon(1e-15));
  CHECK(eval_at("1.5e1 + .5", {0, 0, 0, 0}) == 15.5);
}

TEST_CASE("integer powers accept negative bases") {
  CHECK(eval_at("x^3", {-2, 0, 0, 0}) == -8.0);
  CHECK_THROWS_AS(eval_at("x^0.5", {-2, 0, 0, 0}), DomainError);
}

TEST_CASE("parse errors carry byte offsets") {
  const auto t = xy_table();
  auto offset_of = [&](const std::string& text) -> long {
    try {
      (void)parse(text, t);
    } catch (const ParseError& e) {
      return static_cast<long>(e.offset());
    }
    return -1;
  };
  CHECK(offset_of("x + * y") == 4);
  CHECK(offset_of("x + z") == 4);      // unknown identifier
  CHECK(offset_of("sin(x, y)") == 5);  // arity
  CHECK(offset_of("(x + y") == 6);
  CHECK(offset_of("") == 0);
  CHECK(offset_of("x y") == 2);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(eval_at("log(x)", {-1, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(eval_at("1/x", {0, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(eval_at("sqrt(x)", {-1, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(eval_at("x^-1", {0, 0, 0, 0}), DomainError);
}

TEST_CASE("to_string round trips structurally") {
  const auto t = xy_table();
  for (const char* text : {"-x^2 + k*sin(x*y)", "2^3^2", "x_dot*(y - 1)/exp(-y)", "sqrt(x^2 + 1) - cos(pi*y)"}) {
    const auto e = parse(text, t);
    CHECK(parse(to_string(e, t), t) == e);
  }
}

TEST_CASE("second-order AD matches hand derivatives") {
  // f = x^2 y + sin(x y): grad = (2xy + y cos(xy), x^2 + x cos(xy)),
  // H = [[2y - y^2 sin, 2x + cos - xy sin], [., -x^2 sin]].
  const auto t = xy_table();
  const auto e = parse("x^2*y + sin(x*y)", t);
  const double x = 0.7, y = -1.3;
  const std::vector<double> p{x, y, 0.0, 0.0};
  const auto d = eval2(e, p, t.param_values());
  const double s = std::sin(x * y), c = std::cos(x * y);
  CHECK(d.value == doctest::Approx(x * x * y + s).epsilon(1e-15));
  CHECK(d.gradient[0] == doctest::Approx(2 * x * y + y * c).epsilon(1e-14));
  CHECK(d.gradient[1] == doctest::Approx(x * x + x * c).epsilon(1e-14));
  CHECK(d.gradient[2] == 0.0);
  CHECK(d.hessian(0, 0) == doctest::Approx(2 * y - y * y * s).epsilon(1e-14));
  CHECK(d.hessian(0, 1) == doctest::Approx(2 * x + c - x * y * s).epsilon(1e-14));
  CHECK(d.hessian(1, 1) == doctest::Approx(-x * x * s).epsilon(1e-14));
  CHECK(d.hessian(0, 1) == d.hessian(1, 0));
}

TEST_CASE("Hessians are symmetric bit for bit") {
  const auto t = xy_table();
  const auto e = parse("exp(x*y_dot)*cos(y*x_dot)/(2 + sin(x*y)) + log(1 + x^2*y_dot^2)", t);
  const std::vector<double> p{0.3, -0.8, 1.1, 0.4};
  const auto d = eval2(e, p, t.param_values());
  CHECK(d.hessian == d.hessian.transpose());
}

TEST_CASE("AD gradient agrees with central differences") {
  const auto t = xy_table();
  const auto e = parse("k*x^3*y_dot + tan(y/3)*x_dot^2 - sqrt(1 + y^2)", t);
  std::vector<double> p{0.4, 0.9, -0.2, 1.7};
  const auto d = eval2(e, p, t.param_values());
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    const double fd = (evaluate(e, pp, t.param_values()) - evaluate(e, pm, t.param_values())) / (2 * h);
    CHECK(std::fabs(fd - d.gradient[static_cast<Eigen::Index>(i)]) <= 1e-8 * std::max(1.0, std::fabs(fd)));
  }
}

TEST_CASE("substitution composes expressions") {
  const auto t = xy_table();
  const auto f = parse("x*y + x_dot", t);
  // x -> 2x, y -> y + 1, velocities unchanged.
  const auto two_x = parse("2*x", t), y1 = parse("y + 1", t), xd = parse("x_dot", t), yd = parse("y_dot", t);
  const std::vector<NodePtr> repl{two_x.root_ptr(), y1.root_ptr(), xd.root_ptr(), yd.root_ptr()};
  const auto g = substitute(f, repl);
  const std::vector<double> p{1.5, 2.0, 0.25, 0.0};
  CHECK(evaluate(g, p, t.param_values()) == 2 * 1.5 * 3.0 + 0.25);
}

TEST_CASE("symbol table rejects clashes") {
  CHECK_THROWS_AS(SymbolTable({"x", "x"}, {}, true), ValidationError);
  CHECK_THROWS_AS(SymbolTable({"x"}, {{"x_dot", 1.0}}, true), ValidationError);
  CHECK_THROWS_AS(SymbolTable({"pi"}, {}, true), ValidationError);
}
