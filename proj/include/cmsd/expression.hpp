#pragma once

// Closed-form scalar expressions for model right-hand sides.
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary (('^' | '**') unary)?
//   primary := number | 'pi' | 'e' | variable | func '(' expr ')' | '(' expr ')'
//   func    := exp | sin | cos | log | sqrt
// Variables are x1..xn; for n = 1 the name x is accepted as well. Custom
// variable names can be passed instead.
// Expressions evaluate on doubles and on truncated power series.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cmsd/error.hpp"
#include "cmsd/series.hpp"

namespace cmsd {

namespace expr_detail {

inline std::vector<double> derivative_sequence(const std::string& fn, double a, int K) {
  std::vector<double> d(K + 1);
  if (fn == "exp") {
    std::fill(d.begin(), d.end(), std::exp(a));
  } else if (fn == "sin" || fn == "cos") {
    const double s = std::sin(a), c = std::cos(a);
    const double cyc_sin[4] = {s, c, -s, -c};
    const double cyc_cos[4] = {c, -s, -c, s};
    for (int j = 0; j <= K; ++j) d[j] = fn == "sin" ? cyc_sin[j % 4] : cyc_cos[j % 4];
  } else if (fn == "log") {
    if (!(a > 0.0)) throw DomainError("log of non-positive argument");
    d[0] = std::log(a);
    double f = 1.0;
    for (int j = 1; j <= K; ++j) {
      d[j] = ((j % 2 == 1) ? 1.0 : -1.0) * f / std::pow(a, j);
      f *= j;
    }
  } else {
    throw ConfigError("unknown function '" + fn + "'");
  }
  return d;
}

/// Derivatives of x ↦ x^p at a.
inline std::vector<double> power_sequence(double p, double a, int K) {
  if (!(a > 0.0) && std::floor(p) != p) throw DomainError("non-integer power of non-positive argument");
  if (a == 0.0 && p < 0) throw DomainError("negative power of zero");
  std::vector<double> d(K + 1);
  double falling = 1.0;
  for (int j = 0; j <= K; ++j) {
    d[j] = falling * std::pow(a, p - j);
    falling *= (p - j);
  }
  return d;
}

inline double apply_fn(const std::string& fn, double a) {
  if (fn == "exp") return std::exp(a);
  if (fn == "sin") return std::sin(a);
  if (fn == "cos") return std::cos(a);
  if (fn == "log") {
    if (!(a > 0.0)) throw DomainError("log of non-positive argument");
    return std::log(a);
  }
  throw ConfigError("unknown function '" + fn + "'");
}

inline Series apply_fn(const std::string& fn, const Series& a) {
  const auto d = derivative_sequence(fn, a.constant_term(), a.max_degree());
  return apply_univariate(a, d);
}

inline double power(double a, double p) {
  if (a < 0.0 && std::floor(p) != p) throw DomainError("non-integer power of negative argument");
  return std::pow(a, p);
}

inline Series power(const Series& a, double p) {
  if (p >= 0.0 && std::floor(p) == p && p <= 64) {
    Series out = Series::constant(a.basis(), 1.0);
    Series base = a;
    for (long e = static_cast<long>(p); e > 0; e >>= 1) {
      if (e & 1) out = out * base;
      if (e > 1) base = base * base;
    }
    return out;
  }
  return apply_univariate(a, power_sequence(p, a.constant_term(), a.max_degree()));
}

inline double reciprocal(double a) { return 1.0 / a; }
inline Series reciprocal(const Series& a) {
  if (a.constant_term() == 0.0) throw DomainError("division by a series vanishing at the origin");
  return apply_univariate(a, power_sequence(-1.0, a.constant_term(), a.max_degree()));
}

}  // namespace expr_detail

class Expression {
 public:
  enum class Kind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

  struct Node {
    Kind kind;
    double value = 0.0;
    int var = -1;
    std::string fn;
    std::unique_ptr<Node> a, b;
  };

  Expression() = default;

  /// Parses text over num_vars variables; throws ConfigError with a position on failure.
  static Expression parse(const std::string& text, int num_vars) { return parse(text, num_vars, {}); }

  /// Parses text whose variables are the given names instead of x1..xn.
  static Expression parse(const std::string& text, const std::vector<std::string>& names) {
    return parse(text, static_cast<int>(names.size()), names);
  }

  static Expression parse(const std::string& text, int num_vars, const std::vector<std::string>& names) {
    Parser p{text, 0, num_vars, names};
    Expression e;
    e.text_ = text;
    e.num_vars_ = num_vars;
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    return e;
  }

  const std::string& text() const { return text_; }
  int num_vars() const { return num_vars_; }
  bool depends_on_variables() const { return root_ && has_var(*root_); }

  /// Evaluates with T = double or Series; make_const(v) builds a constant T.
  template <class T, class MakeConst>
  T evaluate(std::span<const T> x, MakeConst make_const) const {
    if (!root_) throw ConfigError("empty expression");
    return eval_node<T>(*root_, x, make_const);
  }

  double operator()(std::span<const double> x) const {
    return evaluate<double>(x, [](double v) { return v; });
  }

  Series operator()(std::span<const Series> x) const {
    if (x.empty()) throw ConfigError("series evaluation needs at least one argument");
    const BasisPtr basis = x[0].basis();
    return evaluate<Series>(x, [&](double v) { return Series::constant(basis, v); });
  }

 private:
  struct Parser {
    const std::string& s;
    std::size_t pos;
    int num_vars;
    std::vector<std::string> names;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ConfigError("expression '" + s + "' at column " + std::to_string(pos + 1) + ": " + msg);
    }
    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(const char* tok) {
      skip_ws();
      const std::string t(tok);
      if (s.compare(pos, t.size(), t) == 0) {
        pos += t.size();
        return true;
      }
      return false;
    }
    static std::unique_ptr<Node> make(Kind k, std::unique_ptr<Node> a = nullptr, std::unique_ptr<Node> b = nullptr) {
      auto n = std::make_unique<Node>();
      n->kind = k;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }

    std::unique_ptr<Node> parse_expr() {
      auto lhs = parse_term();
      for (;;) {
        if (eat("+")) lhs = make(Kind::Add, std::move(lhs), parse_term());
        else if (eat("-")) lhs = make(Kind::Sub, std::move(lhs), parse_term());
        else return lhs;
      }
    }
    std::unique_ptr<Node> parse_term() {
      auto lhs = parse_unary();
      for (;;) {
        skip_ws();
        if (s.compare(pos, 2, "**") == 0) return lhs;
        if (eat("*")) lhs = make(Kind::Mul, std::move(lhs), parse_unary());
        else if (eat("/")) lhs = make(Kind::Div, std::move(lhs), parse_unary());
        else return lhs;
      }
    }
    std::unique_ptr<Node> parse_unary() {
      if (eat("-")) return make(Kind::Neg, parse_unary());
      if (eat("+")) return parse_unary();
      return parse_power();
    }
    std::unique_ptr<Node> parse_power() {
      auto base = parse_primary();
      if (eat("^") || eat("**")) return make(Kind::Pow, std::move(base), parse_unary());
      return base;
    }
    std::unique_ptr<Node> parse_primary() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        auto e = parse_expr();
        if (!eat(")")) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = make(Kind::Number);
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "pi" || id == "e") {
          auto n = make(Kind::Number);
          n->value = id == "pi" ? std::numbers::pi : std::numbers::e;
          return n;
        }
        if (id == "exp" || id == "sin" || id == "cos" || id == "log" || id == "sqrt") {
          if (!eat("(")) fail("expected '(' after " + id);
          auto arg = parse_expr();
          if (!eat(")")) fail("expected ')'");
          if (id == "sqrt") {
            auto half = make(Kind::Number);
            half->value = 0.5;
            return make(Kind::Pow, std::move(arg), std::move(half));
          }
          auto n = make(Kind::Call, std::move(arg));
          n->fn = id;
          return n;
        }
        int var = -1;
        if (!names.empty()) {
          for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == id) var = static_cast<int>(i);
        } else if (id == "x" && num_vars == 1) {
          var = 0;
        } else if (id.size() > 1 && id[0] == 'x' &&
                   id.find_first_not_of("0123456789", 1) == std::string::npos) {
          const int k = std::stoi(id.substr(1));
          if (k >= 1 && k <= num_vars) var = k - 1;
        }
        if (var < 0) {
          pos = start;
          fail("unknown identifier '" + id + "'");
        }
        auto n = make(Kind::Variable);
        n->var = var;
        return n;
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
  };

  static bool has_var(const Node& n) {
    if (n.kind == Kind::Variable) return true;
    return (n.a && has_var(*n.a)) || (n.b && has_var(*n.b));
  }

  static double constant_value(const Node& n) {
    std::span<const double> none;
    auto identity = [](double v) { return v; };
    return eval_node<double>(n, none, identity);
  }

  template <class T, class MakeConst>
  static T eval_node(const Node& n, std::span<const T> x, MakeConst& make_const) {
    using namespace expr_detail;
    switch (n.kind) {
      case Kind::Number:
        return make_const(n.value);
      case Kind::Variable:
        if (n.var >= static_cast<int>(x.size())) throw ConfigError("expression uses an unbound variable");
        return x[n.var];
      case Kind::Neg:
        return -eval_node<T>(*n.a, x, make_const);
      case Kind::Add:
        return eval_node<T>(*n.a, x, make_const) + eval_node<T>(*n.b, x, make_const);
      case Kind::Sub:
        return eval_node<T>(*n.a, x, make_const) - eval_node<T>(*n.b, x, make_const);
      case Kind::Mul:
        return eval_node<T>(*n.a, x, make_const) * eval_node<T>(*n.b, x, make_const);
      case Kind::Div:
        if (!has_var(*n.b)) return eval_node<T>(*n.a, x, make_const) * (1.0 / constant_value(*n.b));
        return eval_node<T>(*n.a, x, make_const) * reciprocal(eval_node<T>(*n.b, x, make_const));
      case Kind::Pow: {
        T base = eval_node<T>(*n.a, x, make_const);
        if (!has_var(*n.b)) return power(base, constant_value(*n.b));
        // a^b = exp(b log a) for a variable exponent
        T expo = eval_node<T>(*n.b, x, make_const);
        return apply_fn("exp", expo * apply_fn("log", base));
      }
      case Kind::Call:
        return apply_fn(n.fn, eval_node<T>(*n.a, x, make_const));
    }
    throw ConfigError("corrupt expression tree");
  }

  std::string text_;
  int num_vars_ = 0;
  std::shared_ptr<const Node> root_;
};

}  // namespace cmsd
