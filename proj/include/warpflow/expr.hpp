#pragma once

// Tiny arithmetic grammar for custom warp functions of rho:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'rho' | func '(' expr ')' | '(' expr ')'
//   func    := sinh | cosh | sin | cos | exp | log
// Evaluation carries value, first and second derivative in rho.

#include "warpflow/error.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace warpflow {

/// Second-order forward-mode jet: (f, f', f'').
struct Jet {
  double v = 0.0, d1 = 0.0, d2 = 0.0;
};

inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d1, -a.d2}; }
inline Jet operator*(Jet a, Jet b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet operator/(Jet a, Jet b) {
  const double inv = 1.0 / b.v;
  const Jet r{inv, -b.d1 * inv * inv, (2.0 * b.d1 * b.d1 * inv - b.d2) * inv * inv};
  return a * r;
}

/// g applied to u given g, g', g'' at u.v
inline Jet chain(Jet u, double g, double dg, double ddg) {
  return {g, dg * u.d1, ddg * u.d1 * u.d1 + dg * u.d2};
}

inline Jet jet_pow(Jet a, Jet b) {
  if (b.d1 == 0.0 && b.d2 == 0.0) {
    const double c = b.v;
    return chain(a, std::pow(a.v, c), c * std::pow(a.v, c - 1.0), c * (c - 1.0) * std::pow(a.v, c - 2.0));
  }
  const double l = std::log(a.v);
  const Jet la = chain(a, l, 1.0 / a.v, -1.0 / (a.v * a.v));
  const Jet e = b * la;
  const double ev = std::exp(e.v);
  return chain(e, ev, ev, ev);
}

class Expression {
 public:
  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    Expression e;
    e.root_ = p.expr();
    p.skip();
    if (p.pos != p.src.size())
      fail(ErrorKind::Validation, "unexpected '" + std::string(p.src.substr(p.pos, 1)) + "' in expression at offset " +
                                      std::to_string(p.pos));
    e.text_ = std::string(text);
    return e;
  }

  Jet eval(double rho) const { return root_->eval(Jet{rho, 1.0, 0.0}); }
  const std::string& text() const { return text_; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual Jet eval(Jet x) const = 0;
  };
  using Ptr = std::shared_ptr<const Node>;

  struct Const : Node {
    double c;
    explicit Const(double c) : c(c) {}
    Jet eval(Jet) const override { return {c, 0.0, 0.0}; }
  };
  struct Var : Node {
    Jet eval(Jet x) const override { return x; }
  };
  struct Neg : Node {
    Ptr a;
    explicit Neg(Ptr a) : a(std::move(a)) {}
    Jet eval(Jet x) const override { return -a->eval(x); }
  };
  struct Bin : Node {
    char op;
    Ptr a, b;
    Bin(char op, Ptr a, Ptr b) : op(op), a(std::move(a)), b(std::move(b)) {}
    Jet eval(Jet x) const override {
      const Jet l = a->eval(x), r = b->eval(x);
      switch (op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        case '/': return l / r;
        default: return jet_pow(l, r);
      }
    }
  };
  struct Fn : Node {
    std::string name;
    Ptr a;
    Fn(std::string name, Ptr a) : name(std::move(name)), a(std::move(a)) {}
    Jet eval(Jet x) const override {
      const Jet u = a->eval(x);
      const double v = u.v;
      if (name == "sin") return chain(u, std::sin(v), std::cos(v), -std::sin(v));
      if (name == "cos") return chain(u, std::cos(v), -std::sin(v), -std::cos(v));
      if (name == "sinh") return chain(u, std::sinh(v), std::cosh(v), std::sinh(v));
      if (name == "cosh") return chain(u, std::cosh(v), std::sinh(v), std::cosh(v));
      if (name == "exp") return chain(u, std::exp(v), std::exp(v), std::exp(v));
      return chain(u, std::log(v), 1.0 / v, -1.0 / (v * v));
    }
  };

  struct Parser {
    std::string_view src;
    std::size_t pos;

    void skip() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    Ptr expr() {
      Ptr lhs = term();
      for (;;) {
        if (eat('+')) lhs = std::make_shared<Bin>('+', lhs, term());
        else if (eat('-')) lhs = std::make_shared<Bin>('-', lhs, term());
        else return lhs;
      }
    }
    Ptr term() {
      Ptr lhs = unary();
      for (;;) {
        if (eat('*')) lhs = std::make_shared<Bin>('*', lhs, unary());
        else if (eat('/')) lhs = std::make_shared<Bin>('/', lhs, unary());
        else return lhs;
      }
    }
    Ptr power() {
      Ptr base = primary();
      if (eat('^')) return std::make_shared<Bin>('^', base, unary());
      return base;
    }
    Ptr unary() {
      if (eat('-')) return std::make_shared<Neg>(unary());
      return power();
    }
    Ptr primary() {
      skip();
      if (pos >= src.size()) fail(ErrorKind::Validation, "unexpected end of expression");
      if (eat('(')) {
        Ptr e = expr();
        if (!eat(')')) fail(ErrorKind::Validation, "missing ')' in expression");
        return e;
      }
      const char c = src[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t end = pos;
        while (end < src.size() && (std::isdigit(static_cast<unsigned char>(src[end])) || src[end] == '.')) ++end;
        if (end < src.size() && (src[end] == 'e' || src[end] == 'E')) {
          std::size_t k = end + 1;
          if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
          if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
            end = k;
            while (end < src.size() && std::isdigit(static_cast<unsigned char>(src[end]))) ++end;
          }
        }
        const std::string num(src.substr(pos, end - pos));
        pos = end;
        try {
          return std::make_shared<Const>(std::stod(num));
        } catch (const std::exception&) {
          fail(ErrorKind::Validation, "bad number '" + num + "'");
        }
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t end = pos;
        while (end < src.size() && std::isalpha(static_cast<unsigned char>(src[end]))) ++end;
        const std::string id(src.substr(pos, end - pos));
        pos = end;
        if (id == "rho") return std::make_shared<Var>();
        static const std::vector<std::string> fns{"sinh", "cosh", "sin", "cos", "exp", "log"};
        for (const auto& f : fns) {
          if (id == f) {
            if (!eat('(')) fail(ErrorKind::Validation, "expected '(' after " + id);
            Ptr arg = expr();
            if (!eat(')')) fail(ErrorKind::Validation, "missing ')' after argument of " + id);
            return std::make_shared<Fn>(id, arg);
          }
        }
        fail(ErrorKind::Validation, "unknown identifier '" + id + "'");
      }
      fail(ErrorKind::Validation, "unexpected '" + std::string(1, c) + "' in expression");
    }
  };

  Ptr root_;
  std::string text_;
};

}  // namespace warpflow
