// SPDX-License-Identifier: Apache-2.0

#include "curlforge/expression.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace curlforge {

struct Expression::Node {
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt } op;
  double value = 0;
  int var = 0;  // 0,1,2 for x,y,z
  std::shared_ptr<const Node> a, b;

  double eval(const Vec3& p) const {
    switch (op) {
      case Op::Const: return value;
      case Op::Var: return p(var);
      case Op::Add: return a->eval(p) + b->eval(p);
      case Op::Sub: return a->eval(p) - b->eval(p);
      case Op::Mul: return a->eval(p) * b->eval(p);
      case Op::Div: return a->eval(p) / b->eval(p);
      case Op::Pow: return std::pow(a->eval(p), b->eval(p));
      case Op::Neg: return -a->eval(p);
      case Op::Sin: return std::sin(a->eval(p));
      case Op::Cos: return std::cos(a->eval(p));
      case Op::Exp: return std::exp(a->eval(p));
      case Op::Sqrt: return std::sqrt(a->eval(p));
    }
    return 0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("trailing input in expression: " + s_);
    return e;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr sum() {
    NodePtr e = term();
    for (;;) {
      if (eat('+')) e = make(Op::Add, e, term());
      else if (eat('-')) e = make(Op::Sub, e, term());
      else return e;
    }
  }
  NodePtr term() {
    NodePtr e = factor();
    for (;;) {
      if (eat('*')) e = make(Op::Mul, e, factor());
      else if (eat('/')) e = make(Op::Div, e, factor());
      else return e;
    }
  }
  NodePtr factor() {
    if (eat('-')) return make(Op::Neg, factor());
    if (eat('+')) return factor();
    NodePtr base = atom();
    if (eat('^')) return make(Op::Pow, base, factor());  // right associative
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression: " + s_);
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      if (!eat(')')) throw ExpressionError("missing ')' in expression: " + s_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t end;
      double v = std::stod(s_.substr(pos_), &end);
      pos_ += end;
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Const;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (name == "x" || name == "y" || name == "z") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Var;
        n->var = name == "x" ? 0 : name == "y" ? 1 : 2;
        return n;
      }
      if (name == "pi") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Const;
        n->value = M_PI;
        return n;
      }
      Op f;
      if (name == "sin") f = Op::Sin;
      else if (name == "cos") f = Op::Cos;
      else if (name == "exp") f = Op::Exp;
      else if (name == "sqrt") f = Op::Sqrt;
      else if (name == "pow") {
        if (!eat('(')) throw ExpressionError("pow expects arguments");
        NodePtr a = sum();
        if (!eat(',')) throw ExpressionError("pow expects two arguments");
        NodePtr b = sum();
        if (!eat(')')) throw ExpressionError("missing ')' after pow");
        return make(Op::Pow, a, b);
      } else {
        throw ExpressionError("unknown name '" + name + "' in expression: " + s_);
      }
      if (!eat('(')) throw ExpressionError(name + " expects an argument");
      NodePtr a = sum();
      if (!eat(')')) throw ExpressionError("missing ')' after " + name);
      return make(f, a);
    }
    throw ExpressionError(std::string("unexpected character '") + c + "' in expression: " + s_);
  }
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expression::operator()(const Vec3& p) const { return root_->eval(p); }

VectorExpression VectorExpression::parse(const std::string& text) {
  // split "(a, b, c)" at top-level commas
  size_t first = text.find('(');
  size_t last = text.rfind(')');
  if (first == std::string::npos || last == std::string::npos || last < first)
    throw ExpressionError("vector expression must be of the form (ex, ey, ez): " + text);
  std::string inner = text.substr(first + 1, last - first - 1);
  std::vector<std::string> comps;
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i <= inner.size(); ++i) {
    if (i == inner.size() || (inner[i] == ',' && depth == 0)) {
      comps.push_back(inner.substr(start, i - start));
      start = i + 1;
    } else if (inner[i] == '(') {
      ++depth;
    } else if (inner[i] == ')') {
      --depth;
    }
  }
  if (comps.size() != 3) throw ExpressionError("vector expression needs three components: " + text);
  VectorExpression v;
  for (int i = 0; i < 3; ++i)
    v.c_[i] = std::make_shared<Expression>(Expression::parse(comps[i]));
  v.text_ = text;
  return v;
}

Vec3 VectorExpression::operator()(const Vec3& p) const {
  return Vec3((*c_[0])(p), (*c_[1])(p), (*c_[2])(p));
}

std::function<Vec3(const Vec3&)> VectorExpression::fn() const {
  VectorExpression copy = *this;
  return [copy](const Vec3& p) { return copy(p); };
}

}  // namespace curlforge
