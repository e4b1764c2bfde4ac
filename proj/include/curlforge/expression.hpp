// SPDX-License-Identifier: Apache-2.0

#ifndef CURLFORGE_EXPRESSION_HPP
#define CURLFORGE_EXPRESSION_HPP

#include <functional>
#include <memory>
#include <string>

#include "curlforge/geometry.hpp"

namespace curlforge {

struct ExpressionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Arithmetic over (x,y,z): + - * / ^ pow sin cos exp sqrt, unary minus,
// parentheses, numeric literals, and the constant pi.
class Expression {
 public:
  static Expression parse(const std::string& text);
  double operator()(const Vec3& p) const;
  const std::string& text() const { return text_; }

 private:
  struct Node;
  std::shared_ptr<const Node> root_;
  std::string text_;
};

// "(ex, ey, ez)" -> vector-valued callable
class VectorExpression {
 public:
  static VectorExpression parse(const std::string& text);
  Vec3 operator()(const Vec3& p) const;
  const std::string& text() const { return text_; }
  std::function<Vec3(const Vec3&)> fn() const;

 private:
  std::shared_ptr<const Expression> c_[3];
  std::string text_;
};

}  // namespace curlforge

#endif
