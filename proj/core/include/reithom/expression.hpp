#ifndef REITHOM_EXPRESSION_HPP
#define REITHOM_EXPRESSION_HPP

#include <memory>
#include <string>
#include <vector>

#include "reithom/common.hpp"

namespace reithom {

/// Values an expression may reference. Unused slots stay at their defaults.
struct EvalContext {
  Vec x = Vec::zero(2);
  Vec y = Vec::zero(2);
  Vec z = Vec::zero(2);
  double t = 0.0;
  double r = 0.0;
};

/// Tiny arithmetic language for coefficients, right-hand sides and test
/// functions:
///
///   expr     := term (('+'|'-') term)*
///   term     := factor (('*'|'/') factor)*
///   factor   := number | 'pi' | var | ('sin'|'cos') '(' expr ')'
///             | '(' expr ')' | '-' factor | piecewise
///   var      := 'x'|'y'|'z'|'t'|'r' | 'x1'|'x2'|'y1'|'y2'|'z1'|'z2'
///   piecewise:= 'piecewise' [ '(' var ')' ] ':' '[' number (',' number)* ']'
///
/// Bare 'x','y','z' alias the first component. piecewise splits the periodic
/// unit cell [-1/2,1/2) of its variable into equal subintervals, constant on
/// each; without an explicit variable it binds to the context letter the
/// expression was parsed with.
class Expression {
 public:
  static Expression parse(const std::string& src, char context_letter);
  static Expression constant(double v);

  double eval(const EvalContext& ctx) const;

  /// Convenience for single-letter coefficients: binds the context letter's
  /// vector slot and evaluates.
  double operator()(const Vec& p) const;
  double operator()(double scalar) const;

  /// Cell coordinates (in [-1/2,1/2)) of declared discontinuity interfaces of
  /// the given variable axis; empty for smooth expressions.
  std::vector<double> breakpoints(char letter, int axis) const;

  char context_letter() const { return letter_; }
  const std::string& source() const { return src_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  char letter_ = 'x';
  std::string src_;
};

}  // namespace reithom

#endif
