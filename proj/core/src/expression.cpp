#include "reithom/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace reithom {

namespace {

enum class OpCode { Const, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Piecewise };

}  // namespace

struct Expression::Node {
  OpCode op = OpCode::Const;
  double value = 0.0;                 // Const
  char letter = 'x';                  // Var / Piecewise
  int axis = 0;                       // Var / Piecewise
  std::vector<double> pieces;         // Piecewise
  std::shared_ptr<const Node> a, b;   // operands
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

struct Parser {
  const std::string& s;
  std::size_t pos = 0;
  char context;

  explicit Parser(const std::string& src, char ctx) : s(src), context(ctx) {}

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("expression parse error at position " + std::to_string(pos) +
                                ": " + msg + " in '" + s + "'");
  }

  NodePtr make(OpCode op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = make(OpCode::Add, lhs, parse_term());
      else if (eat('-'))
        lhs = make(OpCode::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (eat('*'))
        lhs = make(OpCode::Mul, lhs, parse_factor());
      else if (eat('/'))
        lhs = make(OpCode::Div, lhs, parse_factor());
      else
        return lhs;
    }
  }

  std::string ident() {
    skip();
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    return s.substr(start, pos - start);
  }

  NodePtr var_node(const std::string& name) {
    if (name.size() < 1 || name.size() > 2) fail("unknown identifier '" + name + "'");
    const char letter = name[0];
    if (letter != 'x' && letter != 'y' && letter != 'z' && letter != 't' && letter != 'r')
      fail("unknown identifier '" + name + "'");
    int axis = 0;
    if (name.size() == 2) {
      if ((letter == 't' || letter == 'r') || (name[1] != '1' && name[1] != '2'))
        fail("unknown identifier '" + name + "'");
      axis = name[1] - '1';
    }
    auto n = std::make_shared<Expression::Node>();
    n->op = OpCode::Var;
    n->letter = letter;
    n->axis = axis;
    return n;
  }

  NodePtr parse_piecewise() {
    char letter = context;
    int axis = 0;
    if (eat('(')) {
      const std::string v = ident();
      if (v.empty()) fail("expected variable in piecewise(...)");
      letter = v[0];
      axis = v.size() == 2 ? v[1] - '1' : 0;
      if (!eat(')')) fail("expected ')'");
    }
    skip();
    if (!eat(':')) fail("expected ':' after piecewise");
    if (!eat('[')) fail("expected '[' in piecewise");
    std::vector<double> pieces;
    do {
      skip();
      std::size_t consumed = 0;
      pieces.push_back(std::stod(s.substr(pos), &consumed));
      if (consumed == 0) fail("expected number in piecewise list");
      pos += consumed;
    } while (eat(','));
    if (!eat(']')) fail("expected ']' in piecewise");
    if (pieces.empty()) fail("piecewise needs at least one value");
    auto n = std::make_shared<Expression::Node>();
    n->op = OpCode::Piecewise;
    n->letter = letter;
    n->axis = axis;
    n->pieces = std::move(pieces);
    return n;
  }

  NodePtr parse_factor() {
    skip();
    if (pos >= s.size()) fail("unexpected end of input");
    const char c = s[pos];
    if (c == '(') {
      ++pos;
      NodePtr inner = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (c == '-') {
      ++pos;
      return make(OpCode::Neg, parse_factor());
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t consumed = 0;
      const double v = std::stod(s.substr(pos), &consumed);
      pos += consumed;
      auto n = std::make_shared<Expression::Node>();
      n->op = OpCode::Const;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::string name = ident();
      if (name == "pi") {
        auto n = std::make_shared<Expression::Node>();
        n->op = OpCode::Const;
        n->value = M_PI;
        return n;
      }
      if (name == "sin" || name == "cos") {
        if (!eat('(')) fail("expected '(' after " + name);
        NodePtr arg = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return make(name == "sin" ? OpCode::Sin : OpCode::Cos, arg);
      }
      if (name == "piecewise") return parse_piecewise();
      return var_node(name);
    }
    fail("unexpected character");
  }
};

double eval_node(const Expression::Node& n, const EvalContext& ctx) {
  switch (n.op) {
    case OpCode::Const:
      return n.value;
    case OpCode::Var:
      switch (n.letter) {
        case 'x': return ctx.x[n.axis];
        case 'y': return ctx.y[n.axis];
        case 'z': return ctx.z[n.axis];
        case 't': return ctx.t;
        default: return ctx.r;
      }
    case OpCode::Add: return eval_node(*n.a, ctx) + eval_node(*n.b, ctx);
    case OpCode::Sub: return eval_node(*n.a, ctx) - eval_node(*n.b, ctx);
    case OpCode::Mul: return eval_node(*n.a, ctx) * eval_node(*n.b, ctx);
    case OpCode::Div: return eval_node(*n.a, ctx) / eval_node(*n.b, ctx);
    case OpCode::Neg: return -eval_node(*n.a, ctx);
    case OpCode::Sin: return std::sin(eval_node(*n.a, ctx));
    case OpCode::Cos: return std::cos(eval_node(*n.a, ctx));
    case OpCode::Piecewise: {
      double coord = 0.0;
      switch (n.letter) {
        case 'x': coord = ctx.x[n.axis]; break;
        case 'y': coord = ctx.y[n.axis]; break;
        case 'z': coord = ctx.z[n.axis]; break;
        case 't': coord = ctx.t; break;
        default: coord = ctx.r; break;
      }
      // Periodic extension of the unit cell split into equal pieces.
      double u = coord + 0.5;
      u -= std::floor(u);
      auto idx = static_cast<std::size_t>(u * static_cast<double>(n.pieces.size()));
      if (idx >= n.pieces.size()) idx = n.pieces.size() - 1;
      return n.pieces[idx];
    }
  }
  return 0.0;
}

void collect_breakpoints(const Expression::Node& n, char letter, int axis,
                         std::vector<double>& out) {
  if (n.op == OpCode::Piecewise && n.letter == letter && n.axis == axis) {
    const auto m = n.pieces.size();
    for (std::size_t k = 0; k < m; ++k)
      out.push_back(-0.5 + static_cast<double>(k) / static_cast<double>(m));
  }
  if (n.a) collect_breakpoints(*n.a, letter, axis, out);
  if (n.b) collect_breakpoints(*n.b, letter, axis, out);
}

}  // namespace

Expression Expression::parse(const std::string& src, char context_letter) {
  Parser p(src, context_letter);
  NodePtr root = p.parse_expr();
  p.skip();
  if (p.pos != src.size()) p.fail("trailing input");
  Expression e;
  e.root_ = std::move(root);
  e.letter_ = context_letter;
  e.src_ = src;
  return e;
}

Expression Expression::constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = OpCode::Const;
  n->value = v;
  Expression e;
  e.root_ = std::move(n);
  e.src_ = std::to_string(v);
  return e;
}

double Expression::eval(const EvalContext& ctx) const { return eval_node(*root_, ctx); }

double Expression::operator()(const Vec& p) const {
  EvalContext ctx;
  switch (letter_) {
    case 'x': ctx.x = p; break;
    case 'y': ctx.y = p; break;
    case 'z': ctx.z = p; break;
    default: ctx.t = p[0]; ctx.r = p[0]; break;
  }
  return eval(ctx);
}

double Expression::operator()(double scalar) const {
  EvalContext ctx;
  ctx.t = scalar;
  ctx.r = scalar;
  Vec p(scalar);
  switch (letter_) {
    case 'x': ctx.x = p; break;
    case 'y': ctx.y = p; break;
    case 'z': ctx.z = p; break;
    default: break;
  }
  return eval(ctx);
}

std::vector<double> Expression::breakpoints(char letter, int axis) const {
  std::vector<double> out;
  collect_breakpoints(*root_, letter, axis, out);
  return out;
}

}  // namespace reithom
