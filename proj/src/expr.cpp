#include <cctype>
#include <cmath>
#include <numbers>

#include "vecot/io.hpp"

namespace vecot::io {

struct Expr::Node {
  enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call } kind;
  double number = 0;
  std::string name;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(double x) const {
    switch (kind) {
      case Kind::Number: return number;
      case Kind::Var: return x;
      case Kind::Neg: return -args[0]->eval(x);
      case Kind::Add: return args[0]->eval(x) + args[1]->eval(x);
      case Kind::Sub: return args[0]->eval(x) - args[1]->eval(x);
      case Kind::Mul: return args[0]->eval(x) * args[1]->eval(x);
      case Kind::Div: return args[0]->eval(x) / args[1]->eval(x);
      case Kind::Pow: return std::pow(args[0]->eval(x), args[1]->eval(x));
      case Kind::Call: break;
    }
    double a = args[0]->eval(x);
    if (name == "abs") return std::abs(a);
    if (name == "sqrt") return std::sqrt(a);
    if (name == "exp") return std::exp(a);
    if (name == "log") return std::log(a);
    if (name == "pos") return std::max(a, 0.0);
    double b = args[1]->eval(x);
    return name == "min" ? std::min(a, b) : std::max(a, b);
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Kind = Expr::Node::Kind;

NodePtr make(Kind k, std::vector<NodePtr> args = {}, double v = 0, std::string name = {}) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->number = v;
  n->name = std::move(name);
  n->args = std::move(args);
  return n;
}

int arity(const std::string& f) {
  if (f == "abs" || f == "sqrt" || f == "exp" || f == "log" || f == "pos") return 1;
  if (f == "min" || f == "max") return 2;
  return -1;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw PreconditionError("expression \"" + s_ + "\" at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  bool starts_primary() {
    char c = peek();
    return std::isalpha(static_cast<unsigned char>(c)) || c == '(';
  }

  NodePtr sum() {
    NodePtr n = product();
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++pos_;
      n = make(c == '+' ? Kind::Add : Kind::Sub, {n, product()});
    }
    return n;
  }

  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        n = make(c == '*' ? Kind::Mul : Kind::Div, {n, unary()});
      } else if (starts_primary()) {
        n = make(Kind::Mul, {n, power()});  // "2x", "3(x+1)"
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    char c = peek();
    if (c == '-') {
      ++pos_;
      return make(Kind::Neg, {unary()});
    }
    if (c == '+') {
      ++pos_;
      return unary();
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek() == '^') {
      ++pos_;
      return make(Kind::Pow, {base, unary()});
    }
    return base;
  }

  NodePtr primary() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      NodePtr n = sum();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Kind::Number, {}, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return make(Kind::Var);
      if (id == "pi") return make(Kind::Number, {}, std::numbers::pi);
      int n = arity(id);
      if (n < 0) {
        pos_ = start;
        fail("unknown name \"" + id + "\"");
      }
      if (peek() != '(') fail("expected '(' after " + id);
      ++pos_;
      std::vector<NodePtr> args{sum()};
      while (peek() == ',') {
        ++pos_;
        args.push_back(sum());
      }
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      if (static_cast<int>(args.size()) != n) fail(id + " takes " + std::to_string(n) + " argument(s)");
      return make(Kind::Call, std::move(args), 0, id);
    }
    fail(c == '\0' ? "unexpected end" : "unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

Expr::Expr(std::string text) : text_(std::move(text)), root_(Parser(text_).parse()) {}

double Expr::operator()(double x) const { return root_->eval(x); }

std::vector<Expr> parse_expr_list(const std::string& text) {
  std::vector<Expr> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    char c = i < text.size() ? text[i] : ',';
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace vecot::io
