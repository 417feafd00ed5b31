#include "data/expr.hpp"

#include <cctype>

#include "core/error.hpp"

namespace mf {

const char* expr_type_name(ExprType t) {
  switch (t) {
    case ExprType::AA_ADD: return "AA_ADD";
    case ExprType::AA_SUB: return "AA_SUB";
    case ExprType::AA_MUL: return "AA_MUL";
    case ExprType::AB_ADD: return "AB_ADD";
    case ExprType::AB_SUB: return "AB_SUB";
    case ExprType::AB_MUL: return "AB_MUL";
  }
  return "?";
}

ExprType expr_type_from_name(const std::string& name) {
  for (int i = 0; i < kNumExprTypes; ++i) {
    ExprType t = static_cast<ExprType>(i);
    if (name == expr_type_name(t)) return t;
  }
  throw ParseError("unknown expression type '" + name + "'");
}

namespace {

struct Scanner {
  const std::string& s;
  std::size_t pos = 0;

  bool done() const { return pos >= s.size(); }
  char peek() const { return done() ? '\0' : s[pos]; }

  char expect_var() {
    char c = peek();
    if (c != 'x' && c != 'y')
      throw ParseError("expected variable 'x' or 'y'", pos);
    ++pos;
    return c;
  }

  void expect(char c) {
    if (peek() != c)
      throw ParseError(std::string("expected '") + c + "'", pos);
    ++pos;
  }

  long long expect_int() {
    std::size_t start = pos;
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      ++pos;
    }
    if (!std::isdigit(static_cast<unsigned char>(peek())))
      throw ParseError("expected integer", pos);
    long long v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (s[pos] - '0');
      if (v > 2000000000LL)
        throw ParseError("integer literal too large", start);
      ++pos;
    }
    return neg ? -v : v;
  }

  char expect_op() {
    char c = peek();
    if (c != '+' && c != '-' && c != '*')
      throw ParseError("expected operator '+', '-' or '*'", pos);
    ++pos;
    return c;
  }
};

std::string render_value(long long v) { return std::to_string(v); }

}  // namespace

std::string oracle_eval(const std::string& input_text) {
  Scanner sc{input_text};

  char var1 = sc.expect_var();
  sc.expect('=');
  long long val1 = sc.expect_int();
  sc.expect(',');
  char var2 = sc.expect_var();
  sc.expect('=');
  long long val2 = sc.expect_int();
  sc.expect(',');
  if (var1 == var2)
    throw SemanticError(std::string("variable '") + var1 + "' assigned twice");

  char lhs = sc.expect_var();
  char op = sc.expect_op();
  char rhs = sc.expect_var();
  if (!sc.done()) throw ParseError("trailing characters", sc.pos);

  auto value_of = [&](char v) -> long long {
    if (v == var1) return val1;
    if (v == var2) return val2;
    throw SemanticError(std::string("variable '") + v + "' used but never assigned");
  };

  long long a = value_of(lhs);
  long long b = value_of(rhs);
  long long r = 0;
  switch (op) {
    case '+': r = a + b; break;
    case '-': r = a - b; break;
    case '*': r = a * b; break;
  }
  return render_value(r);
}

ExprType classify_input(const std::string& input_text) {
  std::size_t comma = input_text.rfind(',');
  if (comma == std::string::npos || input_text.size() - comma != 4)
    throw ParseError("expression body not found", comma == std::string::npos ? 0 : comma);
  char lhs = input_text[comma + 1];
  char op = input_text[comma + 2];
  char rhs = input_text[comma + 3];
  bool symmetric = lhs == rhs;
  switch (op) {
    case '+': return symmetric ? ExprType::AA_ADD : ExprType::AB_ADD;
    case '-': return symmetric ? ExprType::AA_SUB : ExprType::AB_SUB;
    case '*': return symmetric ? ExprType::AA_MUL : ExprType::AB_MUL;
    default: throw ParseError("unknown operator in body", comma + 2);
  }
}

ExprType classify_type(const ExprSample& sample) {
  return classify_input(sample.input_text);
}

ExprSample make_sample(long long x_value, long long y_value, char op,
                       BodyForm body, AssignOrder order) {
  std::string input;
  input.reserve(24);
  if (order == AssignOrder::XFirst) {
    input += "x=" + render_value(x_value) + ",y=" + render_value(y_value) + ",";
  } else {
    input += "y=" + render_value(y_value) + ",x=" + render_value(x_value) + ",";
  }
  const char* bodies[] = {"x x", "y y", "x y", "y x"};
  const char* b = bodies[static_cast<int>(body)];
  input.push_back(b[0]);
  input.push_back(op);
  input.push_back(b[2]);

  ExprSample s;
  s.input_text = std::move(input);
  s.target_text = oracle_eval(s.input_text);
  s.x_value = x_value;
  s.y_value = y_value;
  s.expr_type = classify_input(s.input_text);
  return s;
}

}  // namespace mf
