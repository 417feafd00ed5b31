#pragma once

#include <string>

namespace mf {

// Task taxonomy: AA_* expressions repeat one variable (x*x, y-y), AB_* use
// both, in either operand order.
enum class ExprType { AA_ADD, AA_SUB, AA_MUL, AB_ADD, AB_SUB, AB_MUL };

const char* expr_type_name(ExprType t);
ExprType expr_type_from_name(const std::string& name);
constexpr int kNumExprTypes = 6;

struct ExprSample {
  std::string input_text;   // e.g. "x=85,y=-523,x*y"
  std::string target_text;  // e.g. "-44455"
  ExprType expr_type = ExprType::AA_ADD;
  long long x_value = 0;
  long long y_value = 0;
};

// Exact integer evaluation of `VAR=INT,VAR=INT,VAR OP VAR` with VAR in
// {x, y}, OP in {+, -, *} and distinct assigned variables. Returns the
// canonical decimal string (single leading '-' iff negative, no leading
// zeros, "0" for zero). Throws ParseError (with position) on malformed
// input and SemanticError on duplicate/unassigned variables.
std::string oracle_eval(const std::string& input_text);

// The expression body of a well-formed sample string ("x*y" of
// "x=85,y=-523,x*y") mapped to its type.
ExprType classify_type(const ExprSample& sample);
ExprType classify_input(const std::string& input_text);

// Deterministic sample construction from explicit choices; gen_sample draws
// the choices at random and delegates here.
enum class BodyForm { XX, YY, XY, YX };
enum class AssignOrder { XFirst, YFirst };

ExprSample make_sample(long long x_value, long long y_value, char op,
                       BodyForm body, AssignOrder order);

}  // namespace mf
