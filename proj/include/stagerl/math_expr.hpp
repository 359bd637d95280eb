// Exact expression trees for answer comparison.
//
// parse_math() accepts a pragmatic LaTeX subset (integers, decimals, \frac
// and '/', + - * ^, parentheses and braces, \sqrt, \pi, a few named
// functions, single-letter symbols, implicit multiplication) and returns the
// canonical form:
//   * numbers are exact rationals in lowest terms (decimals are converted);
//   * subtraction and negation become a -1 coefficient, division a -1 power;
//   * sums and products are flattened, like terms/bases are collected and
//     children are sorted by a total order on structure;
//   * products of sums and small positive integer powers of sums are
//     expanded (up to a term budget);
//   * numeric radicals are reduced to coefficient * r^f with r free of
//     perfect powers and 0 < f < 1.
// Two canonical expressions are structurally equal iff compare() returns
// equal.
#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace stagerl::math {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class NodeKind { integer, rational, decimal, symbol, add, mul, pow, neg, function };

class MathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MathParseError : public MathError {
 public:
  MathParseError(const std::string& what, std::size_t position)
      : MathError(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class MathExpr {
 public:
  MathExpr();  // integer 0

  static MathExpr number(const Rational& q);
  static MathExpr decimal(const Rational& q);  // parse-level only
  static MathExpr symbol(std::string name);
  static MathExpr function(std::string name, std::vector<MathExpr> args);
  static MathExpr raw_add(std::vector<MathExpr> terms);
  static MathExpr raw_mul(std::vector<MathExpr> factors);
  static MathExpr raw_pow(MathExpr base, MathExpr exponent);
  static MathExpr raw_neg(MathExpr operand);

  NodeKind kind() const;
  bool is_number() const;  // integer or rational (decimal counts too)
  const Rational& value() const;
  const std::string& name() const;
  const std::vector<MathExpr>& children() const;

  friend std::strong_ordering compare(const MathExpr& a, const MathExpr& b);
  friend bool operator==(const MathExpr& a, const MathExpr& b) {
    return compare(a, b) == std::strong_ordering::equal;
  }
  friend bool operator<(const MathExpr& a, const MathExpr& b) {
    return compare(a, b) == std::strong_ordering::less;
  }

 private:
  struct Node;
  explicit MathExpr(std::shared_ptr<const Node> n);
  std::shared_ptr<const Node> node_;
};

/// Parses without canonicalizing. Throws MathParseError.
MathExpr parse_raw(std::string_view src);

/// Canonical form of an arbitrary tree. Throws MathError for undefined
/// values (division by zero, even roots of negatives, oversized powers).
MathExpr canonicalize(const MathExpr& e);

/// parse_raw followed by canonicalize.
MathExpr parse_math(std::string_view src);

/// Builders that keep canonical inputs canonical.
MathExpr make_add(std::vector<MathExpr> terms);
MathExpr make_mul(std::vector<MathExpr> factors);
MathExpr make_pow(const MathExpr& base, const MathExpr& exponent);

/// Numeric value, or nullopt when the expression has free symbols (\pi is a
/// constant, not a free symbol) or evaluates to a non-finite value.
std::optional<double> evaluate(const MathExpr& e);

bool has_free_symbols(const MathExpr& e);

std::string to_string(const MathExpr& e);

}  // namespace stagerl::math
