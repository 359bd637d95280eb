#include "stagerl/math_expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stagerl::math {

struct MathExpr::Node {
  NodeKind kind;
  Rational value;
  std::string name;
  std::vector<MathExpr> children;
};

namespace {

constexpr std::size_t kMaxExpandedTerms = 512;
constexpr int kMaxPowerExpansion = 8;
constexpr long kMaxIntegerExponent = 1024;
constexpr unsigned kMaxResultBits = 8192;
constexpr std::uint64_t kFactorLimit = 1'000'000'000'000ULL;

const std::vector<std::string_view> kFunctions = {"sin", "cos", "tan", "ln", "log", "exp"};

int rank(NodeKind k) {
  switch (k) {
    case NodeKind::integer:
    case NodeKind::rational:
    case NodeKind::decimal: return 0;
    case NodeKind::symbol: return 1;
    case NodeKind::function: return 2;
    case NodeKind::pow: return 3;
    case NodeKind::mul: return 4;
    case NodeKind::add: return 5;
    case NodeKind::neg: return 6;
  }
  return 7;
}

bool is_integer(const Rational& q) { return denominator(q) == 1; }

}  // namespace

MathExpr::MathExpr() : MathExpr(number(0)) {}

MathExpr::MathExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

MathExpr MathExpr::number(const Rational& q) {
  return MathExpr(std::make_shared<const Node>(
      Node{is_integer(q) ? NodeKind::integer : NodeKind::rational, q, {}, {}}));
}

MathExpr MathExpr::decimal(const Rational& q) {
  return MathExpr(std::make_shared<const Node>(Node{NodeKind::decimal, q, {}, {}}));
}

MathExpr MathExpr::symbol(std::string name) {
  return MathExpr(std::make_shared<const Node>(Node{NodeKind::symbol, 0, std::move(name), {}}));
}

MathExpr MathExpr::function(std::string name, std::vector<MathExpr> args) {
  return MathExpr(
      std::make_shared<const Node>(Node{NodeKind::function, 0, std::move(name), std::move(args)}));
}

MathExpr MathExpr::raw_add(std::vector<MathExpr> terms) {
  return MathExpr(std::make_shared<const Node>(Node{NodeKind::add, 0, {}, std::move(terms)}));
}

MathExpr MathExpr::raw_mul(std::vector<MathExpr> factors) {
  return MathExpr(std::make_shared<const Node>(Node{NodeKind::mul, 0, {}, std::move(factors)}));
}

MathExpr MathExpr::raw_pow(MathExpr base, MathExpr exponent) {
  return MathExpr(std::make_shared<const Node>(
      Node{NodeKind::pow, 0, {}, {std::move(base), std::move(exponent)}}));
}

MathExpr MathExpr::raw_neg(MathExpr operand) {
  return MathExpr(std::make_shared<const Node>(Node{NodeKind::neg, 0, {}, {std::move(operand)}}));
}

NodeKind MathExpr::kind() const { return node_->kind; }

bool MathExpr::is_number() const {
  return node_->kind == NodeKind::integer || node_->kind == NodeKind::rational ||
         node_->kind == NodeKind::decimal;
}

const Rational& MathExpr::value() const { return node_->value; }
const std::string& MathExpr::name() const { return node_->name; }
const std::vector<MathExpr>& MathExpr::children() const { return node_->children; }

std::strong_ordering compare(const MathExpr& a, const MathExpr& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = rank(a.kind()) <=> rank(b.kind()); c != 0) return c;
  if (a.is_number()) {
    if (a.value() < b.value()) return std::strong_ordering::less;
    if (b.value() < a.value()) return std::strong_ordering::greater;
    return static_cast<int>(a.kind()) <=> static_cast<int>(b.kind());
  }
  if (auto c = a.name() <=> b.name(); c != 0) return c;
  const auto& ac = a.children();
  const auto& bc = b.children();
  for (std::size_t i = 0; i < std::min(ac.size(), bc.size()); ++i) {
    if (auto c = compare(ac[i], bc[i]); c != 0) return c;
  }
  return ac.size() <=> bc.size();
}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class Tok {
  number, letter, command, lparen, rparen, lbrace, rbrace, lbracket, rbracket,
  plus, minus, star, slash, caret, end
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  while (i < s.size()) {
    char c = s[i];
    std::size_t start = i;
    if (std::isspace(static_cast<unsigned char>(c)) || c == '$' || c == '~') {
      ++i;
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i < s.size() && s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1])) {
        ++i;
        while (i < s.size() && is_digit(s[i])) ++i;
      }
      out.push_back({Tok::number, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (is_alpha(c)) {
      out.push_back({Tok::letter, std::string(1, c), start});
      ++i;
      continue;
    }
    if (c == '\\') {
      ++i;
      if (i < s.size() && !is_alpha(s[i])) {
        char e = s[i++];
        if (e == ',' || e == '!' || e == ';' || e == ':' || e == ' ') continue;
        throw MathParseError(std::string("unsupported escape \\") + e, start);
      }
      while (i < s.size() && is_alpha(s[i])) ++i;
      std::string name(s.substr(start + 1, i - start - 1));
      if (name.empty()) throw MathParseError("dangling backslash", start);
      if (name == "left" || name == "right" || name == "displaystyle" || name == "quad" ||
          name == "qquad") {
        continue;
      }
      if (name == "cdot" || name == "times") {
        out.push_back({Tok::star, "*", start});
      } else if (name == "div") {
        out.push_back({Tok::slash, "/", start});
      } else if (name == "frac" || name == "dfrac" || name == "tfrac") {
        out.push_back({Tok::command, "frac", start});
      } else if (name == "sqrt" || name == "pi" ||
                 std::find(kFunctions.begin(), kFunctions.end(), name) != kFunctions.end()) {
        out.push_back({Tok::command, name, start});
      } else {
        throw MathParseError("unsupported command \\" + name, start);
      }
      continue;
    }
    Tok k;
    switch (c) {
      case '(': k = Tok::lparen; break;
      case ')': k = Tok::rparen; break;
      case '{': k = Tok::lbrace; break;
      case '}': k = Tok::rbrace; break;
      case '[': k = Tok::lbracket; break;
      case ']': k = Tok::rbracket; break;
      case '+': k = Tok::plus; break;
      case '-': k = Tok::minus; break;
      case '*': k = Tok::star; break;
      case '/': k = Tok::slash; break;
      case '^': k = Tok::caret; break;
      default: throw MathParseError(std::string("unexpected character '") + c + "'", start);
    }
    out.push_back({k, std::string(1, c), start});
    ++i;
  }
  out.push_back({Tok::end, "", s.size()});
  return out;
}

// cpp_int treats a leading zero as an octal prefix.
Integer parse_digits(std::string digits) {
  auto nz = digits.find_first_not_of('0');
  digits = nz == std::string::npos ? "0" : digits.substr(nz);
  return Integer(digits);
}

Rational parse_decimal(const std::string& text) {
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(parse_digits(text));
  Integer num = parse_digits(text.substr(0, dot) + text.substr(dot + 1));
  Integer den = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(text.size() - dot - 1));
  return Rational(num, den);
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  MathExpr parse_all() {
    if (peek().kind == Tok::end) throw MathParseError("empty expression", 0);
    MathExpr e = parse_expr();
    if (peek().kind != Tok::end) throw MathParseError("unexpected '" + peek().text + "'", peek().pos);
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  Token take() { return toks_[i_++]; }

  void expect(Tok k, const char* what) {
    if (peek().kind != k) throw MathParseError(std::string("expected ") + what, peek().pos);
    ++i_;
  }

  MathExpr parse_expr() {
    std::vector<MathExpr> terms{parse_term()};
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      bool minus = take().kind == Tok::minus;
      MathExpr t = parse_term();
      terms.push_back(minus ? MathExpr::raw_neg(t) : t);
    }
    return terms.size() == 1 ? terms.front() : MathExpr::raw_add(std::move(terms));
  }

  bool starts_implicit_factor() const {
    switch (peek().kind) {
      case Tok::letter:
      case Tok::command:
      case Tok::lparen:
      case Tok::lbrace: return true;
      default: return false;
    }
  }

  MathExpr parse_term() {
    std::vector<MathExpr> factors{parse_unary()};
    for (;;) {
      if (peek().kind == Tok::star) {
        take();
        factors.push_back(parse_unary());
      } else if (peek().kind == Tok::slash) {
        take();
        factors.push_back(MathExpr::raw_pow(parse_unary(), MathExpr::number(-1)));
      } else if (starts_implicit_factor()) {
        factors.push_back(parse_power());
      } else {
        break;
      }
    }
    return factors.size() == 1 ? factors.front() : MathExpr::raw_mul(std::move(factors));
  }

  MathExpr parse_unary() {
    if (peek().kind == Tok::minus) {
      take();
      return MathExpr::raw_neg(parse_unary());
    }
    if (peek().kind == Tok::plus) {
      take();
      return parse_unary();
    }
    return parse_power();
  }

  MathExpr parse_power() {
    MathExpr base = parse_primary();
    if (peek().kind != Tok::caret) return base;
    take();
    return MathExpr::raw_pow(base, parse_script());
  }

  // Superscripts and \frac / \sqrt arguments follow TeX: an unbraced number
  // contributes a single digit.
  MathExpr parse_script() {
    if (peek().kind == Tok::minus) {
      take();
      return MathExpr::raw_neg(parse_script());
    }
    if (peek().kind == Tok::number) return single_digit();
    if (peek().kind == Tok::lbrace) {
      take();
      MathExpr e = parse_expr();
      expect(Tok::rbrace, "'}'");
      return e;
    }
    return parse_primary();
  }

  MathExpr parse_argument() {
    if (peek().kind == Tok::lbrace) {
      take();
      MathExpr e = parse_expr();
      expect(Tok::rbrace, "'}'");
      return e;
    }
    if (peek().kind == Tok::number) return single_digit();
    if (peek().kind == Tok::letter || peek().kind == Tok::command) return parse_primary();
    throw MathParseError("expected argument", peek().pos);
  }

  MathExpr single_digit() {
    Token& t = toks_[i_];
    if (t.text.size() == 1) {
      ++i_;
      return MathExpr::decimal(parse_decimal(t.text));
    }
    if (t.text[0] == '.') throw MathParseError("malformed script", t.pos);
    std::string first(1, t.text[0]);
    t.text.erase(0, 1);
    ++t.pos;
    return MathExpr::decimal(parse_decimal(first));
  }

  MathExpr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        Token n = take();
        return MathExpr::decimal(parse_decimal(n.text));
      }
      case Tok::letter: return MathExpr::symbol(take().text);
      case Tok::lparen: {
        take();
        MathExpr e = parse_expr();
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::lbrace: {
        take();
        MathExpr e = parse_expr();
        expect(Tok::rbrace, "'}'");
        return e;
      }
      case Tok::lbracket: {
        take();
        MathExpr e = parse_expr();
        expect(Tok::rbracket, "']'");
        return e;
      }
      case Tok::command: {
        Token c = take();
        if (c.text == "pi") return MathExpr::symbol("\\pi");
        if (c.text == "frac") {
          MathExpr num = parse_argument();
          MathExpr den = parse_argument();
          return MathExpr::raw_mul({num, MathExpr::raw_pow(den, MathExpr::number(-1))});
        }
        if (c.text == "sqrt") {
          MathExpr index = MathExpr::number(2);
          if (peek().kind == Tok::lbracket) {
            take();
            index = parse_expr();
            expect(Tok::rbracket, "']'");
          }
          MathExpr radicand = parse_argument();
          return MathExpr::raw_pow(radicand, MathExpr::raw_pow(index, MathExpr::number(-1)));
        }
        MathExpr arg = (peek().kind == Tok::lparen || peek().kind == Tok::lbrace) ? parse_primary()
                                                                                  : parse_power();
        return MathExpr::function(c.text, {arg});
      }
      case Tok::end: throw MathParseError("unexpected end of input", t.pos);
      default: throw MathParseError("unexpected '" + t.text + "'", t.pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace

MathExpr parse_raw(std::string_view src) {
  std::string_view s = src;
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '.')) {
    s.remove_suffix(1);
  }
  return Parser(lex(s)).parse_all();
}

// ---------------------------------------------------------------------------
// Canonical builders

namespace {

MathExpr one() { return MathExpr::number(1); }

MathExpr pow_node(const MathExpr& base, const MathExpr& exp) { return MathExpr::raw_pow(base, exp); }

// (coefficient, rest) for collecting like terms.
std::pair<Rational, MathExpr> split_coefficient(const MathExpr& term) {
  if (term.kind() == NodeKind::mul && term.children().front().is_number()) {
    const auto& ch = term.children();
    if (ch.size() == 2) return {ch[0].value(), ch[1]};
    return {ch[0].value(), MathExpr::raw_mul(std::vector<MathExpr>(ch.begin() + 1, ch.end()))};
  }
  return {Rational(1), term};
}

MathExpr with_coefficient(const Rational& c, const MathExpr& rest) {
  if (c == 1) return rest;
  std::vector<MathExpr> f{MathExpr::number(c)};
  if (rest.kind() == NodeKind::mul) {
    f.insert(f.end(), rest.children().begin(), rest.children().end());
  } else {
    f.push_back(rest);
  }
  return MathExpr::raw_mul(std::move(f));
}

// n = a^q * r with r free of q-th powers. Only attempted for small n.
std::pair<Integer, Integer> extract_root(const Integer& n, unsigned q) {
  if (n <= 1 || n > Integer(kFactorLimit)) return {Integer(1), n};
  std::uint64_t m = static_cast<std::uint64_t>(n);
  Integer a = 1, r = 1;
  auto absorb = [&](std::uint64_t p, unsigned cnt) {
    a *= boost::multiprecision::pow(Integer(p), cnt / q);
    r *= boost::multiprecision::pow(Integer(p), cnt % q);
  };
  for (std::uint64_t p = 2; p * p <= m; ++p) {
    unsigned cnt = 0;
    while (m % p == 0) {
      m /= p;
      ++cnt;
    }
    if (cnt) absorb(p, cnt);
  }
  if (m > 1) absorb(m, 1);
  return {a, r};
}

Rational rational_power(const Rational& b, long e) {
  if (e == 0) return 1;
  if (b == 0) {
    if (e < 0) throw MathError("division by zero");
    return 0;
  }
  if (std::labs(e) > kMaxIntegerExponent) throw MathError("exponent too large");
  auto bits = [](const Integer& x) -> std::size_t {
    return x == 0 ? 0 : boost::multiprecision::msb(abs(x)) + 1;
  };
  std::size_t est = std::max(bits(numerator(b)), bits(denominator(b))) * static_cast<std::size_t>(std::labs(e));
  if (est > kMaxResultBits) throw MathError("power too large");
  unsigned k = static_cast<unsigned>(std::labs(e));
  Rational r(boost::multiprecision::pow(numerator(b), k), boost::multiprecision::pow(denominator(b), k));
  return e < 0 ? Rational(1) / r : r;
}

Integer floor_div(const Integer& p, const Integer& q) {
  Integer d = p / q;
  if ((p % q != 0) && ((p < 0) != (q < 0))) --d;
  return d;
}

MathExpr numeric_power(const Rational& b, const Rational& e) {
  if (is_integer(e)) {
    if (abs(numerator(e)) > kMaxIntegerExponent) throw MathError("exponent too large");
    return MathExpr::number(rational_power(b, static_cast<long>(numerator(e))));
  }
  const Integer p = numerator(e);
  const Integer q = denominator(e);
  if (q > 64) return pow_node(MathExpr::number(b), MathExpr::number(e));
  if (b == 0) {
    if (e < 0) throw MathError("division by zero");
    return MathExpr::number(0);
  }
  if (b == 1) return MathExpr::number(1);
  if (b < 0) {
    if (q % 2 == 0) throw MathError("even root of a negative number");
    Rational sign = (p % 2 == 0) ? 1 : -1;
    return make_mul({MathExpr::number(sign), numeric_power(-b, e)});
  }
  const unsigned qu = static_cast<unsigned>(q);
  auto [an, rn] = extract_root(numerator(b), qu);
  auto [ad, rd] = extract_root(denominator(b), qu);
  Integer k = floor_div(p, q);
  Rational frac = e - Rational(k);
  if (abs(p) > kMaxIntegerExponent || abs(k) > kMaxIntegerExponent) throw MathError("exponent too large");
  const long pl = static_cast<long>(p);
  const long kl = static_cast<long>(k);

  // Already reduced: no perfect powers, integer radicand, exponent in (0,1).
  if (an == 1 && ad == 1 && rd == 1 && kl == 0) return pow_node(MathExpr::number(b), MathExpr::number(e));

  Rational coef = rational_power(Rational(an, ad), pl);
  coef *= rational_power(Rational(rn), kl);
  std::vector<MathExpr> factors;
  if (rn != 1) factors.push_back(pow_node(MathExpr::number(Rational(rn)), MathExpr::number(frac)));
  if (rd != 1) {
    coef *= rational_power(Rational(rd), -kl - 1);
    factors.push_back(pow_node(MathExpr::number(Rational(rd)), MathExpr::number(Rational(1) - frac)));
  }
  factors.insert(factors.begin(), MathExpr::number(coef));
  return make_mul(std::move(factors));
}

std::size_t term_count(const MathExpr& e) {
  return e.kind() == NodeKind::add ? e.children().size() : 1;
}

// coef * f1 * f2 * ... with every sum factor multiplied out.
MathExpr distribute(const Rational& coef, const std::vector<MathExpr>& factors) {
  std::vector<MathExpr> products{MathExpr::number(coef)};
  for (const auto& f : factors) {
    std::vector<MathExpr> next;
    if (f.kind() == NodeKind::add) {
      for (const auto& p : products) {
        for (const auto& t : f.children()) next.push_back(make_mul({p, t}));
      }
    } else {
      for (const auto& p : products) next.push_back(make_mul({p, f}));
    }
    products = std::move(next);
  }
  return make_add(std::move(products));
}

}  // namespace

MathExpr make_add(std::vector<MathExpr> terms) {
  std::vector<MathExpr> flat;
  for (auto& t : terms) {
    if (t.kind() == NodeKind::add) {
      flat.insert(flat.end(), t.children().begin(), t.children().end());
    } else {
      flat.push_back(std::move(t));
    }
  }
  Rational constant = 0;
  std::vector<std::pair<MathExpr, Rational>> groups;
  for (const auto& t : flat) {
    if (t.is_number()) {
      constant += t.value();
      continue;
    }
    auto [c, rest] = split_coefficient(t);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == rest; });
    if (it == groups.end()) {
      groups.emplace_back(rest, c);
    } else {
      it->second += c;
    }
  }
  std::vector<MathExpr> out;
  for (const auto& [rest, c] : groups) {
    if (c != 0) out.push_back(with_coefficient(c, rest));
  }
  if (constant != 0) out.push_back(MathExpr::number(constant));
  if (out.empty()) return MathExpr::number(0);
  if (out.size() == 1) return out.front();
  std::sort(out.begin(), out.end());
  return MathExpr::raw_add(std::move(out));
}

MathExpr make_mul(std::vector<MathExpr> factors) {
  std::vector<MathExpr> flat;
  for (auto& f : factors) {
    if (f.kind() == NodeKind::mul) {
      flat.insert(flat.end(), f.children().begin(), f.children().end());
    } else {
      flat.push_back(std::move(f));
    }
  }
  Rational coef = 1;
  std::vector<std::pair<MathExpr, std::vector<MathExpr>>> bases;
  for (const auto& f : flat) {
    if (f.is_number()) {
      coef *= f.value();
      continue;
    }
    MathExpr base = f.kind() == NodeKind::pow ? f.children()[0] : f;
    MathExpr exp = f.kind() == NodeKind::pow ? f.children()[1] : one();
    auto it = std::find_if(bases.begin(), bases.end(), [&](const auto& b) { return b.first == base; });
    if (it == bases.end()) {
      bases.push_back({base, {exp}});
    } else {
      it->second.push_back(exp);
    }
  }
  if (coef == 0) return MathExpr::number(0);

  std::vector<MathExpr> rest;
  bool needs_refold = false;
  for (auto& [base, exps] : bases) {
    MathExpr exp = exps.size() == 1 ? exps.front() : make_add(std::move(exps));
    MathExpr p = make_pow(base, exp);
    if (p.is_number()) {
      coef *= p.value();
    } else {
      if (p.kind() == NodeKind::mul) needs_refold = true;
      rest.push_back(p);
    }
  }
  if (coef == 0) return MathExpr::number(0);
  if (needs_refold) {
    rest.insert(rest.begin(), MathExpr::number(coef));
    return make_mul(std::move(rest));
  }

  // Distribute over sums when the expansion stays within budget.
  std::size_t expanded = 1;
  bool has_sum = false;
  for (const auto& f : rest) {
    if (f.kind() == NodeKind::add) {
      has_sum = true;
      expanded *= f.children().size();
      if (expanded > kMaxExpandedTerms) break;
    }
  }
  if (has_sum && expanded <= kMaxExpandedTerms) return distribute(coef, rest);

  std::sort(rest.begin(), rest.end());
  if (rest.empty()) return MathExpr::number(coef);
  if (coef == 1 && rest.size() == 1) return rest.front();
  if (coef != 1) rest.insert(rest.begin(), MathExpr::number(coef));
  return MathExpr::raw_mul(std::move(rest));
}

MathExpr make_pow(const MathExpr& base, const MathExpr& exponent) {
  if (exponent.is_number()) {
    const Rational& e = exponent.value();
    if (e == 0) {
      if (base.is_number() && base.value() == 0) throw MathError("0^0 is undefined");
      return one();
    }
    if (e == 1) return base;
    if (base.is_number()) return numeric_power(base.value(), e);
    if (base.kind() == NodeKind::pow && is_integer(e)) {
      return make_pow(base.children()[0], make_mul({base.children()[1], exponent}));
    }
    if (base.kind() == NodeKind::mul && is_integer(e)) {
      std::vector<MathExpr> f;
      for (const auto& c : base.children()) f.push_back(make_pow(c, exponent));
      return make_mul(std::move(f));
    }
    if (base.kind() == NodeKind::add && is_integer(e) && e > 1 && e <= kMaxPowerExpansion) {
      std::size_t n = static_cast<std::size_t>(numerator(e));
      double est = std::pow(static_cast<double>(term_count(base)), static_cast<double>(n));
      if (est <= static_cast<double>(kMaxExpandedTerms)) {
        return distribute(1, std::vector<MathExpr>(n, base));
      }
    }
    return pow_node(base, exponent);
  }
  if (base.is_number() && base.value() == 1) return one();
  return pow_node(base, exponent);
}

MathExpr canonicalize(const MathExpr& e) {
  switch (e.kind()) {
    case NodeKind::integer:
    case NodeKind::rational:
    case NodeKind::decimal: return MathExpr::number(e.value());
    case NodeKind::symbol: return e;
    case NodeKind::neg: return make_mul({MathExpr::number(-1), canonicalize(e.children()[0])});
    case NodeKind::add: {
      std::vector<MathExpr> t;
      for (const auto& c : e.children()) t.push_back(canonicalize(c));
      return make_add(std::move(t));
    }
    case NodeKind::mul: {
      std::vector<MathExpr> f;
      for (const auto& c : e.children()) f.push_back(canonicalize(c));
      return make_mul(std::move(f));
    }
    case NodeKind::pow: return make_pow(canonicalize(e.children()[0]), canonicalize(e.children()[1]));
    case NodeKind::function: {
      std::vector<MathExpr> args;
      for (const auto& c : e.children()) args.push_back(canonicalize(c));
      return MathExpr::function(e.name(), std::move(args));
    }
  }
  return e;
}

MathExpr parse_math(std::string_view src) { return canonicalize(parse_raw(src)); }

bool has_free_symbols(const MathExpr& e) {
  if (e.kind() == NodeKind::symbol) return e.name() != "\\pi";
  return std::any_of(e.children().begin(), e.children().end(),
                     [](const MathExpr& c) { return has_free_symbols(c); });
}

namespace {

std::optional<double> eval_rec(const MathExpr& e) {
  switch (e.kind()) {
    case NodeKind::integer:
    case NodeKind::rational:
    case NodeKind::decimal: return e.value().convert_to<double>();
    case NodeKind::symbol:
      if (e.name() == "\\pi") return std::numbers::pi;
      return std::nullopt;
    case NodeKind::neg: {
      auto v = eval_rec(e.children()[0]);
      return v ? std::optional<double>(-*v) : std::nullopt;
    }
    case NodeKind::add:
    case NodeKind::mul: {
      double acc = e.kind() == NodeKind::add ? 0.0 : 1.0;
      for (const auto& c : e.children()) {
        auto v = eval_rec(c);
        if (!v) return std::nullopt;
        acc = e.kind() == NodeKind::add ? acc + *v : acc * *v;
      }
      return acc;
    }
    case NodeKind::pow: {
      auto b = eval_rec(e.children()[0]);
      auto x = eval_rec(e.children()[1]);
      if (!b || !x) return std::nullopt;
      return std::pow(*b, *x);
    }
    case NodeKind::function: {
      auto a = eval_rec(e.children()[0]);
      if (!a) return std::nullopt;
      const auto& n = e.name();
      if (n == "sin") return std::sin(*a);
      if (n == "cos") return std::cos(*a);
      if (n == "tan") return std::tan(*a);
      if (n == "ln") return std::log(*a);
      if (n == "log") return std::log10(*a);
      if (n == "exp") return std::exp(*a);
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string rational_string(const Rational& q) {
  std::ostringstream os;
  os << numerator(q);
  if (denominator(q) != 1) os << '/' << denominator(q);
  return os.str();
}

void print(std::ostringstream& os, const MathExpr& e, int parent_prec) {
  auto wrap = [&](int prec, auto&& body) {
    bool paren = prec < parent_prec;
    if (paren) os << '(';
    body();
    if (paren) os << ')';
  };
  switch (e.kind()) {
    case NodeKind::integer:
    case NodeKind::rational:
    case NodeKind::decimal: {
      bool compound = e.value() < 0 || denominator(e.value()) != 1;
      if (compound && parent_prec > 1) {
        os << '(' << rational_string(e.value()) << ')';
      } else {
        os << rational_string(e.value());
      }
      return;
    }
    case NodeKind::symbol: os << e.name(); return;
    case NodeKind::function:
      os << e.name() << '(';
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) os << ", ";
        print(os, e.children()[i], 0);
      }
      os << ')';
      return;
    case NodeKind::neg:
      wrap(2, [&] {
        os << '-';
        print(os, e.children()[0], 3);
      });
      return;
    case NodeKind::add:
      wrap(1, [&] {
        for (std::size_t i = 0; i < e.children().size(); ++i) {
          if (i) os << " + ";
          print(os, e.children()[i], 1);
        }
      });
      return;
    case NodeKind::mul:
      wrap(2, [&] {
        for (std::size_t i = 0; i < e.children().size(); ++i) {
          if (i) os << '*';
          print(os, e.children()[i], 3);
        }
      });
      return;
    case NodeKind::pow:
      wrap(3, [&] {
        print(os, e.children()[0], 4);
        os << '^';
        print(os, e.children()[1], 4);
      });
      return;
  }
}

}  // namespace

std::optional<double> evaluate(const MathExpr& e) {
  auto v = eval_rec(e);
  if (v && !std::isfinite(*v)) return std::nullopt;
  return v;
}

std::string to_string(const MathExpr& e) {
  std::ostringstream os;
  print(os, e, 0);
  return os.str();
}

}  // namespace stagerl::math
