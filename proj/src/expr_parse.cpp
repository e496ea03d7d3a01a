#include <cctype>
#include <cstdlib>
#include <string>

#include "esgain/error.hpp"
#include "esgain/expr.hpp"

namespace esgain {

namespace {

// Recursive-descent parser. Builds nodes verbatim so that printing and
// re-parsing reproduces the same tree. The only folding is a minus sign
// applied to a constant, which becomes a negative constant
// (that is how negative constants print).
class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr parse() {
    Expr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    for (;;) {
      if (accept('+')) {
        terms.push_back(term());
      } else if (accept('-')) {
        terms.push_back(negated(term()));
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms.front() : Expr::sum(std::move(terms));
  }

  Expr term() {
    std::vector<Expr> factors{factor()};
    while (accept('*')) factors.push_back(factor());
    return factors.size() == 1 ? factors.front() : Expr::product(std::move(factors));
  }

  // factor := '-' factor | primary ('^' uint)*
  Expr factor() {
    if (accept('-')) return negated(factor());
    Expr base = primary();
    while (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected unsigned integer exponent");
      const unsigned long k = std::strtoul(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr, 10);
      if (k > 64) {
        pos_ = start;
        fail("exponent too large");
      }
      base = Expr::pow(std::move(base), static_cast<unsigned>(k));
    }
    return base;
  }

  static Expr negated(Expr e) {
    if (e.is_constant()) return Expr::constant(-e.value());
    return Expr::neg(std::move(e));
  }

  Expr number() {
    const char* begin = text_.data() + pos_;
    // Restrict to the characters a decimal literal can contain so strtod
    // never wanders past the token.
    std::size_t end = pos_;
    while (end < text_.size()) {
      const char c = text_[end];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        ++end;
      } else if ((c == 'e' || c == 'E') && end + 1 < text_.size() &&
                 (std::isdigit(static_cast<unsigned char>(text_[end + 1])) ||
                  ((text_[end + 1] == '+' || text_[end + 1] == '-') && end + 2 < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[end + 2]))))) {
        end += 2;
      } else {
        break;
      }
    }
    const std::string token(begin, end - pos_);
    char* stop = nullptr;
    const double v = std::strtod(token.c_str(), &stop);
    if (stop != token.c_str() + token.size()) fail("malformed number");
    pos_ = end;
    return Expr::constant(v);
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string id(text_.substr(start, pos_ - start));
      if (id == "sin" || id == "cos" || id == "exp") {
        expect('(');
        Expr arg = expr();
        expect(')');
        if (id == "sin") return Expr::sin(std::move(arg));
        if (id == "cos") return Expr::cos(std::move(arg));
        return Expr::exp(std::move(arg));
      }
      if (dim_ == 1 && id == "x") return Expr::variable(0);
      if (dim_ > 1 && id.size() >= 2 && id[0] == 'x' &&
          id.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int k = std::atoi(id.c_str() + 1);
        if (k >= 1 && k <= dim_) return Expr::variable(k - 1);
        pos_ = start;
        fail("variable " + id + " outside dimension " + std::to_string(dim_));
      }
      pos_ = start;
      if (dim_ == 1 && id.size() >= 2 && id[0] == 'x' &&
          id.find_first_not_of("0123456789", 1) == std::string::npos)
        fail("variable " + id + " used in a 1-D expression");
      fail("unknown identifier '" + id + "'");
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, int dim) {
  if (dim < 1 || dim > 9) throw InvalidArgument("expression dimension must be in 1..9");
  return Parser(text, dim).parse();
}

}  // namespace esgain
