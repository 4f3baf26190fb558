#pragma once

// Arithmetic of the free *-algebra C<z_1,...,z_n> with a mix of hermitian and
// non-hermitian variables, plus evaluation at tuples of complex matrices.
//
// Letter convention: indices 0..n-1 are the variables z_i, indices n..2n-1 are
// the adjoints z_i^*.  For a hermitian variable the starred letter is collapsed
// onto the unstarred one, so it never appears in a normalized word.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmcert::freealg {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kCoeffZeroTol = 1e-12;  // term drop threshold after arithmetic
inline constexpr double kHermTol = 1e-10;       // matrix-tuple hermiticity validation

struct Signature {
  int nvars = 0;
  std::vector<bool> hermitian;     // per variable
  std::vector<std::string> names;  // per variable, defaults z1..zn

  static Signature make(int n, bool herm, std::vector<std::string> var_names = {}) {
    Signature s;
    s.nvars = n;
    s.hermitian.assign(static_cast<size_t>(n), herm);
    s.names = std::move(var_names);
    if (s.names.empty()) {
      for (int i = 0; i < n; ++i) s.names.push_back("z" + std::to_string(i + 1));
    }
    if (static_cast<int>(s.names.size()) != n) throw std::invalid_argument("signature: name count mismatch");
    return s;
  }

  bool operator==(const Signature& o) const {
    return nvars == o.nvars && hermitian == o.hermitian && names == o.names;
  }

  int var_of_letter(int l) const { return l < nvars ? l : l - nvars; }
  bool letter_starred(int l) const { return l >= nvars; }

  // Starred letters of hermitian variables are not part of the letter alphabet.
  bool letter_valid(int l) const {
    if (l < 0 || l >= 2 * nvars) return false;
    return l < nvars || !hermitian[static_cast<size_t>(l - nvars)];
  }

  // l -> letter of l^*; collapses stars on hermitian variables.
  int adjoint_letter(int l) const {
    int v = var_of_letter(l);
    if (hermitian[static_cast<size_t>(v)]) return v;
    return letter_starred(l) ? v : v + nvars;
  }

  // Canonical alphabet enumeration: z1 < z2 < ... < z1^* < z2^* < ...
  std::vector<int> letters() const {
    std::vector<int> out;
    for (int l = 0; l < 2 * nvars; ++l)
      if (letter_valid(l)) out.push_back(l);
    return out;
  }

  std::string letter_name(int l) const {
    std::string base = names[static_cast<size_t>(var_of_letter(l))];
    return letter_starred(l) ? base + "^*" : base;
  }
};

struct Word {
  std::vector<int> ls;  // letter indices; empty = 1

  int degree() const { return static_cast<int>(ls.size()); }

  // Graded lexicographic: shorter first, then letter-sequence lex.
  friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
    if (a.ls.size() != b.ls.size()) return a.ls.size() <=> b.ls.size();
    return std::lexicographical_compare_three_way(a.ls.begin(), a.ls.end(), b.ls.begin(), b.ls.end());
  }
  friend bool operator==(const Word& a, const Word& b) { return a.ls == b.ls; }

  Word adjoint(const Signature& sig) const {
    Word w;
    w.ls.reserve(ls.size());
    for (auto it = ls.rbegin(); it != ls.rend(); ++it) w.ls.push_back(sig.adjoint_letter(*it));
    return w;
  }

  Word concat(const Word& o) const {
    Word w = *this;
    w.ls.insert(w.ls.end(), o.ls.begin(), o.ls.end());
    return w;
  }

  bool is_selfadjoint(const Signature& sig) const { return *this == adjoint(sig); }
};

struct MatrixTuple {
  int dim = 0;
  std::vector<Matrix> mats;  // one per variable

  static MatrixTuple identity(const Signature& sig, int s) {
    MatrixTuple x;
    x.dim = s;
    x.mats.assign(static_cast<size_t>(sig.nvars), Matrix::Identity(s, s));
    return x;
  }

  // dims consistent; hermitian variables carry hermitian matrices (tolerance kHermTol).
  void validate(const Signature& sig) const {
    if (static_cast<int>(mats.size()) != sig.nvars) throw std::invalid_argument("tuple: variable count mismatch");
    for (int v = 0; v < sig.nvars; ++v) {
      const Matrix& m = mats[static_cast<size_t>(v)];
      if (m.rows() != dim || m.cols() != dim) throw std::invalid_argument("tuple: dimension mismatch at " + sig.names[static_cast<size_t>(v)]);
      if (sig.hermitian[static_cast<size_t>(v)]) {
        double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
        if (dev > kHermTol * (1.0 + m.cwiseAbs().maxCoeff()))
          throw std::invalid_argument("tuple: non-hermitian matrix for hermitian variable " + sig.names[static_cast<size_t>(v)]);
      }
    }
  }
};

class FreePoly {
 public:
  Signature sig;
  std::map<Word, Complex> terms;  // graded-lex keyed, no stored zeros

  FreePoly() = default;
  explicit FreePoly(Signature s) : sig(std::move(s)) {}

  static FreePoly zero(const Signature& s) { return FreePoly(s); }

  static FreePoly constant(const Signature& s, Complex c) {
    FreePoly p(s);
    if (std::abs(c) > kCoeffZeroTol) p.terms[Word{}] = c;
    return p;
  }

  static FreePoly one(const Signature& s) { return constant(s, 1.0); }

  static FreePoly variable(const Signature& s, int v, bool starred = false) {
    if (v < 0 || v >= s.nvars) throw std::invalid_argument("variable index out of range");
    int l = starred ? s.adjoint_letter(v) : v;
    FreePoly p(s);
    p.terms[Word{{l}}] = 1.0;
    return p;
  }

  static FreePoly monomial(const Signature& s, Word w, Complex c = 1.0) {
    FreePoly p(s);
    if (std::abs(c) > kCoeffZeroTol) p.terms[std::move(w)] = c;
    return p;
  }

  bool is_zero() const { return terms.empty(); }

  int degree() const { return terms.empty() ? 0 : terms.rbegin()->first.degree(); }

  Complex coeff(const Word& w) const {
    auto it = terms.find(w);
    return it == terms.end() ? Complex(0.0) : it->second;
  }

  double coeff_norm1() const {
    double s = 0;
    for (auto& [w, c] : terms) s += std::abs(c);
    return s;
  }

  FreePoly& normalize() {
    for (auto it = terms.begin(); it != terms.end();) {
      if (std::abs(it->second) <= kCoeffZeroTol)
        it = terms.erase(it);
      else
        ++it;
    }
    return *this;
  }

  FreePoly& operator+=(const FreePoly& o) {
    check_sig(o);
    for (auto& [w, c] : o.terms) terms[w] += c;
    return normalize();
  }
  FreePoly& operator-=(const FreePoly& o) {
    check_sig(o);
    for (auto& [w, c] : o.terms) terms[w] -= c;
    return normalize();
  }
  FreePoly& operator*=(Complex c) {
    for (auto& [w, v] : terms) v *= c;
    return normalize();
  }

  friend FreePoly operator+(FreePoly a, const FreePoly& b) { return a += b; }
  friend FreePoly operator-(FreePoly a, const FreePoly& b) { return a -= b; }
  friend FreePoly operator*(FreePoly a, Complex c) { return a *= c; }
  friend FreePoly operator*(Complex c, FreePoly a) { return a *= c; }

  friend FreePoly operator*(const FreePoly& a, const FreePoly& b) {
    a.check_sig(b);
    FreePoly out(a.sig);
    for (auto& [wa, ca] : a.terms)
      for (auto& [wb, cb] : b.terms) out.terms[wa.concat(wb)] += ca * cb;
    return out.normalize();
  }

  // Reverses words, stars letters, conjugates coefficients.
  FreePoly adjoint() const {
    FreePoly out(sig);
    for (auto& [w, c] : terms) out.terms[w.adjoint(sig)] += std::conj(c);
    return out.normalize();
  }

  bool is_hermitian(double tol = 1e-9) const {
    FreePoly d = *this - adjoint();
    for (auto& [w, c] : d.terms)
      if (std::abs(c) > tol) return false;
    return true;
  }

  // Unital *-homomorphism on words: products of the tuple's matrices.
  Matrix evaluate(const MatrixTuple& x) const {
    if (static_cast<int>(x.mats.size()) != sig.nvars) throw std::invalid_argument("evaluate: tuple arity mismatch");
    const int s = x.dim;
    Matrix acc = Matrix::Zero(s, s);
    for (auto& [w, c] : terms) {
      Matrix m = Matrix::Identity(s, s);
      for (int l : w.ls) {
        const Matrix& base = x.mats[static_cast<size_t>(sig.var_of_letter(l))];
        if (sig.letter_starred(l))
          m = m * base.adjoint();
        else
          m = m * base;
      }
      acc += c * m;
    }
    return acc;
  }

  std::string str() const;

 private:
  void check_sig(const FreePoly& o) const {
    if (!(sig == o.sig)) throw std::invalid_argument("signature mismatch");
  }
};

// All words of degree <= d in graded-lex order; count = sum_{k<=d} m^k over the
// m-letter alphabet.
inline std::vector<Word> monomial_basis(const Signature& sig, int d) {
  if (d < 0) throw std::invalid_argument("monomial_basis: negative degree");
  std::vector<Word> out{Word{}};
  std::vector<Word> level{Word{}};
  const std::vector<int> alphabet = sig.letters();
  for (int k = 1; k <= d; ++k) {
    std::vector<Word> next;
    next.reserve(level.size() * alphabet.size());
    for (const Word& w : level)
      for (int l : alphabet) {
        Word e = w;
        e.ls.push_back(l);
        next.push_back(std::move(e));
      }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

// ---------- printing ----------

namespace detail {

// Shortest decimal representation that round-trips through double.
inline std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_complex(Complex c) {
  double re = c.real(), im = c.imag();
  if (im == 0.0) return fmt_double(re);
  if (re == 0.0) return fmt_double(im) + "i";
  std::string s = "(" + fmt_double(re);
  s += (im < 0 ? "-" : "+");
  s += fmt_double(std::abs(im)) + "i)";
  return s;
}

}  // namespace detail

inline std::string FreePoly::str() const {
  if (terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& [w, c] : terms) {
    Complex cc = c;
    // Pull the sign out of real and pure-imaginary coefficients so the printed
    // term always starts with a bare number (the parser has no unary minus
    // inside terms; mixed-sign complex coefficients stay parenthesized).
    bool neg = (cc.imag() == 0.0 && cc.real() < 0) || (cc.real() == 0.0 && cc.imag() < 0);
    if (first) {
      if (neg) {
        os << "-";
        cc = -cc;
      }
    } else {
      if (neg) {
        os << " - ";
        cc = -cc;
      } else {
        os << " + ";
      }
    }
    first = false;
    bool unit_coeff = (cc == Complex(1.0) && !w.ls.empty());
    if (!unit_coeff) os << detail::fmt_complex(cc);
    if (!w.ls.empty()) {
      if (!unit_coeff) os << "*";
      for (size_t i = 0; i < w.ls.size(); ++i) {
        if (i) os << "*";
        os << sig.letter_name(w.ls[i]);
      }
    }
  }
  return os.str();
}

// ---------- parsing ----------
//
// Grammar (terms joined by +/-):
//   term    := factor ('*' factor)*
//   factor  := number | number 'i' | 'i' | '(' csum ')' | var ('^' ('*' | int))*
//   csum    := signed number [('+'|'-') (number)? 'i']
// Variables are the signature names; '^*' stars a letter, '^k' repeats it.

namespace detail {

class PolyParser {
 public:
  PolyParser(std::string text, const Signature& sig) : text_(std::move(text)), sig_(sig) {}

  FreePoly run() {
    FreePoly acc(sig_);
    skip_ws();
    bool negate = consume_sign();
    acc += parse_term() * Complex(negate ? -1.0 : 1.0);
    skip_ws();
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c != '+' && c != '-') fail("expected '+' or '-'");
      ++pos_;
      skip_ws();
      acc += parse_term() * Complex(c == '-' ? -1.0 : 1.0);
      skip_ws();
    }
    return acc.normalize();
  }

 private:
  std::string text_;
  const Signature& sig_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("polynomial parse error at position " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume_sign() {
    bool neg = false;
    while (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      if (text_[pos_] == '-') neg = !neg;
      ++pos_;
      skip_ws();
    }
    return neg;
  }

  bool peek_number() const {
    if (pos_ >= text_.size()) return false;
    char c = text_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  double parse_number() {
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' belonged to something else
      }
    }
    if (pos_ == start) fail("expected number");
    double v = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc()) fail("bad number literal");
    return v;
  }

  std::string parse_ident() {
    size_t start = pos_;
    if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      fail("expected identifier");
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  // Parenthesized complex literal: (a), (a+bi), (a-bi), (bi), (a+i), ...
  Complex parse_paren_complex() {
    ++pos_;  // '('
    skip_ws();
    bool neg = consume_sign();
    double first = 0;
    bool first_imag = false;
    if (pos_ < text_.size() && text_[pos_] == 'i' && !peek_number()) {
      first = 1;
      first_imag = true;
      ++pos_;
    } else {
      first = parse_number();
      if (pos_ < text_.size() && text_[pos_] == 'i') {
        first_imag = true;
        ++pos_;
      }
    }
    if (neg) first = -first;
    Complex acc = first_imag ? Complex(0, first) : Complex(first, 0);
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      bool neg2 = consume_sign();
      skip_ws();
      double second = 1;
      if (peek_number()) second = parse_number();
      if (pos_ >= text_.size() || text_[pos_] != 'i') fail("expected 'i' in complex literal");
      ++pos_;
      if (neg2) second = -second;
      acc += Complex(0, second);
    }
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
    ++pos_;
    return acc;
  }

  int letter_for(const std::string& name) const {
    for (int v = 0; v < sig_.nvars; ++v)
      if (sig_.names[static_cast<size_t>(v)] == name) return v;
    return -1;
  }

  FreePoly parse_term() {
    FreePoly acc = FreePoly::one(sig_);
    bool expect_factor = true;
    while (expect_factor) {
      skip_ws();
      if (pos_ >= text_.size()) fail("unexpected end of input");
      char c = text_[pos_];
      if (c == '(') {
        acc *= parse_paren_complex();
      } else if (peek_number()) {
        double v = parse_number();
        if (pos_ < text_.size() && text_[pos_] == 'i') {
          ++pos_;
          acc *= Complex(0, v);
        } else {
          acc *= Complex(v, 0);
        }
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string name = parse_ident();
        if (name == "i" && letter_for("i") < 0) {
          acc *= Complex(0, 1);
        } else {
          int v = letter_for(name);
          if (v < 0) fail("unknown variable '" + name + "'");
          int letter = v;
          int power = 1;
          while (pos_ < text_.size() && text_[pos_] == '^') {
            ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '*') {
              ++pos_;
              letter = sig_.adjoint_letter(letter);
            } else if (peek_number()) {
              double pw = parse_number();
              if (pw != std::floor(pw) || pw < 0) fail("expected nonnegative integer power");
              power *= static_cast<int>(pw);
            } else {
              fail("expected '*' or integer after '^'");
            }
          }
          Word w;
          w.ls.assign(static_cast<size_t>(power), letter);
          acc = acc * FreePoly::monomial(sig_, w);
        }
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '*' &&
          !(pos_ + 1 < text_.size() && text_[pos_ + 1] == '*')) {
        ++pos_;
        expect_factor = true;
      } else {
        expect_factor = false;
      }
    }
    return acc;
  }
};

}  // namespace detail

inline FreePoly parse_poly(const std::string& text, const Signature& sig) {
  return detail::PolyParser(text, sig).run();
}

}  // namespace qmcert::freealg
