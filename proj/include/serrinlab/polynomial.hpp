#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace serrinlab {

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Exponent vectors are packed 7 bits per variable into a 64-bit key, so at most
/// nine variables and exponents up to 127 are supported. Zero coefficients are never stored.
class Polynomial {
 public:
  using Key = std::uint64_t;
  static constexpr int kMaxVars = 9;
  static constexpr int kMaxExponent = 127;

  explicit Polynomial(int num_vars = 0);
  static Polynomial constant(int num_vars, const mpq_class& c);
  static Polynomial variable(int num_vars, int index);

  int num_vars() const { return num_vars_; }
  int degree() const;  // -1 for the zero polynomial
  bool is_zero() const { return terms_.empty(); }
  std::size_t num_terms() const { return terms_.size(); }
  const std::map<Key, mpq_class>& terms() const { return terms_; }

  void add_term(const std::vector<int>& exponents, const mpq_class& c);
  mpq_class coefficient(const std::vector<int>& exponents) const;
  std::vector<int> exponents(Key key) const;

  Polynomial derivative(int var) const;
  mpq_class evaluate(const std::vector<mpq_class>& point) const;
  /// Same polynomial viewed in more variables (the new ones appear with exponent 0).
  Polynomial with_vars(int num_vars) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(const mpq_class& c);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const mpq_class& c) { return a *= c; }
  friend Polynomial operator*(const mpq_class& c, Polynomial a) { return a *= c; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.num_vars_ == b.num_vars_ && a.terms_ == b.terms_;
  }

  std::string to_string() const;

 private:
  void add(Key key, const mpq_class& c);

  int num_vars_;
  std::map<Key, mpq_class> terms_;
};

/// Sum of the second derivatives in the first n variables.
Polynomial laplacian(const Polynomial& p, int n);
std::vector<Polynomial> gradient(const Polynomial& p, int n);

/// Basis of the homogeneous harmonic polynomials of degree k in n variables.
/// n = 2 uses the real and imaginary parts of (x + iy)^k; n >= 3 an exact rational
/// basis of the kernel of the Laplacian on degree-k monomials.
std::vector<Polynomial> harmonic_basis(int n, int k);

/// u = |x|^2 / 2 + p with p a random harmonic polynomial of exact degree `degree`.
/// Throws NotTorsionPolynomial if the symbolic Laplacian check fails.
Polynomial random_torsion_polynomial(int n, int degree, std::uint64_t seed);

/// Throws NotTorsionPolynomial unless lap p == n identically.
void require_torsion_polynomial(const Polynomial& p, int n);

struct PointResidual {
  std::vector<mpq_class> point;
  mpq_class lhs;
  mpq_class rhs;
  mpq_class residual;  // lhs - rhs
};

struct DifferentialIdentityCheck {
  Polynomial residual;  // in n + 1 variables, the last one standing for ubar
  bool residual_is_zero = false;
  std::vector<PointResidual> points;
  PointResidual worst;
};

/// (ubar-u) lap P + <(I - D2 v) Du, Du> against the divergence form, with
/// P = |Du|^2/2 + (ubar - u). The symbolic residual keeps ubar as a free variable; the
/// point evaluations substitute the given value.
DifferentialIdentityCheck check_differential_identity(const Polynomial& u, const Polynomial& v, const mpq_class& ubar,
                                                      const std::vector<std::vector<mpq_class>>& points);

/// lap P with P = |Du|^2/2 - u.
Polynomial pfunction_laplacian(const Polynomial& u);
/// lap P - (|D2 u|^2 - (lap u)^2 / n); the zero polynomial for torsion polynomials.
Polynomial check_pfunction_identity(const Polynomial& u);
/// True when D2 u is the identity matrix identically.
bool hessian_is_identity(const Polynomial& u);

struct PointwiseCase {
  int n = 0;
  int degree = 0;
  std::uint64_t seed = 0;
  bool residual_is_zero = false;
  bool pfunction_is_zero = false;
  bool points_vanish = false;
  bool delta_p_nonnegative = false;  // at the sample points
  std::size_t residual_terms = 0;
};

/// Random torsion pairs (u, v) with seeds seed0 + 2i and seed0 + 2i + 1, a random
/// rational ubar and five random rational sample points each.
std::vector<PointwiseCase> run_pointwise_suite(int n, int degree, int cases, std::uint64_t seed0);

}  // namespace serrinlab
