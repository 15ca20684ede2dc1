#include "serrinlab/polynomial.hpp"

#include "serrinlab/errors.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace serrinlab {

namespace {

constexpr int kBits = 7;
constexpr Polynomial::Key kMask = (Polynomial::Key{1} << kBits) - 1;

int exponent_of(Polynomial::Key key, int var) { return int((key >> (kBits * var)) & kMask); }
Polynomial::Key unit_key(int var) { return Polynomial::Key{1} << (kBits * var); }

int key_degree(Polynomial::Key key, int num_vars) {
  int d = 0;
  for (int v = 0; v < num_vars; ++v) d += exponent_of(key, v);
  return d;
}

// All exponent vectors of total degree k in n variables, in lexicographic order.
void monomials_of_degree(int n, int k, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  const int var = int(current.size());
  if (var == n - 1) {
    current.push_back(k);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int e = k; e >= 0; --e) {
    current.push_back(e);
    monomials_of_degree(n, k - e, current, out);
    current.pop_back();
  }
}

std::vector<std::vector<int>> monomials_of_degree(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  monomials_of_degree(n, k, current, out);
  return out;
}

mpq_class binomial(int n, int k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), unsigned(n), unsigned(k));
  return mpq_class(r);
}

// Exact rational nullspace by reduced row echelon form.
std::vector<std::vector<mpq_class>> nullspace(std::vector<std::vector<mpq_class>> a, std::size_t cols) {
  std::vector<int> pivot_col;
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < a.size(); ++c) {
    std::size_t p = row;
    while (p < a.size() && a[p][c] == 0) ++p;
    if (p == a.size()) continue;
    std::swap(a[p], a[row]);
    const mpq_class inv = 1 / a[row][c];
    for (auto& x : a[row]) x *= inv;
    for (std::size_t r = 0; r < a.size(); ++r) {
      if (r == row || a[r][c] == 0) continue;
      const mpq_class f = a[r][c];
      for (std::size_t j = 0; j < cols; ++j) a[r][j] -= f * a[row][j];
    }
    pivot_col.push_back(int(c));
    ++row;
  }
  std::vector<char> is_pivot(cols, 0);
  for (int c : pivot_col) is_pivot[c] = 1;
  std::vector<std::vector<mpq_class>> basis;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<mpq_class> vec(cols, 0);
    vec[f] = 1;
    for (std::size_t r = 0; r < pivot_col.size(); ++r) vec[pivot_col[r]] = -a[r][f];
    basis.push_back(std::move(vec));
  }
  return basis;
}

mpq_class random_rational(std::mt19937_64& rng, int half_range, int max_den) {
  const long num = long(rng() % std::uint64_t(2 * half_range + 1)) - half_range;
  const long den = 1 + long(rng() % std::uint64_t(max_den));
  mpq_class q(num, den);
  q.canonicalize();
  return q;
}

Polynomial half_square_norm(int num_vars, int n) {
  Polynomial p(num_vars);
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(num_vars, 0);
    e[i] = 2;
    p.add_term(e, mpq_class(1, 2));
  }
  return p;
}

Polynomial dot(const std::vector<Polynomial>& a, const std::vector<Polynomial>& b) {
  Polynomial s(a.front().num_vars());
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Polynomial hessian_square_norm(const Polynomial& u, int n) {
  Polynomial s(u.num_vars());
  const auto g = gradient(u, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Polynomial hij = g[i].derivative(j);
      s += hij * hij;
    }
  }
  return s;
}

}  // namespace

Polynomial::Polynomial(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0 || num_vars > kMaxVars) {
    throw Error(ErrorCode::InvalidArgument, "polynomials support at most 9 variables");
  }
}

Polynomial Polynomial::constant(int num_vars, const mpq_class& c) {
  Polynomial p(num_vars);
  p.add(0, c);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int index) {
  Polynomial p(num_vars);
  p.add(unit_key(index), 1);
  return p;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& kv : terms_) d = std::max(d, key_degree(kv.first, num_vars_));
  return d;
}

void Polynomial::add(Key key, const mpq_class& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(key, c);
  if (inserted) return;
  it->second += c;
  if (it->second == 0) terms_.erase(it);
}

void Polynomial::add_term(const std::vector<int>& exponents, const mpq_class& c) {
  if (int(exponents.size()) != num_vars_) throw Error(ErrorCode::InvalidArgument, "exponent vector size mismatch");
  Key key = 0;
  for (int v = 0; v < num_vars_; ++v) {
    if (exponents[v] < 0 || exponents[v] > kMaxExponent) throw Error(ErrorCode::InvalidArgument, "exponent out of range");
    key |= Key(exponents[v]) << (kBits * v);
  }
  add(key, c);
}

mpq_class Polynomial::coefficient(const std::vector<int>& e) const {
  Polynomial probe(num_vars_);
  probe.add_term(e, 1);
  const auto it = terms_.find(probe.terms_.begin()->first);
  return it == terms_.end() ? mpq_class(0) : it->second;
}

std::vector<int> Polynomial::exponents(Key key) const {
  std::vector<int> e(num_vars_);
  for (int v = 0; v < num_vars_; ++v) e[v] = exponent_of(key, v);
  return e;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial d(num_vars_);
  for (const auto& [key, c] : terms_) {
    const int e = exponent_of(key, var);
    if (e == 0) continue;
    d.terms_.emplace_hint(d.terms_.end(), key - unit_key(var), c * e);
  }
  return d;
}

mpq_class Polynomial::evaluate(const std::vector<mpq_class>& point) const {
  if (int(point.size()) != num_vars_) throw Error(ErrorCode::InvalidArgument, "point dimension mismatch");
  mpq_class sum = 0;
  for (const auto& [key, c] : terms_) {
    mpq_class t = c;
    for (int v = 0; v < num_vars_; ++v) {
      for (int k = exponent_of(key, v); k > 0; --k) t *= point[v];
    }
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::with_vars(int num_vars) const {
  if (num_vars < num_vars_) throw Error(ErrorCode::InvalidArgument, "cannot drop variables");
  Polynomial p(num_vars);
  p.terms_ = terms_;
  return p;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.num_vars_ != num_vars_) throw Error(ErrorCode::InvalidArgument, "variable count mismatch");
  for (const auto& [key, c] : o.terms_) add(key, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (o.num_vars_ != num_vars_) throw Error(ErrorCode::InvalidArgument, "variable count mismatch");
  for (const auto& [key, c] : o.terms_) add(key, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(const mpq_class& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& kv : terms_) kv.second *= c;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars_ != b.num_vars_) throw Error(ErrorCode::InvalidArgument, "variable count mismatch");
  if (a.degree() + b.degree() > Polynomial::kMaxExponent) throw Error(ErrorCode::InvalidArgument, "degree overflow");
  Polynomial p(a.num_vars_);
  mpq_class t;
  for (const auto& [ka, ca] : a.terms_) {
    for (const auto& [kb, cb] : b.terms_) {
      t = ca * cb;
      p.add(ka + kb, t);
    }
  }
  return p;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [key, c] : terms_) {
    if (!first) out << (c < 0 ? " - " : " + ");
    else if (c < 0) out << "-";
    first = false;
    const mpq_class a = abs(c);
    bool monomial = false;
    std::ostringstream m;
    for (int v = 0; v < num_vars_; ++v) {
      const int e = exponent_of(key, v);
      if (e == 0) continue;
      m << (monomial ? "*" : "") << "x" << v;
      if (e > 1) m << "^" << e;
      monomial = true;
    }
    if (!monomial) out << a.get_str();
    else if (a == 1) out << m.str();
    else out << a.get_str() << "*" << m.str();
  }
  return out.str();
}

std::vector<Polynomial> gradient(const Polynomial& p, int n) {
  std::vector<Polynomial> g;
  g.reserve(n);
  for (int i = 0; i < n; ++i) g.push_back(p.derivative(i));
  return g;
}

Polynomial laplacian(const Polynomial& p, int n) {
  Polynomial s(p.num_vars());
  for (int i = 0; i < n; ++i) s += p.derivative(i).derivative(i);
  return s;
}

std::vector<Polynomial> harmonic_basis(int n, int k) {
  if (n < 2 || k < 0) throw Error(ErrorCode::InvalidArgument, "harmonic basis needs n >= 2 and k >= 0");
  std::vector<Polynomial> basis;
  if (n == 2) {
    Polynomial re(2), im(2);
    for (int j = 0; j <= k; ++j) {
      const mpq_class sign = (j / 2) % 2 == 0 ? 1 : -1;
      const mpq_class c = sign * binomial(k, j);
      (j % 2 == 0 ? re : im).add_term({k - j, j}, c);
    }
    basis.push_back(re);
    if (!im.is_zero()) basis.push_back(im);
    return basis;
  }
  const auto cols = monomials_of_degree(n, k);
  if (k < 2) {
    for (const auto& e : cols) {
      Polynomial p(n);
      p.add_term(e, 1);
      basis.push_back(p);
    }
    return basis;
  }
  const auto rows = monomials_of_degree(n, k - 2);
  std::map<std::vector<int>, std::size_t> row_of;
  for (std::size_t r = 0; r < rows.size(); ++r) row_of[rows[r]] = r;
  std::vector<std::vector<mpq_class>> a(rows.size(), std::vector<mpq_class>(cols.size(), 0));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (int i = 0; i < n; ++i) {
      if (cols[c][i] < 2) continue;
      auto e = cols[c];
      e[i] -= 2;
      a[row_of.at(e)][c] += cols[c][i] * (cols[c][i] - 1);
    }
  }
  for (const auto& vec : nullspace(std::move(a), cols.size())) {
    Polynomial p(n);
    for (std::size_t c = 0; c < cols.size(); ++c) p.add_term(cols[c], vec[c]);
    basis.push_back(p);
  }
  return basis;
}

void require_torsion_polynomial(const Polynomial& p, int n) {
  if (!(laplacian(p, n) == Polynomial::constant(p.num_vars(), n))) {
    throw Error(ErrorCode::NotTorsionPolynomial, "Laplacian is not the constant " + std::to_string(n));
  }
}

Polynomial random_torsion_polynomial(int n, int degree, std::uint64_t seed) {
  if (n < 2 || degree < 2) throw Error(ErrorCode::InvalidArgument, "need n >= 2 and degree >= 2");
  std::mt19937_64 rng(seed);
  Polynomial u = half_square_norm(n, n);
  for (int k = 0; k <= degree; ++k) {
    const auto basis = harmonic_basis(n, k);
    Polynomial layer(n);
    for (const auto& b : basis) layer += b * random_rational(rng, 3, 3);
    if (k == degree && layer.is_zero()) layer = basis.front();
    u += layer;
  }
  require_torsion_polynomial(u, n);
  return u;
}

DifferentialIdentityCheck check_differential_identity(const Polynomial& u, const Polynomial& v, const mpq_class& ubar,
                                                      const std::vector<std::vector<mpq_class>>& points) {
  const int n = u.num_vars();
  if (v.num_vars() != n) throw Error(ErrorCode::InvalidArgument, "u and v have different dimensions");
  require_torsion_polynomial(u, n);
  require_torsion_polynomial(v, n);
  const int m = n + 1;
  const Polynomial U = u.with_vars(m);
  const Polynomial V = v.with_vars(m);
  const Polynomial gap = Polynomial::variable(m, n) - U;
  const auto g = gradient(U, n);
  const auto gv = gradient(V, n);
  const Polynomial grad_sq = dot(g, g);
  const Polynomial P = grad_sq * mpq_class(1, 2) + gap;
  const auto gP = gradient(P, n);

  Polynomial lhs = gap * laplacian(P, n);
  for (int i = 0; i < n; ++i) {
    Polynomial row = g[i];
    for (int j = 0; j < n; ++j) row -= gv[i].derivative(j) * g[j];
    lhs += row * g[i];
  }

  const Polynomial cross = dot(gv, g);
  Polynomial rhs(m);
  for (int i = 0; i < n; ++i) {
    Polynomial flux = P * g[i] + gap * gP[i] + grad_sq * gv[i] * mpq_class(1, 2) - cross * g[i];
    flux += gap * (g[i] * mpq_class(n - 1) - gv[i] * mpq_class(n));
    rhs += flux.derivative(i);
  }

  DifferentialIdentityCheck out;
  out.residual = lhs - rhs;
  out.residual_is_zero = out.residual.is_zero();
  for (const auto& x : points) {
    if (int(x.size()) != n) throw Error(ErrorCode::InvalidArgument, "sample point dimension mismatch");
    std::vector<mpq_class> xb = x;
    xb.push_back(ubar);
    PointResidual r{x, lhs.evaluate(xb), rhs.evaluate(xb), 0};
    r.residual = r.lhs - r.rhs;
    if (out.points.empty() || abs(r.residual) > abs(out.worst.residual)) out.worst = r;
    out.points.push_back(std::move(r));
  }
  return out;
}

Polynomial pfunction_laplacian(const Polynomial& u) {
  const int n = u.num_vars();
  const auto g = gradient(u, n);
  const Polynomial P = dot(g, g) * mpq_class(1, 2) - u;
  return laplacian(P, n);
}

Polynomial check_pfunction_identity(const Polynomial& u) {
  const int n = u.num_vars();
  require_torsion_polynomial(u, n);
  const Polynomial lap = laplacian(u, n);
  return pfunction_laplacian(u) - (hessian_square_norm(u, n) - lap * lap * mpq_class(1, n));
}

bool hessian_is_identity(const Polynomial& u) {
  const int n = u.num_vars();
  const auto g = gradient(u, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!(g[i].derivative(j) == Polynomial::constant(n, i == j ? 1 : 0))) return false;
    }
  }
  return true;
}

std::vector<PointwiseCase> run_pointwise_suite(int n, int degree, int cases, std::uint64_t seed0) {
  std::vector<PointwiseCase> out;
  for (int i = 0; i < cases; ++i) {
    PointwiseCase c;
    c.n = n;
    c.degree = degree;
    c.seed = seed0 + 2 * std::uint64_t(i);
    const Polynomial u = random_torsion_polynomial(n, degree, c.seed);
    const Polynomial v = random_torsion_polynomial(n, degree, c.seed + 1);
    std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
    const mpq_class ubar = random_rational(rng, 10, 3);
    std::vector<std::vector<mpq_class>> points(5, std::vector<mpq_class>(n));
    for (auto& x : points) {
      for (auto& xi : x) xi = random_rational(rng, 5, 4);
    }
    const auto check = check_differential_identity(u, v, ubar, points);
    c.residual_is_zero = check.residual_is_zero;
    c.residual_terms = check.residual.num_terms();
    c.points_vanish = check.worst.residual == 0;
    c.pfunction_is_zero = check_pfunction_identity(u).is_zero();
    const Polynomial dp = pfunction_laplacian(u);
    c.delta_p_nonnegative = std::all_of(points.begin(), points.end(), [&](const auto& x) { return dp.evaluate(x) >= 0; });
    out.push_back(c);
  }
  return out;
}

}  // namespace serrinlab
