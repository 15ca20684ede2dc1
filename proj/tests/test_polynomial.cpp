#include "serrinlab/errors.hpp"
#include "serrinlab/polynomial.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace serrinlab;

namespace {

Polynomial half_square(int n) {
  Polynomial p(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(std::size_t(n), 0);
    e[std::size_t(i)] = 2;
    p.add_term(e, mpq_class(1, 2));
  }
  return p;
}

long binomial(int n, int k) {
  if (k < 0 || n < k) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("polynomial algebra") {
  const Polynomial x = Polynomial::variable(2, 0);
  const Polynomial y = Polynomial::variable(2, 1);
  const Polynomial p = x * x * y + mpq_class(3, 2) * y - Polynomial::constant(2, 5);
  CHECK(p.degree() == 3);
  CHECK(p.num_terms() == 3);
  CHECK(p.coefficient({2, 1}) == 1);
  CHECK(p.derivative(0) == mpq_class(2) * x * y);
  CHECK(p.evaluate({mpq_class(2), mpq_class(1, 3)}) == mpq_class(4, 3) + mpq_class(1, 2) - 5);
  CHECK((p - p).is_zero());
  CHECK(laplacian(half_square(2), 2) == Polynomial::constant(2, 2));
  CHECK(laplacian(x * x * x, 2) == mpq_class(6) * x);
  const auto g = gradient(p, 2);
  CHECK(g.size() == 2);
  CHECK(g[1] == x * x + Polynomial::constant(2, mpq_class(3, 2)));
  CHECK(p.with_vars(3).num_vars() == 3);
  CHECK(p.with_vars(3).evaluate({mpq_class(2), mpq_class(1, 3), mpq_class(7)}) == p.evaluate({mpq_class(2), mpq_class(1, 3)}));
}

TEST_CASE("harmonic bases have the right dimension and are harmonic") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 2; n <= 5; ++n) {
    for (int k = 0; k <= 4; ++k) {
      const auto basis = harmonic_basis(n, k);
      const long dim = binomial(n + k - 1, n - 1) - binomial(n + k - 3, n - 1);
      CHECK(long(basis.size()) == dim);
      for (const auto& b : basis) {
        CHECK(laplacian(b, n).is_zero());
        CHECK(b.degree() == k);
      }
      // Linear independence from evaluations at random points.
      const int m = int(basis.size()) + 4;
      Eigen::MatrixXd A(m, basis.size());
      for (int i = 0; i < m; ++i) {
        std::vector<mpq_class> pt;
        for (int j = 0; j < n; ++j) pt.emplace_back(u(rng));
        for (std::size_t c = 0; c < basis.size(); ++c) A(i, Eigen::Index(c)) = basis[c].evaluate(pt).get_d();
      }
      CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(A).rank() == Eigen::Index(basis.size()));
    }
  }
}

TEST_CASE("random torsion polynomials") {
  for (auto [n, degree, seed] : {std::tuple{2, 2, 11}, std::tuple{3, 3, 7}, std::tuple{5, 2, 1}}) {
    const Polynomial p = random_torsion_polynomial(n, degree, std::uint64_t(seed));
    CHECK(laplacian(p, n) == Polynomial::constant(n, n));
    CHECK(p.degree() == std::max(degree, 2));
    CHECK(random_torsion_polynomial(n, degree, std::uint64_t(seed)) == p);
  }
  const Polynomial x = Polynomial::variable(2, 0);
  CHECK_THROWS_AS(require_torsion_polynomial(x * x * x, 2), Error);
  CHECK_NOTHROW(require_torsion_polynomial(half_square(2), 2));
}

TEST_CASE("differential identity on hand-built pairs") {
  const Polynomial x = Polynomial::variable(2, 0);
  const Polynomial y = Polynomial::variable(2, 1);
  const std::vector<std::vector<mpq_class>> pts = {{mpq_class(1, 3), mpq_class(-2, 5)}, {mpq_class(2), mpq_class(1)}};

  const Polynomial q = half_square(2);
  CHECK(check_differential_identity(q, q, mpq_class(3), pts).residual_is_zero);

  const Polynomial u = q + x * x - y * y;
  Polynomial v = half_square(2) - x - mpq_class(2) * y + Polynomial::constant(2, mpq_class(5, 2));  // |x - (1,2)|^2 / 2
  const DifferentialIdentityCheck c = check_differential_identity(u, v, mpq_class(10), pts);
  CHECK(c.residual_is_zero);
  CHECK(c.points.size() == pts.size());
  for (const auto& p : c.points) CHECK(p.residual == 0);
  CHECK(c.points[0].lhs != 0);
}

TEST_CASE("P-function identity") {
  const Polynomial q3 = half_square(3);
  CHECK(pfunction_laplacian(q3).is_zero());
  CHECK(check_pfunction_identity(q3).is_zero());
  CHECK(hessian_is_identity(q3));

  const Polynomial x = Polynomial::variable(2, 0);
  const Polynomial y = Polynomial::variable(2, 1);
  const Polynomial u = half_square(2) + x * y;
  // Hessian [[1, 1], [1, 1]]: |D2u|^2 - (lap u)^2 / 2 = 4 - 2.
  CHECK(pfunction_laplacian(u) == Polynomial::constant(2, 2));
  CHECK(check_pfunction_identity(u).is_zero());
  CHECK_FALSE(hessian_is_identity(u));
}

TEST_CASE("pointwise suite in low dimension") {
  for (int n : {2, 3}) {
    const auto cases = run_pointwise_suite(n, 4, 5, 100);
    CHECK(cases.size() == 5);
    for (const auto& c : cases) {
      CHECK(c.residual_is_zero);
      CHECK(c.pfunction_is_zero);
      CHECK(c.points_vanish);
      CHECK(c.delta_p_nonnegative);
      CHECK(c.residual_terms == 0);
    }
  }
}
