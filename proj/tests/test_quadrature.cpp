#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "afem/quadrature.hpp"

using namespace afem;

namespace {

// Exact reference-triangle integral of x^m y^n, computed as
// 1 / (C(m+n, m) * (m+n+1) * (m+n+2)); all factors are integers small
// enough to be exact in double.
double monomial_integral(int m, int n) {
  double binom = 1.0;
  for (int k = 1; k <= m; ++k) binom = binom * (n + k) / k;
  return 1.0 / (binom * (m + n + 1) * (m + n + 2));
}

double integrate_monomial(const QuadRule& rule, int m, int n) {
  double s = 0.0;
  for (const QuadPoint& q : rule.points) s += q.w * std::pow(q.l1, m) * std::pow(q.l2, n);
  return s;
}

}  // namespace

TEST_CASE("triangle rules: weights, point locations, exactness") {
  for (int deg = 0; deg <= kMaxQuadDegree; ++deg) {
    const QuadRule& rule = quadrature_rule(deg);
    CHECK(rule.degree >= deg);

    double wsum = 0.0;
    for (const QuadPoint& q : rule.points) {
      CHECK(q.w > 0.0);
      CHECK(q.l0 >= 0.0);
      CHECK(q.l1 >= 0.0);
      CHECK(q.l2 >= 0.0);
      CHECK(q.l0 + q.l1 + q.l2 == doctest::Approx(1.0).epsilon(1e-14));
      wsum += q.w;
    }
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));

    for (int m = 0; m <= deg; ++m)
      for (int n = 0; n + m <= deg; ++n) {
        double exact = monomial_integral(m, n);
        CHECK(integrate_monomial(rule, m, n) == doctest::Approx(exact).epsilon(1e-12));
      }
  }
}

TEST_CASE("x^2 y over the reference triangle is 1/60") {
  CHECK(integrate_monomial(quadrature_rule(3), 2, 1) ==
        doctest::Approx(1.0 / 60.0).epsilon(1e-14));
}

TEST_CASE("monomial mass matrices match closed-form integrals") {
  for (int p = 1; p <= 4; ++p) {
    const QuadRule& rule = quadrature_rule(2 * p + 2);
    for (int a = 0; a <= p; ++a)
      for (int b = 0; a + b <= p; ++b)
        for (int c = 0; c <= p; ++c)
          for (int d = 0; c + d <= p; ++d) {
            double quad = integrate_monomial(rule, a + c, b + d);
            double exact = monomial_integral(a + c, b + d);
            CHECK(std::abs(quad - exact) <= 1e-13);
          }
  }
}

TEST_CASE("unsupported degrees are rejected") {
  CHECK_THROWS_AS(quadrature_rule(-1), std::invalid_argument);
  CHECK_THROWS_AS(quadrature_rule(kMaxQuadDegree + 1), std::invalid_argument);
  CHECK_THROWS_WITH_AS(quadrature_rule(999), doctest::Contains("20"), std::invalid_argument);
}

TEST_CASE("1d rules integrate polynomials of degree 2n-1") {
  for (int n = 1; n <= 10; ++n) {
    const QuadRule1D& rule = gauss_rule_1d(n);
    REQUIRE(rule.x.size() == static_cast<size_t>(n));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * std::pow(rule.x[i], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gauss_rule_1d(0), std::invalid_argument);
  CHECK_THROWS_AS(gauss_rule_1d(4001), std::invalid_argument);
}
