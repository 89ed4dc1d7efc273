#include "pminres/mesh.hpp"
#include "pminres/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace pminres;

namespace {

// int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
double reference_moment(int a, int b) {
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

}  // namespace

TEST_CASE("Gauss line rules") {
  for (int n = 1; n <= 8; ++n) {
    const GaussLine g = GaussLine::on_unit_interval(n);
    REQUIRE(g.nodes.size() == static_cast<std::size_t>(n));
    CHECK(std::accumulate(g.weights.begin(), g.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[static_cast<std::size_t>(i)] * std::pow(g.nodes[static_cast<std::size_t>(i)], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
    CHECK(std::is_sorted(g.nodes.begin(), g.nodes.end()));
  }
  CHECK_THROWS(GaussLine::on_unit_interval(0));
}

TEST_CASE("triangle rules integrate monomials exactly on the reference triangle") {
  for (int deg = 1; deg <= 12; ++deg) {
    const QuadRule q = QuadRule::triangle(deg);
    CHECK(q.degree >= deg);
    CHECK(std::accumulate(q.weights.begin(), q.weights.end(), 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    for (const auto& l : q.points) {
      CHECK(l[0] > 0.0);
      CHECK(l[1] > 0.0);
      CHECK(l[2] > 0.0);
      CHECK(l[0] + l[1] + l[2] == doctest::Approx(1.0).epsilon(1e-15));
    }
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i)
          s += q.weights[i] * std::pow(q.points[i][1], a) * std::pow(q.points[i][2], b);
        CHECK_MESSAGE(std::abs(s - reference_moment(a, b)) <= 1e-12 * reference_moment(a, b),
                      "degree " << deg << " monomial " << a << "," << b);
      }
    }
  }
  CHECK(QuadRule::triangle(10).size() == 36);
  CHECK(QuadRule::triangle(2).size() == 3);
}

TEST_CASE("triangle rules on a physical triangle via change of variables") {
  // int_T x^a y^b over T = (0.1,0.2),(1.3,0.4),(0.5,1.1), reference value from
  // the degree-12 rule versus every lower rule on monomials it should resolve.
  const Point A{0.1, 0.2}, B{1.3, 0.4}, C{0.5, 1.1};
  const double det = (B.x - A.x) * (C.y - A.y) - (C.x - A.x) * (B.y - A.y);
  auto integrate = [&](const QuadRule& q, int a, int b) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto& l = q.points[i];
      const Point x = l[0] * A + l[1] * B + l[2] * C;
      s += q.weights[i] * det * std::pow(x.x, a) * std::pow(x.y, b);
    }
    return s;
  };
  // Exact value of int_T x over a triangle: area times centroid x.
  const QuadRule q1 = QuadRule::triangle(1);
  CHECK(integrate(q1, 1, 0) == doctest::Approx(0.5 * det * (A.x + B.x + C.x) / 3).epsilon(1e-14));
  const QuadRule ref = QuadRule::triangle(20);
  for (int deg = 2; deg <= 10; ++deg) {
    const QuadRule q = QuadRule::triangle(deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        const double exact = integrate(ref, a, b);
        CHECK(std::abs(integrate(q, a, b) - exact) <= 1e-12 * std::abs(exact));
      }
  }
}
