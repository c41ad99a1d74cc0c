#include "hrmix/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace hrmix;

namespace {

// Closed form: integral of x^a y^b over the reference triangle.
double monomial_integral(int a, int b)
{
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

double apply(const QuadratureRule& r, int a, int b)
{
  double s = 0.0;
  for (int q = 0; q < r.size(); ++q)
    s += r.weights[q] * std::pow(r.points(q, 0), a) * std::pow(r.points(q, 1), b);
  return s;
}

// Independent brute-force oracle: dense tensor Gauss-Legendre product on the
// Duffy-mapped square, Jacobian carried explicitly.
double duffy_oracle(const std::function<double(double, double)>& f, int n)
{
  LineRule gl = gauss_legendre_01(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double a = gl.points[i], b = gl.points[j];
      s += gl.weights[i] * gl.weights[j] * (1.0 - b) * f(a * (1.0 - b), b);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("degree-1 rule is the centroid rule")
{
  QuadratureRule r = quadrature_rule(1);
  REQUIRE(r.size() == 1);
  CHECK(r.points(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(r.points(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(apply(r, 0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("linear exactness: integral of x is 1/6")
{
  for (int deg = 1; deg <= 20; ++deg) {
    QuadratureRule r = quadrature_rule(deg);
    CHECK(std::abs(apply(r, 1, 0) - 1.0 / 6.0) < 1e-14);
  }
}

TEST_CASE("monomial exactness up to the requested degree")
{
  for (int deg = 1; deg <= 20; ++deg) {
    QuadratureRule r = quadrature_rule(deg);
    for (double w : r.weights) CHECK(w > 0.0);
    CHECK(r.weights.sum() == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double exact = monomial_integral(a, b);
        CHECK(std::abs(apply(r, a, b) - exact) < 1e-13 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("degree-10 rule against the dense Duffy oracle on x^4 y^6")
{
  QuadratureRule r = quadrature_rule(10);
  double mine = apply(r, 4, 6);
  double dense = duffy_oracle([](double x, double y) { return std::pow(x, 4) * std::pow(y, 6); }, 40);
  CHECK(std::abs(mine - dense) < 1e-12);
  CHECK(std::abs(mine - monomial_integral(4, 6)) < 1e-15);
}

TEST_CASE("rejects unsupported degrees")
{
  CHECK_THROWS(quadrature_rule(0));
  CHECK_THROWS(quadrature_rule(21));
}

TEST_CASE("gauss-legendre on [0,1]")
{
  LineRule r = gauss_legendre_01(4);  // exact to degree 7
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += r.weights[i] * std::pow(r.points[i], 7);
  CHECK(s == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
}
