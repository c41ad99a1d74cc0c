#include "hrmix/transient.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numeric>

using namespace hrmix;

namespace {

// Minimal exact rational arithmetic for the order conditions.
struct Rational {
  std::int64_t num = 0, den = 1;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { reduce(); }
  void reduce()
  {
    std::int64_t g = std::gcd(std::abs(num), std::abs(den));
    if (g > 0) {
      num /= g;
      den /= g;
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
  }
  Rational operator+(const Rational& o) const { return {num * o.den + o.num * den, den * o.den}; }
  Rational operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  double value() const { return double(num) / double(den); }
};

}  // namespace

TEST_CASE("radau tableau: exact order conditions and stiff accuracy")
{
  ButcherTableau t = radau2a_tableau();

  const Rational b1{3, 4}, b2{1, 4}, c1{1, 3}, c2{1, 1};
  const Rational a11{5, 12}, a12{-1, 12}, a21{3, 4}, a22{1, 4};
  CHECK(t.b[0] == b1.value());
  CHECK(t.b[1] == b2.value());
  CHECK(t.c[0] == c1.value());
  CHECK(t.c[1] == c2.value());
  CHECK(t.a(0, 0) == a11.value());
  CHECK(t.a(0, 1) == a12.value());
  CHECK(t.a(1, 0) == a21.value());
  CHECK(t.a(1, 1) == a22.value());

  // order conditions, evaluated in exact arithmetic
  CHECK(b1 + b2 == Rational(1, 1));
  CHECK(b1 * c1 + b2 * c2 == Rational(1, 2));
  CHECK(b1 * c1 * c1 + b2 * c2 * c2 == Rational(1, 3));
  // row-sum consistency: sum_j a_ij = c_i
  CHECK(a11 + a12 == c1);
  CHECK(a21 + a22 == c2);
  // stiff accuracy: b equals the last row of a
  CHECK(a21 == b1);
  CHECK(a22 == b2);
  // c2 = 1
  CHECK(t.c[1] == 1.0);
  // invertible stage matrix
  CHECK(std::abs(t.a.determinant()) > 0.1);
}

TEST_CASE("scalar stability function R(z) = (1 + z/3) / (1 - 2z/3 + z^2/6)")
{
  // y' = lambda y as the 1x1 DAE E x' = rhs - S x with E = 1, S = -lambda.
  double lambda = -1.0, dt = 0.1;
  SpMat s(1, 1), e(1, 1);
  s.insert(0, 0) = -lambda;
  e.insert(0, 0) = 1.0;
  s.makeCompressed();
  e.makeCompressed();
  TransientIntegrator integ(s, e, dt);
  VecX y(1);
  y << 1.0;
  VecX y1 = integ.step(0.0, y, [](double) { return VecX::Zero(1); });
  double z = lambda * dt;
  double rz = (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0);
  CHECK(y1[0] == doctest::Approx(rz).epsilon(1e-13));
}

TEST_CASE("zero data keeps the state at zero; equilibrium is a fixed point")
{
  auto mesh = std::make_shared<Mesh>(generate_unit_square(4, 0.15, 3));
  SchemeSpaces s = build_scheme(mesh, {Scheme::JMK, 1});
  TransientData data = transient_polar_data(100.0);

  RhsData rd;
  rd.F = data.F;
  rd.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  rd.g = data.u0;
  rd.data_degree = 12;
  SaddlePointSystem sys = assemble_saddle(s, data.params, rd, 0.0);

  SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
  std::vector<Triplet> trips;
  for (int k = 0; k < m_v.outerSize(); ++k)
    for (SpMat::InnerIterator it(m_v, k); it; ++it)
      trips.emplace_back(sys.n_sigma + static_cast<int>(it.row()),
                         sys.n_sigma + static_cast<int>(it.col()), it.value());
  SpMat e_mat(sys.total(), sys.total());
  e_mat.setFromTriplets(trips.begin(), trips.end());

  TransientIntegrator integ(sys.full_matrix(), e_mat, 0.01);

  // zero forcing, zero state
  VecX x = VecX::Zero(sys.total());
  VecX x1 = integ.step(0.0, x, [&](double) { return VecX(VecX::Zero(sys.total())); });
  CHECK(x1.norm() == 0.0);

  // frozen data at the stationary solution: the step is a fixed point
  VecX rhs1 = sys.full_rhs();
  Solution stat = SaddleSolver(sys).solve_system();
  VecX xs(sys.total());
  xs << stat.sigma, stat.u, VecX();
  VecX xnext = integ.step(5.0, xs, [&](double) { return rhs1; });
  CHECK((xnext - xs).norm() < 1e-10 * xs.norm());
}

TEST_CASE("transient polar fluid: robust scheme relaxes, weak scheme does not")
{
  auto mesh = std::make_shared<Mesh>(generate_unit_square(8, 0.2, 42));
  const double delta = 1e3, dt = 1.0 / 100.0;

  SchemeSpaces jmk = build_scheme(mesh, {Scheme::JMK, 1});
  TransientResult jr = run_transient(jmk, delta, dt, 1.5, {0.5, 1.0, 1.5});
  REQUIRE(jr.snapshots.size() == 3);

  SchemeSpaces afw = build_scheme(mesh, {Scheme::AFW, 1});
  TransientResult ar = run_transient(afw, delta, dt, 1.5, {0.5, 1.0, 1.5});

  auto at = [&](const TransientResult& r, double t) {
    for (std::size_t i = 0; i < r.t.size(); ++i)
      if (std::abs(r.t[i] - t) < 1e-12) return r.sigma_l2[i];
    FAIL("time not found");
    return 0.0;
  };

  double j05 = at(jr, 0.5), j15 = at(jr, 1.5);
  double a05 = at(ar, 0.5), a15 = at(ar, 1.5);
  CHECK(j15 < 1e-6 * j05);          // relaxes to the zero-stress equilibrium
  CHECK(a15 > 0.1 * a05);           // stuck far from zero stress
  CHECK(std::abs(j05 - a05) < 0.1 * j05);  // early-time agreement

}

TEST_CASE("weak symmetry constraint holds at every accepted step")
{
  auto mesh = std::make_shared<Mesh>(generate_unit_square(4, 0.2, 42));
  SchemeSpaces s = build_scheme(mesh, {Scheme::AFW, 1});
  TransientData data = transient_polar_data(1e3);

  RhsData rd;
  rd.F = data.F;
  rd.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  rd.g = data.u0;
  rd.data_degree = 12;
  SaddlePointSystem sys = assemble_saddle(s, data.params, rd, 0.0);

  SpMat s_dae = sys.full_matrix();
  for (int col = 0; col < s_dae.outerSize(); ++col)
    for (SpMat::InnerIterator it(s_dae, col); it; ++it)
      if (it.row() >= sys.n_sigma && it.row() < sys.n_sigma + sys.n_u)
        it.valueRef() = -it.value();

  SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
  std::vector<Triplet> trips;
  for (int k = 0; k < m_v.outerSize(); ++k)
    for (SpMat::InnerIterator it(m_v, k); it; ++it)
      trips.emplace_back(sys.n_sigma + static_cast<int>(it.row()),
                         sys.n_sigma + static_cast<int>(it.col()), it.value());
  SpMat e_mat(sys.total(), sys.total());
  e_mat.setFromTriplets(trips.begin(), trips.end());

  TransientIntegrator integ(s_dae, e_mat, 0.01);
  VecX rhs1 = sys.full_rhs();
  auto rhs = [&](double t) { return VecX(std::min(1.0, t) * rhs1); };

  VecX x = VecX::Zero(sys.total());
  for (int k = 0; k < 30; ++k) {
    x = integ.step(k * 0.01, x, rhs);
    VecX sigma = x.head(sys.n_sigma);
    double cnorm = (sys.C * sigma).norm();
    CHECK(cnorm <= 1e-9 * std::max(sigma.norm(), 1e-30));
  }
  CHECK(x.head(sys.n_sigma).norm() > 0.0);
}

TEST_CASE("geometric approach to the stationary solution")
{
  auto mesh = std::make_shared<Mesh>(generate_unit_square(5, 0.2, 9));
  for (auto scheme : {SchemeConfig{Scheme::JMK, 1}, SchemeConfig{Scheme::AFW, 1}}) {
    SchemeSpaces s = build_scheme(mesh, scheme);
    const double delta = 1e3;
    TransientResult r = run_transient(s, delta, 0.01, 3.0, {});
    Solution stat = transient_steady_state(s, delta);

    SpMat mass = assemble_gram(s.stress, GramKind::L2, s.quad_degree);
    double stat_norm = gram_norm(mass, stat.sigma);
    SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
    double stat_u = gram_norm(m_v, stat.u);

    // compare the transient sigma magnitude at t = 3 with the stationary one
    double final_sigma = r.sigma_l2.back();
    CHECK(std::abs(final_sigma - stat_norm) < 1e-4 * (stat_norm + stat_u));
  }
}
