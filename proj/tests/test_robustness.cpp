#include "hrmix/robustness.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hrmix;

namespace {

std::shared_ptr<Mesh> shared_mesh(int n, double jitter = 0.0, unsigned seed = 0)
{
  return std::make_shared<Mesh>(generate_unit_square(n, jitter, seed));
}

VecX random_coeffs(int n, unsigned seed)
{
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

}  // namespace

TEST_CASE("discrete shifts leave every scheme invariant")
{
  auto mesh = shared_mesh(3, 0.2, 7);
  for (auto scheme : {SchemeConfig{Scheme::JMK, 1}, SchemeConfig{Scheme::PEERS, 1},
                      SchemeConfig{Scheme::AFW, 1}, SchemeConfig{Scheme::AFW, 3}}) {
    SchemeSpaces s = build_scheme(mesh, scheme);
    ManufacturedCase c = case_example1(10.0);
    VecX r_u = 100.0 * random_coeffs(s.velocity.ndofs, 3);
    VecX r_xi =
        s.rotation ? VecX(100.0 * random_coeffs(s.rotation->ndofs, 4)) : VecX();
    ShiftReport rep = shift_invariance_test_discrete(s, c, r_u, r_xi);
    CHECK(rep.sigma_defect < 1e-9);
    if (!s.rotation) CHECK(rep.multiplier_residual < 1e-9);  // Phi_h r = r for discrete r
  }
}

TEST_CASE("smooth shifts: the strong scheme is invariant, AFW1 is not")
{
  auto mesh = shared_mesh(4, 0.2, 42);
  ManufacturedCase base = case_example2(1e3);
  ManufacturedCase shift_gen = case_example2(10.0);

  SchemeSpaces jmk = build_scheme(mesh, {Scheme::JMK, 1});
  ShiftReport jrep = shift_invariance_test(jmk, shift_gen, shift_gen.u, shift_gen.grad_u);
  CHECK(jrep.sigma_defect < 1e-8);
  CHECK(jrep.multiplier_residual < 1e-9);  // Lemma-4.3 identity u_h,r = u_h + Phi_h r

  SchemeSpaces afw = build_scheme(mesh, {Scheme::AFW, 1});
  ShiftReport arep = shift_invariance_test(afw, base, base.u, base.grad_u);
  CHECK(arep.sigma_defect > 1e-2);
}

TEST_CASE("kernel probes separate the schemes")
{
  auto mesh = shared_mesh(2, 0.2, 23);

  SchemeSpaces jmk = build_scheme(mesh, {Scheme::JMK, 1});
  KernelProbe jp = kernel_inclusion_probe(jmk, 20, 3);
  CHECK(jp.div_violation < 1e-10);
  CHECK(jp.asym_violation < 1e-10);

  SchemeSpaces afw1 = build_scheme(mesh, {Scheme::AFW, 1});
  KernelProbe a1 = kernel_inclusion_probe(afw1, 20, 3);
  CHECK(a1.div_violation < 1e-10);
  CHECK(a1.asym_violation > 1e-1);

  SchemeSpaces peers = build_scheme(mesh, {Scheme::PEERS, 1});
  KernelProbe pp = kernel_inclusion_probe(peers, 20, 3);
  CHECK(pp.div_violation < 1e-10);
  CHECK(pp.asym_violation > 1e-1);

  SchemeSpaces afw3 = build_scheme(mesh, {Scheme::AFW, 3});
  KernelProbe a3 = kernel_inclusion_probe(afw3, 20, 3);
  CHECK(a3.div_violation < 1e-10);
  CHECK(a3.asym_violation > 1e-2);  // still not pointwise symmetric
}

TEST_CASE("invariance and kernel inclusion agree (both directions)")
{
  auto mesh = shared_mesh(3, 0.2, 11);
  ManufacturedCase poly = case_example2(10.0);
  ManufacturedCase polar = case_polar2d(10.0);
  for (auto scheme : {SchemeConfig{Scheme::JMK, 1}, SchemeConfig{Scheme::PEERS, 1},
                      SchemeConfig{Scheme::AFW, 1}, SchemeConfig{Scheme::AFW, 3}}) {
    SchemeSpaces s = build_scheme(mesh, scheme);
    double defect = 0.0;
    defect = std::max(defect, shift_invariance_test(s, poly, poly.u, poly.grad_u).sigma_defect);
    defect =
        std::max(defect, shift_invariance_test(s, polar, polar.u, polar.grad_u).sigma_defect);
    double violation = kernel_inclusion_probe(s, 20, 5).violation();
    CHECK((defect <= 1e-8) == (violation <= 1e-8));
  }
}

TEST_CASE("projection onto V_h: fixed points, idempotence, contraction")
{
  auto mesh = shared_mesh(3, 0.1, 13);
  SchemeSpaces s = build_scheme(mesh, {Scheme::JMK, 1});

  // r already discrete: projection reproduces it
  VecX rc = random_coeffs(s.velocity.ndofs, 17);
  FieldView rview{s.velocity, rc};
  auto r_field = [&](const Vec2& x) -> Vec2 {
    // piecewise-constant field evaluated through the mesh
    for (int c = 0; c < s.velocity.mesh->num_cells(); ++c) {
      CellBasis vb = s.velocity.basis(c);
      const auto& t = vb.pieces[0];
      double a = (t[1] - t[0]).x() * (t[2] - t[0]).y() - (t[1] - t[0]).y() * (t[2] - t[0]).x();
      double l0 = ((t[1] - x).x() * (t[2] - x).y() - (t[1] - x).y() * (t[2] - x).x()) / a;
      double l1 = ((t[2] - x).x() * (t[0] - x).y() - (t[2] - x).y() * (t[0] - x).x()) / a;
      double l2 = 1.0 - l0 - l1;
      if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) {
        MatX pts(1, 2);
        pts << x.x(), x.y();
        MatX v;
        rview.values(c, vb, pts, 0, v);
        return Vec2(v(0, 0), v(0, 1));
      }
    }
    return Vec2::Zero();
  };
  VecX proj = phi_projection(s, r_field);
  CHECK((proj - rc).cwiseAbs().maxCoeff() < 1e-12 * rc.cwiseAbs().maxCoeff());

  // idempotence and contraction on a smooth field
  auto smooth = [](const Vec2& x) { return Vec2(std::sin(3 * x.x()), x.y() * x.x()); };
  VecX p1 = phi_projection(s, smooth);
  FieldView p1view{s.velocity, p1};
  auto p1_field = [&](const Vec2& x) -> Vec2 {
    int cell = 0;
    // same location logic as above
    for (int c = 0; c < s.velocity.mesh->num_cells(); ++c) {
      CellBasis vb = s.velocity.basis(c);
      const auto& t = vb.pieces[0];
      double a = (t[1] - t[0]).x() * (t[2] - t[0]).y() - (t[1] - t[0]).y() * (t[2] - t[0]).x();
      double l0 = ((t[1] - x).x() * (t[2] - x).y() - (t[1] - x).y() * (t[2] - x).x()) / a;
      double l1 = ((t[2] - x).x() * (t[0] - x).y() - (t[2] - x).y() * (t[0] - x).x()) / a;
      double l2 = 1.0 - l0 - l1;
      if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) {
        cell = c;
        break;
      }
    }
    CellBasis vb = s.velocity.basis(cell);
    MatX pts(1, 2);
    pts << x.x(), x.y();
    MatX v;
    p1view.values(cell, vb, pts, 0, v);
    return Vec2(v(0, 0), v(0, 1));
  };
  VecX p2 = phi_projection(s, p1_field);
  CHECK((p2 - p1).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + p1.cwiseAbs().maxCoeff()));

  // operator norm <= 1 (certifies the contraction constant of the projection)
  CHECK(phi_operator_norm_estimate(s, 20, 11) <= 1.0 + 1e-12);
}

TEST_CASE("inf-sup estimates: positive, stable across refinement, and zero for a broken pair")
{
  auto base = shared_mesh(3, 0.15, 19);
  for (auto scheme : {SchemeConfig{Scheme::JMK, 1}, SchemeConfig{Scheme::PEERS, 1},
                      SchemeConfig{Scheme::AFW, 1}}) {
    std::vector<double> beta;
    Mesh m = *base;
    for (int level = 0; level < 3; ++level) {
      SchemeSpaces s = build_scheme(std::make_shared<Mesh>(m), scheme);
      beta.push_back(infsup_estimate(s));
      CHECK(beta.back() > 0.0);
      m = refine_uniform(m);
    }
    double lo = *std::min_element(beta.begin(), beta.end());
    double hi = *std::max_element(beta.begin(), beta.end());
    CHECK(hi / lo < 1.2);
  }

  // deliberately rank-deficient pair: duplicate one multiplier equation
  SchemeSpaces s = build_scheme(base, {Scheme::AFW, 1});
  SpMat b_blk = assemble_b(s);
  SpMat c_blk = assemble_c(s);
  MatX k = MatX::Zero(b_blk.rows() + c_blk.rows() + 1, s.stress.ndofs);
  k.topRows(b_blk.rows()) = MatX(b_blk);
  k.middleRows(b_blk.rows(), c_blk.rows()) = MatX(c_blk);
  k.row(k.rows() - 1) = k.row(0);  // duplicated constraint

  MatX x = MatX(assemble_gram(s.stress, GramKind::Hdiv, s.quad_degree));
  Eigen::LLT<MatX> xllt(x);
  MatX g = k * xllt.solve(k.transpose());
  MatX mq = MatX::Identity(k.rows(), k.rows());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(g, mq);
  // the duplicated row creates the direction (e_first - e_last) with zero sup
  CHECK(es.eigenvalues()[0] < 1e-8);
}

TEST_CASE("kernel coercivity: bounds and special directions")
{
  auto mesh = shared_mesh(2, 0.1, 29);

  // finite lambda: alpha_h * 2 mu within the constitutive bracket
  {
    MaterialParams params{1e-4, 1.0};
    SchemeSpaces s = build_scheme(mesh, {Scheme::JMK, 1});
    double alpha = kernel_coercivity_estimate(s, params);
    CHECK(alpha > 0.0);
    CHECK(alpha * 2.0 * params.mu <= 1.0 + params.d * params.lambda / (2.0 * params.mu));
  }

  // lambda = inf: positive with bounded drift across refinements
  {
    MaterialParams params{1e-4, kInfLambda};
    std::vector<double> alpha;
    Mesh m = *mesh;
    for (int level = 0; level < 3; ++level) {
      SchemeSpaces s = build_scheme(std::make_shared<Mesh>(m), {Scheme::JMK, 1});
      alpha.push_back(kernel_coercivity_estimate(s, params));
      CHECK(alpha.back() > 0.0);
      m = refine_uniform(m);
    }
    CHECK(*std::max_element(alpha.begin(), alpha.end()) /
              *std::min_element(alpha.begin(), alpha.end()) <
          1.2);
  }

  // a constant deviatoric divergence-free field has Rayleigh quotient 1/(2 mu)
  {
    MaterialParams params{0.3, kInfLambda};
    SchemeSpaces s = build_scheme(mesh, {Scheme::AFW, 1});
    Mat2 dev0;
    dev0 << -2.0, 0.0, 0.0, 2.0;
    VecX tau = s.stress.interpolate(field_of([&](const Vec2&) { return dev0; }));
    SpMat a = assemble_a(s, params);
    SpMat x = assemble_gram(s.stress, GramKind::Hdiv, s.quad_degree);
    double rayleigh = tau.dot(a * tau) / tau.dot(x * tau);
    CHECK(rayleigh == doctest::Approx(1.0 / (2.0 * params.mu)).epsilon(1e-10));
  }
}

TEST_CASE("dense estimators refuse oversized systems")
{
  auto mesh = shared_mesh(24);  // 1152 cells; AFW3 stress alone > 20000 dofs
  SchemeSpaces s = build_scheme(mesh, {Scheme::AFW, 3});
  CHECK(s.stress.ndofs > 20000);
  CHECK_THROWS(infsup_estimate(s));
  CHECK_THROWS(kernel_coercivity_estimate(s, MaterialParams{1.0, 1.0}));
}
