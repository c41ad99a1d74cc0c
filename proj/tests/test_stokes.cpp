#include "hrmix/stokes.hpp"

#include <doctest.h>

#include <cmath>

using namespace hrmix;

namespace {

std::shared_ptr<Mesh> shared_mesh(int n, double jitter = 0.0, unsigned seed = 0)
{
  return std::make_shared<Mesh>(generate_unit_square(n, jitter, seed));
}

}  // namespace

TEST_CASE("zero forcing gives the zero state")
{
  auto mesh = shared_mesh(3, 0.1, 4);
  for (auto cfg : {SchemeConfig{Scheme::TaylorHood, 2}, SchemeConfig{Scheme::ScottVogelius, 2}}) {
    StokesSpaces s = build_stokes(mesh, cfg);
    ManufacturedCase c = case_stokes_noflow(10.0);
    ManufacturedCase zero = c;
    zero.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
    zero.pressure = [](const Vec2&) { return 0.0; };
    StokesSolution sol = solve_stokes(s, assemble_stokes(s, zero));
    CHECK(sol.u.cwiseAbs().maxCoeff() < 1e-13);
    // mean-aligned pressure vanishes
    ErrorReport rep = compute_stokes_errors(sol, zero, s);
    CHECK(rep.pressure_error < 1e-12);
    CHECK(rep.divergence_error < 1e-13);
  }
}

TEST_CASE("constant pressure lies in the discrete nullspace")
{
  auto mesh = shared_mesh(3, 0.15, 9);
  for (auto cfg : {SchemeConfig{Scheme::TaylorHood, 2}, SchemeConfig{Scheme::ScottVogelius, 2}}) {
    StokesSpaces s = build_stokes(mesh, cfg);
    StokesSystem sys = assemble_stokes(s, case_stokes_noflow(10.0));
    VecX action = sys.B.transpose() * sys.pressure_nullspace;
    CHECK(action.cwiseAbs().maxCoeff() < 1e-12 * sys.pressure_nullspace.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("the no-flow forcing is a discrete pressure gradient")
{
  // (f, v) = -(div v, p_exact) for every interior velocity test function:
  // assemble both sides independently and compare.
  auto mesh = shared_mesh(3, 0.1, 5);
  StokesSpaces s = build_stokes(mesh, {Scheme::TaylorHood, 2});
  ManufacturedCase c = case_stokes_noflow(10.0);
  StokesSystem sys = assemble_stokes(s, c);

  // right side: -(div v, p) with p evaluated analytically at quadrature points
  VecX rhs = VecX::Zero(sys.n_u);
  const QuadratureRule rule = quadrature_rule(10);
  std::vector<int> vdofs;
  std::vector<MatX> grad;
  for (int cell = 0; cell < s.mesh->num_cells(); ++cell) {
    CellBasis vb = s.velocity.basis(cell);
    s.velocity.cell_dofs(cell, vdofs);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, vb.pieces[0], pts, wts);
    vb.tabulate_grad(pts, 0, grad);
    for (int q = 0; q < pts.rows(); ++q) {
      double p = c.pressure(Vec2(pts(q, 0), pts(q, 1)));
      for (std::size_t i = 0; i < vdofs.size(); ++i) {
        int red = s.reduced_index[vdofs[i]];
        if (red < 0) continue;
        rhs[red] -= wts[q] * p *
                    (grad[0](q, static_cast<int>(i)) + grad[3](q, static_cast<int>(i)));
      }
    }
  }
  CHECK((sys.f - rhs).norm() < 1e-10 * rhs.norm());
}

TEST_CASE("pressure robustness contrast on a coarse mesh chain")
{
  auto mesh = shared_mesh(2, 0.2, 42);
  double Ra = 1000.0;
  ManufacturedCase c = case_stokes_noflow(Ra);
  validate_case(c);

  StokesSpaces sv = build_stokes(mesh, {Scheme::ScottVogelius, 2});
  StokesSolution sv_sol = solve_stokes(sv, assemble_stokes(sv, c));
  ErrorReport sv_rep = compute_stokes_errors(sv_sol, c, sv);
  CHECK(sv_rep.velocity_error < 1e-8 * Ra);
  CHECK(sv_rep.divergence_error < 1e-10 * Ra);

  StokesSpaces ht = build_stokes(mesh, {Scheme::TaylorHood, 2});
  StokesSolution ht_sol = solve_stokes(ht, assemble_stokes(ht, c));
  ErrorReport ht_rep = compute_stokes_errors(ht_sol, c, ht);
  CHECK(ht_rep.velocity_error > 1e-4 * Ra);
  CHECK(ht_rep.divergence_error > 1e-6 * Ra);

  // Ra-linearity of the Taylor-Hood error
  ManufacturedCase c10 = case_stokes_noflow(10.0);
  ErrorReport ht10 = compute_stokes_errors(solve_stokes(ht, assemble_stokes(ht, c10)), c10, ht);
  CHECK(ht_rep.velocity_error / ht10.velocity_error == doctest::Approx(100.0).epsilon(0.02));
}

TEST_CASE("scott-vogelius demands the barycentric mesh")
{
  auto mesh = shared_mesh(2);
  StokesSpaces sv = build_stokes(mesh, {Scheme::ScottVogelius, 2});
  // sabotage: rebuild the spaces on the macro mesh
  StokesSpaces bad = sv;
  bad.mesh = mesh;
  CHECK_THROWS_AS(assemble_stokes(bad, case_stokes_noflow(10.0)), std::invalid_argument);
  CHECK_THROWS_AS(build_stokes(mesh, SchemeConfig{Scheme::JMK, 1}), std::invalid_argument);
}
