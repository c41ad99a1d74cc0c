#include "hrmix/stokes.hpp"

#include <cmath>
#include <stdexcept>

namespace hrmix {

namespace {

void scatter(std::vector<Triplet>& trips, const MatX& local, const std::vector<int>& rows,
             const std::vector<int>& cols)
{
  for (int i = 0; i < local.rows(); ++i)
    for (int j = 0; j < local.cols(); ++j)
      if (local(i, j) != 0.0 && rows[i] >= 0 && cols[j] >= 0)
        trips.emplace_back(rows[i], cols[j], local(i, j));
}

}  // namespace

StokesSpaces build_stokes(const std::shared_ptr<const Mesh>& macro_mesh,
                          const SchemeConfig& config)
{
  if (!config.is_stokes())
    throw std::invalid_argument("build_stokes: expected a Taylor-Hood or Scott-Vogelius pair");
  StokesSpaces s;
  s.config = config;
  if (config.scheme == Scheme::ScottVogelius) {
    s.mesh = std::make_shared<Mesh>(refine_barycentric(*macro_mesh));
    s.velocity = make_space(s.mesh, make_lagrange_vector(2));
    s.pressure = make_space(s.mesh, make_dg_scalar(1));
  } else {
    s.mesh = macro_mesh;
    s.velocity = make_space(s.mesh, make_lagrange_vector(2));
    s.pressure = make_space(s.mesh, make_lagrange(1));
  }
  s.quad_degree = 8;

  // Homogeneous Dirichlet velocity: drop dofs sitting on the boundary.
  const Mesh& m = *s.mesh;
  std::vector<char> on_boundary(s.velocity.ndofs, 0);
  const Element& el = s.velocity.elem;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (m.boundary_vertex[v])
      for (int i = 0; i < el.dofs_per_vertex; ++i) on_boundary[v * el.dofs_per_vertex + i] = 1;
  int eb = s.velocity.edge_base();
  for (int e = 0; e < m.num_edges(); ++e)
    if (m.boundary_edge[e])
      for (int i = 0; i < el.dofs_per_edge; ++i) on_boundary[eb + e * el.dofs_per_edge + i] = 1;

  s.reduced_index.assign(s.velocity.ndofs, -1);
  for (int i = 0; i < s.velocity.ndofs; ++i) {
    if (!on_boundary[i]) {
      s.reduced_index[i] = static_cast<int>(s.interior_dofs.size());
      s.interior_dofs.push_back(i);
    }
  }
  return s;
}

StokesSystem assemble_stokes(const StokesSpaces& s, const ManufacturedCase& c)
{
  if (s.config.scheme == Scheme::ScottVogelius &&
      (s.mesh->parent == nullptr || s.mesh->parent_cell.empty()))
    throw std::invalid_argument(
        "assemble_stokes: Scott-Vogelius needs a barycentric-refined mesh with a parent map");

  StokesSystem sys;
  sys.n_u = static_cast<int>(s.interior_dofs.size());
  sys.n_p = s.pressure.ndofs;

  const QuadratureRule rule = quadrature_rule(s.quad_degree);

  std::vector<Triplet> ta, tb;
  std::vector<int> vdofs, pdofs, vred;
  std::vector<MatX> grad, pval;

  for (int cell = 0; cell < s.mesh->num_cells(); ++cell) {
    CellBasis vb = s.velocity.basis(cell);
    CellBasis pb = s.pressure.basis(cell);
    s.velocity.cell_dofs(cell, vdofs);
    s.pressure.cell_dofs(cell, pdofs);
    vred.resize(vdofs.size());
    for (std::size_t i = 0; i < vdofs.size(); ++i) vred[i] = s.reduced_index[vdofs[i]];

    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, vb.pieces[0], pts, wts);
    vb.tabulate_grad(pts, 0, grad);
    pb.tabulate(pts, 0, pval);

    // (eps(u), eps(v)) with eps components e00, e11, e01.
    MatX e01 = 0.5 * (grad[1] + grad[2]);
    MatX local_a = grad[0].transpose() * wts.asDiagonal() * grad[0] +
                   grad[3].transpose() * wts.asDiagonal() * grad[3] +
                   2.0 * e01.transpose() * wts.asDiagonal() * e01;
    local_a = 0.5 * (local_a + local_a.transpose().eval());
    scatter(ta, local_a, vred, vred);

    MatX div = grad[0] + grad[3];
    MatX local_b = -pval[0].transpose() * wts.asDiagonal() * div;
    std::vector<int> prows = pdofs;  // pressure rows all kept
    scatter(tb, local_b, prows, vred);

  }
  sys.f = assemble_stokes_forcing(s, c);

  sys.A.resize(sys.n_u, sys.n_u);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.A.makeCompressed();
  sys.B.resize(sys.n_p, sys.n_u);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  sys.B.makeCompressed();
  sys.pressure_nullspace = s.pressure.interpolate(field_of([](const Vec2&) { return 1.0; }));
  return sys;
}

VecX assemble_stokes_forcing(const StokesSpaces& s, const ManufacturedCase& c)
{
  VecX f = VecX::Zero(static_cast<int>(s.interior_dofs.size()));
  const QuadratureRule data_rule = quadrature_rule(c.data_degree(s.quad_degree));
  std::vector<int> vdofs;
  std::vector<MatX> vval;
  for (int cell = 0; cell < s.mesh->num_cells(); ++cell) {
    CellBasis vb = s.velocity.basis(cell);
    s.velocity.cell_dofs(cell, vdofs);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(data_rule, vb.pieces[0], pts, wts);
    vb.tabulate(pts, 0, vval);
    for (int q = 0; q < pts.rows(); ++q) {
      Vec2 fq = c.f(Vec2(pts(q, 0), pts(q, 1)));
      for (std::size_t i = 0; i < vdofs.size(); ++i) {
        int red = s.reduced_index[vdofs[i]];
        if (red < 0) continue;
        f[red] += wts[q] * (fq.x() * vval[0](q, static_cast<int>(i)) +
                            fq.y() * vval[1](q, static_cast<int>(i)));
      }
    }
  }
  return f;
}

StokesSolver::StokesSolver(const StokesSpaces& s, const StokesSystem& sys)
    : spaces_(&s), n_u_(sys.n_u), n_p_(sys.n_p)
{
  const int n = n_u_ + n_p_;
  std::vector<Triplet> trips;
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.A, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < sys.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.B, k); it; ++it) {
      trips.emplace_back(n_u_ + static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
      trips.emplace_back(static_cast<int>(it.col()), n_u_ + static_cast<int>(it.row()),
                         it.value());
    }
  SpMat k(n, n);
  k.setFromTriplets(trips.begin(), trips.end());
  k.makeCompressed();

  VecX nullspace = VecX::Zero(n);
  nullspace.tail(n_p_) = sys.pressure_nullspace;
  solver_ = std::make_shared<DirectSolver>(
      k, nullspace, std::vector<std::pair<std::string, int>>{{"velocity", n_u_}, {"pressure", n}});
}

StokesSolution StokesSolver::solve(const VecX& forcing) const
{
  VecX rhs = VecX::Zero(n_u_ + n_p_);
  rhs.head(n_u_) = forcing;
  StokesSolution sol;
  VecX x = solver_->solve(rhs, &sol.residual);
  sol.u = VecX::Zero(spaces_->velocity.ndofs);
  for (int i = 0; i < n_u_; ++i) sol.u[spaces_->interior_dofs[i]] = x[i];
  sol.p = x.tail(n_p_);
  return sol;
}

StokesSolution solve_stokes(const StokesSpaces& s, const StokesSystem& sys)
{
  return StokesSolver(s, sys).solve(sys.f);
}

ErrorReport compute_stokes_errors(const StokesSolution& sol, const ManufacturedCase& c,
                                  const StokesSpaces& s)
{
  ErrorReport rep;
  rep.delta = c.Ra;
  const QuadratureRule rule = quadrature_rule(12);
  FieldView uv{s.velocity, sol.u};
  FieldView pv{s.pressure, sol.p};

  double u_l2 = 0.0, u_h1 = 0.0, div_l2 = 0.0, p_l2 = 0.0;
  double ph_mean = 0.0, pex_mean = 0.0, area = 0.0;
  for (int cell = 0; cell < s.mesh->num_cells(); ++cell) {
    CellBasis vb = s.velocity.basis(cell);
    CellBasis pb = s.pressure.basis(cell);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, vb.pieces[0], pts, wts);
    MatX uval, ugrad, pval;
    uv.values(cell, vb, pts, 0, uval);
    uv.gradient(cell, vb, pts, 0, ugrad);
    pv.values(cell, pb, pts, 0, pval);
    for (int q = 0; q < pts.rows(); ++q) {
      Vec2 x(pts(q, 0), pts(q, 1));
      double w = wts[q];
      Vec2 ue = c.u(x);
      Mat2 ge = c.grad_u(x);
      Vec2 uh(uval(q, 0), uval(q, 1));
      Mat2 gh;
      gh << ugrad(q, 0), ugrad(q, 1), ugrad(q, 2), ugrad(q, 3);
      u_l2 += w * (ue - uh).squaredNorm();
      u_h1 += w * (ge - gh).squaredNorm();
      div_l2 += w * (gh(0, 0) + gh(1, 1)) * (gh(0, 0) + gh(1, 1));
      ph_mean += w * pval(q, 0);
      pex_mean += w * c.pressure(x);
      area += w;
    }
  }
  ph_mean /= area;
  pex_mean /= area;
  for (int cell = 0; cell < s.mesh->num_cells(); ++cell) {
    CellBasis pb = s.pressure.basis(cell);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, pb.pieces[0], pts, wts);
    MatX pval;
    pv.values(cell, pb, pts, 0, pval);
    for (int q = 0; q < pts.rows(); ++q) {
      double diff = (pval(q, 0) - ph_mean) - (c.pressure(Vec2(pts(q, 0), pts(q, 1))) - pex_mean);
      p_l2 += wts[q] * diff * diff;
    }
  }

  rep.velocity_error = std::sqrt(u_l2 + u_h1);
  rep.pressure_error = std::sqrt(p_l2);
  rep.divergence_error = std::sqrt(div_l2);
  return rep;
}

}  // namespace hrmix
