#include "hrmix/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace hrmix {

namespace {

void scatter(std::vector<Triplet>& trips, const MatX& local, const std::vector<int>& rows,
             const std::vector<int>& cols)
{
  for (int i = 0; i < local.rows(); ++i)
    for (int j = 0; j < local.cols(); ++j)
      if (local(i, j) != 0.0) trips.emplace_back(rows[i], cols[j], local(i, j));
}

SpMat from_triplets(int rows, int cols, std::vector<Triplet>& trips)
{
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

std::string SchemeConfig::name() const
{
  switch (scheme) {
    case Scheme::JMK: return "jm";
    case Scheme::PEERS: return "peers";
    case Scheme::AFW: return "afw_" + std::to_string(k);
    case Scheme::TaylorHood: return "ht";
    case Scheme::ScottVogelius: return "sv";
  }
  return "?";
}

SchemeConfig parse_scheme(const std::string& name)
{
  if (name == "jm" || name == "jmk") return {Scheme::JMK, 1};
  if (name == "peers") return {Scheme::PEERS, 1};
  if (name.rfind("afw", 0) == 0) {
    int k = 1;
    auto pos = name.find_first_of("0123456789");
    if (pos != std::string::npos) k = std::stoi(name.substr(pos));
    if (k < 1 || k > 3) throw std::invalid_argument("parse_scheme: afw order must be 1..3");
    return {Scheme::AFW, k};
  }
  if (name == "ht" || name == "taylor-hood") return {Scheme::TaylorHood, 2};
  if (name == "sv" || name == "scott-vogelius") return {Scheme::ScottVogelius, 2};
  throw std::invalid_argument("parse_scheme: unknown scheme '" + name + "'");
}

SchemeSpaces build_scheme(std::shared_ptr<const Mesh> mesh, const SchemeConfig& config)
{
  if (config.is_stokes())
    throw std::invalid_argument("build_scheme: Stokes pairs are built by build_stokes");
  SchemeSpaces s;
  s.config = config;
  s.mesh = std::move(mesh);
  switch (config.scheme) {
    case Scheme::JMK: {
      s.split = std::make_shared<Mesh>(refine_barycentric(*s.mesh));
      s.stress = make_space(s.mesh, make_johnson_mercier());
      s.velocity = make_space(s.split, make_dg_vector(0));
      s.quad_degree = 6;
      break;
    }
    case Scheme::PEERS: {
      s.stress = make_space(s.mesh, make_peers_stress());
      s.velocity = make_space(s.mesh, make_dg_vector(0));
      s.rotation = make_space(s.mesh, make_peers_multiplier());
      s.quad_degree = 8;
      break;
    }
    case Scheme::AFW: {
      s.stress = make_space(s.mesh, make_bdm_tensor(config.k));
      s.velocity = make_space(s.mesh, make_dg_vector(config.k - 1));
      s.rotation = make_space(s.mesh, make_dg_antisym(config.k - 1));
      s.quad_degree = 2 * config.k + 4;
      break;
    }
    default: break;
  }
  return s;
}

SpMat assemble_a(const SchemeSpaces& s, const MaterialParams& params)
{
  const double inv2mu = 1.0 / (2.0 * params.mu);
  const double tc = params.trace_coefficient();
  const QuadratureRule rule = quadrature_rule(s.quad_degree);

  std::vector<Triplet> trips;
  std::vector<int> dofs;
  std::vector<MatX> val;
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    CellBasis basis = s.stress.basis(c);
    s.stress.cell_dofs(c, dofs);
    MatX local = MatX::Zero(basis.ndofs, basis.ndofs);
    for (int p = 0; p < basis.num_pieces(); ++p) {
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, basis.pieces[p], pts, wts);
      basis.tabulate(pts, p, val);
      MatX dev = 0.5 * (val[0] - val[3]);
      MatX tr = val[0] + val[3];
      local += inv2mu * (2.0 * dev.transpose() * wts.asDiagonal() * dev +
                         val[1].transpose() * wts.asDiagonal() * val[1] +
                         val[2].transpose() * wts.asDiagonal() * val[2]);
      if (tc != 0.0) local += tc * tr.transpose() * wts.asDiagonal() * tr;
    }
    local = 0.5 * (local + local.transpose().eval());
    scatter(trips, local, dofs, dofs);
  }
  return from_triplets(s.stress.ndofs, s.stress.ndofs, trips);
}

SpMat assemble_b(const SchemeSpaces& s)
{
  const QuadratureRule rule = quadrature_rule(s.quad_degree);
  std::vector<Triplet> trips;
  std::vector<int> sdofs, vdofs;
  std::vector<MatX> divs, vval;
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    CellBasis sb = s.stress.basis(c);
    s.stress.cell_dofs(c, sdofs);
    for (int p = 0; p < s.num_pieces(); ++p) {
      int vc = s.piece_cell(c, p);
      CellBasis vb = s.velocity.basis(vc);
      s.velocity.cell_dofs(vc, vdofs);
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
      sb.tabulate_div(pts, p, divs);
      vb.tabulate(pts, 0, vval);
      MatX local = vval[0].transpose() * wts.asDiagonal() * divs[0] +
                   vval[1].transpose() * wts.asDiagonal() * divs[1];
      scatter(trips, local, vdofs, sdofs);
    }
  }
  return from_triplets(s.velocity.ndofs, s.stress.ndofs, trips);
}

SpMat assemble_c(const SchemeSpaces& s)
{
  if (!s.rotation)
    throw std::logic_error("assemble_c: scheme has strong symmetry (no multiplier space)");
  const QuadratureRule rule = quadrature_rule(s.quad_degree);
  std::vector<Triplet> trips;
  std::vector<int> sdofs, xdofs;
  std::vector<MatX> sval, xval;
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    CellBasis sb = s.stress.basis(c);
    CellBasis xb = s.rotation->basis(c);
    s.stress.cell_dofs(c, sdofs);
    s.rotation->cell_dofs(c, xdofs);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, sb.pieces[0], pts, wts);
    sb.tabulate(pts, 0, sval);
    xb.tabulate(pts, 0, xval);
    MatX local = MatX::Zero(xb.ndofs, sb.ndofs);
    for (int comp = 0; comp < 4; ++comp)
      local += xval[comp].transpose() * wts.asDiagonal() * sval[comp];
    scatter(trips, local, xdofs, sdofs);
  }
  return from_triplets(s.rotation->ndofs, s.stress.ndofs, trips);
}

void assemble_rhs(const SchemeSpaces& s, const RhsData& data, VecX& g_sigma, VecX& g_u, VecX& g_xi)
{
  g_sigma = VecX::Zero(s.stress.ndofs);
  g_u = VecX::Zero(s.velocity.ndofs);
  g_xi = VecX::Zero(s.rotation ? s.rotation->ndofs : 0);

  const QuadratureRule rule = quadrature_rule(data.data_degree);
  const LineRule line = line_rule_for_degree(data.data_degree);
  std::vector<int> dofs;
  std::vector<MatX> val;

  // Volume terms (F, tau) and (f, v).
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    CellBasis sb = s.stress.basis(c);
    s.stress.cell_dofs(c, dofs);
    for (int p = 0; p < sb.num_pieces(); ++p) {
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
      sb.tabulate(pts, p, val);
      for (int q = 0; q < pts.rows(); ++q) {
        Mat2 fq = data.F(Vec2(pts(q, 0), pts(q, 1)));
        double w = wts[q];
        for (int i = 0; i < sb.ndofs; ++i)
          g_sigma[dofs[i]] +=
              w * (fq(0, 0) * val[0](q, i) + fq(0, 1) * val[1](q, i) + fq(1, 0) * val[2](q, i) +
                   fq(1, 1) * val[3](q, i));
      }
    }
  }
  for (int c = 0; c < s.velocity.mesh->num_cells(); ++c) {
    CellBasis vb = s.velocity.basis(c);
    s.velocity.cell_dofs(c, dofs);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, vb.pieces[0], pts, wts);
    vb.tabulate(pts, 0, val);
    for (int q = 0; q < pts.rows(); ++q) {
      Vec2 fq = data.f(Vec2(pts(q, 0), pts(q, 1)));
      for (int i = 0; i < vb.ndofs; ++i)
        g_u[dofs[i]] += wts[q] * (fq.x() * val[0](q, i) + fq.y() * val[1](q, i));
    }
  }

  // Boundary term <tau n, g>: outward normal on each boundary edge.
  const Mesh& m = *s.mesh;
  std::vector<int> edge_cell(m.num_edges(), -1);
  std::vector<int> edge_local(m.num_edges(), -1);
  for (int c = 0; c < m.num_cells(); ++c)
    for (int e = 0; e < 3; ++e) {
      edge_cell[m.cell_edges[c][e]] = c;
      edge_local[m.cell_edges[c][e]] = e;
    }
  for (int e = 0; e < m.num_edges(); ++e) {
    if (!m.boundary_edge[e]) continue;
    int c = edge_cell[e];
    int le = edge_local[e];
    FacetGeometry fg = facet_geometry(m, e);
    double sign = m.cell_edge_signs[c][le];  // outward = sign * canonical normal
    Vec2 n_out = sign * fg.normal;
    CellBasis sb = s.stress.basis(c);
    s.stress.cell_dofs(c, dofs);
    int piece = sb.num_pieces() > 1 ? le : 0;  // exterior edge le bounds piece le
    const Vec2& a = m.vertices[m.edges[e][0]];
    const Vec2 t(-fg.normal.y(), fg.normal.x());  // canonical tangent
    MatX pts(line.points.size(), 2);
    for (int q = 0; q < line.points.size(); ++q)
      pts.row(q) = (a + line.points[q] * fg.length * t).transpose();
    sb.tabulate(pts, piece, val);
    for (int q = 0; q < line.points.size(); ++q) {
      double w = line.weights[q] * fg.length;
      Vec2 gq = data.g(Vec2(pts(q, 0), pts(q, 1)));
      for (int i = 0; i < sb.ndofs; ++i) {
        Vec2 tn(val[0](q, i) * n_out.x() + val[1](q, i) * n_out.y(),
                val[2](q, i) * n_out.x() + val[3](q, i) * n_out.y());
        g_sigma[dofs[i]] += w * tn.dot(gq);
      }
    }
  }
}

SaddlePointSystem assemble_saddle(const SchemeSpaces& s, const MaterialParams& params,
                                  const RhsData& data, double trace_target)
{
  SaddlePointSystem sys;
  sys.params = params;
  sys.n_sigma = s.stress.ndofs;
  sys.n_u = s.velocity.ndofs;
  sys.n_xi = s.rotation ? s.rotation->ndofs : 0;
  sys.A = assemble_a(s, params);
  sys.B = assemble_b(s);
  if (s.rotation) sys.C = assemble_c(s);
  assemble_rhs(s, data, sys.g_sigma, sys.g_u, sys.g_xi);
  sys.trace_target = trace_target;

  // Trace functional: integral of tr(phi_i).
  sys.trace_functional = VecX::Zero(sys.n_sigma);
  const QuadratureRule rule = quadrature_rule(s.quad_degree);
  std::vector<int> dofs;
  std::vector<MatX> val;
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    CellBasis sb = s.stress.basis(c);
    s.stress.cell_dofs(c, dofs);
    for (int p = 0; p < sb.num_pieces(); ++p) {
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
      sb.tabulate(pts, p, val);
      for (int i = 0; i < sb.ndofs; ++i)
        sys.trace_functional[dofs[i]] +=
            wts.dot(VecX(val[0].col(i))) + wts.dot(VecX(val[3].col(i)));
    }
  }

  if (params.incompressible()) sys.nullspace = identity_coefficients(s);
  return sys;
}

SpMat SaddlePointSystem::full_matrix() const
{
  std::vector<Triplet> trips;
  auto add_block = [&trips](const SpMat& m, int r0, int c0, bool also_transpose) {
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SpMat::InnerIterator it(m, k); it; ++it) {
        trips.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()),
                           it.value());
        if (also_transpose)
          trips.emplace_back(c0 + static_cast<int>(it.col()), r0 + static_cast<int>(it.row()),
                             it.value());
      }
    }
  };
  add_block(A, 0, 0, false);
  add_block(B, n_sigma, 0, true);
  if (n_xi > 0) add_block(C, n_sigma + n_u, 0, true);
  SpMat k(total(), total());
  k.setFromTriplets(trips.begin(), trips.end());
  k.makeCompressed();
  return k;
}

VecX SaddlePointSystem::full_rhs() const
{
  VecX rhs(total());
  rhs << g_sigma, g_u, g_xi;
  return rhs;
}

SpMat assemble_gram(const Space& space, GramKind kind, int quad_degree)
{
  const QuadratureRule rule = quadrature_rule(quad_degree);
  std::vector<Triplet> trips;
  std::vector<int> dofs;
  std::vector<MatX> val, divs;
  for (int c = 0; c < space.mesh->num_cells(); ++c) {
    CellBasis b = space.basis(c);
    space.cell_dofs(c, dofs);
    MatX local = MatX::Zero(b.ndofs, b.ndofs);
    for (int p = 0; p < b.num_pieces(); ++p) {
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, b.pieces[p], pts, wts);
      b.tabulate(pts, p, val);
      for (int comp = 0; comp < b.ncomp; ++comp)
        local += val[comp].transpose() * wts.asDiagonal() * val[comp];
      if (kind == GramKind::Hdiv) {
        b.tabulate_div(pts, p, divs);
        for (auto& d : divs) local += d.transpose() * wts.asDiagonal() * d;
      }
    }
    local = 0.5 * (local + local.transpose().eval());
    scatter(trips, local, dofs, dofs);
  }
  return from_triplets(space.ndofs, space.ndofs, trips);
}

VecX identity_coefficients(const SchemeSpaces& s)
{
  return s.stress.interpolate(field_of([](const Vec2&) { return Mat2(Mat2::Identity()); }));
}

double gram_norm(const SpMat& gram, const VecX& x)
{
  return std::sqrt(std::max(0.0, x.dot(gram * x)));
}

}  // namespace hrmix
