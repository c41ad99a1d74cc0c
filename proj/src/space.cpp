#include "hrmix/space.hpp"

#include <stdexcept>

namespace hrmix {

Space make_space(std::shared_ptr<const Mesh> mesh, const Element& elem)
{
  Space s;
  s.mesh = std::move(mesh);
  s.elem = elem;
  s.ndofs = elem.dofs_per_vertex * s.mesh->num_vertices() +
            elem.dofs_per_edge * s.mesh->num_edges() + elem.dofs_per_cell * s.mesh->num_cells();
  return s;
}

void Space::cell_dofs(int cell, std::vector<int>& out) const
{
  out.clear();
  out.reserve(elem.ndofs);
  const auto& cv = mesh->cells[cell];
  for (int v = 0; v < 3; ++v)
    for (int i = 0; i < elem.dofs_per_vertex; ++i)
      out.push_back(cv[v] * elem.dofs_per_vertex + i);
  int eb = edge_base();
  for (int e = 0; e < 3; ++e) {
    int ge = mesh->cell_edges[cell][e];
    for (int i = 0; i < elem.dofs_per_edge; ++i) out.push_back(eb + ge * elem.dofs_per_edge + i);
  }
  int cb = cell_base();
  for (int i = 0; i < elem.dofs_per_cell; ++i) out.push_back(cb + cell * elem.dofs_per_cell + i);
}

void Space::cell_signs(int cell, std::vector<int>& out) const
{
  out.assign(elem.ndofs, 1);
  int base = 3 * elem.dofs_per_vertex;
  for (int e = 0; e < 3; ++e)
    for (int i = 0; i < elem.dofs_per_edge; ++i)
      out[base + e * elem.dofs_per_edge + i] = mesh->cell_edge_signs[cell][e];
}

VecX Space::interpolate(const FieldFn& f) const
{
  VecX coeffs = VecX::Zero(ndofs);
  std::vector<int> dofs;
  for (int c = 0; c < mesh->num_cells(); ++c) {
    VecX local = elem.interpolate_local(*mesh, c, f);
    cell_dofs(c, dofs);
    for (int i = 0; i < local.size(); ++i) coeffs[dofs[i]] = local[i];
  }
  return coeffs;
}

namespace {

VecX local_coeffs(const Space& space, const VecX& coeffs, int cell)
{
  std::vector<int> dofs;
  space.cell_dofs(cell, dofs);
  VecX lc(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) lc[static_cast<int>(i)] = coeffs[dofs[i]];
  return lc;
}

}  // namespace

void FieldView::values(int cell, const CellBasis& basis, const MatX& pts, int piece,
                       MatX& out) const
{
  VecX lc = local_coeffs(space, coeffs, cell);
  std::vector<MatX> tab;
  basis.tabulate(pts, piece, tab);
  out.resize(pts.rows(), basis.ncomp);
  for (int c = 0; c < basis.ncomp; ++c) out.col(c) = tab[c] * lc;
}

void FieldView::divergence(int cell, const CellBasis& basis, const MatX& pts, int piece,
                           MatX& out) const
{
  VecX lc = local_coeffs(space, coeffs, cell);
  std::vector<MatX> tab;
  basis.tabulate_div(pts, piece, tab);
  out.resize(pts.rows(), static_cast<int>(tab.size()));
  for (std::size_t c = 0; c < tab.size(); ++c) out.col(static_cast<int>(c)) = tab[c] * lc;
}

void FieldView::gradient(int cell, const CellBasis& basis, const MatX& pts, int piece,
                         MatX& out) const
{
  VecX lc = local_coeffs(space, coeffs, cell);
  std::vector<MatX> tab;
  basis.tabulate_grad(pts, piece, tab);
  out.resize(pts.rows(), static_cast<int>(tab.size()));
  for (std::size_t c = 0; c < tab.size(); ++c) out.col(static_cast<int>(c)) = tab[c] * lc;
}

Mat2 FieldView::tensor_at(int cell, const Vec2& x) const
{
  if (space.elem.shape != ValueShape::Tensor)
    throw std::logic_error("FieldView::tensor_at: not a tensor space");
  CellBasis basis = space.basis(cell);
  int piece = basis.find_piece(x);
  MatX pts(1, 2);
  pts << x.x(), x.y();
  MatX v;
  values(cell, basis, pts, piece, v);
  Mat2 m;
  m << v(0, 0), v(0, 1), v(0, 2), v(0, 3);
  return m;
}

}  // namespace hrmix
