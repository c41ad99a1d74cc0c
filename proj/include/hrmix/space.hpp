#pragma once

#include "hrmix/elements.hpp"
#include "hrmix/mesh.hpp"

#include <memory>

namespace hrmix {

/// Global finite element space: an element family instantiated on every cell
/// of a mesh, with entity-blocked global dof numbering (vertices, then edges,
/// then cells). Edge functionals are defined against the canonical edge
/// direction, so shared dofs mean the same functional from both sides.
struct Space {
  std::shared_ptr<const Mesh> mesh;
  Element elem;
  int ndofs = 0;

  int edge_base() const { return elem.dofs_per_vertex * mesh->num_vertices(); }
  int cell_base() const { return edge_base() + elem.dofs_per_edge * mesh->num_edges(); }

  /// Global dofs of a cell, in the local (CellBasis) dof order.
  void cell_dofs(int cell, std::vector<int>& out) const;

  /// Orientation relation per local dof: for edge dofs, +1 iff the cell's
  /// traversal of that edge matches the canonical direction; +1 otherwise.
  void cell_signs(int cell, std::vector<int>& out) const;

  CellBasis basis(int cell) const { return elem.build(*mesh, cell); }

  /// Global interpolant: dof functionals applied to an analytic field.
  VecX interpolate(const FieldFn& f) const;
};

Space make_space(std::shared_ptr<const Mesh> mesh, const Element& elem);

/// Discrete field over a space: evaluates values/divergence/gradient of
/// coefficient vectors piece by piece.
struct FieldView {
  const Space& space;
  const VecX& coeffs;

  /// Values at points inside one piece of a cell; out is npts x ncomp.
  void values(int cell, const CellBasis& basis, const MatX& pts, int piece, MatX& out) const;
  void divergence(int cell, const CellBasis& basis, const MatX& pts, int piece, MatX& out) const;
  void gradient(int cell, const CellBasis& basis, const MatX& pts, int piece, MatX& out) const;

  Mat2 tensor_at(int cell, const Vec2& x) const;
};

}  // namespace hrmix
