#pragma once

#include "hrmix/mesh.hpp"
#include "hrmix/quadrature.hpp"
#include "hrmix/types.hpp"

#include <functional>
#include <vector>

namespace hrmix {

enum class ValueShape { Scalar, Vector, Tensor };

enum class Family {
  DGScalar,
  DGVector,
  DGAntisym,
  Lagrange,
  LagrangeVector,
  BDM,         // vector-valued H(div) row space
  BDMTensor,   // two stacked BDM rows
  PeersStress,
  PeersMultiplier,
  JohnsonMercier,
};

/// Generic field with up to four components; unused components are ignored.
/// Scalar fields use [0], vectors [0..1], tensors row-major [0..3].
using FieldFn = std::function<Eigen::Vector4d(const Vec2&)>;

template <class F>
FieldFn field_of(F f)
{
  using R = std::invoke_result_t<F, const Vec2&>;
  return [f = std::move(f)](const Vec2& x) {
    Eigen::Vector4d v = Eigen::Vector4d::Zero();
    if constexpr (std::is_convertible_v<R, double>) {
      v[0] = f(x);
    } else if constexpr (R::SizeAtCompileTime == 2) {
      v.head<2>() = f(x);
    } else {
      Mat2 m = f(x);
      v << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
    }
    return v;
  };
}

/// Basis of one element instantiated on a physical cell. Piecewise
/// polynomial over `pieces` (a single triangle, or the three barycentric
/// subtriangles for the composite family). Coefficients are stored over
/// scaled monomials centered at the macro-cell centroid.
struct CellBasis {
  ValueShape shape = ValueShape::Scalar;
  int ncomp = 1;
  int ndofs = 0;
  int nmono = 0;
  int degree = 0;
  Vec2 center = Vec2::Zero();
  double scale = 1.0;
  std::vector<std::array<Vec2, 3>> pieces;
  std::vector<MatX> coeff;  // per piece: ndofs x (ncomp*nmono), component blocks

  int num_pieces() const { return static_cast<int>(pieces.size()); }
  int find_piece(const Vec2& x) const;

  /// values[c] is npts x ndofs for component c.
  void tabulate(const MatX& pts, int piece, std::vector<MatX>& values) const;
  /// Row-wise divergence; tensor fills 2 blocks, vector 1.
  void tabulate_div(const MatX& pts, int piece, std::vector<MatX>& divs) const;
  /// Gradients, component-major: d comp_c / d x_d at block 2c+d.
  void tabulate_grad(const MatX& pts, int piece, std::vector<MatX>& grads) const;

  Eigen::Vector4d value(const Vec2& x, int dof) const;  // locates the piece itself
};

/// Element family descriptor plus per-cell builder (the spec's reference
/// element role: dof layout, tabulation, composite flag).
struct Element {
  Family family = Family::DGScalar;
  int degree = 0;
  ValueShape shape = ValueShape::Scalar;
  int ncomp = 1;
  int ndofs = 0;
  int dofs_per_vertex = 0;
  int dofs_per_edge = 0;
  int dofs_per_cell = 0;
  bool composite = false;
  bool hdiv = false;

  CellBasis build(const Mesh& mesh, int cell) const;
  /// Dof functionals applied to an analytic field, in local dof order.
  VecX interpolate_local(const Mesh& mesh, int cell, const FieldFn& f) const;
};

Element make_dg_scalar(int k);
Element make_dg_vector(int k);
Element make_dg_antisym(int k);
Element make_lagrange(int k);
Element make_lagrange_vector(int k);
Element make_bdm(int k);
Element make_bdm_tensor(int k);
Element make_peers_stress();
Element make_peers_multiplier();
Element make_johnson_mercier();

/// Physical quadrature points/weights for a triangle (weights sum to area).
void map_rule_to_triangle(const QuadratureRule& rule, const std::array<Vec2, 3>& tri,
                          MatX& pts, VecX& wts);

}  // namespace hrmix
