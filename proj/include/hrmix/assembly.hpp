#pragma once

#include "hrmix/space.hpp"

#include <optional>
#include <string>

namespace hrmix {

/// Material parameters of the linearized constitutive law. lambda may be
/// infinite (incompressible limit); the trace coefficient is then exactly 0.
struct MaterialParams {
  double mu = 1.0;
  double lambda = 1.0;
  static constexpr int d = 2;

  double trace_coefficient() const
  {
    return std::isinf(lambda) ? 0.0 : 1.0 / (d * (2.0 * mu + d * lambda));
  }
  bool incompressible() const { return std::isinf(lambda); }
};

enum class Symmetry { Strong, Weak };
enum class Scheme { JMK, PEERS, AFW, TaylorHood, ScottVogelius };

struct SchemeConfig {
  Scheme scheme = Scheme::JMK;
  int k = 1;  // polynomial order for AFW / Lagrange pairs

  Symmetry symmetry() const { return scheme == Scheme::JMK ? Symmetry::Strong : Symmetry::Weak; }
  bool is_stokes() const { return scheme == Scheme::TaylorHood || scheme == Scheme::ScottVogelius; }
  std::string name() const;
};

SchemeConfig parse_scheme(const std::string& name);

/// Spaces of one mixed elasticity/flow scheme on a mesh. For the composite
/// strong scheme the displacement space lives on the barycentric refinement.
struct SchemeSpaces {
  SchemeConfig config;
  std::shared_ptr<const Mesh> mesh;   // macro mesh
  std::shared_ptr<const Mesh> split;  // barycentric refinement (composite only)
  Space stress;
  Space velocity;
  std::optional<Space> rotation;
  int quad_degree = 6;  // operator quadrature

  bool composite() const { return split != nullptr; }
  /// Assembly cell of (macro cell, piece): split child for composite schemes.
  int piece_cell(int cell, int piece) const { return composite() ? 3 * cell + piece : cell; }
  int num_pieces() const { return composite() ? 3 : 1; }
};

SchemeSpaces build_scheme(std::shared_ptr<const Mesh> mesh, const SchemeConfig& config);

/// Assembled blocks of the saddle system
///   [ A  B^T  C^T ] [sigma]   [g_sigma]
///   [ B   0    0  ] [  u  ] = [g_u    ]
///   [ C   0    0  ] [omega]   [g_xi   ]
struct SaddlePointSystem {
  SpMat A, B, C;
  VecX g_sigma, g_u, g_xi;
  int n_sigma = 0, n_u = 0, n_xi = 0;
  MaterialParams params;
  VecX nullspace;         // stress coefficients of the identity tensor (lambda = inf)
  VecX trace_functional;  // t[i] = integral of tr(phi_i)
  double trace_target = 0.0;

  int total() const { return n_sigma + n_u + n_xi; }
  SpMat full_matrix() const;
  VecX full_rhs() const;
};

SpMat assemble_a(const SchemeSpaces& s, const MaterialParams& params);
SpMat assemble_b(const SchemeSpaces& s);
/// Weak mode only; throws std::logic_error when the scheme has no multiplier.
SpMat assemble_c(const SchemeSpaces& s);

struct RhsData {
  std::function<Mat2(const Vec2&)> F;   // anisotropy tensor
  std::function<Vec2(const Vec2&)> f;   // body force
  std::function<Vec2(const Vec2&)> g;   // boundary value of u
  int data_degree = 8;                  // quadrature degree for the data terms
};

void assemble_rhs(const SchemeSpaces& s, const RhsData& data, VecX& g_sigma, VecX& g_u, VecX& g_xi);

/// Full system for one scheme and one set of problem data.
SaddlePointSystem assemble_saddle(const SchemeSpaces& s, const MaterialParams& params,
                                  const RhsData& data, double trace_target = 0.0);

enum class GramKind { L2, Hdiv };
SpMat assemble_gram(const Space& space, GramKind kind, int quad_degree);

/// Stress coefficients of the identity tensor.
VecX identity_coefficients(const SchemeSpaces& s);

/// Energy norm sqrt(x^T G x), clamped at zero.
double gram_norm(const SpMat& gram, const VecX& x);

}  // namespace hrmix
