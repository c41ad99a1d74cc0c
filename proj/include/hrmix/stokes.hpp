#pragma once

#include "hrmix/cases.hpp"
#include "hrmix/linsolve.hpp"

namespace hrmix {

/// Velocity/pressure pair for the no-flow benchmark. Scott-Vogelius lives on
/// the barycentric refinement; Taylor-Hood on the mesh itself.
struct StokesSpaces {
  SchemeConfig config;
  std::shared_ptr<const Mesh> mesh;  // mesh carrying the spaces
  Space velocity;                    // continuous P2 vector
  Space pressure;                    // continuous P1 (HT) or discontinuous P1 (SV)
  std::vector<int> reduced_index;    // velocity dof -> interior index, -1 on boundary
  std::vector<int> interior_dofs;
  int quad_degree = 8;
};

StokesSpaces build_stokes(const std::shared_ptr<const Mesh>& macro_mesh,
                          const SchemeConfig& config);

struct StokesSystem {
  SpMat A;  // viscous block on interior velocity dofs
  SpMat B;  // -(div v, q)
  VecX f;   // reduced forcing
  int n_u = 0, n_p = 0;
  VecX pressure_nullspace;  // coefficients of the constant pressure
};

/// Homogeneous-Dirichlet Stokes system; throws std::invalid_argument when a
/// Scott-Vogelius pair is requested on a mesh without a barycentric parent.
StokesSystem assemble_stokes(const StokesSpaces& s, const ManufacturedCase& c);

struct StokesSolution {
  VecX u;  // full velocity coefficients (boundary dofs zero)
  VecX p;
  double residual = 0.0;
};

StokesSolution solve_stokes(const StokesSpaces& s, const StokesSystem& sys);

/// Forcing vector alone (reduced to interior dofs), for factorization reuse.
VecX assemble_stokes_forcing(const StokesSpaces& s, const ManufacturedCase& c);

/// Factor the Ra-independent matrix once and solve many forcings.
class StokesSolver {
 public:
  StokesSolver(const StokesSpaces& s, const StokesSystem& sys);
  StokesSolution solve(const VecX& forcing) const;

 private:
  const StokesSpaces* spaces_;
  int n_u_, n_p_;
  std::shared_ptr<DirectSolver> solver_;
};

/// H1 velocity error, mean-aligned L2 pressure error, L2 norm of div u_h.
ErrorReport compute_stokes_errors(const StokesSolution& sol, const ManufacturedCase& c,
                                  const StokesSpaces& s);

}  // namespace hrmix
