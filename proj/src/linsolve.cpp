#include "hrmix/linsolve.hpp"

#ifdef HRMIX_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

#include <cmath>
#include <iostream>

namespace hrmix {

namespace {

#ifdef HRMIX_HAVE_UMFPACK
using Factorization = Eigen::UmfPackLU<SpMat>;
#else
using Factorization = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;
#endif

std::string locate_block(const std::vector<std::pair<std::string, int>>& ends, int row)
{
  for (const auto& [name, end] : ends)
    if (row < end) return name;
  return "full system";
}

}  // namespace

struct DirectSolver::Impl {
  Factorization lu;
  SpMat pinned;   // pinned, unscaled operator (refinement target)
  SpMat scaled;   // equilibrated operator the factorization points into
  VecX scaling;   // symmetric equilibration diag
};

DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

DirectSolver::DirectSolver(const SpMat& matrix, const VecX& nullspace,
                           std::vector<std::pair<std::string, int>> block_ends, int pin_override)
    : impl_(std::make_unique<Impl>()), matrix_(matrix), nullspace_(nullspace)
{
  const int n = static_cast<int>(matrix.rows());

  SpMat k = matrix;
  if (nullspace_.size() > 0) {
    pin_ = pin_override;
    if (pin_ < 0) nullspace_.cwiseAbs().maxCoeff(&pin_);
    if (std::abs(nullspace_[pin_]) < 1e-14 * nullspace_.cwiseAbs().maxCoeff())
      throw SolverError("nullspace", "DirectSolver: pinned dof has no nullspace component");
    // Zero row and column `pin_`, unit diagonal.
    for (int col = 0; col < k.outerSize(); ++col)
      for (SpMat::InnerIterator it(k, col); it; ++it)
        if (it.row() == pin_ || it.col() == pin_) it.valueRef() = 0.0;
    k.prune(0.0);
    k.coeffRef(pin_, pin_) = 1.0;
    k.makeCompressed();
  }
  impl_->pinned = k;

  // Structurally empty rows make the failure attributable to one field block.
  std::vector<char> seen(n, 0);
  for (int col = 0; col < k.outerSize(); ++col)
    for (SpMat::InnerIterator it(k, col); it; ++it)
      if (it.value() != 0.0) seen[it.row()] = 1;
  for (int r = 0; r < n; ++r)
    if (!seen[r])
      throw SolverError(locate_block(block_ends, r),
                        "DirectSolver: empty row " + std::to_string(r) + " in " +
                            locate_block(block_ends, r) + " block");

  // Symmetric equilibration (two Ruiz sweeps).
  VecX d = VecX::Ones(n);
  SpMat ks = k;
  for (int sweep = 0; sweep < 2; ++sweep) {
    VecX rmax = VecX::Zero(n);
    for (int col = 0; col < ks.outerSize(); ++col)
      for (SpMat::InnerIterator it(ks, col); it; ++it)
        rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
    for (int r = 0; r < n; ++r) rmax[r] = (rmax[r] > 0.0) ? std::sqrt(rmax[r]) : 1.0;
    for (int col = 0; col < ks.outerSize(); ++col)
      for (SpMat::InnerIterator it(ks, col); it; ++it)
        it.valueRef() /= rmax[it.row()] * rmax[it.col()];
    d = d.cwiseProduct(rmax);
  }
  impl_->scaling = d;
  impl_->scaled = std::move(ks);

  impl_->lu.compute(impl_->scaled);
  if (impl_->lu.info() != Eigen::Success)
    throw SolverError("full system",
                      "DirectSolver: factorization failed (singular beyond declared nullspace)");
}

VecX DirectSolver::solve(const VecX& rhs, double* residual) const
{
  if (nullspace_.size() > 0) {
    double mismatch = std::abs(nullspace_.dot(rhs.head(nullspace_.size())));
    double scale = nullspace_.norm() * std::max(rhs.norm(), 1e-300);
    if (mismatch > 1e-8 * scale)
      throw SolverError("nullspace", "DirectSolver: right-hand side incompatible with nullspace "
                                     "(relative mismatch " +
                                         std::to_string(mismatch / scale) + ")");
  }

  VecX b = rhs;
  if (pin_ >= 0) b[pin_] = 0.0;

  const VecX& d = impl_->scaling;
  VecX x = impl_->lu.solve(VecX(b.cwiseQuotient(d))).cwiseQuotient(d);
  for (int it = 0; it < 2; ++it) {
    VecX r = b - impl_->pinned * x;
    x += impl_->lu.solve(VecX(r.cwiseQuotient(d))).cwiseQuotient(d);
  }

  if (residual) {
    VecX r = rhs - matrix_ * x;
    *residual = r.norm() / std::max(rhs.norm(), 1e-300);
  }
  return x;
}

SaddleSolver::SaddleSolver(const SaddlePointSystem& sys, int pin_override) : sys_(&sys)
{
  VecX nullfull;
  if (sys.nullspace.size() > 0) {
    nullfull = VecX::Zero(sys.total());
    nullfull.head(sys.n_sigma) = sys.nullspace;
  }
  std::vector<std::pair<std::string, int>> ends = {
      {"stress", sys.n_sigma},
      {"velocity", sys.n_sigma + sys.n_u},
      {"multiplier", sys.total()},
  };
  solver_ = std::make_shared<DirectSolver>(sys.full_matrix(), nullfull, ends, pin_override);
}

Solution SaddleSolver::solve(const VecX& g_sigma, const VecX& g_u, const VecX& g_xi) const
{
  VecX rhs(sys_->total());
  rhs << g_sigma, g_u, g_xi;
  Solution sol;
  VecX x = solver_->solve(rhs, &sol.residual);
  sol.sigma = x.head(sys_->n_sigma);
  sol.u = x.segment(sys_->n_sigma, sys_->n_u);
  sol.omega = x.tail(sys_->n_xi);
  sol.trace_integral = sys_->trace_functional.dot(sol.sigma);
  return sol;
}

Solution SaddleSolver::solve_system() const
{
  return solve(sys_->g_sigma, sys_->g_u, sys_->g_xi);
}

Solution solve_direct(const SaddlePointSystem& sys)
{
  return SaddleSolver(sys).solve_system();
}

Solution postprocess_trace(const Solution& sol, const SaddlePointSystem& sys)
{
  if (!sys.params.incompressible()) {
    std::cerr << "postprocess_trace: lambda is finite, nothing to do\n";
    return sol;
  }
  Solution out = sol;
  double tn = sys.trace_functional.dot(sys.nullspace);  // = 2 |Omega|
  double c = (sys.trace_target - sys.trace_functional.dot(sol.sigma)) / tn;
  out.sigma += c * sys.nullspace;
  out.trace_integral = sys.trace_functional.dot(out.sigma);
  return out;
}

}  // namespace hrmix
