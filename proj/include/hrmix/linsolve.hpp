#pragma once

#include "hrmix/assembly.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace hrmix {

struct Solution {
  VecX sigma, u, omega;  // omega is empty for strongly symmetric schemes
  double residual = 0.0;
  double trace_integral = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(std::string which_block, const std::string& msg)
      : std::runtime_error(msg), block(std::move(which_block))
  {
  }
  const std::string block;
};

/// Sparse direct factorization of a symmetric indefinite system with an
/// optional one-dimensional nullspace removed by pinning one dof. The matrix
/// is symmetrically equilibrated before factoring; solves apply two steps of
/// iterative refinement against the unscaled operator.
class DirectSolver {
 public:
  /// block_bounds: field boundaries used in error messages, e.g. {0, ns, ns+nu, n}.
  DirectSolver(const SpMat& matrix, const VecX& nullspace = VecX(),
               std::vector<std::pair<std::string, int>> block_ends = {}, int pin_override = -1);
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  /// Solves K x = rhs; checks compatibility against the declared nullspace.
  VecX solve(const VecX& rhs, double* residual = nullptr) const;

  int pinned_dof() const { return pin_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SpMat matrix_;  // original (unpinned) operator, for residuals
  VecX nullspace_;
  int pin_ = -1;
};

/// Factor once, solve many right-hand sides of the same saddle system.
class SaddleSolver {
 public:
  explicit SaddleSolver(const SaddlePointSystem& sys, int pin_override = -1);

  Solution solve(const VecX& g_sigma, const VecX& g_u, const VecX& g_xi) const;
  Solution solve_system() const;  // the system's own right-hand side
  int pinned_dof() const { return solver_->pinned_dof(); }

 private:
  std::shared_ptr<DirectSolver> solver_;
  const SaddlePointSystem* sys_;
};

Solution solve_direct(const SaddlePointSystem& sys);

/// lambda = inf: shift sigma by c*I so the trace integral matches the target.
/// Otherwise a warning no-op.
Solution postprocess_trace(const Solution& sol, const SaddlePointSystem& sys);

}  // namespace hrmix
