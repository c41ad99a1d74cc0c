#pragma once

#include "hrmix/cases.hpp"
#include "hrmix/linsolve.hpp"

namespace hrmix {

struct ButcherTableau {
  Eigen::Matrix2d a;
  Eigen::Vector2d b;
  Eigen::Vector2d c;
};

/// 2-stage Radau IIA: c = (1/3, 1), stiffly accurate, order 3.
ButcherTableau radau2a_tableau();

/// Stage-coupled integrator for the linear DAE  E dx/dt = r(t) - S x.
/// E may be singular (algebraic rows are zero). The 2N stage matrix is
/// factored once and reused for every step.
class TransientIntegrator {
 public:
  TransientIntegrator(const SpMat& s_mat, const SpMat& e_mat, double dt,
                      const ButcherTableau& tableau = radau2a_tableau());

  /// One step from (t, x); returns x at t + dt (the second stage).
  VecX step(double t, const VecX& x, const std::function<VecX(double)>& rhs) const;

  double dt() const { return dt_; }

 private:
  SpMat s_, e_;
  double dt_;
  ButcherTableau tab_;
  std::shared_ptr<DirectSolver> stage_solver_;
};

struct TransientSnapshot {
  double t = 0.0;
  std::vector<Vec2> centroids;
  std::vector<double> magnitude;  // Frobenius norm of sigma_h at the centroid
};

struct TransientResult {
  std::vector<double> t;
  std::vector<double> sigma_l2;
  std::vector<TransientSnapshot> snapshots;
};

/// Transient polar fluid driven to a stress-free equilibrium by ramped data
/// min(1,t). mu = 1; the constitutive block couples the full stress tensor.
TransientResult run_transient(const SchemeSpaces& s, double delta, double dt, double t_end,
                              const std::vector<double>& snapshot_times = {});

/// The stationary solve matching the ramped data at ramp = 1.
Solution transient_steady_state(const SchemeSpaces& s, double delta);

/// Transient problem data (exposed for tests).
struct TransientData {
  MaterialParams params;                  // mu = 1, lambda = 0 form
  std::function<Mat2(const Vec2&)> F;     // anisotropy at ramp = 1
  std::function<Vec2(const Vec2&)> u0;    // boundary velocity at ramp = 1
};
TransientData transient_polar_data(double delta);

}  // namespace hrmix
