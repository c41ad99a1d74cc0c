#pragma once

#include "hrmix/cases.hpp"

namespace hrmix {

struct RobustnessReport {
  std::string scheme;
  int level = 0;
  double invariance_defect = -1.0;
  double kernel_violation = -1.0;  // max of the div and asymmetry probes
  double beta_h = -1.0;
  double alpha_h = -1.0;
  double c_phi = -1.0;
};

/// Max relative distance between div(tau_h) and its L2 projection onto the
/// displacement space, over pseudo-random coefficient vectors. A numerical
/// certificate that the stress divergence lands inside V_h.
double div_projection_witness(const SchemeSpaces& s, int trials = 50, unsigned seed = 7);

/// L2-orthogonal projection of an analytic displacement field onto V_h.
VecX phi_projection(const SchemeSpaces& s, const std::function<Vec2(const Vec2&)>& w,
                    int degree = 12);

/// Operator-norm estimate of the projection over random smooth fields (<= 1).
double phi_operator_norm_estimate(const SchemeSpaces& s, int trials = 20, unsigned seed = 11);

struct ShiftReport {
  double sigma_defect = 0.0;        // |sigma_h - sigma_h,r|_div / (1 + |sigma_h|_div)
  double multiplier_residual = -1;  // |u_h,r - u_h - Phi_h w| / |Phi_h w|, strong schemes
};

/// Solves the case twice, the second time with the first-equation data
/// shifted by B(tau, r) for r = (w, anti(grad w)); weak schemes include the
/// rotation pairing in the shift.
ShiftReport shift_invariance_test(const SchemeSpaces& s, const ManufacturedCase& c,
                                  const std::function<Vec2(const Vec2&)>& w,
                                  const std::function<Mat2(const Vec2&)>& grad_w);

/// Same, for a discrete multiplier r given by coefficient vectors.
ShiftReport shift_invariance_test_discrete(const SchemeSpaces& s, const ManufacturedCase& c,
                                           const VecX& r_u, const VecX& r_xi);

struct KernelProbe {
  double div_violation = 0.0;   // max pointwise |div tau| / |tau|_div
  double asym_violation = 0.0;  // max pointwise |anti tau| / |tau|_div
  double violation() const { return std::max(div_violation, asym_violation); }
};

/// Samples random members of ker B_h (nullspace of the stacked constraint
/// blocks) and measures their pointwise divergence and asymmetry.
/// Throws std::runtime_error when the discrete kernel is empty.
KernelProbe kernel_inclusion_probe(const SchemeSpaces& s, int trials = 20, unsigned seed = 17);

/// Discrete inf-sup constant via a dense generalized eigensolve
/// (refuses systems beyond 20000 dofs).
double infsup_estimate(const SchemeSpaces& s);

/// Kernel coercivity constant of a(.,.) on ker B_h in the H(div) metric;
/// for lambda = inf the trace-mean direction is excluded.
double kernel_coercivity_estimate(const SchemeSpaces& s, const MaterialParams& params);

}  // namespace hrmix
