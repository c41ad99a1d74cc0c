#pragma once

#include "hrmix/assembly.hpp"
#include "hrmix/linsolve.hpp"

#include <functional>
#include <string>

namespace hrmix {

/// One manufactured benchmark: exact fields with hand-coded gradients plus
/// the problem data (anisotropy tensor, body force, boundary values).
struct ManufacturedCase {
  std::string name;
  MaterialParams params;
  double delta = 1.0;
  bool transcendental = false;  // drives the data-quadrature degree

  std::function<Vec2(const Vec2&)> u;
  std::function<Mat2(const Vec2&)> grad_u;
  std::function<Mat2(const Vec2&)> sigma;
  std::function<Vec2(const Vec2&)> f;  // div sigma
  std::function<Mat2(const Vec2&)> F;
  std::function<double(const Vec2&)> pressure;  // fluid/Stokes cases only
  std::function<Vec2(const Vec2&)> director;    // nu
  std::function<double(const Vec2&)> frank;     // K_F
  std::function<double(const Vec2&)> g_div;     // div u (fluid cases)

  double Ra = 0.0;
  double trace_target = 0.0;

  Mat2 strain(const Vec2& x) const { return sym(grad_u(x)); }
  Mat2 omega(const Vec2& x) const { return anti(grad_u(x)); }
  Vec2 g(const Vec2& x) const { return u(x); }
  int data_degree(int operator_degree) const
  {
    return transcendental ? std::max(operator_degree, 12) : operator_degree;
  }
};

ManufacturedCase case_example1(double delta);       // rigid body motion, lambda = 1
ManufacturedCase case_example2(double delta);       // transversely isotropic, lambda = 0
ManufacturedCase case_polar2d(double delta);        // polar fluid, lambda = inf
ManufacturedCase case_polar_summary(double delta);  // stressed polar configuration
ManufacturedCase case_stokes_noflow(double Ra);
ManufacturedCase case_by_name(const std::string& name, double delta);

/// Eq. mapping the stress-function-of-strain anisotropy to the strain form.
Mat2 f_from_tilde(const Mat2& f_tilde, const MaterialParams& params);

/// Inverse of f_from_tilde (test oracle).
Mat2 tilde_from_f(const Mat2& f, const MaterialParams& params);

/// Max norm of the doubly-curled tensor field over cell centroids, by nested
/// central finite differences. The wider default step keeps the second-order
/// difference noise below the roundoff amplification of 1/h^2.
double saint_venant_residual(const std::function<Mat2(const Vec2&)>& F, const Mesh& mesh,
                             double h = 1e-3);

/// Checks the case's internal consistency (constitutive law, momentum
/// balance, rotation tensor, incompressibility data) at pseudo-random points.
/// Throws std::runtime_error with a description on failure.
void validate_case(const ManufacturedCase& c, int npoints = 100, unsigned seed = 1234);

RhsData rhs_data(const ManufacturedCase& c, int operator_degree);

struct ErrorReport {
  int ref = 0;
  double delta = 0.0;
  double sigma_error = 0.0;
  double displacement_error = 0.0;
  double omega_err = -1.0;  // negative = not applicable (strong symmetry)
  double velocity_error = 0.0;
  double pressure_error = 0.0;
  double divergence_error = 0.0;
};

ErrorReport compute_errors(const Solution& sol, const ManufacturedCase& c, const SchemeSpaces& s);

}  // namespace hrmix
