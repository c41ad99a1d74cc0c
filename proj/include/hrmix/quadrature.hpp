#pragma once

#include "hrmix/types.hpp"

#include <vector>

namespace hrmix {

/// Quadrature rule on the reference triangle {x,y >= 0, x+y <= 1}.
/// Weights sum to the reference area 1/2.
struct QuadratureRule {
  MatX points;   // npts x 2
  VecX weights;  // npts
  int degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Rule exact for total degree <= degree, 1 <= degree <= 20.
QuadratureRule quadrature_rule(int degree);

/// Gauss-Legendre rule on [0,1], exact for degree <= 2n-1.
struct LineRule {
  VecX points;
  VecX weights;
};
LineRule gauss_legendre_01(int npts);

/// Line rule exact at least to the given polynomial degree.
LineRule line_rule_for_degree(int degree);

}  // namespace hrmix
