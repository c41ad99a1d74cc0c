#include "hrmix/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace hrmix {

namespace {

// Golub-Welsch nodes/weights for a Jacobi weight (1-x)^alpha (1+x)^beta
// on [-1,1]. Returns nodes ascending.
void gauss_jacobi(int n, double alpha, double beta, VecX& nodes, VecX& weights)
{
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    double a = (k == 0) ? (beta - alpha) / (ab + 2.0)
                        : (beta * beta - alpha * alpha) /
                              ((2.0 * k + ab) * (2.0 * k + ab + 2.0));
    j(k, k) = a;
    if (k + 1 < n) {
      int m = k + 1;
      double num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
      double den = (2.0 * m + ab) * (2.0 * m + ab) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0);
      double b = std::sqrt(num / den);
      j(k, k + 1) = b;
      j(k + 1, k) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes = es.eigenvalues();
  // mu0 = integral of the weight over [-1,1] = 2^(a+b+1) B(a+1, b+1)
  const double mu0 = std::pow(2.0, ab + 1.0) *
                     std::exp(std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                              std::lgamma(ab + 2.0));
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

}  // namespace

LineRule gauss_legendre_01(int npts)
{
  if (npts < 1) throw std::invalid_argument("gauss_legendre_01: need at least one point");
  VecX x, w;
  gauss_jacobi(npts, 0.0, 0.0, x, w);
  LineRule r;
  r.points = (x.array() + 1.0) * 0.5;
  r.weights = w * 0.5;
  return r;
}

LineRule line_rule_for_degree(int degree)
{
  return gauss_legendre_01(degree / 2 + 1);
}

QuadratureRule quadrature_rule(int degree)
{
  if (degree < 1 || degree > 20)
    throw std::invalid_argument("quadrature_rule: degree must be in [1, 20]");

  // Collapsed (Duffy) product rule: x = a(1-b), y = b with Gauss-Legendre in a
  // and Gauss-Jacobi(1,0) in b absorbing the (1-b) Jacobian factor.
  const int m = degree / 2 + 1;
  LineRule ga = gauss_legendre_01(m);
  VecX xb, wb;
  gauss_jacobi(m, 1.0, 0.0, xb, wb);
  // Map weight (1-x) on [-1,1] to (1-b) on [0,1]: b = (x+1)/2, db = dx/2,
  // (1-x) = 2(1-b) => w01 = w / 4.
  VecX b = (xb.array() + 1.0) * 0.5;
  VecX wjac = wb * 0.25;

  QuadratureRule rule;
  rule.degree = degree;
  rule.points.resize(m * m, 2);
  rule.weights.resize(m * m);
  int q = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j, ++q) {
      rule.points(q, 0) = ga.points[i] * (1.0 - b[j]);
      rule.points(q, 1) = b[j];
      rule.weights[q] = ga.weights[i] * wjac[j];
    }
  }
  return rule;
}

}  // namespace hrmix
