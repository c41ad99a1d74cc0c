#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>

namespace hrmix {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInfLambda = std::numeric_limits<double>::infinity();

/// Deviatoric part: m - (tr m / 2) I.
inline Mat2 deviatoric(const Mat2& m)
{
  return m - 0.5 * m.trace() * Mat2::Identity();
}

/// Skew part: (m - m^T) / 2.
inline Mat2 anti(const Mat2& m)
{
  return 0.5 * (m - m.transpose());
}

/// Symmetric part: (m + m^T) / 2.
inline Mat2 sym(const Mat2& m)
{
  return 0.5 * (m + m.transpose());
}

inline double frobenius(const Mat2& a, const Mat2& b)
{
  return a.cwiseProduct(b).sum();
}

}  // namespace hrmix
