#include "hrmix/robustness.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace hrmix {

namespace {

constexpr int kDenseCap = 20000;

VecX random_vector(int n, std::uint64_t& state)
{
  VecX v(n);
  for (int i = 0; i < n; ++i) {
    state = splitmix64(state);
    v[i] = 2.0 * (double(state >> 11) * 0x1.0p-53) - 1.0;
  }
  return v;
}

// Assembled shift of the first-equation data by b(tau, w) [+ c(tau, eta)].
VecX analytic_shift_vector(const SchemeSpaces& s, const std::function<Vec2(const Vec2&)>& w,
                           const std::function<Mat2(const Vec2&)>& eta, int degree)
{
  const QuadratureRule rule = quadrature_rule(degree);
  VecX shift = VecX::Zero(s.stress.ndofs);
  std::vector<int> dofs;
  std::vector<MatX> divs, vals;
  const bool weak = s.rotation.has_value();
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    CellBasis sb = s.stress.basis(c);
    s.stress.cell_dofs(c, dofs);
    for (int p = 0; p < sb.num_pieces(); ++p) {
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
      sb.tabulate_div(pts, p, divs);
      if (weak) sb.tabulate(pts, p, vals);
      for (int q = 0; q < pts.rows(); ++q) {
        Vec2 x(pts(q, 0), pts(q, 1));
        Vec2 wq = w(x);
        double wt = wts[q];
        for (int i = 0; i < sb.ndofs; ++i) {
          double contrib = wt * (divs[0](q, i) * wq.x() + divs[1](q, i) * wq.y());
          if (weak) {
            Mat2 e = eta(x);
            contrib += wt * (e(0, 0) * vals[0](q, i) + e(0, 1) * vals[1](q, i) +
                             e(1, 0) * vals[2](q, i) + e(1, 1) * vals[3](q, i));
          }
          shift[dofs[i]] += contrib;
        }
      }
    }
  }
  return shift;
}

ShiftReport run_shift(const SchemeSpaces& s, const ManufacturedCase& c, const VecX& shift_sigma,
                      const VecX* phi_w)
{
  SaddlePointSystem sys =
      assemble_saddle(s, c.params, rhs_data(c, s.quad_degree), c.trace_target);
  SaddleSolver solver(sys);
  Solution base = solver.solve_system();
  Solution shifted = solver.solve(VecX(sys.g_sigma + shift_sigma), sys.g_u, sys.g_xi);
  if (sys.params.incompressible()) {
    base = postprocess_trace(base, sys);
    shifted = postprocess_trace(shifted, sys);
  }

  SpMat x_gram = assemble_gram(s.stress, GramKind::Hdiv, s.quad_degree);
  ShiftReport rep;
  double base_norm = gram_norm(x_gram, base.sigma);
  rep.sigma_defect = gram_norm(x_gram, VecX(base.sigma - shifted.sigma)) / (1.0 + base_norm);

  if (phi_w) {
    SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
    VecX diff = shifted.u - base.u - *phi_w;
    double denom = std::max(gram_norm(m_v, *phi_w), 1e-300);
    rep.multiplier_residual = gram_norm(m_v, diff) / denom;
  }
  return rep;
}

MatX dense_constraints(const SchemeSpaces& s, const SpMat& b_blk, const SpMat* c_blk,
                       const VecX* trace_row)
{
  int rows = static_cast<int>(b_blk.rows()) + (c_blk ? static_cast<int>(c_blk->rows()) : 0) +
             (trace_row ? 1 : 0);
  MatX k = MatX::Zero(rows, s.stress.ndofs);
  k.topRows(b_blk.rows()) = MatX(b_blk);
  if (c_blk) k.middleRows(b_blk.rows(), c_blk->rows()) = MatX(*c_blk);
  if (trace_row) k.row(rows - 1) = trace_row->transpose();
  return k;
}

MatX kernel_basis(const MatX& constraints)
{
  Eigen::FullPivLU<MatX> lu(constraints);  // rank-revealing, deterministic
  lu.setThreshold(1e-10);
  if (lu.dimensionOfKernel() <= 0)
    throw std::runtime_error("kernel_basis: discrete kernel is empty");
  return lu.kernel();
}

}  // namespace

double div_projection_witness(const SchemeSpaces& s, int trials, unsigned seed)
{
  SpMat b_blk = assemble_b(s);
  SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
  Eigen::SimplicialLDLT<SpMat> mass(m_v);
  if (mass.info() != Eigen::Success)
    throw std::runtime_error("div_projection_witness: velocity mass factorization failed");

  const QuadratureRule rule = quadrature_rule(s.quad_degree);
  std::uint64_t state = seed;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    VecX tau = random_vector(s.stress.ndofs, state);
    VecX proj = mass.solve(VecX(b_blk * tau));
    FieldView tau_view{s.stress, tau};
    FieldView proj_view{s.velocity, proj};
    // Pointwise distance between div(tau_h) and its projection.
    double num = 0.0, den = 0.0;
    for (int c = 0; c < s.mesh->num_cells(); ++c) {
      CellBasis sb = s.stress.basis(c);
      for (int p = 0; p < s.num_pieces(); ++p) {
        MatX pts;
        VecX wts;
        map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
        MatX dv, pv;
        tau_view.divergence(c, sb, pts, p, dv);
        int vc = s.piece_cell(c, p);
        CellBasis vb = s.velocity.basis(vc);
        proj_view.values(vc, vb, pts, 0, pv);
        for (int q = 0; q < pts.rows(); ++q) {
          num += wts[q] * (Vec2(dv(q, 0), dv(q, 1)) - Vec2(pv(q, 0), pv(q, 1))).squaredNorm();
          den += wts[q] * Vec2(dv(q, 0), dv(q, 1)).squaredNorm();
        }
      }
    }
    if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

VecX phi_projection(const SchemeSpaces& s, const std::function<Vec2(const Vec2&)>& w, int degree)
{
  SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
  const QuadratureRule rule = quadrature_rule(degree);
  VecX rhs = VecX::Zero(s.velocity.ndofs);
  std::vector<int> dofs;
  std::vector<MatX> vals;
  for (int c = 0; c < s.velocity.mesh->num_cells(); ++c) {
    CellBasis vb = s.velocity.basis(c);
    s.velocity.cell_dofs(c, dofs);
    MatX pts;
    VecX wts;
    map_rule_to_triangle(rule, vb.pieces[0], pts, wts);
    vb.tabulate(pts, 0, vals);
    for (int q = 0; q < pts.rows(); ++q) {
      Vec2 wq = w(Vec2(pts(q, 0), pts(q, 1)));
      for (int i = 0; i < vb.ndofs; ++i)
        rhs[dofs[i]] += wts[q] * (wq.x() * vals[0](q, i) + wq.y() * vals[1](q, i));
    }
  }
  Eigen::SimplicialLDLT<SpMat> mass(m_v);
  return mass.solve(rhs);
}

double phi_operator_norm_estimate(const SchemeSpaces& s, int trials, unsigned seed)
{
  SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
  const QuadratureRule rule = quadrature_rule(12);
  std::uint64_t state = seed;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    // random low-order polynomial field
    VecX cf = random_vector(12, state);
    auto w = [&cf](const Vec2& p) {
      double x = p.x(), y = p.y();
      return Vec2(cf[0] + cf[1] * x + cf[2] * y + cf[3] * x * y + cf[4] * x * x + cf[5] * y * y,
                  cf[6] + cf[7] * x + cf[8] * y + cf[9] * x * y + cf[10] * x * x + cf[11] * y * y);
    };
    VecX proj = phi_projection(s, w);
    double pn = gram_norm(m_v, proj);
    double wn = 0.0;
    for (int c = 0; c < s.velocity.mesh->num_cells(); ++c) {
      CellBasis vb = s.velocity.basis(c);
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, vb.pieces[0], pts, wts);
      for (int q = 0; q < pts.rows(); ++q) wn += wts[q] * w(Vec2(pts(q, 0), pts(q, 1))).squaredNorm();
    }
    wn = std::sqrt(wn);
    if (wn > 0.0) worst = std::max(worst, pn / wn);
  }
  return worst;
}

ShiftReport shift_invariance_test(const SchemeSpaces& s, const ManufacturedCase& c,
                                  const std::function<Vec2(const Vec2&)>& w,
                                  const std::function<Mat2(const Vec2&)>& grad_w)
{
  auto eta = [grad_w](const Vec2& x) { return anti(grad_w(x)); };
  int degree = std::max(s.quad_degree, c.data_degree(s.quad_degree));
  VecX shift = analytic_shift_vector(s, w, eta, degree);
  if (s.rotation) return run_shift(s, c, shift, nullptr);
  VecX phi_w = phi_projection(s, w, degree);
  return run_shift(s, c, shift, &phi_w);
}

ShiftReport shift_invariance_test_discrete(const SchemeSpaces& s, const ManufacturedCase& c,
                                           const VecX& r_u, const VecX& r_xi)
{
  SpMat b_blk = assemble_b(s);
  VecX shift = b_blk.transpose() * r_u;
  if (s.rotation) {
    SpMat c_blk = assemble_c(s);
    shift += c_blk.transpose() * r_xi;
    return run_shift(s, c, shift, nullptr);
  }
  return run_shift(s, c, shift, &r_u);  // Phi_h r = r for discrete r
}

KernelProbe kernel_inclusion_probe(const SchemeSpaces& s, int trials, unsigned seed)
{
  if (s.stress.ndofs > kDenseCap)
    throw std::runtime_error("kernel_inclusion_probe: stress space exceeds the dense cap");
  SpMat b_blk = assemble_b(s);
  SpMat c_blk;
  if (s.rotation) c_blk = assemble_c(s);
  MatX constraints = dense_constraints(s, b_blk, s.rotation ? &c_blk : nullptr, nullptr);
  MatX kern = kernel_basis(constraints);

  SpMat x_gram = assemble_gram(s.stress, GramKind::Hdiv, s.quad_degree);
  const QuadratureRule rule = quadrature_rule(s.quad_degree);

  KernelProbe probe;
  std::uint64_t state = seed;
  std::vector<MatX> vals, divs;
  for (int t = 0; t < trials; ++t) {
    VecX tau = kern * random_vector(static_cast<int>(kern.cols()), state);
    double norm = gram_norm(x_gram, tau);
    if (norm <= 0.0) continue;
    FieldView view{s.stress, tau};
    double max_div = 0.0, max_asym = 0.0;
    for (int c = 0; c < s.mesh->num_cells(); ++c) {
      CellBasis sb = s.stress.basis(c);
      for (int p = 0; p < sb.num_pieces(); ++p) {
        MatX pts;
        VecX wts;
        map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
        MatX v, d;
        view.values(c, sb, pts, p, v);
        view.divergence(c, sb, pts, p, d);
        for (int q = 0; q < pts.rows(); ++q) {
          max_div = std::max(max_div, Vec2(d(q, 0), d(q, 1)).norm());
          max_asym = std::max(max_asym, std::abs(0.5 * (v(q, 1) - v(q, 2))) * std::sqrt(2.0));
        }
      }
    }
    probe.div_violation = std::max(probe.div_violation, max_div / norm);
    probe.asym_violation = std::max(probe.asym_violation, max_asym / norm);
  }
  return probe;
}

double infsup_estimate(const SchemeSpaces& s)
{
  int n_q = s.velocity.ndofs + (s.rotation ? s.rotation->ndofs : 0);
  if (s.stress.ndofs + n_q > kDenseCap)
    throw std::runtime_error("infsup_estimate: system exceeds the dense eigensolve cap");

  SpMat b_blk = assemble_b(s);
  SpMat c_blk;
  if (s.rotation) c_blk = assemble_c(s);
  MatX k = dense_constraints(s, b_blk, s.rotation ? &c_blk : nullptr, nullptr);

  MatX x = MatX(assemble_gram(s.stress, GramKind::Hdiv, s.quad_degree));
  Eigen::LLT<MatX> xllt(x);
  MatX g = k * xllt.solve(k.transpose());

  MatX mq = MatX::Zero(n_q, n_q);
  mq.topLeftCorner(s.velocity.ndofs, s.velocity.ndofs) =
      MatX(assemble_gram(s.velocity, GramKind::L2, s.quad_degree));
  if (s.rotation)
    mq.bottomRightCorner(s.rotation->ndofs, s.rotation->ndofs) =
        MatX(assemble_gram(*s.rotation, GramKind::L2, s.quad_degree));

  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(g, mq);
  const VecX& ev = es.eigenvalues();
  double max_ev = ev[ev.size() - 1];
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-12 * std::max(max_ev, 1e-300)) return std::sqrt(ev[i]);
  return 0.0;
}

double kernel_coercivity_estimate(const SchemeSpaces& s, const MaterialParams& params)
{
  int n_q = s.velocity.ndofs + (s.rotation ? s.rotation->ndofs : 0);
  if (s.stress.ndofs + n_q > kDenseCap)
    throw std::runtime_error("kernel_coercivity_estimate: system exceeds the dense cap");

  SpMat b_blk = assemble_b(s);
  SpMat c_blk;
  if (s.rotation) c_blk = assemble_c(s);
  VecX trace_row;
  if (params.incompressible()) {
    // Exclude the trace-mean direction, matching the zero-mean stress space.
    const QuadratureRule rule = quadrature_rule(s.quad_degree);
    trace_row = VecX::Zero(s.stress.ndofs);
    std::vector<int> dofs;
    std::vector<MatX> val;
    for (int c = 0; c < s.mesh->num_cells(); ++c) {
      CellBasis sb = s.stress.basis(c);
      s.stress.cell_dofs(c, dofs);
      for (int p = 0; p < sb.num_pieces(); ++p) {
        MatX pts;
        VecX wts;
        map_rule_to_triangle(rule, sb.pieces[p], pts, wts);
        sb.tabulate(pts, p, val);
        for (int i = 0; i < sb.ndofs; ++i)
          trace_row[dofs[i]] += wts.dot(VecX(val[0].col(i))) + wts.dot(VecX(val[3].col(i)));
      }
    }
  }
  MatX constraints = dense_constraints(s, b_blk, s.rotation ? &c_blk : nullptr,
                                       params.incompressible() ? &trace_row : nullptr);
  MatX kern = kernel_basis(constraints);

  MatX a = MatX(assemble_a(s, params));
  MatX x = MatX(assemble_gram(s.stress, GramKind::Hdiv, s.quad_degree));
  MatX ak = kern.transpose() * a * kern;
  MatX xk = kern.transpose() * x * kern;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(0.5 * (ak + ak.transpose()),
                                                    0.5 * (xk + xk.transpose()));
  return es.eigenvalues()[0];
}

}  // namespace hrmix
