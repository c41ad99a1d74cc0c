#include "hrmix/transient.hpp"

#include <cmath>

namespace hrmix {

ButcherTableau radau2a_tableau()
{
  ButcherTableau t;
  t.a << 5.0 / 12.0, -1.0 / 12.0, 3.0 / 4.0, 1.0 / 4.0;
  t.b << 3.0 / 4.0, 1.0 / 4.0;
  t.c << 1.0 / 3.0, 1.0;
  return t;
}

TransientIntegrator::TransientIntegrator(const SpMat& s_mat, const SpMat& e_mat, double dt,
                                         const ButcherTableau& tableau)
    : s_(s_mat), e_(e_mat), dt_(dt), tab_(tableau)
{
  const int n = static_cast<int>(s_.rows());
  std::vector<Triplet> trips;
  auto add = [&trips](const SpMat& m, int r0, int c0, double scale) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it)
        trips.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()),
                           scale * it.value());
  };
  for (int i = 0; i < 2; ++i) {
    add(e_, i * n, i * n, 1.0);
    for (int j = 0; j < 2; ++j) add(s_, i * n, j * n, dt_ * tab_.a(i, j));
  }
  SpMat block(2 * n, 2 * n);
  block.setFromTriplets(trips.begin(), trips.end());
  block.makeCompressed();
  stage_solver_ = std::make_shared<DirectSolver>(block);
}

VecX TransientIntegrator::step(double t, const VecX& x,
                               const std::function<VecX(double)>& rhs) const
{
  const int n = static_cast<int>(s_.rows());
  VecX ex = e_ * x;
  VecX r1 = rhs(t + tab_.c[0] * dt_), r2 = rhs(t + tab_.c[1] * dt_);
  VecX b(2 * n);
  b.head(n) = ex + dt_ * (tab_.a(0, 0) * r1 + tab_.a(0, 1) * r2);
  b.tail(n) = ex + dt_ * (tab_.a(1, 0) * r1 + tab_.a(1, 1) * r2);
  VecX stages = stage_solver_->solve(b);
  return stages.tail(n);  // stiffly accurate: the step lands on stage 2
}

TransientData transient_polar_data(double delta)
{
  TransientData d;
  d.params = {1.0, 0.0};  // the transient law couples the full stress tensor
  d.u0 = [delta](const Vec2& p) {
    return Vec2(-delta * std::cos(p.x()) * std::cosh(p.y()),
                delta * std::sin(p.x()) * std::sinh(p.y()));
  };
  // F = (K_F/2mu)(grad nu^T grad nu)^D - (div u0 / d) I with the identity
  // director map, so only the mass term survives.
  d.F = [delta](const Vec2& p) {
    return Mat2(-delta * std::sin(p.x()) * std::cosh(p.y()) * Mat2::Identity());
  };
  return d;
}

namespace {

struct TransientOperator {
  SaddlePointSystem sys;     // stationary blocks at ramp = 1
  SpMat s_dae;               // saddle matrix with the velocity row negated
  SpMat e_mat;               // mass on the velocity block
  SpMat sigma_mass;          // stress L2 Gram
  VecX rhs1;                 // DAE rhs at ramp = 1
};

TransientOperator build_transient_operator(const SchemeSpaces& s, double delta)
{
  TransientData data = transient_polar_data(delta);
  RhsData rd;
  rd.F = data.F;
  rd.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  rd.g = data.u0;
  rd.data_degree = 12;

  TransientOperator op;
  op.sys = assemble_saddle(s, data.params, rd, 0.0);

  // In E dx/dt = r(t) - S x the algebraic rows keep the stationary signs;
  // the velocity row flips so that M du/dt = b(sigma, v).
  op.s_dae = op.sys.full_matrix();
  const int u0 = op.sys.n_sigma, u1 = op.sys.n_sigma + op.sys.n_u;
  for (int col = 0; col < op.s_dae.outerSize(); ++col)
    for (SpMat::InnerIterator it(op.s_dae, col); it; ++it)
      if (it.row() >= u0 && it.row() < u1) it.valueRef() = -it.value();
  op.rhs1 = op.sys.full_rhs();
  op.rhs1.segment(u0, op.sys.n_u) *= -1.0;

  SpMat m_v = assemble_gram(s.velocity, GramKind::L2, s.quad_degree);
  std::vector<Triplet> trips;
  for (int k = 0; k < m_v.outerSize(); ++k)
    for (SpMat::InnerIterator it(m_v, k); it; ++it)
      trips.emplace_back(op.sys.n_sigma + static_cast<int>(it.row()),
                         op.sys.n_sigma + static_cast<int>(it.col()), it.value());
  op.e_mat.resize(op.sys.total(), op.sys.total());
  op.e_mat.setFromTriplets(trips.begin(), trips.end());
  op.e_mat.makeCompressed();

  op.sigma_mass = assemble_gram(s.stress, GramKind::L2, s.quad_degree);
  return op;
}

}  // namespace

TransientResult run_transient(const SchemeSpaces& s, double delta, double dt, double t_end,
                              const std::vector<double>& snapshot_times)
{
  TransientOperator op = build_transient_operator(s, delta);
  TransientIntegrator integ(op.s_dae, op.e_mat, dt);
  auto rhs = [&op](double t) { return VecX(std::min(1.0, t) * op.rhs1); };

  VecX x = VecX::Zero(op.sys.total());
  double t = 0.0;
  TransientResult result;
  auto record = [&]() {
    VecX sig = x.head(op.sys.n_sigma);
    result.t.push_back(t);
    result.sigma_l2.push_back(gram_norm(op.sigma_mass, sig));
  };
  auto snapshot_due = [&](double tq) {
    for (double ts : snapshot_times)
      if (std::abs(ts - tq) < 0.5 * dt) return true;
    return false;
  };
  auto take_snapshot = [&]() {
    TransientSnapshot snap;
    snap.t = t;
    VecX sig = x.head(op.sys.n_sigma);
    FieldView view{s.stress, sig};
    for (int c = 0; c < s.mesh->num_cells(); ++c) {
      CellBasis sb = s.stress.basis(c);
      for (int p = 0; p < sb.num_pieces(); ++p) {
        Vec2 ctr = (sb.pieces[p][0] + sb.pieces[p][1] + sb.pieces[p][2]) / 3.0;
        MatX pts(1, 2);
        pts << ctr.x(), ctr.y();
        MatX v;
        view.values(c, sb, pts, p, v);
        Mat2 m;
        m << v(0, 0), v(0, 1), v(0, 2), v(0, 3);
        snap.centroids.push_back(ctr);
        snap.magnitude.push_back(m.norm());
      }
    }
    result.snapshots.push_back(std::move(snap));
  };

  record();
  if (snapshot_due(0.0)) take_snapshot();
  const int nsteps = static_cast<int>(std::llround(t_end / dt));
  for (int k = 0; k < nsteps; ++k) {
    x = integ.step(t, x, rhs);
    t = (k + 1) * dt;
    record();
    if (snapshot_due(t)) take_snapshot();
  }
  return result;
}

Solution transient_steady_state(const SchemeSpaces& s, double delta)
{
  TransientOperator op = build_transient_operator(s, delta);
  return SaddleSolver(op.sys).solve_system();
}

}  // namespace hrmix
