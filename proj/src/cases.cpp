#include "hrmix/cases.hpp"

#include <cmath>
#include <stdexcept>

namespace hrmix {

Mat2 f_from_tilde(const Mat2& f_tilde, const MaterialParams& params)
{
  if (params.incompressible())
    throw std::invalid_argument("f_from_tilde: lambda = inf uses the fluid form of the data");
  return deviatoric(f_tilde) / (2.0 * params.mu) +
         params.trace_coefficient() * f_tilde.trace() * Mat2::Identity();
}

Mat2 tilde_from_f(const Mat2& f, const MaterialParams& params)
{
  // Invert: deviatoric part scales by 2 mu, trace part by 1/(d tc).
  double tc = params.trace_coefficient();
  return 2.0 * params.mu * deviatoric(f) + f.trace() / (2.0 * tc) * (0.5 * Mat2::Identity());
}

ManufacturedCase case_example1(double delta)
{
  if (delta <= 0.0) throw std::invalid_argument("case_example1: delta must be positive");
  ManufacturedCase c;
  c.name = "rigid_body_motion";
  c.params = {1e-4, 1.0};
  c.delta = delta;
  c.u = [delta](const Vec2& x) { return Vec2(-delta * x.y(), delta * x.x()); };
  c.grad_u = [delta](const Vec2&) {
    Mat2 g;
    g << 0, -delta, delta, 0;
    return g;
  };
  c.sigma = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  c.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  c.F = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  return c;
}

ManufacturedCase case_example2(double delta)
{
  if (delta <= 0.0) throw std::invalid_argument("case_example2: delta must be positive");
  ManufacturedCase c;
  c.name = "transverse_isotropic";
  c.params = {1e-4, 0.0};
  c.delta = delta;
  const double a = delta / (2.0 * c.params.mu);
  c.u = [a](const Vec2& p) {
    double x = p.x(), y = p.y();
    return Vec2(-a * (x * x * x / 3.0 - y * y * y / 3.0),
                -a * (x * x * y + x * y * y + y * y * y / 3.0 + 2.0 * x * x * x / 3.0));
  };
  c.grad_u = [a](const Vec2& p) {
    double x = p.x(), y = p.y();
    Mat2 g;
    g << -a * x * x, a * y * y, -a * (2.0 * x * y + y * y + 2.0 * x * x),
        -a * (x + y) * (x + y);
    return g;
  };
  c.sigma = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  c.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  c.director = [](const Vec2& p) { return Vec2(p.x(), p.x() + p.y()); };
  MaterialParams params = c.params;
  double d = delta;
  c.F = [params, d](const Vec2& p) {
    Vec2 nu(p.x(), p.x() + p.y());
    Mat2 tilde = d * nu * nu.transpose();
    return f_from_tilde(tilde, params);
  };
  return c;
}

ManufacturedCase case_polar2d(double delta)
{
  if (delta <= 0.0) throw std::invalid_argument("case_polar2d: delta must be positive");
  ManufacturedCase c;
  c.name = "polar";
  c.params = {1e-4, kInfLambda};
  c.delta = delta;
  c.transcendental = true;
  const double a = delta / c.params.mu;
  c.u = [a](const Vec2& p) {
    return Vec2(a * std::cos(p.x()) * std::cosh(p.y()), -a * std::sin(p.x()) * std::sinh(p.y()));
  };
  c.grad_u = [a](const Vec2& p) {
    double x = p.x(), y = p.y();
    Mat2 g;
    g << -a * std::sin(x) * std::cosh(y), a * std::cos(x) * std::sinh(y),
        -a * std::cos(x) * std::sinh(y), -a * std::sin(x) * std::cosh(y);
    return g;
  };
  c.sigma = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  c.f = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  c.pressure = [delta](const Vec2& p) { return -delta * std::sin(p.x()) * std::cosh(p.y()); };
  c.director = [](const Vec2& p) { return p; };
  c.frank = [delta](const Vec2& p) { return delta * std::sin(p.x()) * std::cosh(p.y()); };
  c.g_div = [a](const Vec2& p) { return -2.0 * a * std::sin(p.x()) * std::cosh(p.y()); };
  // F = (K_F grad(nu)^T grad(nu))^D / (2 mu) - (g_div / d) I; the first term
  // vanishes for the identity director map.
  c.F = [a](const Vec2& p) {
    return Mat2(a * std::sin(p.x()) * std::cosh(p.y()) * Mat2::Identity());
  };
  c.trace_target = 0.0;
  return c;
}

ManufacturedCase case_polar_summary(double delta)
{
  ManufacturedCase c = case_polar2d(delta);
  c.name = "polar_extra";
  const double mu = c.params.mu;
  const auto u0 = c.u;
  const auto grad0 = c.grad_u;

  auto us = [](const Vec2& p) { return Vec2(std::cos(p.x()) * p.y(), std::sin(p.y())); };
  auto grad_s = [](const Vec2& p) {
    Mat2 g;
    g << -p.y() * std::sin(p.x()), std::cos(p.x()), 0.0, std::cos(p.y());
    return g;
  };

  c.u = [u0, us](const Vec2& p) { return Vec2(u0(p) + us(p)); };
  c.grad_u = [grad0, grad_s](const Vec2& p) { return Mat2(grad0(p) + grad_s(p)); };
  // The smooth extra velocity carries the whole stress: sigma = 2 mu eps(u_s).
  c.sigma = [mu, grad_s](const Vec2& p) { return Mat2(2.0 * mu * sym(grad_s(p))); };
  c.f = [mu](const Vec2& p) {
    double x = p.x(), y = p.y();
    return Vec2(-2.0 * mu * y * std::cos(x), -mu * std::sin(x) - 2.0 * mu * std::sin(y));
  };
  // Same anisotropy formula as the stress-free polar case, with the mass
  // datum div u updated for the enlarged velocity.
  const auto f_old = c.F;
  c.g_div = [u0 = c.g_div, grad_s](const Vec2& p) { return u0(p) + grad_s(p).trace(); };
  c.F = [f_old, grad_s](const Vec2& p) {
    return Mat2(f_old(p) - 0.5 * grad_s(p).trace() * Mat2::Identity());
  };
  // integral of tr sigma = 2 mu integral of div u_s over the unit square
  c.trace_target = 2.0 * mu * (std::sin(1.0) - 0.5 * (1.0 - std::cos(1.0)));
  return c;
}

ManufacturedCase case_stokes_noflow(double Ra)
{
  if (Ra <= 0.0) throw std::invalid_argument("case_stokes_noflow: Ra must be positive");
  ManufacturedCase c;
  c.name = "no_flow";
  c.params = {1.0, kInfLambda};
  c.Ra = Ra;
  c.delta = Ra;
  c.u = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  c.grad_u = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  c.sigma = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  c.f = [Ra](const Vec2& p) {
    double y = p.y();
    return Vec2(0.0, Ra * (1.0 - y + 3.0 * y * y));
  };
  c.F = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  c.pressure = [Ra](const Vec2& p) {
    double y = p.y();
    return Ra * (y * y * y - 0.5 * y * y + y - 7.0 / 12.0);
  };
  return c;
}

ManufacturedCase case_by_name(const std::string& name, double delta)
{
  if (name == "rigid_body_motion" || name == "example1") return case_example1(delta);
  if (name == "transverse_isotropic" || name == "example2") return case_example2(delta);
  if (name == "polar") return case_polar2d(delta);
  if (name == "polar_extra") return case_polar_summary(delta);
  if (name == "no_flow") return case_stokes_noflow(delta);
  throw std::invalid_argument("case_by_name: unknown case '" + name + "'");
}

double saint_venant_residual(const std::function<Mat2(const Vec2&)>& F, const Mesh& mesh, double h)
{
  // Row-wise curl, then column-wise curl, each by central differences.
  auto row_curl = [&](const Vec2& x) {
    Mat2 fxp = F(x + Vec2(h, 0)), fxm = F(x - Vec2(h, 0));
    Mat2 fyp = F(x + Vec2(0, h)), fym = F(x - Vec2(0, h));
    Mat2 dx = (fxp - fxm) / (2.0 * h), dy = (fyp - fym) / (2.0 * h);
    return Vec2(dx(0, 1) - dy(0, 0), dx(1, 1) - dy(1, 0));
  };
  double worst = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    Vec2 x = mesh.cell_centroid(c);
    Vec2 cxp = row_curl(x + Vec2(h, 0)), cxm = row_curl(x - Vec2(h, 0));
    Vec2 cyp = row_curl(x + Vec2(0, h)), cym = row_curl(x - Vec2(0, h));
    double r = (cxp.y() - cxm.y()) / (2.0 * h) - (cyp.x() - cym.x()) / (2.0 * h);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

void validate_case(const ManufacturedCase& c, int npoints, unsigned seed)
{
  const double inv2mu = 1.0 / (2.0 * c.params.mu);
  const double tc = c.params.trace_coefficient();

  double scale = 1.0;
  std::uint64_t state = seed;
  auto next_point = [&state]() {
    state = splitmix64(state);
    double x = double(state >> 11) * 0x1.0p-53;
    state = splitmix64(state);
    double y = double(state >> 11) * 0x1.0p-53;
    return Vec2(0.02 + 0.96 * x, 0.02 + 0.96 * y);
  };

  std::vector<Vec2> pts;
  for (int i = 0; i < npoints; ++i) pts.push_back(next_point());
  for (const Vec2& x : pts) {
    scale = std::max({scale, c.F(x).norm(), c.strain(x).norm(), inv2mu * c.sigma(x).norm()});
  }

  const double h = 1e-5;
  if (c.Ra > 0.0) {
    // Stokes no-flow: f is a pure pressure gradient and p has zero mean.
    for (const Vec2& x : pts) {
      Vec2 gp((c.pressure(x + Vec2(h, 0)) - c.pressure(x - Vec2(h, 0))) / (2 * h),
              (c.pressure(x + Vec2(0, h)) - c.pressure(x - Vec2(0, h))) / (2 * h));
      if ((gp - c.f(x)).norm() > 1e-6 * c.Ra)
        throw std::runtime_error(c.name + ": forcing is not the pressure gradient");
      if (c.u(x).norm() != 0.0) throw std::runtime_error(c.name + ": no-flow velocity not zero");
    }
    const LineRule lr = line_rule_for_degree(8);
    double mean = 0.0;
    for (int q = 0; q < lr.points.size(); ++q)
      mean += lr.weights[q] * c.pressure(Vec2(0.5, lr.points[q]));
    if (std::abs(mean) > 1e-12 * c.Ra)
      throw std::runtime_error(c.name + ": pressure mean is not zero");
    return;
  }
  for (const Vec2& x : pts) {
    Mat2 sig = c.sigma(x);
    Mat2 res = inv2mu * deviatoric(sig) + tc * sig.trace() * Mat2::Identity() - c.strain(x) - c.F(x);
    if (res.norm() > 1e-10 * scale)
      throw std::runtime_error(c.name + ": constitutive residual " + std::to_string(res.norm()));

    // grad_u cross-check by central differences (also covers omega = anti(grad u)).
    Mat2 fd;
    Vec2 uxp = c.u(x + Vec2(h, 0)), uxm = c.u(x - Vec2(h, 0));
    Vec2 uyp = c.u(x + Vec2(0, h)), uym = c.u(x - Vec2(0, h));
    fd.col(0) = (uxp - uxm) / (2.0 * h);
    fd.col(1) = (uyp - uym) / (2.0 * h);
    double uscale = 1.0 + c.grad_u(x).norm();
    if ((fd - c.grad_u(x)).norm() > 1e-6 * uscale)
      throw std::runtime_error(c.name + ": grad_u disagrees with finite differences");

    // momentum balance div sigma = f by central differences.
    Mat2 sxp = c.sigma(x + Vec2(h, 0)), sxm = c.sigma(x - Vec2(h, 0));
    Mat2 syp = c.sigma(x + Vec2(0, h)), sym_ = c.sigma(x - Vec2(0, h));
    Vec2 divs((sxp(0, 0) - sxm(0, 0)) / (2 * h) + (syp(0, 1) - sym_(0, 1)) / (2 * h),
              (sxp(1, 0) - sxm(1, 0)) / (2 * h) + (syp(1, 1) - sym_(1, 1)) / (2 * h));
    double sscale = 1.0 + sig.norm();
    if ((divs - c.f(x)).norm() > 1e-6 * sscale)
      throw std::runtime_error(c.name + ": div sigma does not match the body force");

    // fluid cases: g_div really is div u
    if (c.g_div && (std::abs(c.g_div(x) - c.grad_u(x).trace()) > 1e-10 * uscale))
      throw std::runtime_error(c.name + ": g_div does not match div u");
  }

  if (c.params.incompressible()) {
    // compatibility: boundary flux of g equals -integral of tr F
    const LineRule lr = line_rule_for_degree(16);
    double flux = 0.0;
    for (int side = 0; side < 4; ++side) {
      for (int q = 0; q < lr.points.size(); ++q) {
        double s = lr.points[q], w = lr.weights[q];
        Vec2 x, n;
        switch (side) {
          case 0: x = Vec2(s, 0); n = Vec2(0, -1); break;
          case 1: x = Vec2(1, s); n = Vec2(1, 0); break;
          case 2: x = Vec2(s, 1); n = Vec2(0, 1); break;
          default: x = Vec2(0, s); n = Vec2(-1, 0); break;
        }
        flux += w * c.g(x).dot(n);
      }
    }
    QuadratureRule rule = quadrature_rule(16);
    Mesh grid = generate_unit_square(4);
    double trF = 0.0;
    for (int cell = 0; cell < grid.num_cells(); ++cell) {
      MatX pts;
      VecX wts;
      std::array<Vec2, 3> tri = {grid.vertices[grid.cells[cell][0]],
                                 grid.vertices[grid.cells[cell][1]],
                                 grid.vertices[grid.cells[cell][2]]};
      map_rule_to_triangle(rule, tri, pts, wts);
      for (int q = 0; q < pts.rows(); ++q) trF += wts[q] * c.F(Vec2(pts(q, 0), pts(q, 1))).trace();
    }
    double mismatch = std::abs(flux + trF);
    if (mismatch > 1e-9 * (1.0 + std::abs(trF)))
      throw std::runtime_error(c.name + ": boundary data incompatible with tr F");
  }
}

RhsData rhs_data(const ManufacturedCase& c, int operator_degree)
{
  RhsData d;
  d.F = c.F;
  d.f = c.f;
  d.g = c.u;
  d.data_degree = c.data_degree(operator_degree);
  return d;
}

ErrorReport compute_errors(const Solution& sol, const ManufacturedCase& c, const SchemeSpaces& s)
{
  ErrorReport rep;
  rep.delta = c.delta;
  const int err_degree = std::max(c.data_degree(s.quad_degree), s.quad_degree + 4);
  const QuadratureRule rule = quadrature_rule(std::min(err_degree, 20));

  FieldView sigma_view{s.stress, sol.sigma};
  FieldView u_view{s.velocity, sol.u};

  double sig_l2 = 0.0, sig_div = 0.0, u_l2 = 0.0, om_l2 = 0.0;
  std::vector<MatX> junk;
  for (int cell = 0; cell < s.mesh->num_cells(); ++cell) {
    CellBasis sb = s.stress.basis(cell);
    for (int p = 0; p < s.num_pieces(); ++p) {
      MatX pts;
      VecX wts;
      map_rule_to_triangle(rule, sb.pieces[std::min(p, sb.num_pieces() - 1)], pts, wts);
      MatX sval, sdiv;
      sigma_view.values(cell, sb, pts, std::min(p, sb.num_pieces() - 1), sval);
      sigma_view.divergence(cell, sb, pts, std::min(p, sb.num_pieces() - 1), sdiv);

      int vcell = s.piece_cell(cell, p);
      CellBasis vb = s.velocity.basis(vcell);
      MatX uval;
      u_view.values(vcell, vb, pts, 0, uval);

      MatX xval;
      if (s.rotation) {
        FieldView om_view{*s.rotation, sol.omega};
        CellBasis xb = s.rotation->basis(cell);
        om_view.values(cell, xb, pts, 0, xval);
      }

      for (int q = 0; q < pts.rows(); ++q) {
        Vec2 x(pts(q, 0), pts(q, 1));
        double w = wts[q];
        Mat2 se = c.sigma(x);
        Mat2 sh;
        sh << sval(q, 0), sval(q, 1), sval(q, 2), sval(q, 3);
        sig_l2 += w * (se - sh).squaredNorm();
        Vec2 dse = c.f(x);
        Vec2 dsh(sdiv(q, 0), sdiv(q, 1));
        sig_div += w * (dse - dsh).squaredNorm();
        Vec2 uh(uval(q, 0), uval(q, 1));
        u_l2 += w * (c.u(x) - uh).squaredNorm();
        if (s.rotation) {
          Mat2 oh;
          oh << xval(q, 0), xval(q, 1), xval(q, 2), xval(q, 3);
          om_l2 += w * (c.omega(x) - oh).squaredNorm();
        }
      }
    }
  }
  rep.sigma_error = std::sqrt(sig_l2 + sig_div);
  rep.displacement_error = std::sqrt(u_l2);
  rep.omega_err = s.rotation ? std::sqrt(om_l2) : -1.0;
  return rep;
}

}  // namespace hrmix
