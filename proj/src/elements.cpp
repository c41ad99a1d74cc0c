#include "hrmix/elements.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <stdexcept>

namespace hrmix {

namespace {

// ---------------------------------------------------------------- utilities

const QuadratureRule& cached_rule(int degree)
{
  static std::map<int, QuadratureRule> cache;
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, quadrature_rule(degree)).first;
  return it->second;
}

const LineRule& cached_line(int degree)
{
  static std::map<int, LineRule> cache;
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, line_rule_for_degree(degree)).first;
  return it->second;
}

// Shifted Legendre on [0,1].
double legendre01(int q, double s)
{
  double t = 2.0 * s - 1.0;
  if (q == 0) return 1.0;
  double pm = 1.0, p = t;
  for (int n = 1; n < q; ++n) {
    double pn = ((2.0 * n + 1.0) * t * p - n * pm) / (n + 1.0);
    pm = p;
    p = pn;
  }
  return p;
}

int mono_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

std::vector<std::array<int, 2>> mono_exponents(int degree)
{
  std::vector<std::array<int, 2>> e;
  for (int d = 0; d <= degree; ++d)
    for (int i = d; i >= 0; --i) e.push_back({i, d - i});
  return e;
}

void eval_monomials(const MatX& pts, const Vec2& center, double scale, int degree, MatX* m,
                    MatX* mx, MatX* my)
{
  const auto expo = mono_exponents(degree);
  const int nm = static_cast<int>(expo.size());
  const int np = static_cast<int>(pts.rows());
  if (m) m->resize(np, nm);
  if (mx) mx->resize(np, nm);
  if (my) my->resize(np, nm);
  for (int p = 0; p < np; ++p) {
    double xi = (pts(p, 0) - center.x()) / scale;
    double eta = (pts(p, 1) - center.y()) / scale;
    double powx[8], powy[8];
    powx[0] = powy[0] = 1.0;
    for (int d = 1; d <= degree; ++d) {
      powx[d] = powx[d - 1] * xi;
      powy[d] = powy[d - 1] * eta;
    }
    for (int k = 0; k < nm; ++k) {
      int i = expo[k][0], j = expo[k][1];
      if (m) (*m)(p, k) = powx[i] * powy[j];
      if (mx) (*mx)(p, k) = (i > 0) ? i * powx[i - 1] * powy[j] / scale : 0.0;
      if (my) (*my)(p, k) = (j > 0) ? j * powx[i] * powy[j - 1] / scale : 0.0;
    }
  }
}

struct EdgeData {
  Vec2 start, tangent, normal;
  double length = 0.0;
};

struct Geom {
  std::array<Vec2, 3> verts;
  std::array<EdgeData, 3> edge;  // local edge k = (v_k, v_{k+1}), canonical direction
  Vec2 centroid;
  double scale = 1.0;
  double area = 0.0;
};

Geom local_geometry(const Mesh& mesh, int cell)
{
  Geom g;
  const auto& t = mesh.cells[cell];
  for (int k = 0; k < 3; ++k) g.verts[k] = mesh.vertices[t[k]];
  g.centroid = (g.verts[0] + g.verts[1] + g.verts[2]) / 3.0;
  g.area = mesh.cell_area(cell);
  double h = 0.0;
  for (int k = 0; k < 3; ++k) {
    int e = mesh.cell_edges[cell][k];
    const Vec2& a = mesh.vertices[mesh.edges[e][0]];
    const Vec2& b = mesh.vertices[mesh.edges[e][1]];
    EdgeData& ed = g.edge[k];
    ed.start = a;
    ed.length = (b - a).norm();
    ed.tangent = (b - a) / ed.length;
    ed.normal = Vec2(ed.tangent.y(), -ed.tangent.x());
    h = std::max(h, ed.length);
  }
  g.scale = h;
  return g;
}

void physical_rule(const std::array<Vec2, 3>& tri, int degree, MatX& pts, VecX& wts)
{
  map_rule_to_triangle(cached_rule(degree), tri, pts, wts);
}

MatX orthonormal_scalar(const std::array<Vec2, 3>& tri, const Vec2& center, double scale,
                        int degree)
{
  const int nm = mono_count(degree);
  MatX pts;
  VecX wts;
  physical_rule(tri, std::max(1, 2 * degree), pts, wts);
  MatX m;
  eval_monomials(pts, center, scale, degree, &m, nullptr, nullptr);
  MatX gram = m.transpose() * wts.asDiagonal() * m;
  Eigen::LLT<MatX> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("orthonormal_scalar: Gram factorization failed");
  MatX c = MatX::Identity(nm, nm);
  llt.matrixL().solveInPlace(c);  // rows are orthonormal combinations
  return c;
}

// Built basis plus its dof functionals (used for analytic interpolation).
struct BuiltElement {
  CellBasis basis;
  std::function<VecX(const FieldFn&)> apply_dofs;
};

constexpr int kDataDegree = 12;  // quadrature for analytic-field functionals

}  // namespace

// ---------------------------------------------------------------- CellBasis

int CellBasis::find_piece(const Vec2& x) const
{
  if (pieces.size() == 1) return 0;
  int best = 0;
  double best_min = -std::numeric_limits<double>::max();
  for (int p = 0; p < num_pieces(); ++p) {
    const auto& t = pieces[p];
    double a = (t[1] - t[0]).x() * (t[2] - t[0]).y() - (t[1] - t[0]).y() * (t[2] - t[0]).x();
    double l0 = ((t[1] - x).x() * (t[2] - x).y() - (t[1] - x).y() * (t[2] - x).x()) / a;
    double l1 = ((t[2] - x).x() * (t[0] - x).y() - (t[2] - x).y() * (t[0] - x).x()) / a;
    double l2 = 1.0 - l0 - l1;
    double mn = std::min({l0, l1, l2});
    if (mn > best_min) {
      best_min = mn;
      best = p;
    }
  }
  return best;
}

void CellBasis::tabulate(const MatX& pts, int piece, std::vector<MatX>& values) const
{
  MatX m;
  eval_monomials(pts, center, scale, degree, &m, nullptr, nullptr);
  values.resize(ncomp);
  for (int c = 0; c < ncomp; ++c)
    values[c] = m * coeff[piece].middleCols(c * nmono, nmono).transpose();
}

void CellBasis::tabulate_div(const MatX& pts, int piece, std::vector<MatX>& divs) const
{
  MatX mx, my;
  eval_monomials(pts, center, scale, degree, nullptr, &mx, &my);
  const MatX& co = coeff[piece];
  if (shape == ValueShape::Tensor) {
    divs.resize(2);
    divs[0] =
        mx * co.middleCols(0, nmono).transpose() + my * co.middleCols(nmono, nmono).transpose();
    divs[1] = mx * co.middleCols(2 * nmono, nmono).transpose() +
              my * co.middleCols(3 * nmono, nmono).transpose();
  } else if (shape == ValueShape::Vector) {
    divs.resize(1);
    divs[0] =
        mx * co.middleCols(0, nmono).transpose() + my * co.middleCols(nmono, nmono).transpose();
  } else {
    divs.clear();
  }
}

void CellBasis::tabulate_grad(const MatX& pts, int piece, std::vector<MatX>& grads) const
{
  MatX mx, my;
  eval_monomials(pts, center, scale, degree, nullptr, &mx, &my);
  grads.resize(2 * ncomp);
  for (int c = 0; c < ncomp; ++c) {
    grads[2 * c] = mx * coeff[piece].middleCols(c * nmono, nmono).transpose();
    grads[2 * c + 1] = my * coeff[piece].middleCols(c * nmono, nmono).transpose();
  }
}

Eigen::Vector4d CellBasis::value(const Vec2& x, int dof) const
{
  int p = find_piece(x);
  MatX pts(1, 2);
  pts << x.x(), x.y();
  std::vector<MatX> vals;
  tabulate(pts, p, vals);
  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  for (int c = 0; c < ncomp; ++c) v[c] = vals[c](0, dof);
  return v;
}

void map_rule_to_triangle(const QuadratureRule& rule, const std::array<Vec2, 3>& tri, MatX& pts,
                          VecX& wts)
{
  const int n = rule.size();
  pts.resize(n, 2);
  double a2 = std::abs((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() -
                       (tri[1] - tri[0]).y() * (tri[2] - tri[0]).x());
  wts = rule.weights * a2;  // reference weights sum to 1/2; |J| = 2*area
  for (int q = 0; q < n; ++q) {
    double xi = rule.points(q, 0), eta = rule.points(q, 1);
    Vec2 x = tri[0] + xi * (tri[1] - tri[0]) + eta * (tri[2] - tri[0]);
    pts(q, 0) = x.x();
    pts(q, 1) = x.y();
  }
}

// ---------------------------------------------------------------- builders

namespace {

BuiltElement build_dg_scalar(const Geom& g, int k)
{
  BuiltElement be;
  CellBasis& b = be.basis;
  b.shape = ValueShape::Scalar;
  b.ncomp = 1;
  b.degree = k;
  b.nmono = mono_count(k);
  b.ndofs = b.nmono;
  b.center = g.centroid;
  b.scale = g.scale;
  b.pieces = {g.verts};
  b.coeff = {orthonormal_scalar(g.verts, b.center, b.scale, k)};

  be.apply_dofs = [g, b](const FieldFn& f) {
    MatX pts;
    VecX wts;
    physical_rule(g.verts, kDataDegree, pts, wts);
    std::vector<MatX> vals;
    b.tabulate(pts, 0, vals);
    VecX fv(pts.rows());
    for (int q = 0; q < pts.rows(); ++q) fv[q] = f(Vec2(pts(q, 0), pts(q, 1)))[0];
    return VecX(vals[0].transpose() * wts.asDiagonal() * fv);
  };
  return be;
}

// Expand a scalar element componentwise into a vector element (comp-minor).
BuiltElement vectorize(const BuiltElement& s)
{
  BuiltElement be;
  CellBasis& b = be.basis;
  const CellBasis& sb = s.basis;
  b.shape = ValueShape::Vector;
  b.ncomp = 2;
  b.degree = sb.degree;
  b.nmono = sb.nmono;
  b.ndofs = 2 * sb.ndofs;
  b.center = sb.center;
  b.scale = sb.scale;
  b.pieces = sb.pieces;
  MatX co = MatX::Zero(b.ndofs, 2 * b.nmono);
  for (int a = 0; a < sb.ndofs; ++a)
    for (int c = 0; c < 2; ++c)
      co.row(a * 2 + c).middleCols(c * b.nmono, b.nmono) = sb.coeff[0].row(a);
  b.coeff = {co};

  be.apply_dofs = [s](const FieldFn& f) {
    FieldFn fx = [&f](const Vec2& x) {
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      v[0] = f(x)[0];
      return v;
    };
    FieldFn fy = [&f](const Vec2& x) {
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      v[0] = f(x)[1];
      return v;
    };
    VecX dx = s.apply_dofs(fx), dy = s.apply_dofs(fy);
    VecX out(2 * dx.size());
    for (int a = 0; a < dx.size(); ++a) {
      out[2 * a] = dx[a];
      out[2 * a + 1] = dy[a];
    }
    return out;
  };
  return be;
}

BuiltElement build_dg_antisym(const Geom& g, int k)
{
  BuiltElement s = build_dg_scalar(g, k);
  BuiltElement be;
  CellBasis& b = be.basis;
  const CellBasis& sb = s.basis;
  b.shape = ValueShape::Tensor;
  b.ncomp = 4;
  b.degree = k;
  b.nmono = sb.nmono;
  b.ndofs = sb.ndofs;
  b.center = sb.center;
  b.scale = sb.scale;
  b.pieces = sb.pieces;
  MatX co = MatX::Zero(b.ndofs, 4 * b.nmono);
  for (int a = 0; a < sb.ndofs; ++a) {
    co.row(a).middleCols(1 * b.nmono, b.nmono) = sb.coeff[0].row(a);   // xy
    co.row(a).middleCols(2 * b.nmono, b.nmono) = -sb.coeff[0].row(a);  // yx
  }
  b.coeff = {co};

  be.apply_dofs = [s](const FieldFn& f) {
    FieldFn skew = [&f](const Vec2& x) {
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      Eigen::Vector4d t = f(x);
      v[0] = 0.5 * (t[1] - t[2]);
      return v;
    };
    return s.apply_dofs(skew);
  };
  return be;
}

std::vector<Vec2> lagrange_nodes(const Geom& g, int k)
{
  std::vector<Vec2> nodes(g.verts.begin(), g.verts.end());
  if (k >= 2) {
    for (int e = 0; e < 3; ++e) {
      const EdgeData& ed = g.edge[e];
      if (k == 2) {
        nodes.push_back(ed.start + 0.5 * ed.length * ed.tangent);
      } else {
        nodes.push_back(ed.start + (1.0 / 3.0) * ed.length * ed.tangent);
        nodes.push_back(ed.start + (2.0 / 3.0) * ed.length * ed.tangent);
      }
    }
  }
  if (k == 3) nodes.push_back(g.centroid);
  return nodes;
}

BuiltElement build_lagrange(const Geom& g, int k)
{
  const auto nodes = lagrange_nodes(g, k);
  const int nm = mono_count(k);
  BuiltElement be;
  CellBasis& b = be.basis;
  b.shape = ValueShape::Scalar;
  b.ncomp = 1;
  b.degree = k;
  b.nmono = nm;
  b.ndofs = nm;
  b.center = g.centroid;
  b.scale = g.scale;
  b.pieces = {g.verts};
  MatX pts(nm, 2);
  for (int i = 0; i < nm; ++i) pts.row(i) = nodes[i].transpose();
  MatX a;
  eval_monomials(pts, b.center, b.scale, k, &a, nullptr, nullptr);
  b.coeff = {MatX(a.inverse().transpose())};

  be.apply_dofs = [nodes](const FieldFn& f) {
    VecX d(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) d[static_cast<int>(i)] = f(nodes[i])[0];
    return d;
  };
  return be;
}

// Tensor expansion of a vector H(div) row element: dofs ordered so that the
// two row copies of each vector dof stay adjacent (row index fastest).
BuiltElement tensorize_rows(const BuiltElement& rowel)
{
  BuiltElement be;
  CellBasis& b = be.basis;
  const CellBasis& rb = rowel.basis;
  const int nm = rb.nmono;
  b.shape = ValueShape::Tensor;
  b.ncomp = 4;
  b.degree = rb.degree;
  b.nmono = nm;
  b.ndofs = 2 * rb.ndofs;
  b.center = rb.center;
  b.scale = rb.scale;
  b.pieces = rb.pieces;
  MatX co = MatX::Zero(b.ndofs, 4 * nm);
  for (int i = 0; i < rb.ndofs; ++i) {
    for (int r = 0; r < 2; ++r) {
      co.row(2 * i + r).middleCols((2 * r) * nm, nm) = rb.coeff[0].row(i).middleCols(0, nm);
      co.row(2 * i + r).middleCols((2 * r + 1) * nm, nm) = rb.coeff[0].row(i).middleCols(nm, nm);
    }
  }
  b.coeff = {co};

  be.apply_dofs = [rowel](const FieldFn& f) {
    FieldFn row0 = [&f](const Vec2& x) {
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      Eigen::Vector4d t = f(x);
      v[0] = t[0];
      v[1] = t[1];
      return v;
    };
    FieldFn row1 = [&f](const Vec2& x) {
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      Eigen::Vector4d t = f(x);
      v[0] = t[2];
      v[1] = t[3];
      return v;
    };
    VecX d0 = rowel.apply_dofs(row0), d1 = rowel.apply_dofs(row1);
    VecX out(2 * d0.size());
    for (int i = 0; i < d0.size(); ++i) {
      out[2 * i] = d0[i];
      out[2 * i + 1] = d1[i];
    }
    return out;
  };
  return be;
}

BuiltElement build_bdm(const Geom& g, int k)
{
  const int nm = mono_count(k);
  const int nfields = 2 * nm;
  const int nedge = 3 * (k + 1);
  const int nint = nfields - nedge;

  BuiltElement be;
  CellBasis& b = be.basis;
  b.shape = ValueShape::Vector;
  b.ncomp = 2;
  b.degree = k;
  b.nmono = nm;
  b.ndofs = nfields;
  b.center = g.centroid;
  b.scale = g.scale;
  b.pieces = {g.verts};

  MatX sc = orthonormal_scalar(g.verts, b.center, b.scale, k);
  MatX prime = MatX::Zero(nfields, 2 * nm);
  for (int a = 0; a < nm; ++a)
    for (int c = 0; c < 2; ++c) prime.row(a * 2 + c).middleCols(c * nm, nm) = sc.row(a);

  // Normal-trace Legendre moments on each edge.
  const LineRule& lr = cached_line(2 * k + 2);
  MatX dofmat = MatX::Zero(nfields, nfields);
  for (int e = 0; e < 3; ++e) {
    const EdgeData& ed = g.edge[e];
    for (int iq = 0; iq < lr.points.size(); ++iq) {
      double s = lr.points[iq];
      double w = lr.weights[iq] * ed.length;
      MatX pt(1, 2);
      Vec2 x = ed.start + s * ed.length * ed.tangent;
      pt << x.x(), x.y();
      MatX m;
      eval_monomials(pt, b.center, b.scale, k, &m, nullptr, nullptr);
      VecX vn = ed.normal.x() * (prime.middleCols(0, nm) * m.row(0).transpose()) +
                ed.normal.y() * (prime.middleCols(nm, nm) * m.row(0).transpose());
      for (int q = 0; q <= k; ++q) dofmat.row(e * (k + 1) + q) += w * legendre01(q, s) * vn.transpose();
    }
  }

  MatX interior;  // prime coefficients of the zero-normal-trace fields
  if (nint > 0) {
    Eigen::JacobiSVD<MatX> svd(dofmat.topRows(nedge), Eigen::ComputeFullV);
    interior = svd.matrixV().rightCols(nint);
    MatX pts;
    VecX wts;
    physical_rule(g.verts, std::max(1, 2 * k), pts, wts);
    MatX m;
    eval_monomials(pts, b.center, b.scale, k, &m, nullptr, nullptr);
    MatX v0 = m * prime.middleCols(0, nm).transpose();
    MatX v1 = m * prime.middleCols(nm, nm).transpose();
    MatX w0 = v0 * interior, w1 = v1 * interior;
    for (int j = 0; j < nint; ++j)
      dofmat.row(nedge + j) = (v0.transpose() * wts.asDiagonal() * w0.col(j) +
                               v1.transpose() * wts.asDiagonal() * w1.col(j))
                                  .transpose();
  }

  MatX x = dofmat.partialPivLu().solve(MatX::Identity(nfields, nfields));
  b.coeff = {MatX(x.transpose() * prime)};

  Vec2 center = b.center;
  double scale = b.scale;
  be.apply_dofs = [g, k, nm, nedge, nint, prime, interior, center, scale](const FieldFn& f) {
    VecX d = VecX::Zero(nedge + nint);
    const LineRule& lr = cached_line(kDataDegree);
    for (int e = 0; e < 3; ++e) {
      const EdgeData& ed = g.edge[e];
      for (int iq = 0; iq < lr.points.size(); ++iq) {
        double s = lr.points[iq];
        double w = lr.weights[iq] * ed.length;
        Vec2 x = ed.start + s * ed.length * ed.tangent;
        double fn = f(x).head<2>().dot(ed.normal);
        for (int q = 0; q <= k; ++q) d[e * (k + 1) + q] += w * legendre01(q, s) * fn;
      }
    }
    if (nint > 0) {
      MatX pts;
      VecX wts;
      physical_rule(g.verts, kDataDegree, pts, wts);
      MatX m;
      eval_monomials(pts, center, scale, k, &m, nullptr, nullptr);
      MatX v0 = m * prime.middleCols(0, nm).transpose();
      MatX v1 = m * prime.middleCols(nm, nm).transpose();
      MatX w0 = v0 * interior, w1 = v1 * interior;
      for (int q = 0; q < pts.rows(); ++q) {
        Eigen::Vector4d fv = f(Vec2(pts(q, 0), pts(q, 1)));
        for (int j = 0; j < nint; ++j)
          d[nedge + j] += wts[q] * (fv[0] * w0(q, j) + fv[1] * w1(q, j));
      }
    }
    return d;
  };
  return be;
}

VecX poly_product(const VecX& a, int da, const VecX& b, int db)
{
  const auto ea = mono_exponents(da), eb = mono_exponents(db);
  const auto ec = mono_exponents(da + db);
  std::map<std::array<int, 2>, int> idx;
  for (std::size_t i = 0; i < ec.size(); ++i) idx[ec[i]] = static_cast<int>(i);
  VecX c = VecX::Zero(static_cast<int>(ec.size()));
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j)
      c[idx.at({ea[i][0] + eb[j][0], ea[i][1] + eb[j][1]})] += a[i] * b[j];
  return c;
}

VecX poly_derivative(const VecX& a, int da, int dir, double scale)
{
  const auto ea = mono_exponents(da);
  const auto ec = mono_exponents(da - 1);
  std::map<std::array<int, 2>, int> idx;
  for (std::size_t i = 0; i < ec.size(); ++i) idx[ec[i]] = static_cast<int>(i);
  VecX c = VecX::Zero(static_cast<int>(ec.size()));
  for (int i = 0; i < a.size(); ++i) {
    int p = ea[i][dir];
    if (p > 0) {
      auto e = ea[i];
      e[dir] -= 1;
      c[idx.at(e)] += a[i] * p / scale;
    }
  }
  return c;
}

VecX padded(const VecX& a, int n)
{
  VecX c = VecX::Zero(n);
  c.head(a.size()) = a;
  return c;
}

// Lowest-order Raviart-Thomas row enriched with the curl of the cubic cell
// bubble; dofs are the net normal flux per edge plus one interior moment.
BuiltElement build_peers_row(const Geom& g)
{
  const int deg = 2;  // curl of the cubic bubble is quadratic
  const int nm = mono_count(deg);

  BuiltElement be;
  CellBasis& b = be.basis;
  b.shape = ValueShape::Vector;
  b.ncomp = 2;
  b.degree = deg;
  b.nmono = nm;
  b.ndofs = 4;
  b.center = g.centroid;
  b.scale = g.scale;
  b.pieces = {g.verts};

  MatX vsys(3, 3);
  for (int i = 0; i < 3; ++i) {
    Vec2 v = (g.verts[i] - g.centroid) / g.scale;
    vsys(i, 0) = 1.0;
    vsys(i, 1) = v.x();
    vsys(i, 2) = v.y();
  }
  MatX lam = vsys.inverse();  // column i = coefficients (1, xi, eta) of lambda_i

  VecX bub = poly_product(poly_product(lam.col(0), 1, lam.col(1), 1), 2, lam.col(2), 1);
  VecX curl_x = padded(-poly_derivative(bub, 3, 1, g.scale), nm);  // ccw-rotated gradient
  VecX curl_y = padded(poly_derivative(bub, 3, 0, g.scale), nm);

  MatX prime = MatX::Zero(4, 2 * nm);
  prime(0, 0) = 1.0;       // (1, 0)
  prime(1, nm) = 1.0;      // (0, 1)
  prime(2, 1) = 1.0;       // (xi, eta)
  prime(2, nm + 2) = 1.0;
  prime.row(3).head(nm) = curl_x.transpose();
  prime.row(3).tail(nm) = curl_y.transpose();

  MatX dofmat = MatX::Zero(4, 4);
  const LineRule& lr = cached_line(2 * deg + 2);
  for (int e = 0; e < 3; ++e) {
    const EdgeData& ed = g.edge[e];
    for (int iq = 0; iq < lr.points.size(); ++iq) {
      double s = lr.points[iq];
      double w = lr.weights[iq] * ed.length;
      MatX pt(1, 2);
      Vec2 x = ed.start + s * ed.length * ed.tangent;
      pt << x.x(), x.y();
      MatX m;
      eval_monomials(pt, b.center, b.scale, deg, &m, nullptr, nullptr);
      VecX vn = ed.normal.x() * (prime.middleCols(0, nm) * m.row(0).transpose()) +
                ed.normal.y() * (prime.middleCols(nm, nm) * m.row(0).transpose());
      dofmat.row(e) += w * vn.transpose();
    }
  }
  {
    MatX pts;
    VecX wts;
    physical_rule(g.verts, 2 * deg, pts, wts);
    MatX m;
    eval_monomials(pts, b.center, b.scale, deg, &m, nullptr, nullptr);
    MatX v0 = m * prime.middleCols(0, nm).transpose();
    MatX v1 = m * prime.middleCols(nm, nm).transpose();
    VecX c0 = m * curl_x, c1 = m * curl_y;
    dofmat.row(3) =
        (v0.transpose() * wts.asDiagonal() * c0 + v1.transpose() * wts.asDiagonal() * c1).transpose();
  }

  MatX x = dofmat.partialPivLu().solve(MatX::Identity(4, 4));
  b.coeff = {MatX(x.transpose() * prime)};

  Vec2 center = b.center;
  double scale = b.scale;
  be.apply_dofs = [g, nm, curl_x, curl_y, center, scale](const FieldFn& f) {
    VecX d = VecX::Zero(4);
    const LineRule& lr = cached_line(kDataDegree);
    for (int e = 0; e < 3; ++e) {
      const EdgeData& ed = g.edge[e];
      for (int iq = 0; iq < lr.points.size(); ++iq) {
        double s = lr.points[iq];
        double w = lr.weights[iq] * ed.length;
        Vec2 x = ed.start + s * ed.length * ed.tangent;
        d[e] += w * f(x).head<2>().dot(ed.normal);
      }
    }
    MatX pts;
    VecX wts;
    physical_rule(g.verts, kDataDegree, pts, wts);
    MatX m;
    eval_monomials(pts, center, scale, 2, &m, nullptr, nullptr);
    VecX c0 = m * curl_x, c1 = m * curl_y;
    for (int q = 0; q < pts.rows(); ++q) {
      Eigen::Vector4d fv = f(Vec2(pts(q, 0), pts(q, 1)));
      d[3] += wts[q] * (fv[0] * c0[q] + fv[1] * c1[q]);
    }
    return d;
  };
  return be;
}

BuiltElement build_peers_multiplier(const Geom& g)
{
  BuiltElement s = build_lagrange(g, 1);
  BuiltElement be;
  CellBasis& b = be.basis;
  const CellBasis& sb = s.basis;
  b.shape = ValueShape::Tensor;
  b.ncomp = 4;
  b.degree = 1;
  b.nmono = sb.nmono;
  b.ndofs = 3;
  b.center = sb.center;
  b.scale = sb.scale;
  b.pieces = sb.pieces;
  MatX co = MatX::Zero(3, 4 * b.nmono);
  for (int a = 0; a < 3; ++a) {
    co.row(a).middleCols(1 * b.nmono, b.nmono) = sb.coeff[0].row(a);
    co.row(a).middleCols(2 * b.nmono, b.nmono) = -sb.coeff[0].row(a);
  }
  b.coeff = {co};

  be.apply_dofs = [s](const FieldFn& f) {
    FieldFn skew = [&f](const Vec2& x) {
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      Eigen::Vector4d t = f(x);
      v[0] = 0.5 * (t[1] - t[2]);
      return v;
    };
    return s.apply_dofs(skew);
  };
  return be;
}

// Composite symmetric macroelement: piecewise-linear symmetric tensors on the
// barycentric split with continuous traction across the three interior edges.
BuiltElement build_johnson_mercier(const Geom& g)
{
  const int nm = 3;  // {1, xi, eta}
  const Vec2 bc = g.centroid;

  BuiltElement be;
  CellBasis& b = be.basis;
  b.shape = ValueShape::Tensor;
  b.ncomp = 4;
  b.degree = 1;
  b.nmono = nm;
  b.ndofs = 15;
  b.center = g.centroid;
  b.scale = g.scale;
  b.pieces = {{{g.verts[0], g.verts[1], bc}},
              {{g.verts[1], g.verts[2], bc}},
              {{g.verts[2], g.verts[0], bc}}};

  const Mat2 comp_basis[3] = {(Mat2() << 1, 0, 0, 0).finished(),
                              (Mat2() << 0, 1, 1, 0).finished(),
                              (Mat2() << 0, 0, 0, 1).finished()};
  auto mono_val = [&](int m, const Vec2& x) {
    Vec2 sc = (x - g.centroid) / g.scale;
    return m == 0 ? 1.0 : (m == 1 ? sc.x() : sc.y());
  };
  // Global prime index: piece * 9 + comp * 3 + mono.

  // Traction continuity across interior edges (v_i, barycenter), sampled at
  // two Gauss points; the jump of a linear field vanishing there vanishes.
  MatX con = MatX::Zero(12, 27);
  const LineRule& l2 = cached_line(3);
  int row = 0;
  for (int i = 0; i < 3; ++i) {
    int pa = (i + 2) % 3, pb = i;
    Vec2 d = bc - g.verts[i];
    Vec2 n = Vec2(d.y(), -d.x()).normalized();
    for (int iq = 0; iq < 2; ++iq) {
      Vec2 x = g.verts[i] + l2.points[iq] * d;
      for (int c = 0; c < 2; ++c) {
        for (int s = 0; s < 3; ++s) {
          for (int m = 0; m < 3; ++m) {
            double val = (comp_basis[s] * n)(c)*mono_val(m, x);
            con(row, pa * 9 + s * 3 + m) += val;
            con(row, pb * 9 + s * 3 + m) -= val;
          }
        }
        ++row;
      }
    }
  }

  Eigen::JacobiSVD<MatX> svd(con, Eigen::ComputeFullV);
  int rank = 0;
  double smax = svd.singularValues()[0];
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-10 * smax) ++rank;
  if (rank != 12)
    throw std::runtime_error("johnson_mercier: traction constraint rank != 12 (degenerate cell)");
  MatX null = svd.matrixV().rightCols(15);  // 27 x 15

  // Value of null field j at x within piece p.
  auto null_value = [&](int j, int p, const Vec2& x) {
    Mat2 v = Mat2::Zero();
    for (int s = 0; s < 3; ++s)
      for (int m = 0; m < 3; ++m) v += null(p * 9 + s * 3 + m, j) * comp_basis[s] * mono_val(m, x);
    return v;
  };

  // Dofs: per exterior edge, traction component moments against {1, L1};
  // then the three componentwise means over the macro cell.
  MatX dofmat = MatX::Zero(15, 15);
  const LineRule& lr = cached_line(4);
  for (int e = 0; e < 3; ++e) {
    const EdgeData& ed = g.edge[e];
    for (int iq = 0; iq < lr.points.size(); ++iq) {
      double s = lr.points[iq];
      double w = lr.weights[iq] * ed.length;
      Vec2 x = ed.start + s * ed.length * ed.tangent;
      for (int j = 0; j < 15; ++j) {
        Vec2 tn = null_value(j, e, x) * ed.normal;
        for (int q = 0; q < 2; ++q) {
          double leg = legendre01(q, s);
          dofmat(e * 4 + q * 2 + 0, j) += w * leg * tn.x();
          dofmat(e * 4 + q * 2 + 1, j) += w * leg * tn.y();
        }
      }
    }
  }
  for (int p = 0; p < 3; ++p) {
    MatX pts;
    VecX wts;
    physical_rule(b.pieces[p], 2, pts, wts);
    for (int q = 0; q < pts.rows(); ++q) {
      Vec2 x(pts(q, 0), pts(q, 1));
      for (int j = 0; j < 15; ++j) {
        Mat2 v = null_value(j, p, x);
        dofmat(12, j) += wts[q] * v(0, 0);
        dofmat(13, j) += wts[q] * v(0, 1);
        dofmat(14, j) += wts[q] * v(1, 1);
      }
    }
  }

  MatX x = dofmat.partialPivLu().solve(MatX::Identity(15, 15));
  MatX y = null * x;  // 27 x 15, column j = prime coefficients of basis j
  b.coeff.assign(3, MatX::Zero(15, 4 * nm));
  for (int p = 0; p < 3; ++p) {
    for (int j = 0; j < 15; ++j) {
      for (int m = 0; m < 3; ++m) {
        b.coeff[p](j, 0 * nm + m) = y(p * 9 + 0 * 3 + m, j);  // xx
        b.coeff[p](j, 1 * nm + m) = y(p * 9 + 1 * 3 + m, j);  // xy
        b.coeff[p](j, 2 * nm + m) = y(p * 9 + 1 * 3 + m, j);  // yx
        b.coeff[p](j, 3 * nm + m) = y(p * 9 + 2 * 3 + m, j);  // yy
      }
    }
  }

  auto pieces = b.pieces;
  be.apply_dofs = [g, pieces](const FieldFn& f) {
    VecX d = VecX::Zero(15);
    const LineRule& lr = cached_line(kDataDegree);
    for (int e = 0; e < 3; ++e) {
      const EdgeData& ed = g.edge[e];
      for (int iq = 0; iq < lr.points.size(); ++iq) {
        double s = lr.points[iq];
        double w = lr.weights[iq] * ed.length;
        Vec2 x = ed.start + s * ed.length * ed.tangent;
        Eigen::Vector4d fv = f(x);
        Mat2 t;
        t << fv[0], fv[1], fv[2], fv[3];
        Vec2 tn = t * ed.normal;
        for (int q = 0; q < 2; ++q) {
          double leg = legendre01(q, s);
          d[e * 4 + q * 2 + 0] += w * leg * tn.x();
          d[e * 4 + q * 2 + 1] += w * leg * tn.y();
        }
      }
    }
    for (int p = 0; p < 3; ++p) {
      MatX pts;
      VecX wts;
      physical_rule(pieces[p], kDataDegree, pts, wts);
      for (int q = 0; q < pts.rows(); ++q) {
        Eigen::Vector4d fv = f(Vec2(pts(q, 0), pts(q, 1)));
        d[12] += wts[q] * fv[0];
        d[13] += wts[q] * 0.5 * (fv[1] + fv[2]);
        d[14] += wts[q] * fv[3];
      }
    }
    return d;
  };
  return be;
}

BuiltElement build_element(const Element& el, const Mesh& mesh, int cell)
{
  Geom g = local_geometry(mesh, cell);
  switch (el.family) {
    case Family::DGScalar: return build_dg_scalar(g, el.degree);
    case Family::DGVector: return vectorize(build_dg_scalar(g, el.degree));
    case Family::DGAntisym: return build_dg_antisym(g, el.degree);
    case Family::Lagrange: return build_lagrange(g, el.degree);
    case Family::LagrangeVector: return vectorize(build_lagrange(g, el.degree));
    case Family::BDM: return build_bdm(g, el.degree);
    case Family::BDMTensor: return tensorize_rows(build_bdm(g, el.degree));
    case Family::PeersStress: return tensorize_rows(build_peers_row(g));
    case Family::PeersMultiplier: return build_peers_multiplier(g);
    case Family::JohnsonMercier: return build_johnson_mercier(g);
  }
  throw std::logic_error("build_element: unknown family");
}

}  // namespace

// ----------------------------------------------------------------- Element

CellBasis Element::build(const Mesh& mesh, int cell) const
{
  return build_element(*this, mesh, cell).basis;
}

VecX Element::interpolate_local(const Mesh& mesh, int cell, const FieldFn& f) const
{
  return build_element(*this, mesh, cell).apply_dofs(f);
}

Element make_dg_scalar(int k)
{
  if (k < 0) throw std::invalid_argument("make_dg_scalar: k must be >= 0");
  Element e;
  e.family = Family::DGScalar;
  e.degree = k;
  e.shape = ValueShape::Scalar;
  e.ncomp = 1;
  e.ndofs = e.dofs_per_cell = (k + 1) * (k + 2) / 2;
  return e;
}

Element make_dg_vector(int k)
{
  if (k < 0) throw std::invalid_argument("make_dg_vector: k must be >= 0");
  Element e;
  e.family = Family::DGVector;
  e.degree = k;
  e.shape = ValueShape::Vector;
  e.ncomp = 2;
  e.ndofs = e.dofs_per_cell = (k + 1) * (k + 2);
  return e;
}

Element make_dg_antisym(int k)
{
  if (k < 0) throw std::invalid_argument("make_dg_antisym: k must be >= 0");
  Element e;
  e.family = Family::DGAntisym;
  e.degree = k;
  e.shape = ValueShape::Tensor;
  e.ncomp = 4;
  e.ndofs = e.dofs_per_cell = (k + 1) * (k + 2) / 2;
  return e;
}

Element make_lagrange(int k)
{
  if (k < 1 || k > 3) throw std::invalid_argument("make_lagrange: k must be in [1, 3]");
  Element e;
  e.family = Family::Lagrange;
  e.degree = k;
  e.shape = ValueShape::Scalar;
  e.ncomp = 1;
  e.dofs_per_vertex = 1;
  e.dofs_per_edge = k - 1;
  e.dofs_per_cell = (k == 3) ? 1 : 0;
  e.ndofs = (k + 1) * (k + 2) / 2;
  return e;
}

Element make_lagrange_vector(int k)
{
  Element s = make_lagrange(k);
  Element e;
  e.family = Family::LagrangeVector;
  e.degree = k;
  e.shape = ValueShape::Vector;
  e.ncomp = 2;
  e.dofs_per_vertex = 2 * s.dofs_per_vertex;
  e.dofs_per_edge = 2 * s.dofs_per_edge;
  e.dofs_per_cell = 2 * s.dofs_per_cell;
  e.ndofs = 2 * s.ndofs;
  return e;
}

Element make_bdm(int k)
{
  if (k < 1) throw std::invalid_argument("make_bdm: k must be >= 1");
  Element e;
  e.family = Family::BDM;
  e.degree = k;
  e.shape = ValueShape::Vector;
  e.ncomp = 2;
  e.hdiv = true;
  e.dofs_per_edge = k + 1;
  e.ndofs = (k + 1) * (k + 2);
  e.dofs_per_cell = e.ndofs - 3 * e.dofs_per_edge;
  return e;
}

Element make_bdm_tensor(int k)
{
  Element r = make_bdm(k);
  Element e;
  e.family = Family::BDMTensor;
  e.degree = k;
  e.shape = ValueShape::Tensor;
  e.ncomp = 4;
  e.hdiv = true;
  e.dofs_per_edge = 2 * r.dofs_per_edge;
  e.dofs_per_cell = 2 * r.dofs_per_cell;
  e.ndofs = 2 * r.ndofs;
  return e;
}

Element make_peers_stress()
{
  Element e;
  e.family = Family::PeersStress;
  e.degree = 2;
  e.shape = ValueShape::Tensor;
  e.ncomp = 4;
  e.hdiv = true;
  e.dofs_per_edge = 2;
  e.dofs_per_cell = 2;
  e.ndofs = 8;
  return e;
}

Element make_peers_multiplier()
{
  Element e;
  e.family = Family::PeersMultiplier;
  e.degree = 1;
  e.shape = ValueShape::Tensor;
  e.ncomp = 4;
  e.dofs_per_vertex = 1;
  e.ndofs = 3;
  return e;
}

Element make_johnson_mercier()
{
  Element e;
  e.family = Family::JohnsonMercier;
  e.degree = 1;
  e.shape = ValueShape::Tensor;
  e.ncomp = 4;
  e.hdiv = true;
  e.composite = true;
  e.dofs_per_edge = 4;
  e.dofs_per_cell = 3;
  e.ndofs = 15;
  return e;
}

}  // namespace hrmix
