#include "hrmix/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace hrmix {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c)
{
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

// Rebuild edges, cell_edges, signs and boundary flags from vertices + cells.
void build_connectivity(Mesh& m)
{
  std::map<std::array<int, 2>, int> edge_index;
  m.edges.clear();
  m.cell_edges.assign(m.cells.size(), {-1, -1, -1});
  m.cell_edge_signs.assign(m.cells.size(), {0, 0, 0});

  std::vector<int> incidence;
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    const auto& cell = m.cells[c];
    for (int k = 0; k < 3; ++k) {
      int a = cell[k];
      int b = cell[(k + 1) % 3];
      std::array<int, 2> key{std::min(a, b), std::max(a, b)};
      auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(m.edges.size()));
      if (inserted) {
        m.edges.push_back(key);
        incidence.push_back(0);
      }
      int e = it->second;
      m.cell_edges[c][k] = e;
      m.cell_edge_signs[c][k] = (a < b) ? 1 : -1;
      ++incidence[e];
    }
  }

  m.boundary_edge.assign(m.edges.size(), 0);
  m.boundary_vertex.assign(m.vertices.size(), 0);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    if (incidence[e] == 1) {
      m.boundary_edge[e] = 1;
      m.boundary_vertex[m.edges[e][0]] = 1;
      m.boundary_vertex[m.edges[e][1]] = 1;
    } else if (incidence[e] != 2) {
      throw std::runtime_error("build_connectivity: edge shared by more than two cells");
    }
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Mesh::cell_area(int c) const
{
  const auto& t = cells[c];
  return signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

Vec2 Mesh::cell_centroid(int c) const
{
  const auto& t = cells[c];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double Mesh::total_area() const
{
  double a = 0.0;
  for (int c = 0; c < num_cells(); ++c) a += cell_area(c);
  return a;
}

Mesh generate_unit_square(int n, double jitter, std::uint64_t seed)
{
  if (n < 1) throw std::invalid_argument("generate_unit_square: n must be >= 1");
  if (jitter < 0.0 || jitter > 0.3)
    throw std::invalid_argument("generate_unit_square: jitter must be in [0, 0.3]");

  Mesh m;
  const int nv1 = n + 1;
  auto vid = [nv1](int i, int j) { return j * nv1 + i; };

  m.vertices.resize(static_cast<std::size_t>(nv1) * nv1);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices[vid(i, j)] = Vec2(double(i) / n, double(j) / n);

  // Alternating-diagonal split, two CCW triangles per square.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      int ll = vid(i, j), lr = vid(i + 1, j), ur = vid(i + 1, j + 1), ul = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.cells.push_back({ll, lr, ur});
        m.cells.push_back({ll, ur, ul});
      } else {
        m.cells.push_back({ll, lr, ul});
        m.cells.push_back({lr, ur, ul});
      }
    }
  }

  if (jitter > 0.0) {
    std::vector<Vec2> offset(m.vertices.size(), Vec2::Zero());
    for (int j = 1; j < n; ++j) {
      for (int i = 1; i < n; ++i) {
        int v = vid(i, j);
        std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(v) + 1));
        double u1 = double(h >> 11) * 0x1.0p-53;
        double u2 = double(splitmix64(h) >> 11) * 0x1.0p-53;
        double r = (jitter / n) * u1;
        double theta = 2.0 * M_PI * u2;
        offset[v] = r * Vec2(std::cos(theta), std::sin(theta));
      }
    }
    std::vector<Vec2> base = m.vertices;
    // Clamp offsets until every cell stays positively oriented.
    for (int pass = 0; pass < 64; ++pass) {
      for (std::size_t v = 0; v < m.vertices.size(); ++v) m.vertices[v] = base[v] + offset[v];
      bool ok = true;
      std::vector<char> shrink(m.vertices.size(), 0);
      for (int c = 0; c < m.num_cells(); ++c) {
        if (m.cell_area(c) <= 1e-12) {
          ok = false;
          for (int k = 0; k < 3; ++k) shrink[m.cells[c][k]] = 1;
        }
      }
      if (ok) break;
      for (std::size_t v = 0; v < offset.size(); ++v)
        if (shrink[v]) offset[v] *= 0.5;
    }
  }

  build_connectivity(m);
  return m;
}

Mesh refine_uniform(const Mesh& parent)
{
  Mesh m;
  m.vertices = parent.vertices;
  m.vertices.reserve(parent.vertices.size() + parent.edges.size());
  std::vector<int> midpoint(parent.edges.size());
  for (int e = 0; e < parent.num_edges(); ++e) {
    midpoint[e] = m.num_vertices();
    m.vertices.push_back(0.5 * (parent.vertices[parent.edges[e][0]] +
                                parent.vertices[parent.edges[e][1]]));
  }
  m.cells.reserve(4 * parent.cells.size());
  for (int c = 0; c < parent.num_cells(); ++c) {
    const auto& t = parent.cells[c];
    int m01 = midpoint[parent.cell_edges[c][0]];
    int m12 = midpoint[parent.cell_edges[c][1]];
    int m20 = midpoint[parent.cell_edges[c][2]];
    m.cells.push_back({t[0], m01, m20});
    m.cells.push_back({t[1], m12, m01});
    m.cells.push_back({t[2], m20, m12});
    m.cells.push_back({m01, m12, m20});
  }
  build_connectivity(m);
  return m;
}

Mesh refine_barycentric(const Mesh& parent)
{
  Mesh m;
  m.vertices = parent.vertices;
  m.vertices.reserve(parent.vertices.size() + parent.cells.size());
  m.cells.reserve(3 * parent.cells.size());
  m.parent = std::make_shared<Mesh>(parent);
  m.parent_cell.reserve(3 * parent.cells.size());
  for (int c = 0; c < parent.num_cells(); ++c) {
    int b = m.num_vertices();
    m.vertices.push_back(parent.cell_centroid(c));
    const auto& t = parent.cells[c];
    m.cells.push_back({t[0], t[1], b});
    m.cells.push_back({t[1], t[2], b});
    m.cells.push_back({t[2], t[0], b});
    m.parent_cell.push_back(c);
    m.parent_cell.push_back(c);
    m.parent_cell.push_back(c);
  }
  build_connectivity(m);
  return m;
}

FacetGeometry facet_geometry(const Mesh& m, int edge)
{
  if (edge < 0 || edge >= m.num_edges())
    throw std::out_of_range("facet_geometry: edge index out of range");
  const Vec2& a = m.vertices[m.edges[edge][0]];
  const Vec2& b = m.vertices[m.edges[edge][1]];
  Vec2 d = b - a;
  FacetGeometry f;
  f.length = d.norm();
  Vec2 t = d / f.length;
  f.normal = Vec2(t.y(), -t.x());
  f.midpoint = 0.5 * (a + b);
  return f;
}

void validate_mesh(const Mesh& m)
{
  for (int c = 0; c < m.num_cells(); ++c)
    if (m.cell_area(c) <= 0.0) throw std::runtime_error("validate_mesh: nonpositive cell area");

  std::vector<int> incidence(m.edges.size(), 0);
  std::vector<int> sign_sum(m.edges.size(), 0);
  for (int c = 0; c < m.num_cells(); ++c) {
    for (int k = 0; k < 3; ++k) {
      int e = m.cell_edges[c][k];
      int a = m.cells[c][k], b = m.cells[c][(k + 1) % 3];
      if (std::min(a, b) != m.edges[e][0] || std::max(a, b) != m.edges[e][1])
        throw std::runtime_error("validate_mesh: cell_edges mismatch");
      int expect = (a < b) ? 1 : -1;
      if (m.cell_edge_signs[c][k] != expect)
        throw std::runtime_error("validate_mesh: orientation sign mismatch");
      ++incidence[e];
      sign_sum[e] += m.cell_edge_signs[c][k];
    }
  }
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.boundary_edge[e] && incidence[e] != 1)
      throw std::runtime_error("validate_mesh: boundary edge incidence != 1");
    if (!m.boundary_edge[e]) {
      if (incidence[e] != 2)
        throw std::runtime_error("validate_mesh: interior edge incidence != 2");
      if (sign_sum[e] != 0)
        throw std::runtime_error("validate_mesh: interior edge signs not opposite");
    }
  }
}

void dump_mesh(const Mesh& m, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_mesh: cannot open " + path);
  out.precision(17);
  for (const auto& v : m.vertices) out << v.x() << " " << v.y() << "\n";
  for (const auto& c : m.cells) out << c[0] << " " << c[1] << " " << c[2] << "\n";
}

}  // namespace hrmix
