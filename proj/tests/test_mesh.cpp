#include "hrmix/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace hrmix;

namespace {

std::string serialize(const Mesh& m)
{
  std::ostringstream os;
  os.precision(17);
  for (const auto& v : m.vertices) os << v.x() << "," << v.y() << ";";
  for (const auto& c : m.cells) os << c[0] << "," << c[1] << "," << c[2] << ";";
  return os.str();
}

}  // namespace

TEST_CASE("n=1 square: 4 vertices, 2 cells, 5 edges")
{
  Mesh m = generate_unit_square(1);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_cells() == 2);
  CHECK(m.num_edges() == 5);
  validate_mesh(m);
}

TEST_CASE("n=8 structured: 128 cells, unit area")
{
  Mesh m = generate_unit_square(8);
  CHECK(m.num_cells() == 128);
  CHECK(std::abs(m.total_area() - 1.0) < 1e-12);
  validate_mesh(m);
}

TEST_CASE("jittered mesh keeps positive areas and fixed boundary")
{
  Mesh flat = generate_unit_square(8);
  Mesh m = generate_unit_square(8, 0.2, 42);
  validate_mesh(m);
  for (int c = 0; c < m.num_cells(); ++c) CHECK(m.cell_area(c) > 0.0);
  int moved = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.boundary_vertex[v]) {
      CHECK((m.vertices[v] - flat.vertices[v]).norm() == 0.0);
    } else {
      CHECK((m.vertices[v] - flat.vertices[v]).norm() <= 0.2 / 8.0 + 1e-15);
      if ((m.vertices[v] - flat.vertices[v]).norm() > 0.0) ++moved;
    }
  }
  CHECK(moved > 0);
  CHECK(std::abs(m.total_area() - 1.0) < 1e-12);
}

TEST_CASE("generation rejects bad arguments")
{
  CHECK_THROWS(generate_unit_square(0));
  CHECK_THROWS(generate_unit_square(4, -0.1));
  CHECK_THROWS(generate_unit_square(4, 0.31));
}

TEST_CASE("uniform refinement: counts, area, connectivity")
{
  Mesh m = generate_unit_square(1);
  Mesh r = refine_uniform(m);
  CHECK(r.num_cells() == 8);
  CHECK(std::abs(r.total_area() - m.total_area()) < 1e-12);
  validate_mesh(r);

  Mesh j = generate_unit_square(8, 0.2, 42);
  Mesh rj = refine_uniform(j);
  CHECK(rj.num_cells() == 512);
  CHECK(std::abs(rj.total_area() - j.total_area()) < 1e-12);
  validate_mesh(rj);  // audits interior-edge sharing and orientation signs
}

TEST_CASE("barycentric refinement: counts, parent map, area partition")
{
  Mesh m = generate_unit_square(1);
  Mesh b = refine_barycentric(m);
  CHECK(b.num_cells() == 6);
  CHECK(b.num_vertices() == 6);  // one new vertex per parent cell
  CHECK(std::abs(b.total_area() - m.total_area()) < 1e-12);
  REQUIRE(b.parent != nullptr);
  validate_mesh(b);

  Mesh j = generate_unit_square(4, 0.15, 7);
  Mesh bj = refine_barycentric(j);
  REQUIRE(bj.parent_cell.size() == static_cast<std::size_t>(bj.num_cells()));
  std::vector<double> child_area(j.num_cells(), 0.0);
  std::vector<int> child_count(j.num_cells(), 0);
  for (int c = 0; c < bj.num_cells(); ++c) {
    CHECK(bj.parent_cell[c] == c / 3);
    child_area[bj.parent_cell[c]] += bj.cell_area(c);
    ++child_count[bj.parent_cell[c]];
  }
  for (int p = 0; p < j.num_cells(); ++p) {
    CHECK(child_count[p] == 3);
    CHECK(std::abs(child_area[p] - j.cell_area(p)) < 1e-12);
  }
}

TEST_CASE("facet geometry")
{
  // Two-triangle square: vertex 0 = (0,0), 1 = (1,0), 2 = (0,1)... layout from
  // the generator: vertices are (0,0), (1,0), (0,1), (1,1).
  Mesh m = generate_unit_square(1);
  // Edge (0,1) is (0,0)-(1,0); edge (0,2) is (0,0)-(0,1).
  for (int e = 0; e < m.num_edges(); ++e) {
    FacetGeometry f = facet_geometry(m, e);
    CHECK(std::abs(f.normal.norm() - 1.0) < 1e-14);
    if (m.edges[e] == std::array<int, 2>{0, 1}) {
      CHECK(f.normal.x() == doctest::Approx(0.0));
      CHECK(f.normal.y() == doctest::Approx(-1.0));
      CHECK(f.length == doctest::Approx(1.0));
    }
    if (m.edges[e] == std::array<int, 2>{0, 2}) {
      CHECK(f.normal.x() == doctest::Approx(1.0));
      CHECK(f.normal.y() == doctest::Approx(0.0));
    }
  }
  CHECK_THROWS(facet_geometry(m, m.num_edges()));
}

TEST_CASE("determinism: identical inputs give bit-identical meshes")
{
  Mesh a = generate_unit_square(8, 0.2, 42);
  Mesh b = generate_unit_square(8, 0.2, 42);
  CHECK(serialize(a) == serialize(b));
  Mesh c = generate_unit_square(8, 0.2, 43);
  CHECK(serialize(a) != serialize(c));
}
