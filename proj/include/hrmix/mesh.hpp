#pragma once

#include "hrmix/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hrmix {

/// Conforming triangular mesh of (a subset of) the unit square.
/// Cells are counterclockwise vertex triples. Edges are stored with
/// ascending vertex indices; that canonical direction fixes the global
/// tangent/normal used by H(div) degrees of freedom.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<std::array<int, 2>> edges;              // ascending index pairs
  std::vector<std::array<int, 3>> cell_edges;         // local edge k = (v_k, v_{k+1})
  std::vector<std::array<int, 3>> cell_edge_signs;    // +1 iff traversal matches canonical
  std::vector<char> boundary_edge;
  std::vector<char> boundary_vertex;

  std::shared_ptr<const Mesh> parent;  // set by refine_barycentric
  std::vector<int> parent_cell;        // per cell, index into parent->cells

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double cell_area(int c) const;
  Vec2 cell_centroid(int c) const;
  double total_area() const;
};

struct FacetGeometry {
  Vec2 normal;  // unit, canonical-direction left normal (t_y, -t_x)
  double length;
  Vec2 midpoint;
};

/// Structured crisscross mesh of (0,1)^2 with 2 n^2 cells; interior vertices
/// displaced by a deterministic offset of magnitude <= jitter / n.
Mesh generate_unit_square(int n, double jitter = 0.0, std::uint64_t seed = 0);

/// Red refinement: every triangle split into 4 by edge midpoints.
Mesh refine_uniform(const Mesh& m);

/// Barycentric (Alfeld) refinement: every triangle split into 3 at its
/// barycenter. Children of parent cell c are 3c, 3c+1, 3c+2.
Mesh refine_barycentric(const Mesh& m);

FacetGeometry facet_geometry(const Mesh& m, int edge);

/// Full connectivity audit; throws std::runtime_error on violation.
void validate_mesh(const Mesh& m);

/// Debug dump: one vertex per line "x y", then one cell per line "i j k".
void dump_mesh(const Mesh& m, const std::string& path);

/// splitmix64 hash, used to derive reproducible per-vertex jitter.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hrmix
