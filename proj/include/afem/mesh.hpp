#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "afem/geometry.hpp"

namespace afem {

// Undirected mesh edge. Vertex ids satisfy a < b; t1 < 0 on the boundary.
struct Edge {
  int a, b;
  int t0, t1;
};

// Conforming triangle mesh with newest-vertex bisection genealogy.
//
// Element vertices are CCW. Edge i of an element is the edge opposite local
// vertex i. ref_edge names the edge split by the next bisection. Vertex ids
// are stable under refinement (bisection only appends vertices); element ids
// are re-indexed by each refinement, with `parent` giving the containing
// element of the mesh the refinement started from (-1 on an initial mesh).
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> elems;
  std::vector<int> ref_edge;
  std::vector<int> generation;
  std::vector<int> parent;

  // Connectivity, built by finalize().
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> elem_edge;
  std::vector<int> vertex_elem_ptr;  // CSR vertex -> incident elements
  std::vector<int> vertex_elem;
  std::vector<char> boundary_vertex;
  std::vector<double> elem_area;
  std::vector<double> elem_diam;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_elems() const { return static_cast<int>(elems.size()); }
  Vec2 vertex(int v) const { return vertices[v]; }
  Vec2 elem_vertex(int t, int i) const { return vertices[elems[t][i]]; }
  bool is_boundary_edge(int e) const { return edges[e].t1 < 0; }

  // Builds edges/adjacency/areas and audits conformity and orientation.
  // Throws std::runtime_error on a malformed mesh (non-positive area, an edge
  // shared by more than two elements, or a hanging vertex).
  void finalize();
};

Mesh build_initial_mesh(const std::string& domain_spec);

// Bisects every marked element (and the descendants created by this call)
// until each descendant's generation exceeds the marked element's by the
// requested count, then closes the mesh to conformity. The input mesh is not
// modified. Throws std::invalid_argument on bad ids or counts < 1 and
// std::runtime_error if refinement exceeds an internal safety cap.
[[nodiscard]] Mesh bisect(const Mesh& mesh, const std::map<int, int>& marks);

// Marks every element with the same count.
[[nodiscard]] Mesh uniform_refine(const Mesh& mesh, int rounds = 1);

// Classification of the edges of a vertex patch. Edges interior to the patch
// carry no trace constraint; on the patch boundary the hat function of the
// center vertex either vanishes (zero_trace) or not (free, which happens only
// on edges of a boundary-vertex patch that touch the center vertex and lie on
// the domain boundary).
enum class PatchEdgeClass { interior, zero_trace, free_boundary };

struct PatchSubmesh {
  int center = -1;        // global vertex id
  int center_local = -1;  // its index in local vertex numbering
  bool center_interior = false;
  std::vector<int> elems;  // global element ids, ascending; local element i = elems[i]
  std::vector<int> v_l2g;  // local vertex id -> global vertex id, ascending
  Mesh local;              // finalized patch mesh
  std::vector<PatchEdgeClass> edge_class;  // per local edge
};

PatchSubmesh vertex_patch(const Mesh& mesh, int a);

// Face neighbors of S plus S itself.
std::vector<int> face_neighborhood(const Mesh& mesh, const std::vector<int>& S);
// Elements sharing at least a vertex with S (includes S).
std::vector<int> vertex_neighborhood(const Mesh& mesh, const std::vector<int>& S);
// Vertex neighborhood applied twice.
std::vector<int> second_neighborhood(const Mesh& mesh, const std::vector<int>& S);

// Text format: header `nv ne`, nv lines `x y`, ne lines `v0 v1 v2 ref_edge`.
// '#' starts a comment. read_mesh throws std::runtime_error with the line
// number on malformed input.
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh_file(const std::string& path, const Mesh& mesh);

}  // namespace afem
