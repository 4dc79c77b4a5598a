#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "afem/mesh.hpp"

using namespace afem;

namespace {

double total_area(const Mesh& m) {
  double s = 0.0;
  for (int t = 0; t < m.n_elems(); ++t) s += m.elem_area[t];
  return s;
}

double min_angle(const Mesh& m) {
  double amin = 10.0;
  for (int t = 0; t < m.n_elems(); ++t)
    for (int i = 0; i < 3; ++i) {
      Vec2 u = m.elem_vertex(t, (i + 1) % 3) - m.elem_vertex(t, i);
      Vec2 v = m.elem_vertex(t, (i + 2) % 3) - m.elem_vertex(t, i);
      amin = std::min(amin, std::acos(dot(u, v) / (norm(u) * norm(v))));
    }
  return amin;
}

bool has_vertex_at(const Mesh& m, Vec2 p) {
  for (const Vec2& v : m.vertices)
    if (v.x == p.x && v.y == p.y) return true;
  return false;
}

// Barycentric coordinates of p with respect to triangle (a,b,c).
std::array<double, 3> barycentric(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  double s = signed_area2(a, b, c);
  return {signed_area2(p, b, c) / s, signed_area2(a, p, c) / s, signed_area2(a, b, p) / s};
}

bool same_mesh(const Mesh& a, const Mesh& b) {
  if (a.vertices.size() != b.vertices.size() || a.elems.size() != b.elems.size()) return false;
  for (size_t i = 0; i < a.vertices.size(); ++i)
    if (a.vertices[i].x != b.vertices[i].x || a.vertices[i].y != b.vertices[i].y) return false;
  for (size_t t = 0; t < a.elems.size(); ++t)
    if (a.elems[t] != b.elems[t] || a.ref_edge[t] != b.ref_edge[t]) return false;
  return true;
}

}  // namespace

TEST_CASE("initial meshes") {
  Mesh sq = build_initial_mesh("unit_square");
  CHECK(sq.n_elems() == 2);
  CHECK(sq.n_vertices() == 4);
  CHECK(total_area(sq) == doctest::Approx(1.0).epsilon(1e-15));

  Mesh ls = build_initial_mesh("lshape");
  CHECK(ls.n_elems() == 6);
  CHECK(ls.n_vertices() == 8);
  CHECK(total_area(ls) == doctest::Approx(3.0).epsilon(1e-15));

  Mesh cr = build_initial_mesh("cross");
  CHECK(cr.n_elems() == 24);
  CHECK(cr.n_vertices() == 21);
  CHECK(total_area(cr) == doctest::Approx(3.0).epsilon(1e-15));

  CHECK_THROWS_AS(build_initial_mesh("pentagon"), std::invalid_argument);

  for (const Mesh* m : {&sq, &ls, &cr}) {
    CHECK(min_angle(*m) == doctest::Approx(std::acos(-1.0) / 4).epsilon(1e-13));
    // every reference edge is a longest edge of its element
    for (int t = 0; t < m->n_elems(); ++t) {
      int r = m->ref_edge[t];
      double lr = norm(m->elem_vertex(t, (r + 1) % 3) - m->elem_vertex(t, (r + 2) % 3));
      CHECK(lr == doctest::Approx(m->elem_diam[t]).epsilon(1e-15));
    }
  }
}

TEST_CASE("bisect: empty marks return the input") {
  Mesh sq = build_initial_mesh("unit_square");
  Mesh out = bisect(sq, {});
  CHECK(same_mesh(sq, out));
}

TEST_CASE("bisect: hand-run trace for one marked element of the square") {
  // Marking element 0 splits the diagonal; closure forces element 1 to split
  // through the same edge. Expected mesh worked out by hand.
  Mesh sq = build_initial_mesh("unit_square");
  Mesh out = bisect(sq, {{0, 1}});
  REQUIRE(out.n_elems() == 4);
  REQUIRE(out.n_vertices() == 5);
  CHECK(out.vertices[4].x == 0.5);
  CHECK(out.vertices[4].y == 0.5);
  CHECK(out.elems[0] == std::array<int, 3>{1, 2, 4});
  CHECK(out.elems[1] == std::array<int, 3>{1, 4, 0});
  CHECK(out.elems[2] == std::array<int, 3>{3, 0, 4});
  CHECK(out.elems[3] == std::array<int, 3>{3, 4, 2});
  CHECK(out.ref_edge == std::vector<int>{2, 1, 2, 1});
  CHECK(out.generation == std::vector<int>{1, 1, 1, 1});
  CHECK(out.parent == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("bisect: marking everything doubles compatible meshes") {
  for (const char* name : {"unit_square", "lshape", "cross"}) {
    Mesh m = build_initial_mesh(name);
    for (int round = 0; round < 3; ++round) {
      Mesh fine = uniform_refine(m);
      CHECK(fine.n_elems() == 2 * m.n_elems());
      for (int t = 0; t < fine.n_elems(); ++t) {
        CHECK(fine.parent[t] == t / 2);
        CHECK(fine.generation[t] == m.generation[t / 2] + 1);
      }
      CHECK(total_area(fine) == doctest::Approx(total_area(m)).epsilon(1e-14));
      m = std::move(fine);
    }
    Mesh two = uniform_refine(build_initial_mesh(name), 2);
    CHECK(two.n_elems() == 4 * build_initial_mesh(name).n_elems());
  }
}

TEST_CASE("bisect: invalid marks are rejected") {
  Mesh sq = build_initial_mesh("unit_square");
  CHECK_THROWS_AS((void)bisect(sq, {{7, 1}}), std::invalid_argument);
  CHECK_THROWS_AS((void)bisect(sq, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS((void)bisect(sq, {{-1, 2}}), std::invalid_argument);
}

TEST_CASE("bisect: random adaptive rounds keep shape, nesting, determinism") {
  std::mt19937 rng(1234);
  Mesh m = build_initial_mesh("lshape");
  for (int round = 0; round < 10; ++round) {
    std::map<int, int> marks;
    std::uniform_int_distribution<int> pick(0, m.n_elems() - 1);
    for (int k = 0; k < std::max(1, m.n_elems() / 4); ++k) marks[pick(rng)] = 1;

    Mesh fine = bisect(m, marks);
    CHECK(same_mesh(fine, bisect(m, marks)));
    CHECK(min_angle(fine) > std::acos(-1.0) / 4 - 1e-12);
    CHECK(total_area(fine) == doctest::Approx(3.0).epsilon(1e-13));

    // marked elements are gone and their generation targets are met
    for (const auto& kv : marks)
      for (int t = 0; t < fine.n_elems(); ++t)
        if (fine.parent[t] == kv.first)
          CHECK(fine.generation[t] >= m.generation[kv.first] + kv.second);

    // nestedness: centroid of each element lies in its recorded parent
    for (int t = 0; t < fine.n_elems(); ++t) {
      int par = fine.parent[t];
      REQUIRE(par >= 0);
      REQUIRE(par < m.n_elems());
      Vec2 cen = (1.0 / 3.0) * (fine.elem_vertex(t, 0) + fine.elem_vertex(t, 1) +
                                fine.elem_vertex(t, 2));
      auto bc = barycentric(cen, m.elem_vertex(par, 0), m.elem_vertex(par, 1),
                            m.elem_vertex(par, 2));
      for (double b : bc) CHECK(b >= -1e-14);
    }
    m = std::move(fine);
  }
  CHECK(m.n_elems() > 100);
}

TEST_CASE("vertex_patch: classification and coverage") {
  Mesh sq = uniform_refine(build_initial_mesh("unit_square"), 2);
  // find an interior vertex
  int interior = -1;
  for (int v = 0; v < sq.n_vertices(); ++v)
    if (!sq.boundary_vertex[v]) interior = v;
  REQUIRE(interior >= 0);
  PatchSubmesh pin = vertex_patch(sq, interior);
  CHECK(pin.center_interior);
  for (PatchEdgeClass c : pin.edge_class) CHECK(c != PatchEdgeClass::free_boundary);
  for (int t : pin.elems) {
    bool has_center = false;
    for (int i = 0; i < 3; ++i) has_center |= (sq.elems[t][i] == pin.center);
    CHECK(has_center);
  }

  Mesh sq0 = build_initial_mesh("unit_square");
  PatchSubmesh pc = vertex_patch(sq0, 0);
  CHECK(pc.elems == std::vector<int>{0, 1});
  CHECK(!pc.center_interior);
  int n_free = 0, n_zero = 0, n_int = 0;
  for (PatchEdgeClass c : pc.edge_class) {
    n_free += c == PatchEdgeClass::free_boundary;
    n_zero += c == PatchEdgeClass::zero_trace;
    n_int += c == PatchEdgeClass::interior;
  }
  CHECK(n_free == 2);
  CHECK(n_zero == 2);
  CHECK(n_int == 1);

  // every triangle of the L-shape mesh appears in exactly 3 patches
  Mesh ls = build_initial_mesh("lshape");
  double patch_area = 0.0;
  for (int v = 0; v < ls.n_vertices(); ++v) {
    PatchSubmesh p = vertex_patch(ls, v);
    CHECK(total_area(p.local) > 0.0);
    for (int t : p.elems) patch_area += ls.elem_area[t];
  }
  CHECK(patch_area == doctest::Approx(3.0 * 3.0).epsilon(1e-14));
}

TEST_CASE("neighborhoods: inclusions and saturation") {
  Mesh ls = uniform_refine(build_initial_mesh("lshape"), 3);
  std::vector<int> all(ls.n_elems());
  for (int t = 0; t < ls.n_elems(); ++t) all[t] = t;
  CHECK(second_neighborhood(ls, all) == all);

  std::mt19937 rng(99);
  std::uniform_int_distribution<int> pick(0, ls.n_elems() - 1);
  for (int k = 0; k < 100; ++k) {
    std::vector<int> s = {pick(rng)};
    auto fn = face_neighborhood(ls, s);
    auto vn = vertex_neighborhood(ls, s);
    auto sn = second_neighborhood(ls, s);
    CHECK(fn.size() <= 4);
    CHECK(std::includes(vn.begin(), vn.end(), fn.begin(), fn.end()));
    CHECK(std::includes(sn.begin(), sn.end(), vn.begin(), vn.end()));
    CHECK(std::binary_search(fn.begin(), fn.end(), s[0]));

    // brute-force the vertex neighborhood from the definition
    std::set<int> expect;
    for (int t = 0; t < ls.n_elems(); ++t)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (ls.elems[t][i] == ls.elems[s[0]][j]) expect.insert(t);
    CHECK(vn == std::vector<int>(expect.begin(), expect.end()));
  }
}

TEST_CASE("interior nodes appear after three cascaded patch bisections") {
  Mesh m = uniform_refine(build_initial_mesh("lshape"), 2);
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> pick(0, m.n_vertices() - 1);
  for (int k = 0; k < 20; ++k) {
    int a = pick(rng);
    PatchSubmesh patch = vertex_patch(m, a);
    std::map<int, int> marks;
    for (int t : patch.elems) marks[t] = 3;
    Mesh fine = bisect(m, marks);

    for (int t : patch.elems) {
      bool found = false;
      for (const Vec2& v : fine.vertices) {
        auto bc = barycentric(v, m.elem_vertex(t, 0), m.elem_vertex(t, 1), m.elem_vertex(t, 2));
        if (bc[0] > 1e-12 && bc[1] > 1e-12 && bc[2] > 1e-12) found = true;
      }
      CHECK(found);
    }
    for (size_t e = 0; e < patch.local.edges.size(); ++e) {
      if (patch.edge_class[e] != PatchEdgeClass::interior) continue;
      Vec2 a0 = m.vertices[patch.v_l2g[patch.local.edges[e].a]];
      Vec2 b0 = m.vertices[patch.v_l2g[patch.local.edges[e].b]];
      CHECK(has_vertex_at(fine, midpoint(a0, b0)));
    }
  }
}

TEST_CASE("mesh text io: round trip and parse errors") {
  Mesh m = bisect(build_initial_mesh("unit_square"), {{0, 1}});
  std::stringstream ss;
  write_mesh(ss, m);
  Mesh back = read_mesh(ss);
  CHECK(same_mesh(m, back));

  auto fails_at_line = [](const std::string& text, const std::string& needle) {
    std::stringstream in(text);
    try {
      read_mesh(in);
      return std::string("no error");
    } catch (const std::runtime_error& e) {
      std::string what = e.what();
      return what.find(needle) != std::string::npos ? std::string("ok")
                                                    : std::string("wrong: ") + what;
    }
  };
  CHECK(fails_at_line("# comment\n3 1\n0 0\n1 0\nx 1\n0 1 2 0\n", "line 5") == "ok");
  CHECK(fails_at_line("3 1\n0 0\n1 0\n0 1\n0 1 5 0\n", "out of range") == "ok");
  CHECK(fails_at_line("3 1\n0 0\n1 0\n0 1\n0 1 2 3\n", "reference edge") == "ok");
  CHECK(fails_at_line("3 1\n0 0\n1 0\n0 1\n", "end of input") == "ok");

  // orientation and conformity audits on explicit meshes
  std::stringstream cw("3 1\n0 0\n1 0\n0 1\n0 2 1 0\n");
  CHECK_THROWS_WITH_AS(read_mesh(cw), doctest::Contains("area"), std::runtime_error);
  std::stringstream hang(
      "5 3\n0 0\n1 0\n1 1\n0 1\n0.5 0.5\n"
      "0 1 2 0\n0 4 3 0\n4 2 3 0\n");
  CHECK_THROWS_WITH_AS(read_mesh(hang), doctest::Contains("hanging"), std::runtime_error);
  std::stringstream triple(
      "5 3\n0 0\n1 0\n1 1\n0 1\n0.5 0.8\n"
      "0 1 2 0\n0 2 3 0\n0 2 4 0\n");
  CHECK_THROWS_WITH_AS(read_mesh(triple), doctest::Contains("more than two"), std::runtime_error);
}
