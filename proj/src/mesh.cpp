#include "afem/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace afem {

namespace {

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

uint64_t coord_key(Vec2 p) {
  uint64_t hx, hy;
  static_assert(sizeof(double) == sizeof(uint64_t));
  std::memcpy(&hx, &p.x, 8);
  std::memcpy(&hy, &p.y, 8);
  return hx ^ (hy * 0x9e3779b97f4a7c15ull + (hx << 13));
}

}  // namespace

void Mesh::finalize() {
  const int ne = n_elems();
  const int nv = n_vertices();
  edges.clear();
  elem_edge.assign(ne, {-1, -1, -1});
  std::unordered_map<uint64_t, int> emap;
  emap.reserve(2 * ne);
  for (int t = 0; t < ne; ++t) {
    if (signed_area2(elem_vertex(t, 0), elem_vertex(t, 1), elem_vertex(t, 2)) <= 0.0)
      throw std::runtime_error("mesh audit: element " + std::to_string(t) +
                               " has non-positive area");
    for (int i = 0; i < 3; ++i) {
      int a = elems[t][(i + 1) % 3], b = elems[t][(i + 2) % 3];
      uint64_t key = edge_key(a, b);
      auto it = emap.find(key);
      if (it == emap.end()) {
        emap.emplace(key, static_cast<int>(edges.size()));
        elem_edge[t][i] = static_cast<int>(edges.size());
        edges.push_back({std::min(a, b), std::max(a, b), t, -1});
      } else {
        Edge& e = edges[it->second];
        if (e.t1 >= 0)
          throw std::runtime_error("mesh audit: edge (" + std::to_string(e.a) + "," +
                                   std::to_string(e.b) + ") shared by more than two elements");
        e.t1 = t;
        elem_edge[t][i] = it->second;
      }
    }
  }

  boundary_vertex.assign(nv, 0);
  std::unordered_map<uint64_t, int> vmap;
  vmap.reserve(2 * nv);
  for (int v = 0; v < nv; ++v) vmap.emplace(coord_key(vertices[v]), v);
  for (const Edge& e : edges) {
    if (e.t1 >= 0) continue;
    boundary_vertex[e.a] = 1;
    boundary_vertex[e.b] = 1;
    // A vertex sitting at the midpoint of a single-sided edge is a hanging
    // node left by a non-closed refinement.
    Vec2 m = midpoint(vertices[e.a], vertices[e.b]);
    auto it = vmap.find(coord_key(m));
    if (it != vmap.end() && vertices[it->second].x == m.x && vertices[it->second].y == m.y)
      throw std::runtime_error("mesh audit: hanging vertex " + std::to_string(it->second) +
                               " on edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                               ")");
  }

  vertex_elem_ptr.assign(nv + 1, 0);
  for (int t = 0; t < ne; ++t)
    for (int i = 0; i < 3; ++i) ++vertex_elem_ptr[elems[t][i] + 1];
  for (int v = 0; v < nv; ++v) vertex_elem_ptr[v + 1] += vertex_elem_ptr[v];
  vertex_elem.assign(vertex_elem_ptr[nv], -1);
  std::vector<int> fill(vertex_elem_ptr.begin(), vertex_elem_ptr.end() - 1);
  for (int t = 0; t < ne; ++t)
    for (int i = 0; i < 3; ++i) vertex_elem[fill[elems[t][i]]++] = t;

  elem_area.resize(ne);
  elem_diam.resize(ne);
  for (int t = 0; t < ne; ++t) {
    elem_area[t] = 0.5 * signed_area2(elem_vertex(t, 0), elem_vertex(t, 1), elem_vertex(t, 2));
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
      d = std::max(d, norm(elem_vertex(t, (i + 1) % 3) - elem_vertex(t, (i + 2) % 3)));
    elem_diam[t] = d;
  }
}

namespace {

Mesh from_lists(std::vector<Vec2> verts, std::vector<std::array<int, 3>> elems,
                std::vector<int> ref) {
  Mesh m;
  m.vertices = std::move(verts);
  m.elems = std::move(elems);
  m.ref_edge = std::move(ref);
  m.generation.assign(m.elems.size(), 0);
  m.parent.assign(m.elems.size(), -1);
  m.finalize();
  return m;
}

Mesh make_unit_square() {
  return from_lists({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}, {1, 2});
}

Mesh make_lshape() {
  std::vector<Vec2> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}};
  std::vector<std::array<int, 3>> e = {{0, 1, 2}, {0, 2, 3}, {5, 0, 4},
                                       {0, 3, 4}, {6, 7, 0}, {6, 0, 5}};
  // Reference edges are the square diagonals, all meeting at the reentrant
  // corner; partner triangles reference each other mutually.
  return from_lists(std::move(v), std::move(e), {1, 2, 0, 1, 1, 2});
}

Mesh make_cross() {
  std::vector<Vec2> v;
  int id[5][5];
  for (int j = 0; j <= 4; ++j)
    for (int i = 0; i <= 4; ++i) {
      bool corner = (i == 0 || i == 4) && (j == 0 || j == 4);
      if (corner) {
        id[i][j] = -1;
        continue;
      }
      id[i][j] = static_cast<int>(v.size());
      v.push_back({-1.0 + 0.5 * i, -1.0 + 0.5 * j});
    }
  std::vector<std::array<int, 3>> e;
  std::vector<int> r;
  for (int cj = 0; cj < 4; ++cj)
    for (int ci = 0; ci < 4; ++ci) {
      bool corner = (ci == 0 || ci == 3) && (cj == 0 || cj == 3);
      if (corner) continue;
      int ll = id[ci][cj], lr = id[ci + 1][cj], ur = id[ci + 1][cj + 1], ul = id[ci][cj + 1];
      e.push_back({ll, lr, ur});
      r.push_back(1);
      e.push_back({ll, ur, ul});
      r.push_back(2);
    }
  return from_lists(std::move(v), std::move(e), std::move(r));
}

}  // namespace

Mesh build_initial_mesh(const std::string& domain_spec) {
  if (domain_spec == "unit_square") return make_unit_square();
  if (domain_spec == "lshape") return make_lshape();
  if (domain_spec == "cross") return make_cross();
  if (domain_spec.rfind("file:", 0) == 0) return read_mesh_file(domain_spec.substr(5));
  throw std::invalid_argument("unknown domain '" + domain_spec +
                              "' (expected lshape, cross, unit_square, or file:<path>)");
}

namespace {

constexpr size_t kBisectCap = 10'000'000;

struct WorkElem {
  std::array<int, 3> v;
  int ref;
  int gen;
  int tgt;   // descendants bisect until generation reaches tgt
  int root;  // containing element id in the input mesh
};

}  // namespace

Mesh bisect(const Mesh& mesh, const std::map<int, int>& marks) {
  const int ne = mesh.n_elems();
  for (const auto& [id, count] : marks) {
    if (id < 0 || id >= ne)
      throw std::invalid_argument("bisect: invalid element id " + std::to_string(id));
    if (count < 1)
      throw std::invalid_argument("bisect: count " + std::to_string(count) + " for element " +
                                  std::to_string(id) + " must be >= 1");
  }
  if (marks.empty()) return mesh;

  std::vector<Vec2> verts = mesh.vertices;
  std::vector<WorkElem> w(ne);
  std::vector<char> alive(ne, 1);
  for (int t = 0; t < ne; ++t)
    w[t] = {mesh.elems[t], mesh.ref_edge[t], mesh.generation[t], mesh.generation[t], t};
  for (const auto& [id, count] : marks) w[id].tgt = w[id].gen + count;

  std::unordered_map<uint64_t, int> midpt;
  std::unordered_map<uint64_t, std::array<int, 2>> owners;
  owners.reserve(4 * ne);
  auto register_elem = [&](int i) {
    for (int k = 0; k < 3; ++k) {
      uint64_t key = edge_key(w[i].v[(k + 1) % 3], w[i].v[(k + 2) % 3]);
      auto& slots = owners.try_emplace(key, std::array<int, 2>{-1, -1}).first->second;
      if (slots[0] < 0)
        slots[0] = i;
      else if (slots[1] < 0)
        slots[1] = i;
      else
        throw std::runtime_error("bisect: edge acquired a third incident element");
    }
  };
  auto unregister_elem = [&](int i) {
    for (int k = 0; k < 3; ++k) {
      uint64_t key = edge_key(w[i].v[(k + 1) % 3], w[i].v[(k + 2) % 3]);
      auto& slots = owners[key];
      if (slots[0] == i) slots[0] = -1;
      if (slots[1] == i) slots[1] = -1;
    }
  };
  for (int t = 0; t < ne; ++t) register_elem(t);

  std::deque<int> todo;
  for (const auto& kv : marks) todo.push_back(kv.first);

  auto has_split_edge = [&](int i) {
    for (int k = 0; k < 3; ++k)
      if (midpt.count(edge_key(w[i].v[(k + 1) % 3], w[i].v[(k + 2) % 3]))) return true;
    return false;
  };

  while (!todo.empty()) {
    int i = todo.front();
    todo.pop_front();
    if (!alive[i]) continue;
    if (w[i].gen >= w[i].tgt && !has_split_edge(i)) continue;

    int r = w[i].ref;
    int peak = w[i].v[r], succ = w[i].v[(r + 1) % 3], pred = w[i].v[(r + 2) % 3];
    uint64_t key = edge_key(succ, pred);
    int mid;
    auto it = midpt.find(key);
    if (it != midpt.end()) {
      mid = it->second;
    } else {
      mid = static_cast<int>(verts.size());
      verts.push_back(midpoint(verts[succ], verts[pred]));
      midpt.emplace(key, mid);
      auto oit = owners.find(key);
      if (oit != owners.end())
        for (int nb : oit->second)
          if (nb >= 0 && nb != i && alive[nb]) todo.push_back(nb);
    }
    unregister_elem(i);
    alive[i] = 0;
    if (w.size() + 2 > kBisectCap)
      throw std::runtime_error("bisect: refinement exceeded the safety cap of " +
                               std::to_string(kBisectCap) + " elements");
    int c1 = static_cast<int>(w.size());
    w.push_back({{peak, succ, mid}, 2, w[i].gen + 1, w[i].tgt, w[i].root});
    w.push_back({{peak, mid, pred}, 1, w[i].gen + 1, w[i].tgt, w[i].root});
    alive.push_back(1);
    alive.push_back(1);
    register_elem(c1);
    register_elem(c1 + 1);
    todo.push_back(c1);
    todo.push_back(c1 + 1);
  }

  Mesh out;
  out.vertices = std::move(verts);
  for (size_t i = 0; i < w.size(); ++i) {
    if (!alive[i]) continue;
    out.elems.push_back(w[i].v);
    out.ref_edge.push_back(w[i].ref);
    out.generation.push_back(w[i].gen);
    out.parent.push_back(w[i].root);
  }
  out.finalize();
  return out;
}

Mesh uniform_refine(const Mesh& mesh, int rounds) {
  if (rounds < 0) throw std::invalid_argument("uniform_refine: rounds must be >= 0");
  if (rounds == 0) return mesh;
  std::map<int, int> marks;
  for (int t = 0; t < mesh.n_elems(); ++t) marks[t] = rounds;
  return bisect(mesh, marks);
}

PatchSubmesh vertex_patch(const Mesh& mesh, int a) {
  if (a < 0 || a >= mesh.n_vertices())
    throw std::invalid_argument("vertex_patch: invalid vertex id " + std::to_string(a));
  PatchSubmesh p;
  p.center = a;
  p.center_interior = !mesh.boundary_vertex[a];
  for (int k = mesh.vertex_elem_ptr[a]; k < mesh.vertex_elem_ptr[a + 1]; ++k)
    p.elems.push_back(mesh.vertex_elem[k]);

  for (int t : p.elems)
    for (int i = 0; i < 3; ++i) p.v_l2g.push_back(mesh.elems[t][i]);
  std::sort(p.v_l2g.begin(), p.v_l2g.end());
  p.v_l2g.erase(std::unique(p.v_l2g.begin(), p.v_l2g.end()), p.v_l2g.end());
  std::unordered_map<int, int> g2l;
  for (size_t i = 0; i < p.v_l2g.size(); ++i) g2l.emplace(p.v_l2g[i], static_cast<int>(i));
  p.center_local = g2l.at(a);

  for (int g : p.v_l2g) p.local.vertices.push_back(mesh.vertices[g]);
  for (int t : p.elems) {
    p.local.elems.push_back(
        {g2l.at(mesh.elems[t][0]), g2l.at(mesh.elems[t][1]), g2l.at(mesh.elems[t][2])});
    p.local.ref_edge.push_back(mesh.ref_edge[t]);
    p.local.generation.push_back(mesh.generation[t]);
    p.local.parent.push_back(-1);
  }
  p.local.finalize();

  p.edge_class.resize(p.local.edges.size());
  for (size_t e = 0; e < p.local.edges.size(); ++e) {
    const Edge& ed = p.local.edges[e];
    if (ed.t1 >= 0) {
      p.edge_class[e] = PatchEdgeClass::interior;
    } else if (!p.center_interior && (ed.a == p.center_local || ed.b == p.center_local)) {
      p.edge_class[e] = PatchEdgeClass::free_boundary;
    } else {
      p.edge_class[e] = PatchEdgeClass::zero_trace;
    }
  }
  return p;
}

namespace {

std::vector<int> checked_sorted(const Mesh& mesh, const std::vector<int>& S) {
  std::vector<int> s = S;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (!s.empty() && (s.front() < 0 || s.back() >= mesh.n_elems()))
    throw std::invalid_argument("neighborhood: element id out of range");
  return s;
}

}  // namespace

std::vector<int> face_neighborhood(const Mesh& mesh, const std::vector<int>& S) {
  std::vector<char> in(mesh.n_elems(), 0);
  for (int t : checked_sorted(mesh, S)) {
    in[t] = 1;
    for (int k = 0; k < 3; ++k) {
      const Edge& e = mesh.edges[mesh.elem_edge[t][k]];
      int other = (e.t0 == t) ? e.t1 : e.t0;
      if (other >= 0) in[other] = 1;
    }
  }
  std::vector<int> out;
  for (int t = 0; t < mesh.n_elems(); ++t)
    if (in[t]) out.push_back(t);
  return out;
}

std::vector<int> vertex_neighborhood(const Mesh& mesh, const std::vector<int>& S) {
  std::vector<char> in(mesh.n_elems(), 0);
  for (int t : checked_sorted(mesh, S)) {
    in[t] = 1;
    for (int i = 0; i < 3; ++i) {
      int v = mesh.elems[t][i];
      for (int k = mesh.vertex_elem_ptr[v]; k < mesh.vertex_elem_ptr[v + 1]; ++k)
        in[mesh.vertex_elem[k]] = 1;
    }
  }
  std::vector<int> out;
  for (int t = 0; t < mesh.n_elems(); ++t)
    if (in[t]) out.push_back(t);
  return out;
}

std::vector<int> second_neighborhood(const Mesh& mesh, const std::vector<int>& S) {
  return vertex_neighborhood(mesh, vertex_neighborhood(mesh, S));
}

}  // namespace afem
