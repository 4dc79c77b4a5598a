#include "afem/spaces.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

namespace afem {

ElemMap elem_map(const Mesh& mesh, int t) {
  Vec2 a = mesh.elem_vertex(t, 0), b = mesh.elem_vertex(t, 1), c = mesh.elem_vertex(t, 2);
  ElemMap m;
  m.v0 = a;
  m.j00 = b.x - a.x;
  m.j10 = b.y - a.y;
  m.j01 = c.x - a.x;
  m.j11 = c.y - a.y;
  m.det = m.j00 * m.j11 - m.j01 * m.j10;
  return m;
}

int ScalarSpace::n_free() const {
  int n = 0;
  for (char d : dirichlet) n += !d;
  return n;
}

ScalarSpace build_scalar_space(const Mesh& mesh, int p,
                               const std::function<bool(Vec2)>& dirichlet) {
  if (p < 1 || p > kMaxDegree)
    throw std::invalid_argument("build_scalar_space: degree " + std::to_string(p) +
                                " outside [1," + std::to_string(kMaxDegree) + "]");
  ScalarSpace s;
  s.mesh = &mesh;
  s.p = p;
  const int nv = mesh.n_vertices();
  const int ne = mesh.n_elems();
  const int nE = static_cast<int>(mesh.edges.size());
  const int per_edge = p - 1;
  const int per_int = interior_dim(p);
  s.n_dofs = nv + nE * per_edge + ne * per_int;
  s.elem_dofs.resize(static_cast<size_t>(ne) * s.nd());
  s.dof_pos.assign(s.n_dofs, Vec2{});

  for (int v = 0; v < nv; ++v) s.dof_pos[v] = mesh.vertices[v];
  for (int e = 0; e < nE; ++e) {
    Vec2 a = mesh.vertices[mesh.edges[e].a], b = mesh.vertices[mesh.edges[e].b];
    for (int k = 0; k < per_edge; ++k)
      s.dof_pos[nv + e * per_edge + k] = a + (static_cast<double>(k + 1) / p) * (b - a);
  }

  for (int t = 0; t < ne; ++t) {
    int* d = s.elem_dofs.data() + static_cast<size_t>(t) * s.nd();
    int k = 0;
    for (int i = 0; i < 3; ++i) d[k++] = mesh.elems[t][i];
    for (int i = 0; i < 3; ++i) {
      int e = mesh.elem_edge[t][i];
      bool ascending = mesh.elems[t][(i + 1) % 3] < mesh.elems[t][(i + 2) % 3];
      for (int j = 1; j < p; ++j)
        d[k++] = nv + e * per_edge + (ascending ? j - 1 : p - 1 - j);
    }
    ElemMap em = elem_map(mesh, t);
    const std::vector<Vec2> nodes = lagrange_nodes(p);
    for (int j = 0; j < per_int; ++j) {
      int dof = nv + nE * per_edge + t * per_int + j;
      d[k++] = dof;
      s.dof_pos[dof] = em.to_phys(nodes[3 + 3 * per_edge + j]);
    }
  }

  s.dirichlet.assign(s.n_dofs, 0);
  for (int v = 0; v < nv; ++v)
    if (mesh.boundary_vertex[v] && (!dirichlet || dirichlet(s.dof_pos[v]))) s.dirichlet[v] = 1;
  for (int e = 0; e < nE; ++e) {
    if (!mesh.is_boundary_edge(e)) continue;
    for (int k = 0; k < per_edge; ++k) {
      int dof = nv + e * per_edge + k;
      if (!dirichlet || dirichlet(s.dof_pos[dof])) s.dirichlet[dof] = 1;
    }
  }
  return s;
}

DgSpace build_dg_space(const Mesh& mesh, int p) {
  if (p < 0 || p > kMaxDegree)
    throw std::invalid_argument("build_dg_space: degree " + std::to_string(p) + " outside [0," +
                                std::to_string(kMaxDegree) + "]");
  DgSpace s;
  s.mesh = &mesh;
  s.p = p;
  s.n_dofs = mesh.n_elems() * s.nd();
  return s;
}

namespace {

FluxSpace build_rt(const Mesh& mesh, int p) {
  if (p < 0 || p > kMaxDegree)
    throw std::invalid_argument("build_rt_space: degree " + std::to_string(p) + " outside [0," +
                                std::to_string(kMaxDegree) + "]");
  FluxSpace s;
  s.mesh = &mesh;
  s.p = p;
  const int ne = mesh.n_elems();
  const int nE = static_cast<int>(mesh.edges.size());
  const int per_edge = p + 1;
  const int per_int = p * (p + 1);
  s.n_dofs = nE * per_edge + ne * per_int;
  s.elem_dofs.resize(static_cast<size_t>(ne) * s.nd());
  s.flip.resize(ne);
  for (int t = 0; t < ne; ++t) {
    int* d = s.elem_dofs.data() + static_cast<size_t>(t) * s.nd();
    int k = 0;
    for (int i = 0; i < 3; ++i) {
      int e = mesh.elem_edge[t][i];
      s.flip[t][i] = mesh.elems[t][(i + 1) % 3] > mesh.elems[t][(i + 2) % 3];
      for (int j = 0; j < per_edge; ++j) d[k++] = e * per_edge + j;
    }
    for (int j = 0; j < per_int; ++j) d[k++] = nE * per_edge + t * per_int + j;
  }
  s.zero_trace.assign(s.n_dofs, 0);
  return s;
}

}  // namespace

FluxSpace build_rt_space(const Mesh& mesh, int p) { return build_rt(mesh, p); }

FluxSpace build_rt_space(const PatchSubmesh& patch, int p) {
  FluxSpace s = build_rt(patch.local, p);
  for (size_t e = 0; e < patch.edge_class.size(); ++e)
    if (patch.edge_class[e] == PatchEdgeClass::zero_trace)
      for (int j = 0; j <= p; ++j) s.zero_trace[e * (p + 1) + j] = 1;
  return s;
}

RtElement FluxSpace::element(int t) const {
  Vec2 v[3] = {mesh->elem_vertex(t, 0), mesh->elem_vertex(t, 1), mesh->elem_vertex(t, 2)};
  bool f[3] = {flip[t][0] != 0, flip[t][1] != 0, flip[t][2] != 0};
  return RtElement(v, f, p);
}

namespace {

std::vector<Vec2> rule_points(int degree) {
  const QuadRule& r = quadrature_rule(degree);
  std::vector<Vec2> pts;
  pts.reserve(r.points.size());
  for (const QuadPoint& q : r.points) pts.push_back({q.l1, q.l2});
  return pts;
}

}  // namespace

const BasisTable& lagrange_table(int p, int rule_degree, bool second_derivs) {
  static std::map<std::tuple<int, int, bool>, BasisTable> cache;
  auto key = std::make_tuple(p, rule_degree, second_derivs);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, tabulate_lagrange(p, rule_points(rule_degree), second_derivs)).first;
  return it->second;
}

const BasisTable& modal_table(int p, int rule_degree) {
  static std::map<std::pair<int, int>, BasisTable> cache;
  auto key = std::make_pair(p, rule_degree);
  auto it = cache.find(key);
  if (it == cache.end()) {
    std::vector<Vec2> pts = rule_points(rule_degree);
    const int n = scalar_dim(p);
    BasisTable t;
    t.val.resize(pts.size(), n);
    t.dx.resize(pts.size(), n);
    t.dy.resize(pts.size(), n);
    std::vector<Jet2> jets;
    for (size_t q = 0; q < pts.size(); ++q) {
      modal_basis(p, pts[q].x, pts[q].y, jets);
      for (int m = 0; m < n; ++m) {
        t.val(q, m) = jets[m].v;
        t.dx(q, m) = jets[m].dx;
        t.dy(q, m) = jets[m].dy;
      }
    }
    it = cache.emplace(key, std::move(t)).first;
  }
  return it->second;
}

const Eigen::MatrixXd& modal_mass_inverse(int p) {
  static std::map<int, Eigen::MatrixXd> cache;
  auto it = cache.find(p);
  if (it == cache.end()) {
    const QuadRule& rule = quadrature_rule(2 * p);
    const BasisTable& tab = modal_table(p, 2 * p);
    const int n = scalar_dim(p);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (size_t q = 0; q < rule.points.size(); ++q)
      M += rule.points[q].w * tab.val.row(q).transpose() * tab.val.row(q);
    it = cache.emplace(p, M.llt().solve(Eigen::MatrixXd::Identity(n, n))).first;
  }
  return it->second;
}

DgField project_L2(const ScalarFn& f, const Mesh& mesh, int p, int quad_degree) {
  if (quad_degree < 0) quad_degree = std::min(2 * p + 6, kMaxQuadDegree);
  if (quad_degree < 2 * p)
    throw std::invalid_argument("project_L2: quadrature degree below 2p is not exact");
  const QuadRule& rule = quadrature_rule(quad_degree);
  const BasisTable& tab = modal_table(p, quad_degree);
  const Eigen::MatrixXd& Minv = modal_mass_inverse(p);
  const int n = scalar_dim(p);

  DgField out;
  out.space = build_dg_space(mesh, p);
  out.coeffs.resize(mesh.n_elems() * n);
  Eigen::VectorXd rhs(n);
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    rhs.setZero();
    for (size_t q = 0; q < rule.points.size(); ++q) {
      Vec2 phys = em.to_phys({rule.points[q].l1, rule.points[q].l2});
      rhs += (rule.points[q].w * f(phys)) * tab.val.row(q).transpose();
    }
    out.coeffs.segment(static_cast<size_t>(t) * n, n) = Minv * rhs;
  }
  return out;
}

double eval_scalar(const ScalarField& u, int t, Vec2 ref) {
  const ScalarSpace& s = *u.space;
  BasisTable tab = tabulate_lagrange(s.p, {ref});
  double v = 0.0;
  const int* d = s.dofs(t);
  for (int k = 0; k < s.nd(); ++k) v += u.coeffs[d[k]] * tab.val(0, k);
  return v;
}

Vec2 eval_scalar_grad(const ScalarField& u, int t, Vec2 ref) {
  const ScalarSpace& s = *u.space;
  BasisTable tab = tabulate_lagrange(s.p, {ref});
  double gx = 0.0, gy = 0.0;
  const int* d = s.dofs(t);
  for (int k = 0; k < s.nd(); ++k) {
    gx += u.coeffs[d[k]] * tab.dx(0, k);
    gy += u.coeffs[d[k]] * tab.dy(0, k);
  }
  return elem_map(*s.mesh, t).grad_to_phys(gx, gy);
}

double eval_dg(const DgField& g, int t, Vec2 ref) {
  const DgSpace& s = g.space;
  std::vector<Jet2> jets;
  modal_basis(s.p, ref.x, ref.y, jets);
  double v = 0.0;
  for (int k = 0; k < s.nd(); ++k) v += g.coeffs[static_cast<size_t>(t) * s.nd() + k] * jets[k].v;
  return v;
}

Vec2 eval_flux(const FluxField& s, const RtElement& el, int t, Vec2 phys) {
  const int n = s.space->nd();
  std::vector<double> vx(n), vy(n), dv(n);
  el.eval(phys, vx.data(), vy.data(), dv.data());
  const int* d = s.space->dofs(t);
  Vec2 out{0, 0};
  for (int k = 0; k < n; ++k) {
    out.x += s.coeffs[d[k]] * vx[k];
    out.y += s.coeffs[d[k]] * vy[k];
  }
  return out;
}

double eval_flux_div(const FluxField& s, const RtElement& el, int t, Vec2 phys) {
  const int n = s.space->nd();
  std::vector<double> vx(n), vy(n), dv(n);
  el.eval(phys, vx.data(), vy.data(), dv.data());
  const int* d = s.space->dofs(t);
  double out = 0.0;
  for (int k = 0; k < n; ++k) out += s.coeffs[d[k]] * dv[k];
  return out;
}

}  // namespace afem
