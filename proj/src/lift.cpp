#include "afem/lift.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "afem/galerkin.hpp"

namespace afem {

double Clb::as_double() const {
  return infinite ? std::numeric_limits<double>::infinity() : value;
}

Clb clb(double eta_a, double lift_norm) {
  if (eta_a < 0.0 || lift_norm < 0.0) throw std::invalid_argument("clb: negative input");
  if (lift_norm == 0.0) {
    if (eta_a == 0.0) return {0.0, false};
    return {0.0, true};
  }
  return {eta_a / lift_norm, false};
}

PatchSubmesh trial_refine_patch(const PatchSubmesh& patch, int beta) {
  if (beta < 1) throw std::invalid_argument("trial_refine_patch: beta must be >= 1");
  PatchSubmesh out;
  out.center = patch.center;
  out.center_local = patch.center_local;
  out.center_interior = patch.center_interior;
  out.v_l2g = patch.v_l2g;
  // Rounds of bisect-everything, so that closure children of one round are
  // themselves bisected in the next. A single bisect call with count beta
  // would leave them one generation short.
  out.local = patch.local;
  std::vector<int> root(patch.local.n_elems());
  for (size_t t = 0; t < root.size(); ++t) root[t] = static_cast<int>(t);
  for (int round = 0; round < beta; ++round) {
    std::map<int, int> marks;
    for (int t = 0; t < out.local.n_elems(); ++t) marks[t] = 1;
    Mesh next = bisect(out.local, marks);
    std::vector<int> next_root(next.n_elems());
    for (int t = 0; t < next.n_elems(); ++t) next_root[t] = root[next.parent[t]];
    root = std::move(next_root);
    out.local = std::move(next);
  }
  out.elems.resize(out.local.n_elems());
  for (int t = 0; t < out.local.n_elems(); ++t) out.elems[t] = patch.elems[root[t]];
  return out;
}

LiftingResult residual_lifting(const PatchSubmesh& patch_mesh, const ScalarField& u_h,
                               const ScalarFn& f, int p) {
  if (p < 1) throw std::invalid_argument("residual_lifting: p must be >= 1");
  const ScalarSpace& gsp = *u_h.space;
  const Mesh& gm = *gsp.mesh;
  const Mesh& lm = patch_mesh.local;
  if (patch_mesh.elems.size() != static_cast<size_t>(lm.n_elems()))
    throw std::invalid_argument("residual_lifting: patch has no ancestor map");

  LiftingResult out;
  out.vertex = patch_mesh.center;

  ScalarSpace tsp = build_scalar_space(lm, p);
  std::vector<int> red(tsp.n_dofs, -1);
  std::vector<int> free;
  for (int d = 0; d < tsp.n_dofs; ++d)
    if (!tsp.dirichlet[d]) {
      red[d] = static_cast<int>(free.size());
      free.push_back(d);
    }
  if (free.empty()) return out;

  const int nd = tsp.nd();
  const int stiff_deg = std::max(2 * p - 2, 0);
  const QuadRule& srule = quadrature_rule(stiff_deg);
  const BasisTable& stab = lagrange_table(p, stiff_deg);
  // The gradient of u_h restricted to a trial element is a polynomial of
  // degree gsp.p - 1, so this rule keeps the whole right-hand side exact up
  // to the data term.
  const int rhs_deg = std::max(data_quad_degree(p), gsp.p + p - 2);
  const QuadRule& drule = quadrature_rule(rhs_deg);
  const BasisTable& dtab = lagrange_table(p, rhs_deg);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(lm.n_elems()) * nd * nd);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(free.size()));
  Eigen::VectorXd gloc(gsp.nd());
  std::vector<Vec2> phys(drule.points.size()), refs(drule.points.size());
  for (int t = 0; t < lm.n_elems(); ++t) {
    ElemMap em = elem_map(lm, t);
    const int ge = patch_mesh.elems[t];
    ElemMap gem = elem_map(gm, ge);
    const int* dofs = tsp.dofs(t);
    for (size_t q = 0; q < srule.points.size(); ++q) {
      double w = srule.points[q].w * em.det;
      for (int i = 0; i < nd; ++i) {
        if (red[dofs[i]] < 0) continue;
        Vec2 gi = em.grad_to_phys(stab.dx(q, i), stab.dy(q, i));
        for (int j = 0; j < nd; ++j) {
          if (red[dofs[j]] < 0) continue;
          Vec2 gj = em.grad_to_phys(stab.dx(q, j), stab.dy(q, j));
          trips.emplace_back(red[dofs[i]], red[dofs[j]], w * (gi.x * gj.x + gi.y * gj.y));
        }
      }
    }
    const int* gd = gsp.dofs(ge);
    for (int k = 0; k < gsp.nd(); ++k) gloc[k] = u_h.coeffs[gd[k]];
    for (size_t q = 0; q < drule.points.size(); ++q) {
      const QuadPoint& qp = drule.points[q];
      phys[q] = em.to_phys({qp.l1, qp.l2});
      refs[q] = gem.to_ref(phys[q]);
    }
    BasisTable gtab = tabulate_lagrange(gsp.p, refs);
    for (size_t q = 0; q < drule.points.size(); ++q) {
      double w = drule.points[q].w * em.det;
      double fv = f ? f(phys[q]) : 0.0;
      Vec2 gu = gem.grad_to_phys(gtab.dx.row(q).dot(gloc), gtab.dy.row(q).dot(gloc));
      for (int i = 0; i < nd; ++i) {
        int ri = red[dofs[i]];
        if (ri < 0) continue;
        Vec2 gi = em.grad_to_phys(dtab.dx(q, i), dtab.dy(q, i));
        b[ri] += w * (fv * dtab.val(q, i) - gu.x * gi.x - gu.y * gi.y);
      }
    }
  }

  LinearSystem sys;
  sys.n = tsp.n_dofs;
  sys.A.resize(static_cast<int>(free.size()), static_cast<int>(free.size()));
  sys.A.setFromTriplets(trips.begin(), trips.end());
  sys.b = std::move(b);
  sys.free_dofs = std::move(free);
  sys.lift = Eigen::VectorXd::Zero(tsp.n_dofs);
  ScalarField r{&tsp, solve_spd(sys)};
  out.lift_norm = energy_norm(r);

  // Energy identity ||grad r||^2 = <f, r> - <grad u_h, grad r>; the right
  // side is the assembled functional applied to the solution.
  double rhs_val = 0.0;
  for (size_t i = 0; i < sys.free_dofs.size(); ++i)
    rhs_val += sys.b[static_cast<int>(i)] * r.coeffs[sys.free_dofs[i]];
  double lhs_val = out.lift_norm * out.lift_norm;
  if (std::abs(lhs_val - rhs_val) > 1e-10 * std::max({lhs_val, std::abs(rhs_val), 1e-30}))
    throw std::runtime_error("residual_lifting: energy identity violated at vertex " +
                             std::to_string(patch_mesh.center));
  return out;
}

LiftingResult select_beta(int a, const ScalarField& u_h, const ScalarFn& f, int beta_max,
                          double clb_max, std::optional<double> eta_a) {
  if (beta_max < 1) throw std::invalid_argument("select_beta: beta_max must be >= 1");
  if (!(clb_max > 0.0)) throw std::invalid_argument("select_beta: clb_max must be positive");
  const Mesh& mesh = *u_h.space->mesh;
  PatchSubmesh patch = vertex_patch(mesh, a);
  double eta = eta_a ? *eta_a : patch_indicator(equilibrate_patch(a, u_h, f), u_h, f);
  LiftingResult out;
  for (int beta = 1; beta <= beta_max; ++beta) {
    PatchSubmesh trial = trial_refine_patch(patch, beta);
    out = residual_lifting(trial, u_h, f, u_h.space->p);
    out.beta = beta;
    out.c_lb = clb(eta, out.lift_norm);
    if (out.c_lb.leq(clb_max)) break;
  }
  return out;
}

PatchSubmesh covered_patch(const Mesh& mesh, int a, const Mesh& covered) {
  if (a < 0 || a >= mesh.n_vertices())
    throw std::invalid_argument("covered_patch: invalid vertex id " + std::to_string(a));
  if (covered.parent.size() != static_cast<size_t>(covered.n_elems()))
    throw std::invalid_argument("covered_patch: covered mesh lacks parent genealogy");

  std::vector<char> in_patch(mesh.n_elems(), 0);
  for (int k = mesh.vertex_elem_ptr[a]; k < mesh.vertex_elem_ptr[a + 1]; ++k)
    in_patch[mesh.vertex_elem[k]] = 1;

  PatchSubmesh p;
  p.center = a;
  p.center_interior = !mesh.boundary_vertex[a];
  std::vector<int> fine;
  for (int t = 0; t < covered.n_elems(); ++t) {
    int anc = covered.parent[t];
    if (anc < 0 || anc >= mesh.n_elems())
      throw std::invalid_argument("covered_patch: parent outside the coarse mesh");
    if (in_patch[anc]) {
      fine.push_back(t);
      p.elems.push_back(anc);
    }
  }

  // Vertex ids here live in the covered mesh, which keeps the coarse vertices
  // as a prefix, so the center keeps its id.
  for (int t : fine)
    for (int i = 0; i < 3; ++i) p.v_l2g.push_back(covered.elems[t][i]);
  std::sort(p.v_l2g.begin(), p.v_l2g.end());
  p.v_l2g.erase(std::unique(p.v_l2g.begin(), p.v_l2g.end()), p.v_l2g.end());
  std::unordered_map<int, int> g2l;
  for (size_t i = 0; i < p.v_l2g.size(); ++i) g2l.emplace(p.v_l2g[i], static_cast<int>(i));
  p.center_local = g2l.at(a);

  for (int g : p.v_l2g) p.local.vertices.push_back(covered.vertices[g]);
  for (int t : fine) {
    p.local.elems.push_back(
        {g2l.at(covered.elems[t][0]), g2l.at(covered.elems[t][1]), g2l.at(covered.elems[t][2])});
    p.local.ref_edge.push_back(covered.ref_edge[t]);
    p.local.generation.push_back(covered.generation[t]);
    p.local.parent.push_back(-1);
  }
  p.local.finalize();
  return p;
}

Mesh refine_to_cover(const Mesh& mesh, const std::map<int, int>& plan) {
  // The closure inside a trial round can split an element beyond its round
  // count, and the next round bisects those children again. Marking with
  // beta alone therefore undershoots; each patch element is marked with the
  // generation depth its trial refinement actually reached, which the
  // deterministic bisection tree then reproduces (or exceeds) globally.
  std::map<int, int> marks;
  for (const auto& [a, beta] : plan) {
    if (a < 0 || a >= mesh.n_vertices())
      throw std::invalid_argument("refine_to_cover: vertex " + std::to_string(a) +
                                  " out of range");
    if (beta < 1)
      throw std::invalid_argument("refine_to_cover: beta for vertex " + std::to_string(a) +
                                  " must be >= 1");
    PatchSubmesh trial = trial_refine_patch(vertex_patch(mesh, a), beta);
    for (int t = 0; t < trial.local.n_elems(); ++t) {
      int e = trial.elems[t];
      int depth = trial.local.generation[t] - mesh.generation[e];
      int& m = marks[e];
      m = std::max(m, depth);
    }
  }
  if (marks.empty()) return mesh;
  return bisect(mesh, marks);
}

}  // namespace afem
