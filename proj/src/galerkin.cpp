#include "afem/galerkin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace afem {

LinearSystem assemble_poisson(const ScalarSpace& space, const ScalarFn& f, const ScalarFn& g) {
  const Mesh& mesh = *space.mesh;
  const int p = space.p;
  const int nd = space.nd();
  const int stiff_deg = std::max(2 * p - 2, 0);
  const QuadRule& srule = quadrature_rule(stiff_deg);
  const BasisTable& stab = lagrange_table(p, stiff_deg);
  const int data_deg = data_quad_degree(p);
  const QuadRule& drule = quadrature_rule(data_deg);
  const BasisTable& dtab = lagrange_table(p, data_deg);

  LinearSystem sys;
  sys.n = space.n_dofs;
  sys.lift = Eigen::VectorXd::Zero(space.n_dofs);
  for (int d = 0; d < space.n_dofs; ++d)
    if (space.dirichlet[d] && g) sys.lift[d] = g(space.dof_pos[d]);

  std::vector<int> reduced(space.n_dofs, -1);
  for (int d = 0; d < space.n_dofs; ++d)
    if (!space.dirichlet[d]) {
      sys.free_dofs.push_back(d);
      reduced[d] = static_cast<int>(sys.free_dofs.size()) - 1;
    }
  const int nf = static_cast<int>(sys.free_dofs.size());
  sys.b = Eigen::VectorXd::Zero(nf);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.n_elems()) * nd * nd);
  Eigen::MatrixXd K(nd, nd), GX, GY;
  Eigen::VectorXd bloc(nd);

  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    GX = (em.j11 * stab.dx - em.j10 * stab.dy) / em.det;
    GY = (-em.j01 * stab.dx + em.j00 * stab.dy) / em.det;
    K.setZero();
    for (size_t q = 0; q < srule.points.size(); ++q) {
      double w = srule.points[q].w * em.det;
      K.noalias() += w * (GX.row(q).transpose() * GX.row(q) + GY.row(q).transpose() * GY.row(q));
    }

    bloc.setZero();
    if (f)
      for (size_t q = 0; q < drule.points.size(); ++q) {
        Vec2 phys = em.to_phys({drule.points[q].l1, drule.points[q].l2});
        bloc += (drule.points[q].w * em.det * f(phys)) * dtab.val.row(q).transpose();
      }

    const int* dofs = space.dofs(t);
    for (int i = 0; i < nd; ++i) {
      int ri = reduced[dofs[i]];
      if (ri < 0) continue;
      sys.b[ri] += bloc[i];
      for (int j = 0; j < nd; ++j) {
        int rj = reduced[dofs[j]];
        if (rj >= 0)
          trips.emplace_back(ri, rj, K(i, j));
        else
          sys.b[ri] -= K(i, j) * sys.lift[dofs[j]];
      }
    }
  }

  sys.A.resize(nf, nf);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

Eigen::VectorXd solve_spd(const LinearSystem& sys) {
  Eigen::VectorXd x = sys.lift;
  if (sys.free_dofs.empty()) return x;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.A);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve_spd: factorization failed on the free block");
  {
    const auto& D = ldlt.vectorD();
    for (int i = 0; i < D.size(); ++i)
      if (!(D[i] > 0.0))
        throw std::runtime_error("solve_spd: non-positive pivot at free dof " +
                                 std::to_string(sys.free_dofs[i]));
  }

  double bnorm = sys.b.norm();
  Eigen::VectorXd xf = ldlt.solve(sys.b);
  if (bnorm > 0.0) {
    for (int it = 0; it < 3; ++it) {
      Eigen::VectorXd r = sys.b - sys.A * xf;
      if (r.norm() <= 1e-13 * bnorm) break;
      xf += ldlt.solve(r);
    }
    double rel = (sys.b - sys.A * xf).norm() / bnorm;
    if (rel > 1e-12) {
      Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(sys.A);
      cg.setTolerance(1e-14);
      xf = cg.solveWithGuess(sys.b, xf);
      rel = (sys.b - sys.A * xf).norm() / bnorm;
      if (rel > 1e-12)
        throw std::runtime_error("solve_spd: relative residual " + std::to_string(rel) +
                                 " above 1e-12");
    }
  } else {
    xf.setZero();
  }
  for (size_t i = 0; i < sys.free_dofs.size(); ++i) x[sys.free_dofs[i]] = xf[i];
  return x;
}

ScalarField solve_poisson(const ScalarSpace& space, const ScalarFn& f, const ScalarFn& g) {
  return {&space, solve_spd(assemble_poisson(space, f, g))};
}

double energy_norm(const ScalarField& u) {
  const ScalarSpace& sp = *u.space;
  const Mesh& mesh = *sp.mesh;
  const int deg = std::max(2 * sp.p - 2, 0);
  const QuadRule& rule = quadrature_rule(deg);
  const BasisTable& tab = lagrange_table(sp.p, deg);
  double total = 0.0;
  Eigen::VectorXd loc(sp.nd());
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    const int* dofs = sp.dofs(t);
    for (int k = 0; k < sp.nd(); ++k) loc[k] = u.coeffs[dofs[k]];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      Vec2 gp = em.grad_to_phys(tab.dx.row(q).dot(loc), tab.dy.row(q).dot(loc));
      total += rule.points[q].w * em.det * dot(gp, gp);
    }
  }
  return std::sqrt(total);
}

namespace {

constexpr int kCornerDepth = 12;

// Integrates |grad_exact - grad u_h|^2 over the physical triangle (a,b,c)
// that is a subset of element t.
double cell_error2(const GradFn& grad_exact, const ScalarField& u, int t, const ElemMap& em,
                   Vec2 a, Vec2 b, Vec2 c, const QuadRule& rule) {
  const ScalarSpace& sp = *u.space;
  double det = signed_area2(a, b, c);
  std::vector<Vec2> phys, ref;
  phys.reserve(rule.points.size());
  ref.reserve(rule.points.size());
  for (const QuadPoint& q : rule.points) {
    Vec2 x = q.l0 * a + q.l1 * b + q.l2 * c;
    phys.push_back(x);
    ref.push_back(em.to_ref(x));
  }
  BasisTable tab = tabulate_lagrange(sp.p, ref);
  Eigen::VectorXd loc(sp.nd());
  const int* dofs = sp.dofs(t);
  for (int k = 0; k < sp.nd(); ++k) loc[k] = u.coeffs[dofs[k]];
  double total = 0.0;
  for (size_t q = 0; q < rule.points.size(); ++q) {
    Vec2 gh = em.grad_to_phys(tab.dx.row(q).dot(loc), tab.dy.row(q).dot(loc));
    Vec2 d = grad_exact(phys[q]) - gh;
    total += rule.points[q].w * det * dot(d, d);
  }
  return total;
}

double corner_error2(const GradFn& grad_exact, const ScalarField& u, int t, const ElemMap& em,
                     Vec2 corner, Vec2 b, Vec2 c, const QuadRule& rule, int depth) {
  if (depth == kCornerDepth) return cell_error2(grad_exact, u, t, em, corner, b, c, rule);
  Vec2 mab = midpoint(corner, b), mac = midpoint(corner, c), mbc = midpoint(b, c);
  return cell_error2(grad_exact, u, t, em, mab, b, mbc, rule) +
         cell_error2(grad_exact, u, t, em, mac, mbc, c, rule) +
         cell_error2(grad_exact, u, t, em, mab, mbc, mac, rule) +
         corner_error2(grad_exact, u, t, em, corner, mab, mac, rule, depth + 1);
}

}  // namespace

double energy_error(const GradFn& grad_exact, const ScalarField& u, std::optional<Vec2> corner) {
  const ScalarSpace& sp = *u.space;
  const Mesh& mesh = *sp.mesh;
  const int deg = data_quad_degree(sp.p);
  const QuadRule& rule = quadrature_rule(deg);
  const BasisTable& tab = lagrange_table(sp.p, deg);
  double total = 0.0;
  Eigen::VectorXd loc(sp.nd());
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    int at_corner = -1;
    if (corner)
      for (int i = 0; i < 3; ++i) {
        Vec2 v = mesh.elem_vertex(t, i);
        if (v.x == corner->x && v.y == corner->y) at_corner = i;
      }
    if (at_corner >= 0) {
      Vec2 a = mesh.elem_vertex(t, at_corner);
      Vec2 b = mesh.elem_vertex(t, (at_corner + 1) % 3);
      Vec2 c = mesh.elem_vertex(t, (at_corner + 2) % 3);
      total += corner_error2(grad_exact, u, t, em, a, b, c, rule, 0);
      continue;
    }
    const int* dofs = sp.dofs(t);
    for (int k = 0; k < sp.nd(); ++k) loc[k] = u.coeffs[dofs[k]];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      Vec2 phys = em.to_phys({rule.points[q].l1, rule.points[q].l2});
      Vec2 gh = em.grad_to_phys(tab.dx.row(q).dot(loc), tab.dy.row(q).dot(loc));
      Vec2 d = grad_exact(phys) - gh;
      total += rule.points[q].w * em.det * dot(d, d);
    }
  }
  return std::sqrt(total);
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& v : mesh.vertices) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  n_ = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(mesh.n_elems()))) + 1, 8, 512);
  org_ = {x0, y0};
  hx_ = (x1 - x0) / n_ + 1e-300;
  hy_ = (y1 - y0) / n_ + 1e-300;

  std::vector<std::pair<int, int>> entries;  // (cell, elem)
  for (int t = 0; t < mesh.n_elems(); ++t) {
    double ex0 = 1e300, ex1 = -1e300, ey0 = 1e300, ey1 = -1e300;
    for (int i = 0; i < 3; ++i) {
      Vec2 v = mesh.elem_vertex(t, i);
      ex0 = std::min(ex0, v.x);
      ex1 = std::max(ex1, v.x);
      ey0 = std::min(ey0, v.y);
      ey1 = std::max(ey1, v.y);
    }
    int i0 = std::clamp(static_cast<int>((ex0 - org_.x) / hx_), 0, n_ - 1);
    int i1 = std::clamp(static_cast<int>((ex1 - org_.x) / hx_), 0, n_ - 1);
    int j0 = std::clamp(static_cast<int>((ey0 - org_.y) / hy_), 0, n_ - 1);
    int j1 = std::clamp(static_cast<int>((ey1 - org_.y) / hy_), 0, n_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) entries.emplace_back(j * n_ + i, t);
  }
  std::sort(entries.begin(), entries.end());
  cell_ptr_.assign(n_ * n_ + 1, 0);
  cell_elems_.resize(entries.size());
  for (const auto& e : entries) ++cell_ptr_[e.first + 1];
  for (int c = 0; c < n_ * n_; ++c) cell_ptr_[c + 1] += cell_ptr_[c];
  std::vector<int> fill(cell_ptr_.begin(), cell_ptr_.end() - 1);
  for (const auto& e : entries) cell_elems_[fill[e.first]++] = e.second;
}

int PointLocator::locate(Vec2 p, Vec2* ref) const {
  int i = std::clamp(static_cast<int>((p.x - org_.x) / hx_), 0, n_ - 1);
  int j = std::clamp(static_cast<int>((p.y - org_.y) / hy_), 0, n_ - 1);
  int cell = j * n_ + i;
  int best = -1;
  double best_min = -1e300;
  std::array<double, 3> best_bc{};
  for (int k = cell_ptr_[cell]; k < cell_ptr_[cell + 1]; ++k) {
    int t = cell_elems_[k];
    Vec2 a = mesh_->elem_vertex(t, 0), b = mesh_->elem_vertex(t, 1), c = mesh_->elem_vertex(t, 2);
    double s = signed_area2(a, b, c);
    std::array<double, 3> bc = {signed_area2(p, b, c) / s, signed_area2(a, p, c) / s,
                                signed_area2(a, b, p) / s};
    double mn = std::min({bc[0], bc[1], bc[2]});
    if (mn > best_min) {
      best_min = mn;
      best = t;
      best_bc = bc;
    }
  }
  if (best < 0 || best_min < -1e-9)
    throw std::runtime_error("PointLocator: point (" + std::to_string(p.x) + "," +
                             std::to_string(p.y) + ") not inside the mesh");
  if (ref) *ref = {best_bc[1], best_bc[2]};
  return best;
}

ScalarField interpolate_to(const ScalarField& coarse, const ScalarSpace& fine_space) {
  PointLocator loc(*coarse.space->mesh);
  ScalarField out{&fine_space, Eigen::VectorXd(fine_space.n_dofs)};
  for (int d = 0; d < fine_space.n_dofs; ++d) {
    Vec2 ref;
    int t = loc.locate(fine_space.dof_pos[d], &ref);
    out.coeffs[d] = eval_scalar(coarse, t, ref);
  }
  return out;
}

}  // namespace afem
