#include "afem/equilibrate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace afem {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Local vertex slot of the patch center inside local element t.
int center_slot(const PatchSubmesh& patch, int t) {
  for (int i = 0; i < 3; ++i)
    if (patch.local.elems[t][i] == patch.center_local) return i;
  throw std::logic_error("patch element " + std::to_string(t) + " does not touch the center");
}

Vec2 hat_gradient(const ElemMap& em, int slot) {
  static const double gref[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  return em.grad_to_phys(gref[slot][0], gref[slot][1]);
}

double hat_value(const QuadPoint& q, int slot) {
  return slot == 0 ? q.l0 : (slot == 1 ? q.l1 : q.l2);
}

// Pi^p(psi_a f) on the patch plus per-element L2 norms of the projection
// residual psi_a f - Pi^p(psi_a f).
struct HatProjection {
  DgField proj;
  std::vector<double> osc;
};

HatProjection project_hat_f(const PatchSubmesh& patch, const ScalarFn& f, int p) {
  const Mesh& lm = patch.local;
  const int deg = data_quad_degree(p);
  const QuadRule& rule = quadrature_rule(deg);
  const BasisTable& tab = modal_table(p, deg);
  const Eigen::MatrixXd& minv = modal_mass_inverse(p);
  const int nd = scalar_dim(p);
  const size_t nq = rule.points.size();

  HatProjection out;
  out.proj.space = build_dg_space(lm, p);
  out.proj.coeffs.resize(static_cast<Eigen::Index>(lm.n_elems()) * nd);
  out.osc.assign(lm.n_elems(), 0.0);

  Eigen::VectorXd vals(nq), mom(nd), coef(nd);
  for (int t = 0; t < lm.n_elems(); ++t) {
    ElemMap em = elem_map(lm, t);
    int slot = center_slot(patch, t);
    mom.setZero();
    for (size_t q = 0; q < nq; ++q) {
      const QuadPoint& qp = rule.points[q];
      vals[q] = f ? hat_value(qp, slot) * f(em.to_phys({qp.l1, qp.l2})) : 0.0;
      mom.noalias() += qp.w * vals[q] * tab.val.row(q).transpose();
    }
    coef.noalias() = minv * mom;
    out.proj.coeffs.segment(static_cast<Eigen::Index>(t) * nd, nd) = coef;
    double osc2 = 0.0;
    for (size_t q = 0; q < nq; ++q) {
      double r = vals[q] - tab.val.row(q).dot(coef);
      osc2 += rule.points[q].w * em.det * r * r;
    }
    out.osc[t] = std::sqrt(osc2);
  }
  return out;
}

double indicator_total(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

}  // namespace

PatchRhs patch_rhs(const PatchSubmesh& patch, const ScalarField& u_h, const ScalarFn& f) {
  const ScalarSpace& ssp = *u_h.space;
  const int p = ssp.p;
  const Mesh& lm = patch.local;
  const int nd = scalar_dim(p);

  PatchRhs out;
  out.g = std::move(project_hat_f(patch, f, p).proj);

  // Subtract the exact modal representation of grad psi_a . grad u_h, a
  // polynomial of degree p-1 on each patch element.
  const int deg = 2 * p;
  const QuadRule& rule = quadrature_rule(deg);
  const BasisTable& mtab = modal_table(p, deg);
  const BasisTable& stab = lagrange_table(p, deg);
  const Eigen::MatrixXd& minv = modal_mass_inverse(p);
  const size_t nq = rule.points.size();

  Eigen::VectorXd loc(ssp.nd()), mom(nd);
  double area = 0.0;
  for (int t = 0; t < lm.n_elems(); ++t) {
    ElemMap em = elem_map(lm, t);
    int slot = center_slot(patch, t);
    Vec2 gpsi = hat_gradient(em, slot);
    const int* gdofs = ssp.dofs(patch.elems[t]);
    for (int k = 0; k < ssp.nd(); ++k) loc[k] = u_h.coeffs[gdofs[k]];
    mom.setZero();
    for (size_t q = 0; q < nq; ++q) {
      Vec2 gu = em.grad_to_phys(stab.dx.row(q).dot(loc), stab.dy.row(q).dot(loc));
      mom.noalias() += rule.points[q].w * dot(gpsi, gu) * mtab.val.row(q).transpose();
    }
    out.g.coeffs.segment(static_cast<Eigen::Index>(t) * nd, nd) -= minv * mom;
    area += lm.elem_area[t];
  }

  double norm2 = 0.0;
  for (int t = 0; t < lm.n_elems(); ++t) {
    ElemMap em = elem_map(lm, t);
    auto coef = out.g.coeffs.segment(static_cast<Eigen::Index>(t) * nd, nd);
    for (size_t q = 0; q < nq; ++q) {
      double v = mtab.val.row(q).dot(coef);
      out.integral += rule.points[q].w * em.det * v;
      norm2 += rule.points[q].w * em.det * v * v;
    }
  }
  out.norm = std::sqrt(norm2);

  if (patch.center_interior && std::abs(out.integral) > 1e-10 * out.norm * std::sqrt(area))
    throw std::runtime_error("patch_rhs: compatibility violated at interior vertex " +
                             std::to_string(patch.center) + " (integral " +
                             std::to_string(out.integral) + ")");
  return out;
}

PatchFlux equilibrate_patch(int a, const ScalarField& u_h, const ScalarFn& f) {
  const ScalarSpace& ssp = *u_h.space;
  const int p = ssp.p;
  auto patch = std::make_shared<PatchSubmesh>(vertex_patch(*ssp.mesh, a));
  const Mesh& lm = patch->local;
  PatchRhs rhs = patch_rhs(*patch, u_h, f);
  FluxSpace fsp = build_rt_space(*patch, p);

  std::vector<int> red(fsp.n_dofs, -1), free_dofs;
  for (int d = 0; d < fsp.n_dofs; ++d)
    if (!fsp.zero_trace[d]) {
      red[d] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(d);
    }
  const int nf = static_cast<int>(free_dofs.size());
  const int ndg = scalar_dim(p);
  const int m = lm.n_elems() * ndg;
  const bool zero_mean = patch->center_interior;
  const int n = nf + m + (zero_mean ? 1 : 0);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);

  const int deg = 2 * p + 2;
  const QuadRule& rule = quadrature_rule(deg);
  const BasisTable& stab = lagrange_table(p, deg);
  const BasisTable& mtab = modal_table(p, deg);
  const size_t nq = rule.points.size();
  const int nd = fsp.nd();

  std::vector<Vec2> physq(nq);
  Eigen::VectorXd loc(ssp.nd()), gcoef(ndg);
  for (int t = 0; t < lm.n_elems(); ++t) {
    ElemMap em = elem_map(lm, t);
    int slot = center_slot(*patch, t);
    const int* gdofs = ssp.dofs(patch->elems[t]);
    for (int k = 0; k < ssp.nd(); ++k) loc[k] = u_h.coeffs[gdofs[k]];
    gcoef = rhs.g.coeffs.segment(static_cast<Eigen::Index>(t) * ndg, ndg);
    for (size_t q = 0; q < nq; ++q) physq[q] = em.to_phys({rule.points[q].l1, rule.points[q].l2});
    RtElement el = fsp.element(t);
    RtTable rt = el.tabulate(physq);
    const int* fd = fsp.dofs(t);

    for (size_t q = 0; q < nq; ++q) {
      const double w = rule.points[q].w * em.det;
      const double psi = hat_value(rule.points[q], slot);
      Vec2 gu = em.grad_to_phys(stab.dx.row(q).dot(loc), stab.dy.row(q).dot(loc));
      const double tx = psi * gu.x, ty = psi * gu.y;
      const double gval = mtab.val.row(q).dot(gcoef);
      for (int i = 0; i < nd; ++i) {
        const int ri = red[fd[i]];
        if (ri < 0) continue;
        b[ri] -= w * (tx * rt.vx(q, i) + ty * rt.vy(q, i));
        for (int j = 0; j <= i; ++j) {
          const int rj = red[fd[j]];
          if (rj < 0) continue;
          const double v = w * (rt.vx(q, i) * rt.vx(q, j) + rt.vy(q, i) * rt.vy(q, j));
          K(std::max(ri, rj), std::min(ri, rj)) += v;
        }
        for (int k = 0; k < ndg; ++k)
          K(nf + t * ndg + k, ri) += w * rt.dv(q, i) * mtab.val(q, k);
      }
      for (int k = 0; k < ndg; ++k) {
        b[nf + t * ndg + k] += w * gval * mtab.val(q, k);
        if (zero_mean) K(n - 1, nf + t * ndg + k) += w * mtab.val(q, k);
      }
    }
  }
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();

  Eigen::VectorXd x = Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(b);
  double scale = b.norm();
  if (scale == 0.0) scale = 1.0;
  if ((K * x - b).norm() > 1e-11 * scale) {
    x = Eigen::FullPivLU<Eigen::MatrixXd>(K).solve(b);
    if ((K * x - b).norm() > 1e-11 * scale)
      throw std::runtime_error("equilibrate_patch: singular patch system at vertex " +
                               std::to_string(a));
  }

  PatchFlux out{std::move(patch), std::move(fsp), Eigen::VectorXd::Zero(0)};
  out.coeffs = Eigen::VectorXd::Zero(out.space.n_dofs);
  for (int i = 0; i < nf; ++i) out.coeffs[free_dofs[i]] = x[i];
  return out;
}

FluxField assemble_global_flux(const FluxSpace& space, const std::vector<PatchFlux>& fluxes,
                               const ScalarFn& f) {
  const Mesh& mesh = *space.mesh;
  const int p = space.p;
  const int nd = space.nd();
  FluxField out{&space, Eigen::VectorXd::Zero(space.n_dofs)};

  for (const PatchFlux& pf : fluxes) {
    const PatchSubmesh& pa = *pf.patch;
    std::vector<int> l2g(pf.space.n_dofs, -1);
    for (size_t le = 0; le < pa.elems.size(); ++le) {
      const int* ld = pf.space.dofs(static_cast<int>(le));
      const int* gd = space.dofs(pa.elems[le]);
      for (int i = 0; i < nd; ++i) {
        if (l2g[ld[i]] >= 0 && l2g[ld[i]] != gd[i])
          throw std::runtime_error("assemble_global_flux: inconsistent DoF map in patch of vertex " +
                                   std::to_string(pa.center));
        l2g[ld[i]] = gd[i];
      }
    }
    for (int d = 0; d < pf.space.n_dofs; ++d)
      if (l2g[d] >= 0) out.coeffs[l2g[d]] += pf.coeffs[d];
  }

  // Normal-trace continuity audit across interior edges.
  std::vector<RtElement> els;
  els.reserve(mesh.n_elems());
  for (int t = 0; t < mesh.n_elems(); ++t) els.push_back(space.element(t));
  const QuadRule1D& line = gauss_rule_1d(p + 1);
  double sigma_scale = out.coeffs.size() ? out.coeffs.lpNorm<Eigen::Infinity>() : 0.0;
  std::vector<double> vx(nd), vy(nd), dv(nd);
  for (const Edge& e : mesh.edges) {
    if (e.t1 < 0) continue;
    Vec2 va = mesh.vertex(e.a), vb = mesh.vertex(e.b);
    Vec2 tan = vb - va;
    double len = norm(tan);
    Vec2 nrm{tan.y / len, -tan.x / len};
    for (size_t q = 0; q < line.x.size(); ++q) {
      Vec2 pt = va + line.x[q] * tan;
      double side[2];
      int owners[2] = {e.t0, e.t1};
      for (int s = 0; s < 2; ++s) {
        int t = owners[s];
        els[t].eval(pt, vx.data(), vy.data(), dv.data());
        const int* gd = space.dofs(t);
        double sn = 0.0;
        for (int i = 0; i < nd; ++i) sn += out.coeffs[gd[i]] * (vx[i] * nrm.x + vy[i] * nrm.y);
        side[s] = sn;
      }
      if (std::abs(side[0] - side[1]) > 1e-9 * (1.0 + sigma_scale))
        throw std::runtime_error("assemble_global_flux: normal-trace mismatch on edge (" +
                                 std::to_string(e.a) + "," + std::to_string(e.b) + ")");
    }
  }

  // Divergence identity div sigma = Pi^p f.
  DgField pf_proj = project_L2(f ? f : ScalarFn([](Vec2) { return 0.0; }), mesh, p);
  const QuadRule& rule = quadrature_rule(data_quad_degree(p));
  const size_t nq = rule.points.size();
  std::vector<Vec2> physq(nq);
  // The comparison scale includes the pre-cancellation magnitude of the
  // divergence sum, so exactly divergence-free fluxes pass on roundoff alone.
  double resid2 = 0.0, scale2 = 0.0, mag2 = 0.0;
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    for (size_t q = 0; q < nq; ++q) physq[q] = em.to_phys({rule.points[q].l1, rule.points[q].l2});
    RtTable rt = els[t].tabulate(physq);
    const int* gd = space.dofs(t);
    Eigen::VectorXd cl(nd);
    for (int i = 0; i < nd; ++i) cl[i] = out.coeffs[gd[i]];
    for (size_t q = 0; q < nq; ++q) {
      double w = rule.points[q].w * em.det;
      double dvv = rt.dv.row(q).dot(cl);
      double mag = cl.cwiseProduct(rt.dv.row(q).transpose()).cwiseAbs().sum();
      double pv = eval_dg(pf_proj, t, {rule.points[q].l1, rule.points[q].l2});
      resid2 += w * (dvv - pv) * (dvv - pv);
      scale2 += w * (pv * pv + dvv * dvv);
      mag2 += w * mag * mag;
    }
  }
  if (std::sqrt(resid2) > 1e-10 * (std::sqrt(scale2) + std::sqrt(mag2)) + 1e-14)
    throw std::runtime_error("assemble_global_flux: divergence identity violated, residual " +
                             std::to_string(std::sqrt(resid2)));
  return out;
}

IndicatorSet element_indicators(const ScalarField& u_h, const FluxField& sigma,
                                const ScalarFn& f) {
  const ScalarSpace& ssp = *u_h.space;
  const FluxSpace& fsp = *sigma.space;
  const Mesh& mesh = *ssp.mesh;
  const int p = ssp.p;
  const int nd = fsp.nd();

  const QuadRule& grule = quadrature_rule(2 * p + 2);
  const BasisTable& stab = lagrange_table(p, 2 * p + 2);
  const QuadRule& drule = quadrature_rule(data_quad_degree(p));
  const size_t gq = grule.points.size(), dq = drule.points.size();

  IndicatorSet out;
  out.kind = IndicatorSet::Kind::element;
  out.values.resize(mesh.n_elems());
  std::vector<Vec2> physg(gq), physd(dq);
  Eigen::VectorXd loc(ssp.nd()), cl(nd);
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    const int* sd = ssp.dofs(t);
    for (int k = 0; k < ssp.nd(); ++k) loc[k] = u_h.coeffs[sd[k]];
    const int* gd = fsp.dofs(t);
    for (int i = 0; i < nd; ++i) cl[i] = sigma.coeffs[gd[i]];
    RtElement el = fsp.element(t);

    for (size_t q = 0; q < gq; ++q) physg[q] = em.to_phys({grule.points[q].l1, grule.points[q].l2});
    RtTable rtg = el.tabulate(physg);
    double flux2 = 0.0;
    for (size_t q = 0; q < gq; ++q) {
      Vec2 gu = em.grad_to_phys(stab.dx.row(q).dot(loc), stab.dy.row(q).dot(loc));
      double rx = gu.x + rtg.vx.row(q).dot(cl);
      double ry = gu.y + rtg.vy.row(q).dot(cl);
      flux2 += grule.points[q].w * em.det * (rx * rx + ry * ry);
    }

    for (size_t q = 0; q < dq; ++q) physd[q] = em.to_phys({drule.points[q].l1, drule.points[q].l2});
    RtTable rtd = el.tabulate(physd);
    double osc2 = 0.0;
    for (size_t q = 0; q < dq; ++q) {
      double r = (f ? f(physd[q]) : 0.0) - rtd.dv.row(q).dot(cl);
      osc2 += drule.points[q].w * em.det * r * r;
    }
    out.values[t] = std::sqrt(flux2) + mesh.elem_diam[t] / kPi * std::sqrt(osc2);
  }
  out.total = indicator_total(out.values);
  return out;
}

double patch_indicator(const PatchFlux& pf, const ScalarField& u_h, const ScalarFn& f) {
  const ScalarSpace& ssp = *u_h.space;
  const int p = ssp.p;
  const PatchSubmesh& pa = *pf.patch;
  const Mesh& lm = pa.local;
  const int nd = pf.space.nd();

  const QuadRule& rule = quadrature_rule(2 * p + 2);
  const BasisTable& stab = lagrange_table(p, 2 * p + 2);
  const size_t nq = rule.points.size();

  std::vector<Vec2> physq(nq);
  Eigen::VectorXd loc(ssp.nd()), cl(nd);
  HatProjection hat = project_hat_f(pa, f, p);
  double sum = 0.0;
  for (int t = 0; t < lm.n_elems(); ++t) {
    ElemMap em = elem_map(lm, t);
    int slot = center_slot(pa, t);
    const int* gdofs = ssp.dofs(pa.elems[t]);
    for (int k = 0; k < ssp.nd(); ++k) loc[k] = u_h.coeffs[gdofs[k]];
    const int* fd = pf.space.dofs(t);
    for (int i = 0; i < nd; ++i) cl[i] = pf.coeffs[fd[i]];
    for (size_t q = 0; q < nq; ++q) physq[q] = em.to_phys({rule.points[q].l1, rule.points[q].l2});
    RtTable rt = pf.space.element(t).tabulate(physq);
    double flux2 = 0.0;
    for (size_t q = 0; q < nq; ++q) {
      double psi = hat_value(rule.points[q], slot);
      Vec2 gu = em.grad_to_phys(stab.dx.row(q).dot(loc), stab.dy.row(q).dot(loc));
      double rx = psi * gu.x + rt.vx.row(q).dot(cl);
      double ry = psi * gu.y + rt.vy.row(q).dot(cl);
      flux2 += rule.points[q].w * em.det * (rx * rx + ry * ry);
    }
    double term = std::sqrt(flux2) + lm.elem_diam[t] / kPi * hat.osc[t];
    sum += term * term;
  }
  return std::sqrt(sum);
}

IndicatorSet vertex_indicators(const ScalarField& u_h, const std::vector<PatchFlux>& fluxes,
                               const ScalarFn& f) {
  const Mesh& mesh = *u_h.space->mesh;
  if (fluxes.size() != static_cast<size_t>(mesh.n_vertices()))
    throw std::invalid_argument("vertex_indicators: need one patch flux per mesh vertex");

  IndicatorSet out;
  out.kind = IndicatorSet::Kind::vertex;
  out.values.resize(mesh.n_vertices());
  for (int a = 0; a < mesh.n_vertices(); ++a) {
    const PatchSubmesh& pa = *fluxes[a].patch;
    if (pa.center != a)
      throw std::invalid_argument("vertex_indicators: patch flux " + std::to_string(a) +
                                  " belongs to vertex " + std::to_string(pa.center));
    out.values[a] = patch_indicator(fluxes[a], u_h, f);
  }
  out.total = indicator_total(out.values);
  return out;
}

OscillationPair oscillations(const ScalarFn& f, const Mesh& mesh, int p) {
  OscillationPair out;
  out.element.kind = IndicatorSet::Kind::element;
  out.element.values.resize(mesh.n_elems());
  const QuadRule& rule = quadrature_rule(data_quad_degree(p));
  const size_t nq = rule.points.size();
  DgField proj = project_L2(f ? f : ScalarFn([](Vec2) { return 0.0; }), mesh, p);
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    double osc2 = 0.0;
    for (size_t q = 0; q < nq; ++q) {
      Vec2 ref{rule.points[q].l1, rule.points[q].l2};
      double r = (f ? f(em.to_phys(ref)) : 0.0) - eval_dg(proj, t, ref);
      osc2 += rule.points[q].w * em.det * r * r;
    }
    out.element.values[t] = mesh.elem_diam[t] / kPi * std::sqrt(osc2);
  }
  out.element.total = indicator_total(out.element.values);

  out.vertex.kind = IndicatorSet::Kind::vertex;
  out.vertex.values.resize(mesh.n_vertices());
  for (int a = 0; a < mesh.n_vertices(); ++a) {
    PatchSubmesh pa = vertex_patch(mesh, a);
    HatProjection hat = project_hat_f(pa, f, p);
    double sum = 0.0;
    for (int t = 0; t < pa.local.n_elems(); ++t) {
      double h = pa.local.elem_diam[t];
      sum += h * h / (kPi * kPi) * hat.osc[t] * hat.osc[t];
    }
    out.vertex.values[a] = std::sqrt(sum);
  }
  out.vertex.total = indicator_total(out.vertex.values);
  return out;
}

IndicatorSet weighted_residual_estimator(const ScalarField& u_h, const ScalarFn& f) {
  const ScalarSpace& ssp = *u_h.space;
  const Mesh& mesh = *ssp.mesh;
  const int p = ssp.p;
  const QuadRule& rule = quadrature_rule(data_quad_degree(p));
  const BasisTable& tab = lagrange_table(p, data_quad_degree(p), true);
  const size_t nq = rule.points.size();

  std::vector<double> vol2(mesh.n_elems(), 0.0), jump2(mesh.n_elems(), 0.0);
  Eigen::VectorXd loc(ssp.nd());
  for (int t = 0; t < mesh.n_elems(); ++t) {
    ElemMap em = elem_map(mesh, t);
    const int* sd = ssp.dofs(t);
    for (int k = 0; k < ssp.nd(); ++k) loc[k] = u_h.coeffs[sd[k]];
    // Laplacian through the affine pullback: tr(S^T H_ref S) with S = J^{-1}.
    const double d2 = em.det * em.det;
    const double m00 = (em.j11 * em.j11 + em.j01 * em.j01) / d2;
    const double m01 = -(em.j11 * em.j10 + em.j01 * em.j00) / d2;
    const double m11 = (em.j10 * em.j10 + em.j00 * em.j00) / d2;
    for (size_t q = 0; q < nq; ++q) {
      double lap = m00 * tab.dxx.row(q).dot(loc) + 2.0 * m01 * tab.dxy.row(q).dot(loc) +
                   m11 * tab.dyy.row(q).dot(loc);
      Vec2 phys = em.to_phys({rule.points[q].l1, rule.points[q].l2});
      double r = (f ? f(phys) : 0.0) + lap;
      vol2[t] += rule.points[q].w * em.det * r * r;
    }
  }

  const QuadRule1D& line = gauss_rule_1d(p + 1);
  for (const Edge& e : mesh.edges) {
    if (e.t1 < 0) continue;
    Vec2 va = mesh.vertex(e.a), vb = mesh.vertex(e.b);
    Vec2 tan = vb - va;
    double len = norm(tan);
    Vec2 nrm{tan.y / len, -tan.x / len};
    ElemMap em0 = elem_map(mesh, e.t0), em1 = elem_map(mesh, e.t1);
    double je = 0.0;
    for (size_t q = 0; q < line.x.size(); ++q) {
      Vec2 pt = va + line.x[q] * tan;
      Vec2 g0 = eval_scalar_grad(u_h, e.t0, em0.to_ref(pt));
      Vec2 g1 = eval_scalar_grad(u_h, e.t1, em1.to_ref(pt));
      double jmp = dot(g0 - g1, nrm);
      je += len * line.w[q] * jmp * jmp;
    }
    jump2[e.t0] += je;
    jump2[e.t1] += je;
  }

  IndicatorSet out;
  out.kind = IndicatorSet::Kind::element;
  out.values.resize(mesh.n_elems());
  for (int t = 0; t < mesh.n_elems(); ++t) {
    double area = mesh.elem_area[t];
    out.values[t] = std::sqrt(area * vol2[t] + std::sqrt(area) * jump2[t]);
  }
  out.total = indicator_total(out.values);
  return out;
}

}  // namespace afem
