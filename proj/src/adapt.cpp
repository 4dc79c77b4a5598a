#include "afem/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

#include "afem/equilibrate.hpp"

namespace afem {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Clb to_clb(double v) {
  if (std::isinf(v)) return {0.0, true};
  return {v, false};
}

// ||grad(u_fine - u_coarse)|| where the fine mesh came out of one bisect call
// on the coarse mesh, so fine.parent names coarse elements.
double difference_norm(const Mesh& fine, const ScalarField& u_fine, const Mesh& coarse,
                       const ScalarField& u_coarse) {
  if (fine.parent.size() != static_cast<size_t>(fine.n_elems()))
    throw std::logic_error("difference_norm: fine mesh lacks parent genealogy");
  const ScalarSpace& fsp = *u_fine.space;
  const ScalarSpace& csp = *u_coarse.space;
  const int p = fsp.p;
  const int deg = std::max(std::max(p, csp.p) * 2 - 2, 0);
  const QuadRule& rule = quadrature_rule(deg);
  const BasisTable& tab = lagrange_table(p, deg);
  Eigen::VectorXd loc(fsp.nd()), cloc(csp.nd());
  std::vector<Vec2> refs(rule.points.size());
  double acc = 0.0;
  for (int t = 0; t < fine.n_elems(); ++t) {
    int ct = fine.parent[t];
    if (ct < 0 || ct >= coarse.n_elems())
      throw std::logic_error("difference_norm: parent outside the coarse mesh");
    ElemMap em = elem_map(fine, t);
    ElemMap cem = elem_map(coarse, ct);
    const int* d = fsp.dofs(t);
    for (int k = 0; k < fsp.nd(); ++k) loc[k] = u_fine.coeffs[d[k]];
    const int* cd = csp.dofs(ct);
    for (int k = 0; k < csp.nd(); ++k) cloc[k] = u_coarse.coeffs[cd[k]];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const QuadPoint& qp = rule.points[q];
      refs[q] = cem.to_ref(em.to_phys({qp.l1, qp.l2}));
    }
    BasisTable ctab = tabulate_lagrange(csp.p, refs);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      Vec2 gf = em.grad_to_phys(tab.dx.row(q).dot(loc), tab.dy.row(q).dot(loc));
      Vec2 gc = cem.grad_to_phys(ctab.dx.row(q).dot(cloc), ctab.dy.row(q).dot(cloc));
      double dx = gf.x - gc.x, dy = gf.y - gc.y;
      acc += rule.points[q].w * em.det * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(acc);
}

// Neighborhoods of a single element, enumerated through the vertex-element
// adjacency: an element sharing >= 2 vertices with t shares an edge. The
// generic neighborhood helpers allocate a mesh-sized mask per call, which
// would make this whole-mesh sweep quadratic.
void equivalence_maxima(const Mesh& mesh, const std::vector<double>& eta,
                        const std::vector<double>& zeta, double& zeta_over_eta,
                        double& eta_over_zeta) {
  zeta_over_eta = 0.0;
  eta_over_zeta = 0.0;
  std::vector<int> stamp(mesh.n_elems(), -1);
  std::vector<int> shared(mesh.n_elems(), 0);
  std::vector<int> touched;
  touched.reserve(32);
  for (int t = 0; t < mesh.n_elems(); ++t) {
    touched.clear();
    for (int i = 0; i < 3; ++i) {
      int v = mesh.elems[t][i];
      for (int k = mesh.vertex_elem_ptr[v]; k < mesh.vertex_elem_ptr[v + 1]; ++k) {
        int n = mesh.vertex_elem[k];
        if (stamp[n] != t) {
          stamp[n] = t;
          shared[n] = 0;
          touched.push_back(n);
        }
        ++shared[n];
      }
    }
    std::sort(touched.begin(), touched.end());
    double face2 = 0.0, vert2 = 0.0;
    for (int n : touched) {
      vert2 += zeta[n] * zeta[n];
      if (shared[n] >= 2) face2 += eta[n] * eta[n];
    }
    if (zeta[t] > 0.0)
      zeta_over_eta = std::max(zeta_over_eta, face2 > 0.0 ? zeta[t] / std::sqrt(face2) : kInf);
    if (eta[t] > 0.0)
      eta_over_zeta = std::max(eta_over_zeta, vert2 > 0.0 ? eta[t] / std::sqrt(vert2) : kInf);
  }
}

void audit_containment(const Mesh& mesh, const std::map<int, int>& plan, const Mesh& covered) {
  std::set<std::pair<double, double>> vset;
  for (int v = 0; v < covered.n_vertices(); ++v)
    vset.insert({covered.vertex(v).x, covered.vertex(v).y});
  for (const auto& [a, beta] : plan) {
    PatchSubmesh trial = trial_refine_patch(vertex_patch(mesh, a), beta);
    for (int v = 0; v < trial.local.n_vertices(); ++v)
      if (!vset.count({trial.local.vertex(v).x, trial.local.vertex(v).y}))
        throw std::runtime_error("vertex_adaptive_step: trial mesh not covered at vertex " +
                                 std::to_string(a));
  }
}

}  // namespace

MarkResult doerfler_mark(const IndicatorSet& indicators, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("doerfler_mark: theta must lie in (0, 1]");
  const std::vector<double>& v = indicators.values;
  for (double x : v)
    if (x < 0.0 || !std::isfinite(x))
      throw std::invalid_argument("doerfler_mark: indicators must be finite and nonnegative");

  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });
  // Summing in sorted order keeps the prefix sums consistent with the total,
  // so theta = 1 saturates exactly at the last positive entry.
  double total2 = 0.0;
  for (int id : order) total2 += v[id] * v[id];

  MarkResult out;
  if (total2 == 0.0) {
    out.converged = true;
    return out;
  }
  const double target = theta * theta * total2;
  double sum2 = 0.0;
  for (int id : order) {
    if (v[id] <= 0.0) break;
    out.marked.push_back(id);
    sum2 += v[id] * v[id];
    if (sum2 >= target) break;
  }
  std::sort(out.marked.begin(), out.marked.end());
  return out;
}

double contraction_factor(double theta, const Clb& c_lb) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("contraction_factor: theta must lie in (0, 1]");
  if (c_lb.infinite) return 1.0;
  if (!(c_lb.value > 0.0))
    throw std::invalid_argument("contraction_factor: C_lb must be positive");
  double arg = 1.0 - theta * theta / (9.0 * c_lb.value * c_lb.value);
  return std::sqrt(std::max(arg, 0.0));
}

void AdaptConfig::validate() const {
  if (p < 1) throw std::invalid_argument("AdaptConfig: p must be >= 1");
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("AdaptConfig: theta must lie in (0, 1]");
  if (algorithm == Algorithm::vertex && beta_max < 3)
    throw std::invalid_argument("AdaptConfig: beta_max must be >= 3 for the vertex algorithm");
  if (beta_max < 1) throw std::invalid_argument("AdaptConfig: beta_max must be >= 1");
  if (!(clb_max > 0.0)) throw std::invalid_argument("AdaptConfig: clb_max must be positive");
  if (max_dofs < 1) throw std::invalid_argument("AdaptConfig: max_dofs must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("AdaptConfig: max_iters must be >= 1");
}

AdaptState make_state(Problem problem, AdaptConfig config) {
  config.validate();
  AdaptState st;
  st.mesh = std::make_shared<Mesh>(problem.initial);
  st.problem = std::move(problem);
  st.config = std::move(config);
  return st;
}

namespace {

// Solve + estimate: the part shared by both algorithm variants. Fills the
// level record through the estimator fields and backfills the predecessor.
struct LevelCommon {
  std::shared_ptr<ScalarSpace> space;
  Eigen::VectorXd coeffs;
  std::vector<PatchFlux> fluxes;
  IndicatorSet etav;
  IndicatorSet etat;
};

LevelCommon prepare_level(AdaptState& st, AdaptRecord& rec) {
  const Problem& prob = st.problem;
  const Mesh& mesh = *st.mesh;

  LevelCommon lc;
  lc.space = std::make_shared<ScalarSpace>(build_scalar_space(mesh, st.config.p));
  lc.coeffs = solve_spd(assemble_poisson(*lc.space, prob.f, prob.g));
  ScalarField u{lc.space.get(), lc.coeffs};

  rec.level = st.level;
  rec.n_elem = mesh.n_elems();
  rec.n_dofs = lc.space->n_free();

  AdaptRecord* prev = st.records.empty() ? nullptr : &st.records.back();
  if (prev && st.prev_space) {
    ScalarField up{st.prev_space.get(), st.prev_coeffs};
    prev->diff_norm = difference_norm(mesh, u, *st.prev_mesh, up);
  }
  if (prob.exact_grad) {
    rec.error = energy_error(prob.exact_grad, u, prob.corner);
    if (prev && std::isfinite(prev->error) && prev->error > 0.0)
      prev->err_ratio = rec.error / prev->error;
  }

  const int nv = mesh.n_vertices();
  lc.fluxes.reserve(nv);
  for (int a = 0; a < nv; ++a) lc.fluxes.push_back(equilibrate_patch(a, u, prob.f));
  lc.etav = vertex_indicators(u, lc.fluxes, prob.f);
  {
    FluxSpace fspace = build_rt_space(mesh, st.config.p);
    FluxField sigma = assemble_global_flux(fspace, lc.fluxes, prob.f);
    lc.etat = element_indicators(u, sigma, prob.f);
  }
  OscillationPair osc = oscillations(prob.f, mesh, st.config.p);
  IndicatorSet zeta = weighted_residual_estimator(u, prob.f);

  rec.eta_elem_total = lc.etat.total;
  rec.eta_vertex_total = lc.etav.total;
  rec.osc_elem_total = osc.element.total;
  rec.osc_vertex_total = osc.vertex.total;
  rec.zeta_total = zeta.total;
  if (prev && prev->eta_elem_total > 0.0) prev->eta_ratio = lc.etat.total / prev->eta_elem_total;
  if (std::isfinite(rec.error) && rec.error > 0.0) rec.effectivity = lc.etat.total / rec.error;
  equivalence_maxima(mesh, lc.etat.values, zeta.values, rec.zeta_over_eta_max,
                     rec.eta_over_zeta_max);
  return lc;
}

void rotate_state(AdaptState& st, LevelCommon& lc, Mesh next, AdaptRecord rec) {
  st.prev_mesh = st.mesh;
  st.prev_space = lc.space;
  st.prev_coeffs = std::move(lc.coeffs);
  st.mesh = std::make_shared<Mesh>(std::move(next));
  ++st.level;
  st.records.push_back(std::move(rec));
}

}  // namespace

AdaptRecord vertex_adaptive_step(AdaptState& st) {
  if (st.converged) throw std::logic_error("vertex_adaptive_step: state already converged");
  st.config.validate();
  const Mesh& mesh = *st.mesh;

  AdaptRecord rec;
  LevelCommon lc = prepare_level(st, rec);
  ScalarField u{lc.space.get(), lc.coeffs};

  MarkResult mk = doerfler_mark(lc.etav, st.config.theta);
  if (lc.etav.total <= 1e-12 * energy_norm(u)) mk = {{}, true};
  rec.marked = static_cast<int>(mk.marked.size());
  if (mk.converged) {
    rec.converged = true;
    st.converged = true;
    st.records.push_back(rec);
    return rec;
  }

  double em2 = 0.0;
  for (int a : mk.marked) em2 += lc.etav.values[a] * lc.etav.values[a];
  rec.eta_marked = std::sqrt(em2);

  rec.beta_hist.assign(st.config.beta_max, 0);
  std::map<int, int> plan;
  double trial_cmax = 0.0;
  for (int a : mk.marked) {
    LiftingResult lr =
        select_beta(a, u, st.problem.f, st.config.beta_max, st.config.clb_max, lc.etav.values[a]);
    plan[a] = lr.beta;
    ++rec.beta_hist[lr.beta - 1];
    trial_cmax = std::max(trial_cmax, lr.c_lb.as_double());
  }
  // The contraction factor may only use information available before the
  // refinement, so it is driven by the trial-stage constants.
  rec.q_ctr = contraction_factor(st.config.theta, to_clb(trial_cmax));

  Mesh next = refine_to_cover(mesh, plan);
  audit_containment(mesh, plan, next);

  // The recorded constants C_lb(a) take the lifting on the refinement the step
  // actually realized. That mesh covers every trial mesh (often strictly,
  // through neighboring patches and closure), so these constants never exceed
  // the trial-stage ones.
  double cmin = kInf, cmax = 0.0;
  for (int a : mk.marked) {
    LiftingResult fl =
        residual_lifting(covered_patch(mesh, a, next), u, st.problem.f, st.config.p);
    double c = clb(lc.etav.values[a], fl.lift_norm).as_double();
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  rec.clb_min = cmin;
  rec.clb_max = cmax;

  AdaptRecord out = rec;
  rotate_state(st, lc, std::move(next), std::move(rec));
  return out;
}

AdaptRecord element_adaptive_step(AdaptState& st) {
  if (st.converged) throw std::logic_error("element_adaptive_step: state already converged");
  st.config.validate();
  const Mesh& mesh = *st.mesh;

  AdaptRecord rec;
  LevelCommon lc = prepare_level(st, rec);

  MarkResult mk = doerfler_mark(lc.etat, st.config.theta);
  {
    ScalarField u{lc.space.get(), lc.coeffs};
    if (lc.etat.total <= 1e-12 * energy_norm(u)) mk = {{}, true};
  }
  rec.marked = static_cast<int>(mk.marked.size());
  if (mk.converged) {
    rec.converged = true;
    st.converged = true;
    st.records.push_back(rec);
    return rec;
  }
  double em2 = 0.0;
  for (int t : mk.marked) em2 += lc.etat.values[t] * lc.etat.values[t];
  rec.eta_marked = std::sqrt(em2);

  std::map<int, int> marks;
  for (int t : mk.marked) marks[t] = 1;
  Mesh next = bisect(mesh, marks);

  AdaptRecord out = rec;
  rotate_state(st, lc, std::move(next), std::move(rec));
  return out;
}

void run_adaptive(AdaptState& st) {
  while (!st.converged) {
    if (static_cast<int>(st.records.size()) >= st.config.max_iters) break;
    AdaptRecord rec = st.config.algorithm == Algorithm::vertex ? vertex_adaptive_step(st)
                                                               : element_adaptive_step(st);
    if (rec.n_dofs >= st.config.max_dofs) break;
  }
}

double fit_rate(const std::vector<AdaptRecord>& records, int window,
                const std::function<double(const AdaptRecord&)>& quantity) {
  if (window < 3) throw std::invalid_argument("fit_rate: window must be >= 3");
  size_t begin = records.size() > static_cast<size_t>(window) ? records.size() - window : 0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (size_t i = begin; i < records.size(); ++i) {
    double q = quantity(records[i]);
    if (!(std::isfinite(q) && q > 0.0) || records[i].n_dofs <= 0) continue;
    double x = std::log(static_cast<double>(records[i].n_dofs));
    double y = std::log(q);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) throw std::invalid_argument("fit_rate: need at least 3 usable records");
  double den = n * sxx - sx * sx;
  if (den <= 0.0) throw std::invalid_argument("fit_rate: degenerate DoF counts");
  return (n * sxy - sx * sy) / den;
}

}  // namespace afem
