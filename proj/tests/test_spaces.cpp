#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "afem/spaces.hpp"

using namespace afem;

namespace {

Mesh reference_triangle_mesh() {
  std::stringstream ss("3 1\n0 0\n1 0\n0 1\n0 1 2 0\n");
  return read_mesh(ss);
}

// Inverse of the affine element map.
Vec2 to_ref(const ElemMap& em, Vec2 phys) {
  double rx = phys.x - em.v0.x, ry = phys.y - em.v0.y;
  return {(em.j11 * rx - em.j01 * ry) / em.det, (-em.j10 * rx + em.j00 * ry) / em.det};
}

double legendre(int n, double z) {
  double p0 = 1.0, p1 = z;
  if (n == 0) return p0;
  for (int j = 1; j < n; ++j) {
    double p2 = ((2.0 * j + 1.0) * z * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

TEST_CASE("modal basis is orthogonal and matches its derivatives") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p = 1; p <= kMaxDegree; ++p) {
    const int n = scalar_dim(p);
    const QuadRule& rule = quadrature_rule(std::min(2 * p, kMaxQuadDegree));
    const BasisTable& tab = modal_table(p, std::min(2 * p, kMaxQuadDegree));
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (size_t q = 0; q < rule.points.size(); ++q)
      M += rule.points[q].w * tab.val.row(q).transpose() * tab.val.row(q);
    for (int i = 0; i < n; ++i) {
      CHECK(M(i, i) > 0.0);
      for (int j = 0; j < n; ++j)
        if (i != j) CHECK(std::abs(M(i, j)) <= 1e-13);
    }

    // finite-difference check of jet derivatives at random interior points
    std::vector<Jet2> a, b, c;
    for (int k = 0; k < 5; ++k) {
      double x = 0.1 + 0.5 * unif(rng), y = 0.1 + 0.3 * unif(rng);
      const double h = 1e-6;
      modal_basis(p, x, y, a);
      modal_basis(p, x + h, y, b);
      modal_basis(p, x - h, y, c);
      for (int m = 0; m < n; ++m) {
        CHECK(a[m].dx == doctest::Approx((b[m].v - c[m].v) / (2 * h)).epsilon(1e-5));
        CHECK(a[m].dxx == doctest::Approx((b[m].v - 2 * a[m].v + c[m].v) / (h * h)).epsilon(2e-3));
      }
      modal_basis(p, x, y + h, b);
      modal_basis(p, x, y - h, c);
      for (int m = 0; m < n; ++m)
        CHECK(a[m].dy == doctest::Approx((b[m].v - c[m].v) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("lagrange basis is nodal") {
  for (int p = 1; p <= kMaxDegree; ++p) {
    BasisTable tab = tabulate_lagrange(p, lagrange_nodes(p));
    const int n = scalar_dim(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        CHECK(std::abs(tab.val(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-9);
  }
}

TEST_CASE("scalar space: dimensions and dirichlet counts") {
  Mesh sq = build_initial_mesh("unit_square");
  ScalarSpace s1 = build_scalar_space(sq, 1);
  CHECK(s1.n_dofs == 4);
  CHECK(s1.n_free() == 0);
  ScalarSpace s2 = build_scalar_space(sq, 2);
  CHECK(s2.n_dofs == 9);
  CHECK(s2.n_free() == 1);

  // half-space predicate constrains only part of the boundary
  ScalarSpace sh = build_scalar_space(sq, 1, [](Vec2 v) { return v.y < 0.5; });
  CHECK(sh.n_free() == 2);
}

TEST_CASE("scalar space: nodal interpolation reproduces polynomials") {
  Mesh m = bisect(uniform_refine(build_initial_mesh("lshape"), 1), {{3, 2}, {7, 1}});
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int p = 1; p <= 4; ++p) {
    std::vector<double> cf;
    for (int k = 0; k < scalar_dim(p); ++k) cf.push_back(unif(rng));
    auto poly = [&](Vec2 v) {
      double s = 0.0;
      int k = 0;
      for (int d = 0; d <= p; ++d)
        for (int a = d; a >= 0; --a) s += cf[k++] * std::pow(v.x, a) * std::pow(v.y, d - a);
      return s;
    };
    ScalarSpace sp = build_scalar_space(m, p);
    ScalarField u{&sp, Eigen::VectorXd(sp.n_dofs)};
    for (int d = 0; d < sp.n_dofs; ++d) u.coeffs[d] = poly(sp.dof_pos[d]);

    std::uniform_int_distribution<int> pick(0, m.n_elems() - 1);
    for (int k = 0; k < 200; ++k) {
      int t = pick(rng);
      double r = unif(rng) * 0.5 + 0.5, s = (unif(rng) * 0.5 + 0.5) * (1.0 - r);
      Vec2 ref{r, s};
      Vec2 phys = elem_map(m, t).to_phys(ref);
      CHECK(eval_scalar(u, t, ref) == doctest::Approx(poly(phys)).epsilon(1e-10));
    }
  }
}

TEST_CASE("scalar fields: partition of unity and cross-edge continuity") {
  Mesh m = uniform_refine(build_initial_mesh("cross"), 2);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p : {1, 2, 3, 5}) {
    ScalarSpace sp = build_scalar_space(m, p);
    ScalarField ones{&sp, Eigen::VectorXd::Ones(sp.n_dofs)};
    const QuadRule& rule = quadrature_rule(2 * p);
    for (int t = 0; t < m.n_elems(); t += 7)
      for (const QuadPoint& q : rule.points)
        CHECK(eval_scalar(ones, t, {q.l1, q.l2}) == doctest::Approx(1.0).epsilon(1e-13));

    ScalarField u{&sp, Eigen::VectorXd(sp.n_dofs)};
    for (int d = 0; d < sp.n_dofs; ++d) u.coeffs[d] = unif(rng);
    int tested = 0;
    for (size_t e = 0; e < m.edges.size() && tested < 40; ++e) {
      if (m.edges[e].t1 < 0) continue;
      ++tested;
      Vec2 a = m.vertices[m.edges[e].a], b = m.vertices[m.edges[e].b];
      double s = unif(rng);
      Vec2 phys = a + s * (b - a);
      double v0 = eval_scalar(u, m.edges[e].t0, to_ref(elem_map(m, m.edges[e].t0), phys));
      double v1 = eval_scalar(u, m.edges[e].t1, to_ref(elem_map(m, m.edges[e].t1), phys));
      CHECK(v0 == doctest::Approx(v1).epsilon(1e-11));
    }
  }
}

TEST_CASE("gradient quadrature is exact at degree 2p") {
  Mesh m = uniform_refine(build_initial_mesh("unit_square"), 2);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int p : {1, 2, 3}) {
    ScalarSpace sp = build_scalar_space(m, p);
    ScalarField u{&sp, Eigen::VectorXd(sp.n_dofs)};
    for (int d = 0; d < sp.n_dofs; ++d) u.coeffs[d] = unif(rng);
    auto energy = [&](int degree) {
      const QuadRule& rule = quadrature_rule(degree);
      const BasisTable& tab = lagrange_table(p, degree);
      double total = 0.0;
      for (int t = 0; t < m.n_elems(); ++t) {
        ElemMap em = elem_map(m, t);
        Eigen::VectorXd loc(sp.nd());
        for (int k = 0; k < sp.nd(); ++k) loc[k] = u.coeffs[sp.dofs(t)[k]];
        for (size_t q = 0; q < rule.points.size(); ++q) {
          double gx = tab.dx.row(q).dot(loc), gy = tab.dy.row(q).dot(loc);
          Vec2 g = em.grad_to_phys(gx, gy);
          total += rule.points[q].w * em.det * dot(g, g);
        }
      }
      return total;
    };
    CHECK(energy(2 * p) == doctest::Approx(energy(2 * p + 4)).epsilon(1e-12));
  }
}

TEST_CASE("rt element: moment degrees of freedom are dual to the basis") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int p = 0; p <= kMaxDegree; ++p) {
    for (int trial = 0; trial < 4; ++trial) {
      Vec2 v[3];
      do {
        for (Vec2& vv : v) vv = {unif(rng), unif(rng)};
      } while (signed_area2(v[0], v[1], v[2]) < 0.5);
      bool flip[3] = {unif(rng) > 0, unif(rng) > 0, unif(rng) > 0};
      RtElement el(v, flip, p);
      const int n = el.dim();
      std::vector<double> vx(n), vy(n), dv(n);

      Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
      const QuadRule1D& r1 = gauss_rule_1d(p + 3);
      for (int e = 0; e < 3; ++e) {
        Vec2 a = v[(e + 1) % 3], b = v[(e + 2) % 3];
        if (flip[e]) std::swap(a, b);
        Vec2 t = b - a;
        double len = norm(t);
        Vec2 nrm{t.y / len, -t.x / len};
        for (size_t q = 0; q < r1.x.size(); ++q) {
          el.eval(a + r1.x[q] * t, vx.data(), vy.data(), dv.data());
          for (int j = 0; j <= p; ++j)
            for (int k = 0; k < n; ++k)
              D(e * (p + 1) + j, k) +=
                  r1.w[q] * legendre(j, 2.0 * r1.x[q] - 1.0) * (vx[k] * nrm.x + vy[k] * nrm.y);
        }
      }
      if (p >= 1) {
        const QuadRule& rt = quadrature_rule(2 * p + 2);
        ElemMap em;
        em.v0 = v[0];
        em.j00 = v[1].x - v[0].x;
        em.j10 = v[1].y - v[0].y;
        em.j01 = v[2].x - v[0].x;
        em.j11 = v[2].y - v[0].y;
        em.det = em.j00 * em.j11 - em.j01 * em.j10;
        std::vector<Jet2> jets;
        for (const QuadPoint& q : rt.points) {
          Vec2 phys = q.l0 * v[0] + q.l1 * v[1] + q.l2 * v[2];
          el.eval(phys, vx.data(), vy.data(), dv.data());
          Vec2 r = to_ref(em, phys);
          modal_basis(p - 1, r.x, r.y, jets);
          int d = 3 * (p + 1);
          for (int j = 0; j < scalar_dim(p - 1); ++j, d += 2)
            for (int k = 0; k < n; ++k) {
              D(d, k) += 2.0 * q.w * jets[j].v * vx[k];
              D(d + 1, k) += 2.0 * q.w * jets[j].v * vy[k];
            }
        }
      }
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          CHECK(std::abs(D(i, k) - (i == k ? 1.0 : 0.0)) <= 1e-11);
    }
  }
}

TEST_CASE("flux space: dimensions, constant field, divergence theorem, continuity") {
  CHECK(rt_dim(1) == 8);
  Mesh m = uniform_refine(build_initial_mesh("unit_square"), 2);

  // constant field (1,0) in RT^0 has zero divergence
  FluxSpace rt0 = build_rt_space(m, 0);
  FluxField c{&rt0, Eigen::VectorXd::Zero(rt0.n_dofs)};
  for (size_t e = 0; e < m.edges.size(); ++e) {
    Vec2 a = m.vertices[m.edges[e].a], b = m.vertices[m.edges[e].b];
    Vec2 t = b - a;
    double len = norm(t);
    c.coeffs[e] = t.y / len;  // oriented normal x-component
  }
  for (int t = 0; t < m.n_elems(); ++t) {
    RtElement el = rt0.element(t);
    Vec2 mid = elem_map(m, t).to_phys({1.0 / 3, 1.0 / 3});
    Vec2 val = eval_flux(c, el, t, mid);
    CHECK(val.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(val.y) <= 1e-12);
    CHECK(std::abs(eval_flux_div(c, el, t, mid)) <= 1e-12);
  }

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int p : {0, 1, 2}) {
    FluxSpace rt = build_rt_space(m, p);
    FluxField tau{&rt, Eigen::VectorXd(rt.n_dofs)};
    for (int d = 0; d < rt.n_dofs; ++d) tau.coeffs[d] = unif(rng);

    // divergence theorem on every element
    const QuadRule& rule = quadrature_rule(std::max(2 * p, 2));
    const QuadRule1D& r1 = gauss_rule_1d(p + 2);
    for (int t = 0; t < m.n_elems(); ++t) {
      RtElement el = rt.element(t);
      ElemMap em = elem_map(m, t);
      double vol = 0.0;
      for (const QuadPoint& q : rule.points)
        vol += q.w * em.det * eval_flux_div(tau, el, t, em.to_phys({q.l1, q.l2}));
      double srf = 0.0;
      for (int i = 0; i < 3; ++i) {
        Vec2 a = m.elem_vertex(t, (i + 1) % 3), b = m.elem_vertex(t, (i + 2) % 3);
        if (rt.flip[t][i]) std::swap(a, b);
        Vec2 tv = b - a;
        Vec2 nrm{tv.y, -tv.x};  // length-weighted oriented normal
        for (size_t q = 0; q < r1.x.size(); ++q) {
          Vec2 val = eval_flux(tau, el, t, a + r1.x[q] * tv);
          srf += el.outward_sign(i) * r1.w[q] * dot(val, nrm);
        }
      }
      CHECK(vol == doctest::Approx(srf).epsilon(1e-11));
    }

    // normal-trace continuity across interior edges
    int tested = 0;
    for (size_t e = 0; e < m.edges.size() && tested < 30; ++e) {
      if (m.edges[e].t1 < 0) continue;
      ++tested;
      Vec2 a = m.vertices[m.edges[e].a], b = m.vertices[m.edges[e].b];
      Vec2 tv = b - a;
      Vec2 nrm{tv.y, -tv.x};
      double s = 0.3 + 0.4 * unif(rng);
      Vec2 phys = a + s * tv;
      int t0 = m.edges[e].t0, t1 = m.edges[e].t1;
      RtElement el0 = rt.element(t0), el1 = rt.element(t1);
      double f0 = dot(eval_flux(tau, el0, t0, phys), nrm);
      double f1 = dot(eval_flux(tau, el1, t1, phys), nrm);
      CHECK(f0 == doctest::Approx(f1).epsilon(1e-10));
    }
  }

  // zero-trace mask on a boundary patch
  Mesh sq0 = build_initial_mesh("unit_square");
  PatchSubmesh patch = vertex_patch(sq0, 0);
  FluxSpace prt = build_rt_space(patch, 1);
  int constrained = 0;
  for (char z : prt.zero_trace) constrained += z;
  CHECK(constrained == 2 * 2);  // two zero-trace edges, p+1 dofs each
}

TEST_CASE("project_L2: idempotence, zero, and a closed-form projection error") {
  Mesh m = uniform_refine(build_initial_mesh("lshape"), 1);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int p : {0, 1, 2, 3}) {
    std::vector<double> cf;
    for (int k = 0; k < scalar_dim(p); ++k) cf.push_back(unif(rng));
    auto poly = [&](Vec2 v) {
      double s = 0.0;
      int k = 0;
      for (int d = 0; d <= p; ++d)
        for (int a = d; a >= 0; --a) s += cf[k++] * std::pow(v.x, a) * std::pow(v.y, d - a);
      return s;
    };
    DgField proj = project_L2(poly, m, p);
    const QuadRule& rule = quadrature_rule(std::max(2 * p, 2));
    for (int t = 0; t < m.n_elems(); ++t) {
      ElemMap em = elem_map(m, t);
      for (const QuadPoint& q : rule.points) {
        Vec2 ref{q.l1, q.l2};
        CHECK(eval_dg(proj, t, ref) == doctest::Approx(poly(em.to_phys(ref))).epsilon(1e-12));
      }
    }

    DgField zero = project_L2([](Vec2) { return 0.0; }, m, p);
    CHECK(zero.coeffs.norm() == 0.0);
  }

  Mesh ref = reference_triangle_mesh();
  auto f = [](Vec2 v) { return std::sin(std::acos(-1.0) * v.x); };
  DgField p0 = project_L2(f, ref, 0);
  const QuadRule& rule = quadrature_rule(kMaxQuadDegree);
  double err2 = 0.0;
  ElemMap em = elem_map(ref, 0);
  for (const QuadPoint& q : rule.points) {
    Vec2 r{q.l1, q.l2};
    double d = f(em.to_phys(r)) - eval_dg(p0, 0, r);
    err2 += q.w * em.det * d * d;
  }
  const double pi = std::acos(-1.0);
  CHECK(err2 == doctest::Approx(0.25 - 2.0 / (pi * pi)).epsilon(1e-10));
}
