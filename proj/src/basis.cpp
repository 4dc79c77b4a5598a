#include "afem/basis.hpp"

#include <stdexcept>
#include <string>

#include "afem/quadrature.hpp"

namespace afem {

Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dxy + b.dxy, a.dyy + b.dyy};
}
Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.dx - b.dx, a.dy - b.dy, a.dxx - b.dxx, a.dxy - b.dxy, a.dyy - b.dyy};
}
Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v,
          a.dx * b.v + a.v * b.dx,
          a.dy * b.v + a.v * b.dy,
          a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
          a.dxy * b.v + a.dx * b.dy + a.dy * b.dx + a.v * b.dxy,
          a.dyy * b.v + 2.0 * a.dy * b.dy + a.v * b.dyy};
}
Jet2 operator*(double s, const Jet2& a) {
  return {s * a.v, s * a.dx, s * a.dy, s * a.dxx, s * a.dxy, s * a.dyy};
}

namespace {

void check_degree(int p) {
  if (p < 1 || p > kMaxDegree)
    throw std::invalid_argument("scalar basis degree " + std::to_string(p) +
                                " outside supported range [1," +
                                std::to_string(kMaxDegree) + "]");
}

// Jacobi polynomials P_j^(alpha,beta) evaluated (as jets) at a linear-in-(x,y)
// argument z; fills out[0..n].
void jacobi_seq(int n, double alpha, double beta, const Jet2& z, std::vector<Jet2>& out) {
  out.resize(n + 1);
  out[0] = Jet2{1.0, 0, 0, 0, 0, 0};
  if (n == 0) return;
  const double ab = alpha + beta;
  out[1] = Jet2{0.5 * (alpha - beta), 0, 0, 0, 0, 0} + (0.5 * (ab + 2.0)) * z;
  for (int j = 2; j <= n; ++j) {
    double c1 = 2.0 * j * (j + ab) * (2.0 * j + ab - 2.0);
    double c2 = (2.0 * j + ab - 1.0) * (alpha * alpha - beta * beta);
    double c3 = (2.0 * j + ab - 2.0) * (2.0 * j + ab - 1.0) * (2.0 * j + ab);
    double c4 = 2.0 * (j + alpha - 1.0) * (j + beta - 1.0) * (2.0 * j + ab);
    Jet2 t = Jet2{c2, 0, 0, 0, 0, 0} + c3 * z;
    out[j] = (1.0 / c1) * (t * out[j - 1] - c4 * out[j - 2]);
  }
}

}  // namespace

void modal_basis(int p, double x, double y, std::vector<Jet2>& out) {
  out.resize(scalar_dim(p));
  // Homogenized Legendre direction: q_i = (1-y)^i P_i((2x-(1-y))/(1-y)) obeys
  // (i+1) q_{i+1} = (2i+1) u q_i - i v^2 q_{i-1} with u = 2x+y-1, v = 1-y,
  // which is polynomial and regular at the collapsed vertex y=1.
  const Jet2 u{2.0 * x + y - 1.0, 2.0, 1.0, 0, 0, 0};
  const Jet2 v{1.0 - y, 0.0, -1.0, 0, 0, 0};
  const Jet2 v2 = v * v;
  const Jet2 b{2.0 * y - 1.0, 0.0, 2.0, 0, 0, 0};

  // Scratch kept across calls; this sits inside every quadrature loop.
  thread_local std::vector<Jet2> q, jac;
  q.resize(p + 1);
  q[0] = Jet2{1.0, 0, 0, 0, 0, 0};
  if (p >= 1) q[1] = u;
  for (int i = 1; i < p; ++i)
    q[i + 1] = (1.0 / (i + 1.0)) * ((2.0 * i + 1.0) * (u * q[i]) - static_cast<double>(i) * (v2 * q[i - 1]));

  int idx = 0;
  for (int i = 0; i <= p; ++i) {
    jacobi_seq(p - i, 2.0 * i + 1.0, 0.0, b, jac);
    for (int j = 0; j <= p - i; ++j) out[idx++] = q[i] * jac[j];
  }
}

std::vector<Vec2> lagrange_nodes(int p) {
  check_degree(p);
  std::vector<Vec2> nodes;
  nodes.reserve(scalar_dim(p));
  const Vec2 v[3] = {{0, 0}, {1, 0}, {0, 1}};
  for (int i = 0; i < 3; ++i) nodes.push_back(v[i]);
  for (int e = 0; e < 3; ++e) {
    Vec2 a = v[(e + 1) % 3], b = v[(e + 2) % 3];
    for (int t = 1; t < p; ++t) nodes.push_back(a + (static_cast<double>(t) / p) * (b - a));
  }
  for (int b1 = 1; b1 <= p - 2; ++b1)
    for (int b2 = 1; b2 <= p - 1 - b1; ++b2)
      nodes.push_back({static_cast<double>(b1) / p, static_cast<double>(b2) / p});
  return nodes;
}

const Eigen::MatrixXd& lagrange_coeffs(int p) {
  check_degree(p);
  static const std::vector<Eigen::MatrixXd> cache = [] {
    std::vector<Eigen::MatrixXd> c(kMaxDegree + 1);
    std::vector<Jet2> jets;
    for (int deg = 1; deg <= kMaxDegree; ++deg) {
      const int n = scalar_dim(deg);
      auto nodes = lagrange_nodes(deg);
      Eigen::MatrixXd V(n, n);
      for (int k = 0; k < n; ++k) {
        modal_basis(deg, nodes[k].x, nodes[k].y, jets);
        for (int m = 0; m < n; ++m) V(k, m) = jets[m].v;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
      if (!lu.isInvertible())
        throw std::runtime_error("lagrange_coeffs: singular nodal Vandermonde at p=" +
                                 std::to_string(deg));
      c[deg] = lu.inverse();
    }
    return c;
  }();
  return cache[p];
}

BasisTable tabulate_lagrange(int p, const std::vector<Vec2>& pts, bool second_derivs) {
  check_degree(p);
  const Eigen::MatrixXd& C = lagrange_coeffs(p);
  const int n = scalar_dim(p);
  const int npts = static_cast<int>(pts.size());
  Eigen::MatrixXd mv(npts, n), mx(npts, n), my(npts, n);
  Eigen::MatrixXd mxx, mxy, myy;
  if (second_derivs) {
    mxx.resize(npts, n);
    mxy.resize(npts, n);
    myy.resize(npts, n);
  }
  std::vector<Jet2> jets;
  for (int q = 0; q < npts; ++q) {
    modal_basis(p, pts[q].x, pts[q].y, jets);
    for (int m = 0; m < n; ++m) {
      mv(q, m) = jets[m].v;
      mx(q, m) = jets[m].dx;
      my(q, m) = jets[m].dy;
      if (second_derivs) {
        mxx(q, m) = jets[m].dxx;
        mxy(q, m) = jets[m].dxy;
        myy(q, m) = jets[m].dyy;
      }
    }
  }
  BasisTable t;
  t.val = mv * C;
  t.dx = mx * C;
  t.dy = my * C;
  if (second_derivs) {
    t.dxx = mxx * C;
    t.dxy = mxy * C;
    t.dyy = myy * C;
  }
  return t;
}

namespace {

// Legendre values P_0..P_n at z in [-1,1].
void legendre_seq(int n, double z, std::vector<double>& out) {
  out.resize(n + 1);
  out[0] = 1.0;
  if (n == 0) return;
  out[1] = z;
  for (int j = 1; j < n; ++j)
    out[j + 1] = ((2.0 * j + 1.0) * z * out[j] - j * out[j - 1]) / (j + 1.0);
}

}  // namespace

RtElement::RtElement(const Vec2 v[3], const bool flip[3], int p) : p_(p) {
  if (p < 0 || p > kMaxDegree)
    throw std::invalid_argument("RT degree " + std::to_string(p) +
                                " outside supported range [0," + std::to_string(kMaxDegree) + "]");
  for (int i = 0; i < 3; ++i) {
    v_[i] = v[i];
    flip_[i] = flip[i];
  }
  j00_ = v[1].x - v[0].x;
  j10_ = v[1].y - v[0].y;
  j01_ = v[2].x - v[0].x;
  j11_ = v[2].y - v[0].y;
  det_ = j00_ * j11_ - j01_ * j10_;
  if (!(det_ > 0.0)) throw std::runtime_error("RtElement: degenerate or flipped element");

  const int n = dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> sx(n), sy(n), sd(n), leg;

  const QuadRule1D& r1 = gauss_rule_1d(p + 2);
  for (int e = 0; e < 3; ++e) {
    Vec2 a = v_[(e + 1) % 3], b = v_[(e + 2) % 3];
    if (flip_[e]) std::swap(a, b);
    Vec2 tv = b - a;
    double len = norm(tv);
    Vec2 nrm{tv.y / len, -tv.x / len};
    for (size_t q = 0; q < r1.x.size(); ++q) {
      Vec2 pt = a + r1.x[q] * tv;
      eval_span(pt, sx.data(), sy.data(), sd.data());
      legendre_seq(p, 2.0 * r1.x[q] - 1.0, leg);
      for (int j = 0; j <= p; ++j)
        for (int s = 0; s < n; ++s)
          M(e * (p + 1) + j, s) += r1.w[q] * leg[j] * (sx[s] * nrm.x + sy[s] * nrm.y);
    }
  }

  if (p >= 1) {
    // Interior moments against the modal basis of P^{p-1}, one per component,
    // normalized by 1/|T| (the Jacobian cancels the normalization up to the
    // factor 2 = 1/|reference triangle|).
    const int base = 3 * (p + 1);
    const int nsc = scalar_dim(p - 1);
    const QuadRule& rt = quadrature_rule(2 * p + 2);
    std::vector<Jet2> jets;
    for (const QuadPoint& qp : rt.points) {
      Vec2 pt = qp.l0 * v_[0] + qp.l1 * v_[1] + qp.l2 * v_[2];
      eval_span(pt, sx.data(), sy.data(), sd.data());
      Vec2 r = to_ref(pt);
      modal_basis(p - 1, r.x, r.y, jets);
      for (int j = 0; j < nsc; ++j)
        for (int s = 0; s < n; ++s) {
          M(base + 2 * j, s) += 2.0 * qp.w * jets[j].v * sx[s];
          M(base + 2 * j + 1, s) += 2.0 * qp.w * jets[j].v * sy[s];
        }
    }
  }

  // Partial pivoting suffices: the moment matrix of a valid element is
  // invertible, and exact breakdown surfaces as non-finite entries.
  coef_ = Eigen::PartialPivLU<Eigen::MatrixXd>(M).inverse();
  if (!coef_.allFinite())
    throw std::runtime_error("RtElement: singular moment matrix (degenerate element?)");
}

Vec2 RtElement::to_ref(Vec2 pt) const {
  double rx = pt.x - v_[0].x, ry = pt.y - v_[0].y;
  return {(j11_ * rx - j01_ * ry) / det_, (-j10_ * rx + j00_ * ry) / det_};
}

// Spanning set: (phi_i, 0) and (0, phi_i) for the full modal family of degree
// p (in reference coordinates), plus J (r phi_k(r)) for the p+1 modal
// functions of exact degree p. The latter supply the radial component x P^p
// modulo [P^p]^2; divergence is similarity invariant, div = 2 phi + r.grad phi.
void RtElement::eval_span(Vec2 pt, double* sx, double* sy, double* sd) const {
  const Vec2 r = to_ref(pt);
  thread_local std::vector<Jet2> jets;
  modal_basis(p_, r.x, r.y, jets);
  const int nsc = scalar_dim(p_);
  for (int i = 0; i < nsc; ++i) {
    double gx = (j11_ * jets[i].dx - j10_ * jets[i].dy) / det_;
    double gy = (-j01_ * jets[i].dx + j00_ * jets[i].dy) / det_;
    sx[2 * i] = jets[i].v;
    sy[2 * i] = 0.0;
    sd[2 * i] = gx;
    sx[2 * i + 1] = 0.0;
    sy[2 * i + 1] = jets[i].v;
    sd[2 * i + 1] = gy;
  }
  for (int i = 0; i <= p_; ++i) {
    // index of the exact-degree-p function q_i P_{p-i} in the i-major order
    int idx = i * (p_ + 1) - i * (i - 1) / 2 + (p_ - i);
    const Jet2& f = jets[idx];
    double wx = r.x * f.v, wy = r.y * f.v;
    int s = 2 * nsc + i;
    sx[s] = j00_ * wx + j01_ * wy;
    sy[s] = j10_ * wx + j11_ * wy;
    sd[s] = 2.0 * f.v + r.x * f.dx + r.y * f.dy;
  }
}

void RtElement::eval(Vec2 pt, double* vx, double* vy, double* dv) const {
  const int n = dim();
  thread_local std::vector<double> sx, sy, sd;
  sx.resize(n);
  sy.resize(n);
  sd.resize(n);
  eval_span(pt, sx.data(), sy.data(), sd.data());
  Eigen::Map<const Eigen::VectorXd> mx(sx.data(), n), my(sy.data(), n), md(sd.data(), n);
  Eigen::Map<Eigen::VectorXd>(vx, n) = coef_.transpose() * mx;
  Eigen::Map<Eigen::VectorXd>(vy, n) = coef_.transpose() * my;
  Eigen::Map<Eigen::VectorXd>(dv, n) = coef_.transpose() * md;
}

RtTable RtElement::tabulate(const std::vector<Vec2>& pts) const {
  const int n = dim();
  const int m = static_cast<int>(pts.size());
  Eigen::MatrixXd sx(m, n), sy(m, n), sd(m, n);
  std::vector<double> bx(n), by(n), bd(n);
  for (int q = 0; q < m; ++q) {
    eval_span(pts[q], bx.data(), by.data(), bd.data());
    for (int s = 0; s < n; ++s) {
      sx(q, s) = bx[s];
      sy(q, s) = by[s];
      sd(q, s) = bd[s];
    }
  }
  RtTable t;
  t.vx = sx * coef_;
  t.vy = sy * coef_;
  t.dv = sd * coef_;
  return t;
}

}  // namespace afem
