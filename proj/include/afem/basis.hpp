#pragma once

#include <Eigen/Dense>
#include <vector>

#include "afem/geometry.hpp"

namespace afem {

// Scalar bases are supported up to this degree; beyond it the equispaced
// nodal Vandermonde becomes too ill-conditioned and the data-quadrature
// degree 2p+6 would exceed the quadrature table.
inline constexpr int kMaxDegree = 7;

inline constexpr int scalar_dim(int p) { return (p + 1) * (p + 2) / 2; }
inline constexpr int rt_dim(int p) { return (p + 1) * (p + 3); }
inline constexpr int interior_dim(int p) { return (p - 1) * (p - 2) / 2; }

// Value together with first and second derivatives; the modal recurrences are
// evaluated in this type so derivative code stays identical to value code.
struct Jet2 {
  double v = 0, dx = 0, dy = 0, dxx = 0, dxy = 0, dyy = 0;
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator*(double s, const Jet2& a);

// Orthogonal (Dubiner-type) modal family of total degree <= p on the
// reference triangle, evaluated at one point; out has scalar_dim(p) entries.
// The collapsed-coordinate singularity is removed by running the Legendre
// recurrence in homogenized form, so evaluation is valid on the whole closed
// triangle including the top vertex.
void modal_basis(int p, double x, double y, std::vector<Jet2>& out);

// Equispaced Lagrange nodes, hierarchical order: vertices (0,0),(1,0),(0,1);
// then p-1 nodes per edge, edge i opposite vertex i directed v_{i+1}->v_{i+2};
// then interior nodes in lexicographic barycentric order.
std::vector<Vec2> lagrange_nodes(int p);

// Modal coefficients of the nodal basis: column k holds the expansion of the
// k-th Lagrange function in the modal family. Cached per degree.
const Eigen::MatrixXd& lagrange_coeffs(int p);

struct BasisTable {
  Eigen::MatrixXd val;            // (npts, ndof)
  Eigen::MatrixXd dx, dy;         // reference-coordinate gradients
  Eigen::MatrixXd dxx, dxy, dyy;  // filled only when requested
};

// Lagrange basis values/derivatives at arbitrary reference points.
BasisTable tabulate_lagrange(int p, const std::vector<Vec2>& pts, bool second_derivs = false);

struct RtTable {
  Eigen::MatrixXd vx, vy, dv;  // (npts, ndof)
};

// Raviart-Thomas basis RT^p = [P^p]^2 + x*P^p on one physical triangle,
// defined through moment degrees of freedom:
//   - per edge, p+1 moments of the normal trace against Legendre polynomials
//     on the edge, with direction and normal fixed by the caller-supplied
//     orientation flags (so neighboring elements agree on shared edges);
//   - p(p+1) interior moments against a basis of [P^{p-1}]^2.
// DoF order: edge 0 moments 0..p, edge 1, edge 2, interior.
// Realized by inverting the moment matrix of a modal spanning set (the
// orthogonal scalar family per component plus the radial top-degree part),
// which stays well conditioned through the highest supported degrees.
class RtElement {
 public:
  // v: element vertices (CCW). flip[i] = true when the oriented direction of
  // edge i (opposite vertex i) runs v_{i+2} -> v_{i+1} instead of the local
  // v_{i+1} -> v_{i+2}.
  RtElement(const Vec2 v[3], const bool flip[3], int p);

  int degree() const { return p_; }
  int dim() const { return rt_dim(p_); }

  // outward_sign(i) = +1 if the oriented normal of edge i points out of the
  // element, -1 otherwise.
  double outward_sign(int i) const { return flip_[i] ? -1.0 : 1.0; }

  // Values (two components) and divergences of all basis functions at a
  // physical point. vx/vy/dv must have dim() entries.
  void eval(Vec2 pt, double* vx, double* vy, double* dv) const;

  // Batch evaluation at physical points.
  RtTable tabulate(const std::vector<Vec2>& pts) const;

 private:
  int p_;
  bool flip_[3];
  Vec2 v_[3];
  double j00_, j01_, j10_, j11_, det_;  // affine map onto the reference triangle
  Eigen::MatrixXd coef_;  // (nspan, ndof), column k = span coefficients of basis k

  Vec2 to_ref(Vec2 pt) const;
  void eval_span(Vec2 pt, double* sx, double* sy, double* sd) const;
};

}  // namespace afem
