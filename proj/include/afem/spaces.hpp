#pragma once

#include <Eigen/Dense>
#include <functional>

#include "afem/basis.hpp"
#include "afem/mesh.hpp"
#include "afem/quadrature.hpp"

namespace afem {

// Affine map from the reference triangle {(0,0),(1,0),(0,1)} to element t.
struct ElemMap {
  Vec2 v0;
  double j00, j01, j10, j11;  // Jacobian columns = edge vectors
  double det;                 // = 2 |T|
  Vec2 to_phys(Vec2 r) const { return {v0.x + j00 * r.x + j01 * r.y, v0.y + j10 * r.x + j11 * r.y}; }
  Vec2 to_ref(Vec2 p) const {
    double rx = p.x - v0.x, ry = p.y - v0.y;
    return {(j11 * rx - j01 * ry) / det, (-j10 * rx + j00 * ry) / det};
  }
  // J^{-T} applied to a reference gradient.
  Vec2 grad_to_phys(double gx, double gy) const {
    return {(j11 * gx - j10 * gy) / det, (-j01 * gx + j00 * gy) / det};
  }
};
ElemMap elem_map(const Mesh& mesh, int t);

using ScalarFn = std::function<double(Vec2)>;

// Quadrature degree used for terms involving analytic data.
inline int data_quad_degree(int p) {
  int d = 2 * p + 6;
  return d > kMaxQuadDegree ? kMaxQuadDegree : d;
}

// Continuous Lagrange space of degree p with optional Dirichlet constraints.
// Global DoF order: vertices, then p-1 DoFs per edge (along the edge from the
// smaller to the larger vertex id), then interior DoFs per element. Per
// element, DoFs follow the lagrange_nodes order.
struct ScalarSpace {
  const Mesh* mesh = nullptr;
  int p = 1;
  int n_dofs = 0;
  std::vector<int> elem_dofs;
  std::vector<Vec2> dof_pos;
  std::vector<char> dirichlet;

  int nd() const { return scalar_dim(p); }
  const int* dofs(int t) const { return elem_dofs.data() + static_cast<size_t>(t) * nd(); }
  int n_free() const;
};

// dirichlet decides, for boundary DoF positions only, whether the DoF is
// constrained; the default constrains the whole boundary. Interior DoFs are
// never constrained.
ScalarSpace build_scalar_space(const Mesh& mesh, int p,
                               const std::function<bool(Vec2)>& dirichlet = {});

// Discontinuous P^p space; element coefficients in the modal basis.
struct DgSpace {
  const Mesh* mesh = nullptr;
  int p = 0;
  int n_dofs = 0;
  int nd() const { return scalar_dim(p); }
};
DgSpace build_dg_space(const Mesh& mesh, int p);

// Raviart-Thomas RT^p space with normal-trace continuity. Global DoF order:
// p+1 DoFs per edge (normal moments along the smaller-id to larger-id
// direction), then p(p+1) interior DoFs per element. Per element, DoFs follow
// the RtElement order (edge 0, edge 1, edge 2, interior).
struct FluxSpace {
  const Mesh* mesh = nullptr;
  int p = 0;
  int n_dofs = 0;
  std::vector<int> elem_dofs;
  std::vector<std::array<char, 3>> flip;  // oriented edge direction reversed vs local CCW
  std::vector<char> zero_trace;           // constrained-to-zero DoFs

  int nd() const { return rt_dim(p); }
  const int* dofs(int t) const { return elem_dofs.data() + static_cast<size_t>(t) * nd(); }
  RtElement element(int t) const;
};
FluxSpace build_rt_space(const Mesh& mesh, int p);
// Marks every DoF on a zero-trace patch edge as constrained.
FluxSpace build_rt_space(const PatchSubmesh& patch, int p);

struct ScalarField {
  const ScalarSpace* space = nullptr;
  Eigen::VectorXd coeffs;
};
struct DgField {
  DgSpace space;  // owned: DgSpace is two ints and a mesh pointer
  Eigen::VectorXd coeffs;
};
struct FluxField {
  const FluxSpace* space = nullptr;
  Eigen::VectorXd coeffs;
};

// Reference-basis tables at the nodes of quadrature_rule(rule_degree), cached.
const BasisTable& lagrange_table(int p, int rule_degree, bool second_derivs = false);
const BasisTable& modal_table(int p, int rule_degree);
// Inverse of the reference modal mass matrix.
const Eigen::MatrixXd& modal_mass_inverse(int p);

// Elementwise L2 projection onto discontinuous P^p. quad_degree < 0 selects
// the data degree 2p+6 (capped at the quadrature table maximum).
DgField project_L2(const ScalarFn& f, const Mesh& mesh, int p, int quad_degree = -1);

double eval_scalar(const ScalarField& u, int t, Vec2 ref);
Vec2 eval_scalar_grad(const ScalarField& u, int t, Vec2 ref);
double eval_dg(const DgField& g, int t, Vec2 ref);
// Flux value at a physical point of element t (el must be space.element(t)).
Vec2 eval_flux(const FluxField& s, const RtElement& el, int t, Vec2 phys);
double eval_flux_div(const FluxField& s, const RtElement& el, int t, Vec2 phys);

}  // namespace afem
