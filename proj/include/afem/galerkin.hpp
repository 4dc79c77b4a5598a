#pragma once

#include <Eigen/Sparse>
#include <optional>

#include "afem/spaces.hpp"

namespace afem {

// Poisson Galerkin system after symmetric elimination of Dirichlet DoFs.
struct LinearSystem {
  int n = 0;                      // total DoF count of the originating space
  Eigen::SparseMatrix<double> A;  // SPD block over the free DoFs
  Eigen::VectorXd b;              // reduced right-hand side
  std::vector<int> free_dofs;     // reduced index -> global DoF
  Eigen::VectorXd lift;           // full length; boundary values at constrained DoFs
};

// Stiffness with exact quadrature, load at the data degree, Dirichlet values
// interpolated from g (zero when g is empty).
LinearSystem assemble_poisson(const ScalarSpace& space, const ScalarFn& f,
                              const ScalarFn& g = {});

// Full-length solution vector with relative residual <= 1e-12 on the free
// block. Throws std::runtime_error naming the DoF on factorization breakdown.
Eigen::VectorXd solve_spd(const LinearSystem& sys);

ScalarField solve_poisson(const ScalarSpace& space, const ScalarFn& f, const ScalarFn& g = {});

using GradFn = std::function<Vec2(Vec2)>;

double energy_norm(const ScalarField& u);

// || grad u - grad u_h || over the mesh. Elements touching the corner are
// integrated by recursive 4-way subdivision toward it (depth 12), so
// r^{-1/3}-type gradient singularities are resolved.
double energy_error(const GradFn& grad_exact, const ScalarField& u,
                    std::optional<Vec2> corner = {});

// Uniform background-grid point location.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);
  // Element containing p plus its reference coordinates; small negative
  // barycentric slack is accepted so edge/vertex points resolve. Throws
  // std::runtime_error when p lies outside the mesh.
  int locate(Vec2 p, Vec2* ref = nullptr) const;

 private:
  const Mesh* mesh_;
  int n_;
  Vec2 org_;
  double hx_, hy_;
  std::vector<int> cell_ptr_;
  std::vector<int> cell_elems_;
};

// Nodal interpolation onto a space over a (refined) mesh covering the same
// domain; exact for nested meshes at equal degree.
ScalarField interpolate_to(const ScalarField& coarse, const ScalarSpace& fine_space);

}  // namespace afem
