#pragma once

#include <vector>

namespace afem {

// Quadrature node on the reference triangle {x,y >= 0, x+y <= 1},
// stored in barycentric coordinates (l0, l1, l2) = (1-x-y, x, y).
struct QuadPoint {
  double l0, l1, l2;
  double w;
};

struct QuadRule {
  int degree = 0;  // exact for all bivariate polynomials up to this total degree
  std::vector<QuadPoint> points;
};

inline constexpr int kMaxQuadDegree = 20;

// Rule exact to the requested total degree on the reference triangle; weights
// are positive and sum to the reference area 1/2. Throws std::invalid_argument
// for degrees beyond kMaxQuadDegree.
const QuadRule& quadrature_rule(int target_degree);

// Gauss-Legendre rule on [0,1] with n points (exact for degree 2n-1).
struct QuadRule1D {
  std::vector<double> x;
  std::vector<double> w;
};
const QuadRule1D& gauss_rule_1d(int n_points);

}  // namespace afem
