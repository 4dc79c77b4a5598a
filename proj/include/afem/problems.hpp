#pragma once

#include <string>

#include "afem/adapt.hpp"

namespace afem {

// The experiment library.
//
//   lshape       u = r^{2/3} sin(2*theta/3) on the L-shaped domain, with the
//                polar angle measured from the positive x-axis edge of the
//                reentrant corner at the origin, theta in (0, 3pi/2). The
//                load vanishes; the boundary data is the trace of u.
//   square       u = sin(pi x) sin(pi y) on the unit square, f = 2 pi^2 u,
//                homogeneous boundary data.
//   cross        f = 1 on the cross-shaped domain, homogeneous boundary
//                data, no exact solution.
//   square-proj  the square problem with the load replaced by its
//                elementwise L2 projection onto P^{p-1} on the two-element
//                initial mesh. The data is then a fixed piecewise polynomial
//                on every refinement, free of oscillation; the exact
//                solution of the perturbed problem is not known.
//
// p is the polynomial degree of the intended run; only square-proj depends
// on it. Throws std::invalid_argument for unknown names or degrees outside
// the basis range.
Problem make_problem(const std::string& name, int p = 1);

}  // namespace afem
