#include "afem/problems.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "afem/galerkin.hpp"

namespace afem {

namespace {

constexpr double kPi = std::numbers::pi;

// Polar angle in (0, 3pi/2], zero along the edge {x > 0, y = 0}.
double lshape_angle(Vec2 x) {
  double th = std::atan2(x.y, x.x);
  if (th < 0.0) th += 2.0 * kPi;
  return th;
}

double lshape_u(Vec2 x) {
  double r = std::hypot(x.x, x.y);
  if (r == 0.0) return 0.0;
  return std::pow(r, 2.0 / 3.0) * std::sin(2.0 / 3.0 * lshape_angle(x));
}

Vec2 lshape_grad(Vec2 x) {
  double r = std::hypot(x.x, x.y);
  double th = lshape_angle(x);
  double c = 2.0 / 3.0 * std::pow(r, -1.0 / 3.0);
  return {-c * std::sin(th / 3.0), c * std::cos(th / 3.0)};
}

Problem make_square() {
  Problem prob;
  prob.name = "square";
  prob.initial = build_initial_mesh("unit_square");
  prob.f = [](Vec2 x) { return 2.0 * kPi * kPi * std::sin(kPi * x.x) * std::sin(kPi * x.y); };
  prob.exact_grad = [](Vec2 x) {
    return Vec2{kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y),
                kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y)};
  };
  return prob;
}

}  // namespace

Problem make_problem(const std::string& name, int p) {
  if (p < 1 || p > kMaxDegree)
    throw std::invalid_argument("make_problem: degree " + std::to_string(p) + " outside [1," +
                                std::to_string(kMaxDegree) + "]");
  if (name == "lshape") {
    Problem prob;
    prob.name = name;
    prob.initial = build_initial_mesh("lshape");
    prob.g = lshape_u;
    prob.exact_grad = lshape_grad;
    prob.corner = Vec2{0.0, 0.0};
    return prob;
  }
  if (name == "square") return make_square();
  if (name == "cross") {
    Problem prob;
    prob.name = name;
    prob.initial = build_initial_mesh("cross");
    prob.f = [](Vec2) { return 1.0; };
    return prob;
  }
  if (name == "square-proj") {
    Problem prob = make_square();
    prob.name = name;
    auto mesh = std::make_shared<Mesh>(prob.initial);
    // The initial elements have unit size, so the projection integrals need
    // the strongest table rule rather than the refinement-oriented default.
    auto data = std::make_shared<DgField>(project_L2(prob.f, *mesh, p - 1, kMaxQuadDegree));
    auto locator = std::make_shared<PointLocator>(*mesh);
    prob.f = [mesh, data, locator](Vec2 x) {
      Vec2 ref;
      int t = locator->locate(x, &ref);
      return eval_dg(*data, t, ref);
    };
    prob.exact_grad = {};
    return prob;
  }
  throw std::invalid_argument("make_problem: unknown problem '" + name +
                              "' (expected lshape, square, cross, or square-proj)");
}

}  // namespace afem
