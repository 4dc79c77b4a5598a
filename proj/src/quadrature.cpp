#include "afem/quadrature.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace afem {
namespace {

// Nodes and weights of an n-point Gauss rule for the weight (1-t)^alpha * t^beta
// on [0,1], computed from the symmetric tridiagonal Jacobi matrix of the
// three-term recurrence (Golub-Welsch).
void gauss_jacobi_01(int n, double alpha, double beta,
                     std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    double ak;
    if (k == 0)
      ak = (beta - alpha) / (ab + 2.0);
    else
      ak = (beta * beta - alpha * alpha) /
           ((2.0 * k + ab) * (2.0 * k + ab + 2.0));
    J(k, k) = ak;
  }
  for (int k = 1; k < n; ++k) {
    double bk;
    if (k == 1)
      bk = 4.0 * (alpha + 1.0) * (beta + 1.0) /
           ((ab + 2.0) * (ab + 2.0) * (ab + 3.0));
    else
      bk = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
           ((2.0 * k + ab) * (2.0 * k + ab) * (2.0 * k + ab + 1.0) *
            (2.0 * k + ab - 1.0));
    J(k, k - 1) = J(k - 1, k) = std::sqrt(bk);
  }

  // total weight-function mass on [-1,1]: 2^(a+b+1) * B(a+1, b+1)
  double mu0 = std::pow(2.0, ab + 1.0) *
               std::exp(std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                        std::lgamma(ab + 2.0));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_jacobi_01: eigensolver failed");

  x.resize(n);
  w.resize(n);
  // map [-1,1] -> [0,1] with t = (1+z)/2; the weight (1-z)^a (1+z)^b picks up
  // a factor 2^(a+b) and dz = 2 dt.
  const double scale = std::pow(2.0, -(ab + 1.0));
  for (int i = 0; i < n; ++i) {
    x[i] = 0.5 * (1.0 + es.eigenvalues()(i));
    double v0 = es.eigenvectors()(0, i);
    w[i] = mu0 * v0 * v0 * scale;
  }
}

QuadRule make_triangle_rule(int degree) {
  // Collapsed (Duffy) product rule: x = s(1-t), y = t maps the unit square to
  // the reference triangle with Jacobian (1-t); Gauss-Legendre in s and
  // Gauss-Jacobi with weight (1-t) in t give exactness for total degree
  // 2n-1 >= degree in each variable.
  const int n = degree / 2 + 1;
  std::vector<double> xs, ws, xt, wt;
  gauss_jacobi_01(n, 0.0, 0.0, xs, ws);
  gauss_jacobi_01(n, 1.0, 0.0, xt, wt);

  QuadRule rule;
  rule.degree = degree;
  rule.points.reserve(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double x = xs[i] * (1.0 - xt[j]);
      double y = xt[j];
      rule.points.push_back({1.0 - x - y, x, y, ws[i] * wt[j]});
    }
  return rule;
}

}  // namespace

const QuadRule& quadrature_rule(int target_degree) {
  if (target_degree < 0) throw std::invalid_argument("quadrature_rule: negative degree");
  if (target_degree > kMaxQuadDegree)
    throw std::invalid_argument("quadrature_rule: degree " +
                                std::to_string(target_degree) +
                                " beyond supported maximum " +
                                std::to_string(kMaxQuadDegree));
  static const std::vector<QuadRule> table = [] {
    std::vector<QuadRule> t;
    t.reserve(kMaxQuadDegree + 1);
    for (int d = 0; d <= kMaxQuadDegree; ++d) t.push_back(make_triangle_rule(d));
    return t;
  }();
  return table[target_degree];
}

const QuadRule1D& gauss_rule_1d(int n_points) {
  constexpr int kMaxPoints = 40;
  if (n_points < 1 || n_points > kMaxPoints)
    throw std::invalid_argument("gauss_rule_1d: unsupported point count " +
                                std::to_string(n_points));
  static const std::vector<QuadRule1D> table = [] {
    std::vector<QuadRule1D> t(kMaxPoints + 1);
    for (int n = 1; n <= kMaxPoints; ++n) gauss_jacobi_01(n, 0.0, 0.0, t[n].x, t[n].w);
    return t;
  }();
  return table[n_points];
}

}  // namespace afem
