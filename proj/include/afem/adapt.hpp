#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "afem/galerkin.hpp"
#include "afem/lift.hpp"

namespace afem {

struct MarkResult {
  std::vector<int> marked;  // entity ids, ascending
  bool converged = false;   // every indicator was zero
};

// Minimal Doerfler set: entities sorted by value descending (ties by ascending
// id), shortest prefix whose squared sum reaches theta^2 times the squared
// total. All-zero indicators give an empty set with the converged signal.
MarkResult doerfler_mark(const IndicatorSet& indicators, double theta);

// q_ctr = sqrt(1 - theta^2 / (9 C_lb^2)); an infinite C_lb gives 1.
double contraction_factor(double theta, const Clb& c_lb);

enum class Algorithm { vertex, element };

struct AdaptConfig {
  std::string problem = "lshape";
  int p = 1;
  double theta = 0.3;
  int beta_max = 3;
  double clb_max = 10.0;
  long long max_dofs = 200000;
  int max_iters = 200;
  Algorithm algorithm = Algorithm::vertex;

  // Throws std::invalid_argument; the vertex variant requires beta_max >= 3.
  void validate() const;
};

struct Problem {
  std::string name;
  Mesh initial;
  ScalarFn f;                  // volume load; empty means zero
  ScalarFn g;                  // Dirichlet data; empty means homogeneous
  GradFn exact_grad;           // gradient of the exact solution when known
  std::optional<Vec2> corner;  // singular corner for the error quadrature
};

struct AdaptRecord {
  int level = 0;
  int n_elem = 0;
  int n_dofs = 0;  // free DoFs of the solve
  double error = std::numeric_limits<double>::quiet_NaN();
  double eta_elem_total = 0.0;
  double eta_vertex_total = 0.0;
  double osc_elem_total = 0.0;
  double osc_vertex_total = 0.0;
  double zeta_total = 0.0;
  int marked = 0;
  // C_lb range over the marked vertices at their selected beta (vertex
  // algorithm only).
  double clb_min = std::numeric_limits<double>::quiet_NaN();
  double clb_max = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> beta_hist;  // count of marked vertices per beta, index beta-1
  double q_ctr = std::numeric_limits<double>::quiet_NaN();
  // Realized ratios between this level and the next, backfilled once the next
  // level has been solved.
  double err_ratio = std::numeric_limits<double>::quiet_NaN();
  double eta_ratio = std::numeric_limits<double>::quiet_NaN();
  double effectivity = std::numeric_limits<double>::quiet_NaN();
  double eta_marked = 0.0;  // eta_l over the marked vertex set
  // ||grad(u_{l+1} - u_l)||, backfilled at the next level.
  double diff_norm = std::numeric_limits<double>::quiet_NaN();
  // Per-level maxima of zeta(T)/eta(face neighborhood) and of
  // eta(T)/zeta(vertex neighborhood).
  double zeta_over_eta_max = 0.0;
  double eta_over_zeta_max = 0.0;
  bool converged = false;
};

struct AdaptState {
  Problem problem;
  AdaptConfig config;
  std::shared_ptr<const Mesh> mesh;
  int level = 0;
  bool converged = false;
  std::vector<AdaptRecord> records;

  // Previous level kept alive for difference norms.
  std::shared_ptr<const Mesh> prev_mesh;
  std::shared_ptr<const ScalarSpace> prev_space;
  Eigen::VectorXd prev_coeffs;
};

// Validates the config and seeds the state with the problem's initial mesh.
AdaptState make_state(Problem problem, AdaptConfig config);

// One full adaptive iteration: solve, equilibrate every patch, mark vertices,
// select beta per marked vertex, refine to cover the trial meshes. Appends and
// returns the level record; backfills the predecessor's realized ratios and
// difference norm. A total estimator below 1e-12 of the solution energy also
// counts as converged, so exactly representable solutions stop at level zero.
// Throws std::logic_error when called on a converged state and
// std::runtime_error when the covered mesh misses a trial vertex.
AdaptRecord vertex_adaptive_step(AdaptState& state);

// The standard variant: element indicators, element marking, one bisection
// per marked element with closure.
AdaptRecord element_adaptive_step(AdaptState& state);

// Runs steps until convergence, the DoF cap, or the iteration cap.
void run_adaptive(AdaptState& state);

// Least-squares slope of log(quantity) vs log(DoFs) over the last `window`
// records. Records with non-finite or non-positive values are skipped; fewer
// than 3 usable points throw std::invalid_argument.
double fit_rate(const std::vector<AdaptRecord>& records, int window,
                const std::function<double(const AdaptRecord&)>& quantity);

}  // namespace afem
