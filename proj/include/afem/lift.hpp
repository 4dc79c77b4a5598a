#pragma once

#include <map>
#include <optional>

#include "afem/equilibrate.hpp"

namespace afem {

// Extended-real lower-bound constant eta(a) / ||grad r||, stored as a finite
// value plus an explicit infinity flag. Conventions: x/0 = infinity for x > 0,
// 0/0 = 0. Infinity compares greater than any finite bound.
struct Clb {
  double value = 0.0;
  bool infinite = false;

  double as_double() const;
  // Stop test C_lb <= bound; true for any C_lb when bound is +infinity.
  bool leq(double bound) const { return as_double() <= bound; }
};

Clb clb(double eta_a, double lift_norm);

struct LiftingResult {
  int vertex = -1;
  int beta = 0;
  double lift_norm = 0.0;  // ||grad r^{a,beta}|| over the patch
  Clb c_lb;
};

// Runs `beta` rounds of bisecting every element of the patch, each round
// followed by conforming closure, so closure children of one round are
// bisected again in the next. Closure stays inside the patch since the patch
// boundary has no neighbors. The returned submesh keeps one global ancestor
// element id per trial element in `elems`; `edge_class` is dropped (it
// describes the unrefined patch only) and `v_l2g` keeps the ids of the
// original vertices.
PatchSubmesh trial_refine_patch(const PatchSubmesh& patch, int beta);

// Galerkin solution r of <grad r, grad v> = <f, v> - <grad u_h, grad v> over
// the trial patch, v in P^p(trial mesh) with zero trace on the whole patch
// boundary. Returns ||grad r||; an empty trial space yields the zero lifting.
LiftingResult residual_lifting(const PatchSubmesh& patch_mesh, const ScalarField& u_h,
                               const ScalarFn& f, int p);

// Iterates beta = 1, 2, ..., each time refining the original patch beta
// generations and lifting, until C_lb(a) <= clb_max or beta = beta_max.
// eta_a is the vertex indicator of a; when absent it is recomputed from a
// fresh patch equilibration.
LiftingResult select_beta(int a, const ScalarField& u_h, const ScalarFn& f, int beta_max,
                          double clb_max, std::optional<double> eta_a = std::nullopt);

// Marks every element of each planned patch for the generation depth its
// trial refinement reaches and bisects once globally with closure. Restricted
// to each planned patch the result is at least as fine as the corresponding
// trial mesh.
Mesh refine_to_cover(const Mesh& mesh, const std::map<int, int>& plan);

// Restriction of a refined mesh to the patch of vertex a in the coarse mesh.
// `covered` must descend from `mesh` through one bisect call so that its
// parent field names coarse elements. Like a trial refinement, the returned
// submesh stores one coarse ancestor id per element in `elems`, so it feeds
// residual_lifting directly; the lifting it produces lives on the refinement
// the adaptive step actually realized, which is at least as fine as any trial
// mesh and gives the recorded constants C_lb(a).
PatchSubmesh covered_patch(const Mesh& mesh, int a, const Mesh& covered);

}  // namespace afem
