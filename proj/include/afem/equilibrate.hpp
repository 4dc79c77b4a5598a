#pragma once

#include <memory>
#include <vector>

#include "afem/spaces.hpp"

namespace afem {

// Patch data g_a = Pi^p(psi_a f) - grad psi_a . grad u_h in the modal DG
// basis on patch.local, with the compatibility report.
struct PatchRhs {
  DgField g;
  double integral = 0.0;  // int over the patch of g_a
  double norm = 0.0;      // L2 norm of g_a over the patch
};

// Throws std::runtime_error when an interior vertex violates
// |integral| <= 1e-10 * norm * area(patch)^{1/2}; that signals a broken
// Galerkin solve upstream, since testing with the hat function enforces
// compatibility exactly.
PatchRhs patch_rhs(const PatchSubmesh& patch, const ScalarField& u_h, const ScalarFn& f);

// Minimizer sigma_a of ||psi_a grad u_h + tau|| over the patch RT^p space
// with zero normal trace on the zero-trace boundary part, subject to
// div tau = g_a elementwise.
struct PatchFlux {
  std::shared_ptr<const PatchSubmesh> patch;
  FluxSpace space;  // on patch->local
  Eigen::VectorXd coeffs;
};

PatchFlux equilibrate_patch(int a, const ScalarField& u_h, const ScalarFn& f);

// sigma = sum over vertices of the patch contributions, on the global RT^p
// space. Verifies normal-trace continuity across every interior edge and the
// divergence identity div sigma = Pi^p f (1e-10 relative); throws naming the
// offending edge or element.
FluxField assemble_global_flux(const FluxSpace& space, const std::vector<PatchFlux>& fluxes,
                               const ScalarFn& f);

struct IndicatorSet {
  enum class Kind { element, vertex };
  Kind kind = Kind::element;
  std::vector<double> values;
  double total = 0.0;  // sqrt of the sum of squared values
};

// eta(T) = ||grad u_h + sigma||_T + (h_T/pi) ||f - div sigma||_T.
IndicatorSet element_indicators(const ScalarField& u_h, const FluxField& sigma, const ScalarFn& f);

// eta(a)^2 = sum over the patch of
//   (||psi_a grad u_h + sigma_a||_T + (h_T/pi) ||psi_a f - Pi^p(psi_a f)||_T)^2.
// fluxes must hold one entry per mesh vertex, indexed by vertex id.
IndicatorSet vertex_indicators(const ScalarField& u_h, const std::vector<PatchFlux>& fluxes,
                               const ScalarFn& f);

// The indicator of a single patch, eta(a) for a = flux.patch->center.
double patch_indicator(const PatchFlux& flux, const ScalarField& u_h, const ScalarFn& f);

// osc(T) = (h_T/pi) ||f - Pi^p f||_T and the vertex-patch analogue
// osc(a)^2 = sum_T (h_T^2/pi^2) ||psi_a f - Pi^p(psi_a f)||_T^2.
struct OscillationPair {
  IndicatorSet element;
  IndicatorSet vertex;
};
OscillationPair oscillations(const ScalarFn& f, const Mesh& mesh, int p);

// zeta(T)^2 = |T| ||f + Lap u_h||_T^2 + |T|^{1/2} ||[dn u_h]||^2 over the
// interior edges of T; every interior edge contributes to both owners.
IndicatorSet weighted_residual_estimator(const ScalarField& u_h, const ScalarFn& f);

}  // namespace afem
