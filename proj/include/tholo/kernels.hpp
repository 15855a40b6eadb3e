#pragma once

#include <vector>

#include "tholo/form.hpp"
#include "tholo/graph.hpp"

namespace tholo {

// A point of R^{d'} x C^d.
struct SpacetimePoint {
    std::vector<Complex> z; // d holomorphic coordinates
    std::vector<double> x;  // d' real coordinates

    static SpacetimePoint zero(const Signature& sig);
    bool is_origin() const;
};

// Kernel forms live on a one-point algebra with generators dzbar_k, dx_k and
// the Schwinger generator. Coefficients use the square-root Schwinger
// variable tau (t = tau^2), which keeps them rational for odd d'.
AlgebraPtr kernel_algebra(const Signature& sig);

Var kernel_tau();                // tau = sqrt(t)
Var kernel_z(int k);             // z_k, 1-based
Var kernel_zbar(int k);
Var kernel_x(int k);

// H(t,z,x) = exp(-(2 sum z zbar + sum x^2)/(4 t)) / (2^{d+d'} (pi t)^{d+d'/2})
// times d^d zbar d^{d'} x, as a symbolic form in tau.
Form heat_kernel_form(const Signature& sig);

// Formal adjoints acting on kernel forms:
// dbar* = -2 sum_k d/dz_k i_{d/dzbar_k},  d* = - sum_k d/dx_k i_{d/dx_k}.
Form dbar_star(const Form& f, const Signature& sig);
Form d_star(const Form& f, const Signature& sig);

// Propagator in Schwinger space, both routes:
//   definition: P_t = -dt (dbar* + d*) H + H          (dt = 2 tau dtau)
//   product:    P_t = pi^{-(d+d'/2)} e^{-z.u - v.v} d^d u d^{d'} v
// with u = zbar/(2t), v = x/(2 sqrt t).
Form schwinger_propagator(const Signature& sig);
Form schwinger_propagator_uv(const Signature& sig);

// (d_t + dbar + d_deRham) P_t, which the closedness lemma says is zero.
Form propagator_closedness_residual(const Signature& sig);

// (i_{Eu_t} + i_{Eu_zbar} + i_{Eu_x}) P_t in difference coordinates.
Form euler_contraction_residual(const Signature& sig);

// Evaluate a kernel form at (t, p).
NumericForm kernel_eval(const Form& f, const Signature& sig, double t, const SpacetimePoint& p);

// Heat kernel scalar coefficient at (t, p) and its total spatial mass
// (Lebesgue integral of the coefficient; equals 1 for all signatures).
Complex heat_kernel_coefficient(const Signature& sig, double t, const SpacetimePoint& p);
double heat_mass(const Signature& sig, double t, int nodes = 200);

// Pointwise spatial convolution (H(s) * H(t))(p), for the semigroup check.
double heat_convolution(const Signature& sig, double s, double t, const SpacetimePoint& p,
                        int nodes = 48);

// Generalized Bochner-Martinelli kernel evaluated at p != 0 (numeric form on
// the kernel algebra; no Schwinger generator involved). The working
// normalization carries weight 1/2 on the x-direction sum, which is the
// kernel the regularized propagator converges to and the one solving
// (dbar + d) P = delta; `displayed_normalization` selects the weight-1
// variant for reference.
NumericForm bochner_martinelli(const Signature& sig, const SpacetimePoint& p,
                               bool displayed_normalization = false);

// Regularized ordinary propagator int_eps^L (dbar* + d*) H dt at p, by
// Gauss-Legendre in log t. eps == L gives the zero form; eps > L rejects.
NumericForm regularized_propagator(const Signature& sig, double eps, double L,
                                   const SpacetimePoint& p, int nodes = 400);

// Distributional check of (dbar + d) P~ = delta against a Gaussian test form
// f d^d z with width sigma: returns the measured ratio
//   (-1)^{d+d'} int P~ ^ (dbar+d)(f d^d z)  /  (expected delta pairing).
// The working kernel measures 1; the displayed weight-1 variant measures 2
// in the pure topological directions (e.g. sign(x) at (0,1)).
Complex green_pairing_ratio(const Signature& sig, double sigma = 1.0, int nodes = 96,
                            bool displayed_normalization = false);

} // namespace tholo
