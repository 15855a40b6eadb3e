#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tholo/expr.hpp"
#include "tholo/form.hpp"
#include "tholo/linalg.hpp"

namespace tholo {

// Gaussian weight exp(-sum_ab w_a A_ab wbar_b - 1/2 sum_ab q_a B_ab q_b) over
// the listed variables. w_vars[i] pairs with wbar_vars[i].
class GaussianSpec {
public:
    GaussianSpec(std::vector<Var> w_vars, std::vector<Var> wbar_vars, std::vector<Var> q_vars,
                 Mat A, Mat B, Complex prefactor = Complex(1.0));

    // Assemble A and B from an exponent quadratic form. Throws on terms
    // outside the w-wbar / q-q pattern or on a non-positive-definite result.
    static GaussianSpec from_quad(const QuadForm& quad, std::vector<Var> w_vars,
                                  std::vector<Var> wbar_vars, std::vector<Var> q_vars,
                                  Complex prefactor = Complex(1.0));

    const std::vector<Var>& w_vars() const { return w_; }
    const std::vector<Var>& wbar_vars() const { return wbar_; }
    const std::vector<Var>& q_vars() const { return q_; }
    const Mat& A() const { return a_; }
    const Mat& B() const { return b_; }
    const Mat& A_inv() const { return a_inv_; }
    const Mat& B_inv() const { return b_inv_; }
    Complex prefactor() const { return prefactor_; }

    // pi^{n_c} det(A)^-1 (2 pi)^{n_r/2} det(B)^{-1/2} times the prefactor.
    Complex normalization() const { return norm_; }

    // The exponent this spec encodes, as a quadratic form (for validation).
    QuadForm quad() const;

    int w_index(const Var& v) const;
    int q_index(const Var& v) const;

private:
    std::vector<Var> w_, wbar_, q_;
    Mat a_, b_, a_inv_, b_inv_;
    Complex prefactor_;
    Complex norm_;
};

// Lebesgue integral of the monomial against the spec's Gaussian via
// Wick/Isserlis pairings (normalization included). Zero when the holomorphic
// degree is unbalanced or the real degree is odd. Total degree capped at 12.
Complex gaussian_moment(const GaussianSpec& spec, const Monomial& m);

// Independent verification path: Cholesky transform plus tensor
// Gauss-Hermite, exact for polynomials. Caps total real dimension at 8.
Complex gaussian_moment_oracle(const GaussianSpec& spec, const Monomial& m,
                               int nodes_per_axis = 0);

// A form whose coefficients are polynomial maps under one shared Gaussian.
// This is the hot-path representation the engine evaluates per Schwinger node.
struct CompiledForm {
    AlgebraPtr alg;
    QuadForm quad;
    std::map<std::uint64_t, Poly> terms;

    void add(std::uint64_t mask, const Monomial& mono, Complex c);
};

// Decompose every coefficient; all terms must share one Gaussian.
CompiledForm compile_form(const Form& f);

// Integrate out every position generator (kинds Dz/Dzbar/Dx present in the
// algebra): terms that do not reach the full position degree die; the rest
// Wick-integrate against `spec`, leaving a numeric form on the remaining
// generators. The compiled quad must match spec (relative 1e-7).
NumericForm integrate_positions(const CompiledForm& cf, const GaussianSpec& spec);
NumericForm integrate_positions(const Form& f, const GaussianSpec& spec);

// Same, but also report per-mask sums of |term| before cancellation (the
// natural scale against which a vanishing result is judged).
struct PositionsIntegral {
    NumericForm form;
    std::map<std::uint64_t, double> scale;
};
PositionsIntegral integrate_positions_scaled(const CompiledForm& cf, const GaussianSpec& spec);

// Orientation factor converting the canonical ordered position top-form
// (all dw, then all dwbar, then all dq) into Lebesgue measure on
// C^{n_c} x R^{n_r}: (-1)^{n_c(n_c-1)/2} (-2i)^{n_c}.
Complex position_measure_factor(int n_c);

} // namespace tholo
