#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tholo/graph.hpp"
#include "tholo/kernels.hpp"
#include "tholo/schwinger.hpp"
#include "tholo/wick.hpp"

namespace tholo {

// Gaussian test source Phi = P(positions) exp(-sum |z^i|^2/sigma_i^2
// - sum |x^i|^2/sigma_i^2) times an ordered generator subset, written in the
// original per-vertex coordinates z^i_k, x^i_k (vertex index i is 1-based).
struct TestSource {
    std::vector<double> sigma;   // width per vertex
    Monomial poly;               // polynomial prefactor in z/zbar/x variables
    std::vector<Gen> form_factor; // ordered generators over dz/dzbar/dx

    // Gaussian with unit widths and the holomorphic top form times the base
    // vertex anti-holomorphic/x top: the complement the propagators need to
    // reach full position degree with one dt~ per edge.
    static TestSource top_default(const DecoratedGraph& g, const Signature& sig);

    // Same but with `extra` additional non-base generators appended (used by
    // integrals where the propagators fall short of position top degree).
    static TestSource top_with_extra(const DecoratedGraph& g, const Signature& sig,
                                     const std::vector<Gen>& extra);
};

struct GraphIntegralProblem {
    DecoratedGraph graph;
    Signature sig;
    TestSource source;
    double L = 1.0;
    double eps = 0.0;
    QuadratureSpec quad;

    GraphIntegralProblem(DecoratedGraph g, Signature s, TestSource src, double L_ = 1.0,
                         double eps_ = 0.0);
};

// Variables and generators of the problem algebra: vertex i (1-based),
// coordinate k (1-based). Positions are the difference coordinates w^i, q^i
// with the last vertex as base (w^N = z^N).
Var w_var(int i, int k);
Var wbar_var(int i, int k);
Var q_var(int i, int k);
Var ttilde_var(int e); // sqrt-Schwinger coordinate of edge e (0-based)

// Algebra holding all position generators of the problem plus one Dt
// generator per edge.
AlgebraPtr problem_algebra(const DecoratedGraph& g, const Signature& sig);

// The source compiled to a form in the difference coordinates (z^i = w^i +
// w^N substituted, generators pulled back).
Form compile_source(const GraphIntegralProblem& p);

// Reflection of a source form across the hyperplane x_1 = 0 through the base
// vertex: q^i_1 -> -q^i_1 and dq^i_1 -> -dq^i_1 for i < N.
Form reflect_source(const GraphIntegralProblem& p, const Form& source);

// (dbar + d_deRham) of the compiled source.
Form source_exterior_derivative(const Form& source);

// Symbolic integrand W~((Gamma,n),Phi) in the coordinates (w, q, t~):
// pi^{-(d+d'/2)|E|} e^{-1/2 w.M(t)wbar - 1/4 q.M(t)q} prod_e u^n du dv ^ Phi.
Form build_integrand(const GraphIntegralProblem& p, const Form& source);

// The same integrand evaluated at a Schwinger node, as polynomial
// coefficients under the shared Gaussian (hot path).
CompiledForm integrand_at_node(const GraphIntegralProblem& p, const CompiledForm& source,
                               const std::vector<double>& ttilde);

// The Gaussian covariance at a node: graph Laplacian M(t~^2)/2 on the
// difference coordinates plus the source widths on all vertices.
GaussianSpec node_gaussian(const GraphIntegralProblem& p, const std::vector<double>& ttilde,
                           bool include_base = true);

// Integrate out every position: numeric dt~-form coefficients at the node
// (mask bit e <-> dt~_e).
std::map<std::uint64_t, Complex> reduce_positions(const GraphIntegralProblem& p,
                                                  const std::vector<double>& ttilde);

// Evaluator plumbing for the schwinger-space quadratures; `source` must stay
// alive while the evaluator is used.
DtFormEvaluator reduced_evaluator(const GraphIntegralProblem& p);
DtFormEvaluator reduced_evaluator(const GraphIntegralProblem& p, const Form& source);

// W_eps^L: quadrature of the reduced top component over [sqrt(eps), sqrt(L)].
IntegralResult w_eps_L(const GraphIntegralProblem& p);

// W_0^L: boundary-inclusive quadrature over [0, sqrt(L)].
IntegralResult w_0_L(const GraphIntegralProblem& p);
IntegralResult w_0_L(const GraphIntegralProblem& p, const Form& source);

// Anomaly functional O_(Gamma,n): integral over the deepest origin stratum.
IntegralResult anomaly_functional(const GraphIntegralProblem& p);
IntegralResult anomaly_functional(const GraphIntegralProblem& p, const Form& source);

// Numeric-zero rule: |value| <= max(3 error, 1e-6 scale) where scale is the
// same integral with the absolute-value integrand.
bool numeric_zero(const IntegralResult& r, double scale);

// Scale reference for w integrals / anomalies (absolute-value integrand).
double w_0_L_scale(const GraphIntegralProblem& p);
double anomaly_scale(const GraphIntegralProblem& p);

struct BoundaryIdentityReport {
    Complex lhs;        // (-1)^{(d+d')|E| + d'|V|} W_0^L((G,n), (dbar+d)Phi)
    double lhs_error;
    Complex rhs;        // (-1)^{|E|} sum of signed stratum integrals
    double rhs_error;
    std::vector<std::pair<std::string, Complex>> strata; // per-stratum values
    double scale;       // absolute-integrand reference
};

BoundaryIdentityReport boundary_identity_check(const GraphIntegralProblem& p);

struct KontsevichReport {
    double max_component = 0.0; // largest |coefficient| over grid and masks
    double max_error = 0.0;
    double scale = 0.0;         // absolute-value reference
    long grid_nodes = 0;
    bool pass = false;
};

// d = 0, d' = 2, h_1 >= 1: the position integral of the integrand (source 1,
// base vertex not integrated) is the zero form on a 5^|E| grid.
KontsevichReport kontsevich_check(const DecoratedGraph& g, double L,
                                  const QuadratureSpec& quad);

struct RankVanishingReport {
    bool vanishes = false;
    std::optional<EdgeSet> witness; // connected subgraph violating the bound
    double max_reduced = 0.0;       // max |reduced coefficient| over samples
};

// True iff some connected subgraph G' has (d+d')|V'| < (d+d'-1)|E'| + d+d'+1;
// cross-validated by sampling the reduced integrand.
RankVanishingReport rank_vanishing_check(const GraphIntegralProblem& p, int samples = 20);

struct ExponentBoundReport {
    double c_gamma = 0.0;
    double min_eigenvalue = 1e300;
    int violations = 0;
    int samples = 0;
};

// min eig of M(t~)^-1 M(t~^2) M(t~)^-1 >= 1/c_Gamma with
// c_Gamma = |E| max |(rho rho^T)^{ee'}| (reduced incidence matrix).
ExponentBoundReport exponent_bound_check(const DecoratedGraph& g, int samples = 1000,
                                         std::uint64_t seed = 1);

// Anomaly jet: O_{(G,n)}(z^alpha Phi_0) for holomorphic monomials up to the
// order bound; used for the subgraph reduction factorization.
struct SubgraphReductionReport {
    Complex direct;        // stratum integral of the full problem
    double direct_error;
    Complex factored;      // anomaly jet of G' applied to the contracted graph
    double factored_error;
    bool subgraph_laman;
    double scale;
};

SubgraphReductionReport subgraph_boundary_reduction(const GraphIntegralProblem& p,
                                                    const EdgeSet& subgraph_edges);

} // namespace tholo
