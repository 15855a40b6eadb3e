#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "tholo/expr.hpp"
#include "tholo/form.hpp"
#include "tholo/graph.hpp"
#include "tholo/quadrature.hpp"

namespace tholo {

// Flag of edge subsets Gamma_1 = S_0 >= S_1 > S_2 > ... > S_m (strict below
// S_1). Edges are 0-based indices.
struct Flag {
    int edge_count = 0;
    std::vector<EdgeSet> levels; // S_1, ..., S_m

    Flag(int edge_count_, std::vector<EdgeSet> levels_);
    int depth() const { return int(levels.size()); }
    // deepest level containing e, 0 when e is outside S_1
    int level_of(int e) const;
};

// Corner chart coordinates: one rho per level, one xi per edge of S_1, plain
// t for edges outside S_1. Construction checks the normalization equations.
struct CornerChart {
    Flag flag;
    std::vector<double> rho;     // size depth(), >= 0
    std::map<int, double> xi;    // e in S_1 -> xi_e > 0
    std::map<int, double> t;     // e outside S_1 -> t_e > 0

    CornerChart(Flag flag_, std::vector<double> rho_, std::map<int, double> xi_,
                std::map<int, double> t_);

    bool on_boundary() const;
};

// Natural map to the interior; rejects boundary points (some rho = 0).
SchwingerPoint chart_to_interior(const CornerChart& chart);

// Inclusion of an interior point into the chart of the given flag; the round
// trip with chart_to_interior is the identity.
CornerChart interior_to_chart(const SchwingerPoint& t, const Flag& flag);

// The square map t_e -> t_e^2 extended to the chart closure (finite at
// rho = 0); on interior points it agrees with coordinatewise squaring.
CornerChart t_square(const CornerChart& chart);

// Smooth extensions of the graph matrices to the compactification: evaluate
// the cut/tree rational formulas in chart coordinates with the common
// rho-powers of numerator and denominator cancelled. i, j are 1-based.
double extended_m_inverse(const DecoratedGraph& g, const CornerChart& chart, int i, int j);
double extended_d_inverse(const DecoratedGraph& g, const CornerChart& chart, int e, int j);

// ----------------------------------------------------------------------
// Boundary strata of the compactified box [0, sqrt(L)]^m in t~ coordinates.

struct BoundaryStratum {
    enum class Kind { Origin, ScaleFace };
    Kind kind;
    EdgeSet edges; // Origin: the subgraph edge set; ScaleFace: {e}
    int sign;      // orientation relative to Stokes on the standard box
};

// One origin stratum per nonempty edge subset plus one scale face per edge.
// Signs are the analytic orientation table; the Stokes check validates them.
std::vector<BoundaryStratum> boundary_strata(const DecoratedGraph& g, double L);

int origin_stratum_sign(const EdgeSet& subgraph, int edge_count);
int scale_face_sign(int e);

// Positive-orthant hyperspherical patch: xi(theta) for theta in (0, pi/2)^{k-1}
// and the Jacobian d xi / d theta (k x (k-1)).
void hyperspherical(const std::vector<double>& theta, std::vector<double>& xi, Mat* jac);

// Numeric result of one integral.
struct IntegralResult {
    Complex value{0.0};
    double error = 0.0;
    long nodes = 0;
    std::uint64_t seed = 0;
    bool converged = true;
    double seconds = 0.0;
};

// Coefficients of a form on the t~ box: mask bit e <-> dt~_e.
using DtFormEvaluator =
    std::function<std::map<std::uint64_t, Complex>(const std::vector<double>&)>;

// Integral of the top component over [lo, hi]^m (tensor Gauss-Legendre, error
// from comparing against a coarser rule).
IntegralResult integrate_box_top(const DtFormEvaluator& eval, int m, double lo, double hi,
                                 const QuadratureSpec& quad);

// Integral of the degree-(m-1) components over one origin stratum: sphere
// coordinates on the collapsing edges, Richardson extrapolation in the radius,
// box quadrature on the remaining edges. `sign` is NOT applied.
IntegralResult integrate_origin_stratum(const DtFormEvaluator& eval, int m, const EdgeSet& edges,
                                        double L, const QuadratureSpec& quad);

// Integral over the face t~_e = sqrt(L). `sign` is NOT applied.
IntegralResult integrate_scale_face(const DtFormEvaluator& eval, int m, int e, double L,
                                    const QuadratureSpec& quad);

// Evaluator adapters for symbolic forms over Dt generators (edge e <->
// Gen{Dt, e, 0}, variable {Schwinger, e, 0}).
DtFormEvaluator dt_form_evaluator(const Form& f);

// Stokes residual |int_box d omega - sum_i sign_i int_i omega| for one test
// form; used to pin the sign table (the d omega integral is taken in polar
// coordinates so blow-up-sensitive forms are handled too; m <= 3).
double stokes_residual(const DecoratedGraph& g, const Form& omega, double L,
                       const QuadratureSpec& quad);

} // namespace tholo
