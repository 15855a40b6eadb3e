#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace tholo {

using Complex = std::complex<double>;

// Variable kinds: position coordinates (holomorphic w/z, anti-holomorphic
// w-bar/z-bar, real x/q), Schwinger parameters (the engine works in the
// square-root coordinate throughout), and chart coordinates (rho, xi).
enum class VarKind : std::uint8_t { PosZ, PosZbar, PosX, Schwinger, ChartRho, ChartXi };

struct Var {
    VarKind kind;
    int a = 0; // vertex / edge / level index
    int b = 0; // coordinate / level index

    auto operator<=>(const Var&) const = default;
};

std::string var_name(const Var& v);

// Immutable expression tree over {constant, variable, sum, product, integer
// power, exp, reciprocal-of-positive}. Construction simplifies: sums and
// products flatten, constants fold, identical terms collect. Exact partial
// derivatives exist for every node.
class Expr {
public:
    enum class Op : std::uint8_t { Const, Variable, Sum, Prod, IPow, Exp, Inv };

    struct Node {
        Op op;
        Complex cval{};
        Var var{};
        int power = 0;
        std::vector<Expr> kids;
        std::size_t hash = 0;
    };

    Expr(); // zero
    static Expr constant(Complex c);
    static Expr constant(double c) { return constant(Complex(c, 0.0)); }
    static Expr variable(Var v);
    static Expr sum(std::vector<Expr> terms);
    static Expr prod(std::vector<Expr> factors);
    static Expr ipow(Expr base, int n);
    static Expr exp_of(Expr arg);
    static Expr inv_of(Expr arg); // reciprocal of a positive quantity

    Op op() const { return node_->op; }
    Complex const_value() const { return node_->cval; }
    const Var& var() const { return node_->var; }
    int power() const { return node_->power; }
    const std::vector<Expr>& kids() const { return node_->kids; }
    std::size_t hash() const { return node_->hash; }

    bool is_zero() const { return node_->op == Op::Const && node_->cval == Complex(0.0); }
    bool is_const() const { return node_->op == Op::Const; }

    friend Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b) { return prod({a, b}); }
    Expr operator-() const;

    // Total order used for canonical form; deterministic across runs.
    static int compare(const Expr& a, const Expr& b);

    const Node* raw() const { return node_.get(); }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
    friend struct ExprBuilder;
};

// Exact partial derivative.
Expr derivative(const Expr& e, const Var& v);

// Substitute variables (missing variables stay themselves).
Expr substitute(const Expr& e, const std::map<Var, Expr>& sub);

// Evaluate at a point; the lookup must cover every variable present.
Complex evaluate(const Expr& e, const std::function<Complex(const Var&)>& point);

void collect_vars(const Expr& e, std::set<Var>& out);

std::string to_string(const Expr& e);

// Zero test: exact when the tree collapsed, otherwise evaluation at random
// points (complex for positions, positive real for Schwinger/chart
// variables) with the given tolerance.
bool expr_is_zero(const Expr& e, double tol = 1e-9, int trials = 20, std::uint64_t seed = 42);

// ----------------------------------------------------------------------
// Polynomial-times-Gaussian decomposition, the bridge to Wick integration.

using Monomial = std::map<Var, int>; // exponents >= 1

struct Poly {
    std::map<Monomial, Complex> terms;
};

// exp argument: sum over {v, w} (v <= w) of coeff * v * w.
using QuadForm = std::map<std::pair<Var, Var>, Complex>;

struct PolyGauss {
    Poly poly;
    QuadForm quad;
};

// Decompose an expression into P(vars) * exp(Q(vars)). Throws
// std::invalid_argument if the expression is not of this shape (negative
// powers of non-constant bases, Inv of non-constants, exp of non-quadratics,
// sums mixing different Gaussians).
PolyGauss poly_gauss_decompose(const Expr& e);

} // namespace tholo
