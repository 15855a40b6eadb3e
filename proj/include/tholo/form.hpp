#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "tholo/expr.hpp"

namespace tholo {

// Odd generators. The global ordering (kind, a, b) puts position generators
// before Schwinger and chart generators so signs are reproducible.
enum class GenKind : std::uint8_t { Dz, Dzbar, Dx, Dt, Drho, Dxi };

struct Gen {
    GenKind kind;
    int a = 0;
    int b = 0;
    auto operator<=>(const Gen&) const = default;
};

std::string gen_name(const Gen& g);

// The generator <-> variable correspondence used by exterior derivatives and
// pullbacks (dz_i <-> z_i and so on).
Gen gen_of_var(const Var& v);
Var var_of_gen(const Gen& g);

// Ambient ordered generator list; at most 64 generators.
class Algebra {
public:
    static std::shared_ptr<const Algebra> make(std::vector<Gen> gens);

    const std::vector<Gen>& gens() const { return gens_; }
    std::size_t size() const { return gens_.size(); }
    int index_of(const Gen& g) const; // -1 when absent
    std::uint64_t mask_of(const Gen& g) const;
    std::uint64_t mask_of(const std::vector<Gen>& gs) const;

private:
    std::vector<Gen> gens_;
};

using AlgebraPtr = std::shared_ptr<const Algebra>;

// Sign of wedging the (sorted) generator sets a and b: (-1)^inversions.
int wedge_sign(std::uint64_t a, std::uint64_t b);

// Numeric snapshot of a form: complex coefficient per generator subset.
struct NumericForm {
    AlgebraPtr alg;
    std::map<std::uint64_t, Complex> coeff;

    NumericForm() = default;
    explicit NumericForm(AlgebraPtr a) : alg(std::move(a)) {}
    void add(std::uint64_t mask, Complex c);
    friend NumericForm wedge(const NumericForm& x, const NumericForm& y);
    friend NumericForm operator+(const NumericForm& x, const NumericForm& y);
    NumericForm operator*(Complex s) const;
};

// Element of the exterior algebra with Expr coefficients: a sparse map from
// canonically sorted generator subsets to coefficients.
class Form {
public:
    Form() = default;
    explicit Form(AlgebraPtr alg) : alg_(std::move(alg)) {}

    static Form scalar(AlgebraPtr alg, Expr c);
    static Form generator(AlgebraPtr alg, const Gen& g); // the 1-form "dg"
    static Form one_form(AlgebraPtr alg, const std::vector<std::pair<Gen, Expr>>& parts);

    const AlgebraPtr& algebra() const { return alg_; }
    const std::map<std::uint64_t, Expr>& terms() const { return terms_; }
    bool structurally_zero() const { return terms_.empty(); }

    void add_term(std::uint64_t mask, Expr c);

    friend Form operator+(const Form& a, const Form& b);
    friend Form operator-(const Form& a, const Form& b);
    friend Form wedge(const Form& a, const Form& b);
    Form operator*(const Expr& s) const; // scalar multiple

private:
    AlgebraPtr alg_;
    std::map<std::uint64_t, Expr> terms_;
};

// d restricted to the given variable classes; e.g. {PosZbar} is the Dolbeault
// operator, {PosX} the de Rham operator on the topological factor,
// {Schwinger} the Schwinger-space differential. Absent classes give zero.
Form exterior_derivative(const Form& a, const std::vector<VarKind>& classes);

// Contraction with the vector field sum_g field[g] d/d(g).
Form contract(const Form& a, const std::map<Gen, Expr>& field);

// Pullback: variables substituted via `vars`, generators mapped to d(image)
// computed from `vars` (generators without a mapped variable stay fixed).
// `extra_gens` replaces generators directly (used for restrictions like
// d rho -> 0). Result lives on `target`.
Form pullback(const Form& a, const std::map<Var, Expr>& vars,
              const std::map<Gen, Form>& extra_gens, AlgebraPtr target);

// Coefficient of exactly the given ordered generator set, sign-adjusted.
Expr top_component(const Form& a, const std::vector<Gen>& gens);

NumericForm evaluate(const Form& a, const std::function<Complex(const Var&)>& point);

bool form_is_zero(const Form& a, double tol = 1e-9, int trials = 20, std::uint64_t seed = 42);

std::string to_string(const Form& a);

} // namespace tholo
