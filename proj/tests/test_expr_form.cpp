#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "tholo/expr.hpp"
#include "tholo/form.hpp"

using namespace tholo;

namespace {

const Var Z{VarKind::PosZ, 1, 1};
const Var ZB{VarKind::PosZbar, 1, 1};
const Var X{VarKind::PosX, 1, 1};
const Var T{VarKind::Schwinger, 1, 0};
const Var RHO{VarKind::ChartRho, 1, 0};
const Var XI{VarKind::ChartXi, 1, 1};

Expr ev(Var v) { return Expr::variable(v); }

} // namespace

TEST_CASE("expr simplification") {
    Expr a = ev(X) + ev(X);
    Expr b = Expr::constant(2.0) * ev(X);
    CHECK(Expr::compare(a, b) == 0);

    CHECK((ev(X) - ev(X)).is_zero());
    CHECK((Expr::constant(0.0) * ev(Z)).is_zero());
    CHECK(Expr::ipow(ev(X), 0).is_const());

    // x * x^2 = x^3
    Expr c = ev(X) * Expr::ipow(ev(X), 2);
    CHECK(Expr::compare(c, Expr::ipow(ev(X), 3)) == 0);

    // exp(a)exp(b) merges
    Expr m = Expr::exp_of(ev(X)) * Expr::exp_of(ev(Z));
    CHECK(m.op() == Expr::Op::Exp);

    // (x + 1) - 1 - x = 0 after flattening
    Expr d = (ev(X) + Expr::constant(1.0)) - Expr::constant(1.0) - ev(X);
    CHECK(d.is_zero());
}

TEST_CASE("expr derivatives and evaluation") {
    // d/dx (x^3) = 3x^2
    Expr e = Expr::ipow(ev(X), 3);
    Expr de = derivative(e, X);
    const Complex val = evaluate(de, [](const Var&) { return Complex(2.0); });
    CHECK(val.real() == doctest::Approx(12.0));

    // d/dz exp(-z zbar) = -zbar exp(-z zbar)
    Expr g = Expr::exp_of(-(ev(Z) * ev(ZB)));
    Expr dg = derivative(g, Z);
    Expr expect = -(ev(ZB) * g);
    CHECK(expr_is_zero(dg - expect));

    // d/dt 1/t = -1/t^2
    Expr inv = Expr::inv_of(ev(T));
    CHECK(expr_is_zero(derivative(inv, T) + Expr::ipow(ev(T), -2)));

    // substitution: (t -> rho*xi) on t^2
    Expr t2 = Expr::ipow(ev(T), 2);
    Expr sub = substitute(t2, {{T, ev(RHO) * ev(XI)}});
    const Complex sv = evaluate(sub, [](const Var& v) {
        return v.kind == VarKind::ChartRho ? Complex(2.0) : Complex(3.0);
    });
    CHECK(sv.real() == doctest::Approx(36.0));
}

TEST_CASE("poly gauss decomposition") {
    // x^2 exp(-x^2 - 2 x q) with q another real var
    Var Q{VarKind::PosX, 2, 1};
    Expr e = Expr::ipow(ev(X), 2) *
             Expr::exp_of(-(ev(X) * ev(X)) - Expr::constant(2.0) * ev(X) * ev(Q));
    PolyGauss pg = poly_gauss_decompose(e);
    REQUIRE(pg.poly.terms.size() == 1);
    CHECK(pg.poly.terms.begin()->second.real() == doctest::Approx(1.0));
    CHECK(pg.quad.at({X, X}).real() == doctest::Approx(-1.0));
    CHECK(pg.quad.at(std::minmax(X, Q)).real() == doctest::Approx(-2.0));

    CHECK_THROWS_AS(poly_gauss_decompose(Expr::inv_of(ev(X) + Expr::constant(1.0))),
                    std::invalid_argument);
    CHECK_THROWS_AS(poly_gauss_decompose(Expr::exp_of(Expr::ipow(ev(X), 3))),
                    std::invalid_argument);
}

TEST_CASE("wedge basics") {
    auto alg = Algebra::make({{GenKind::Dzbar, 1, 1}, {GenKind::Dzbar, 1, 2}});
    Gen g1{GenKind::Dzbar, 1, 1}, g2{GenKind::Dzbar, 1, 2};
    Form dz1 = Form::generator(alg, g1);
    Form dz2 = Form::generator(alg, g2);

    Form w12 = wedge(dz1, dz2);
    CHECK(Expr::compare(top_component(w12, {g1, g2}), Expr::constant(1.0)) == 0);

    Form w21 = wedge(dz2, dz1);
    CHECK(Expr::compare(top_component(w21, {g1, g2}), Expr::constant(-1.0)) == 0);

    CHECK(wedge(dz1, dz1).structurally_zero());

    // graded commutativity on 1-forms
    CHECK((w12 + w21).structurally_zero());
}

TEST_CASE("exterior derivative") {
    auto alg = Algebra::make({{GenKind::Dzbar, 1, 1}, {GenKind::Dx, 1, 1}, {GenKind::Dt, 1, 0}});
    // d_t of f(t) = f'(t) dt
    Expr f = Expr::ipow(ev(T), 3);
    Form f0 = Form::scalar(alg, f);
    Form df = exterior_derivative(f0, {VarKind::Schwinger});
    Expr coef = top_component(df, {{GenKind::Dt, 1, 0}});
    CHECK(expr_is_zero(coef - Expr::constant(3.0) * Expr::ipow(ev(T), 2)));

    // nilpotency d_t(d_t f) = 0 (symbolic)
    CHECK(exterior_derivative(df, {VarKind::Schwinger}).structurally_zero());

    // dbar exp(-z zbar) = -z exp(-z zbar) dzbar
    Form g0 = Form::scalar(alg, Expr::exp_of(-(ev(Z) * ev(ZB))));
    Form dg = exterior_derivative(g0, {VarKind::PosZbar});
    Expr c = top_component(dg, {{GenKind::Dzbar, 1, 1}});
    CHECK(expr_is_zero(c + ev(Z) * Expr::exp_of(-(ev(Z) * ev(ZB)))));

    // absent variable class -> zero form
    CHECK(exterior_derivative(g0, {VarKind::PosX}).structurally_zero());

    // d(dt * g) = -dt ^ dg and d^2 = 0 on a mixed form
    Form mixed = wedge(Form::generator(alg, {GenKind::Dt, 1, 0}),
                       Form::scalar(alg, ev(X) * ev(X) * ev(T)));
    Form dmixed = exterior_derivative(mixed, {VarKind::Schwinger, VarKind::PosX});
    CHECK(exterior_derivative(dmixed, {VarKind::Schwinger, VarKind::PosX}).structurally_zero());
}

TEST_CASE("contraction") {
    auto alg = Algebra::make({{GenKind::Dzbar, 1, 1}, {GenKind::Dt, 1, 0}});
    Gen dt{GenKind::Dt, 1, 0}, dzb{GenKind::Dzbar, 1, 1};

    // i_{d/dt} dt = 1
    Form f = Form::generator(alg, dt);
    Form c1 = contract(f, {{dt, Expr::constant(1.0)}});
    CHECK(Expr::compare(top_component(c1, {}), Expr::constant(1.0)) == 0);

    // i_{d/dt}(f dzbar) = 0
    Form g = Form::generator(alg, dzb) * ev(ZB);
    CHECK(contract(g, {{dt, Expr::constant(1.0)}}).structurally_zero());

    // i_{t d/dt}(dt ^ dzbar) = t dzbar   (dt after dzbar in canonical order)
    Form w = wedge(Form::generator(alg, dt), Form::generator(alg, dzb));
    Form c2 = contract(w, {{dt, ev(T)}});
    // dt ^ dzbar = -(dzbar ^ dt); contraction picks up the position sign
    Expr coef = top_component(c2, {dzb});
    CHECK(expr_is_zero(coef - ev(T)));

    // degree drops by one: no scalar part before contraction
    CHECK(w.terms().count(0) == 0);
}

TEST_CASE("pullback") {
    auto src = Algebra::make({{GenKind::Dt, 1, 0}});
    auto tgt = Algebra::make({{GenKind::Drho, 1, 0}, {GenKind::Dxi, 1, 1}});
    Gen dt{GenKind::Dt, 1, 0}, drho{GenKind::Drho, 1, 0}, dxi{GenKind::Dxi, 1, 1};

    // t -> rho xi on f(t) dt gives f(rho xi)(xi drho + rho dxi)
    Form fdt = Form::generator(src, dt) * Expr::ipow(ev(T), 2);
    Form pulled = pullback(fdt, {{T, ev(RHO) * ev(XI)}}, {}, tgt);
    Expr crho = top_component(pulled, {drho});
    Expr cxi = top_component(pulled, {dxi});
    Expr rx2 = Expr::ipow(ev(RHO) * ev(XI), 2);
    CHECK(expr_is_zero(crho - rx2 * ev(XI)));
    CHECK(expr_is_zero(cxi - rx2 * ev(RHO)));

    // identity substitution is the identity
    Form same = pullback(fdt, {}, {}, src);
    CHECK((same - fdt).structurally_zero());

    // restriction rho = 0, drho = 0 kills xi drho + rho dxi
    Form dt_chart = pulled; // = f(rho xi)(xi drho + rho dxi)
    Form restricted = pullback(dt_chart, {{RHO, Expr()}}, {{drho, Form(tgt)}}, tgt);
    CHECK(restricted.structurally_zero());
}

TEST_CASE("top component sign and absence") {
    auto alg = Algebra::make({{GenKind::Dzbar, 1, 1}, {GenKind::Dzbar, 1, 2}});
    Gen g1{GenKind::Dzbar, 1, 1}, g2{GenKind::Dzbar, 1, 2};
    Form w = wedge(Form::generator(alg, g2), Form::generator(alg, g1)) * ev(ZB);
    CHECK(expr_is_zero(top_component(w, {g1, g2}) + ev(ZB)));
    CHECK(expr_is_zero(top_component(w, {g2, g1}) - ev(ZB)));
    CHECK(top_component(Form::scalar(alg, ev(ZB)), {g1}).is_zero());
}

namespace {

Form random_form(const AlgebraPtr& alg, std::mt19937_64& rng, int max_terms) {
    std::uniform_int_distribution<int> nterms(1, max_terms);
    std::uniform_int_distribution<std::uint64_t> maskdist(0, (1ull << alg->size()) - 1);
    std::uniform_int_distribution<int> cdist(-3, 3);
    std::uniform_int_distribution<int> pdist(0, 2);
    Form f(alg);
    const std::vector<Var> vars{ZB, X, T};
    const int n = nterms(rng);
    for (int i = 0; i < n; ++i) {
        Expr c = Expr::constant(double(cdist(rng)));
        for (const Var& v : vars) c = c * Expr::ipow(ev(v), pdist(rng));
        f.add_term(maskdist(rng), c);
    }
    return f;
}

} // namespace

TEST_CASE("associativity on random sparse forms") {
    std::vector<Gen> gens;
    for (int k = 1; k <= 4; ++k) gens.push_back({GenKind::Dzbar, k, 1});
    for (int k = 1; k <= 4; ++k) gens.push_back({GenKind::Dx, k, 1});
    for (int k = 1; k <= 4; ++k) gens.push_back({GenKind::Dt, k, 0});
    auto alg = Algebra::make(gens);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        Form a = random_form(alg, rng, 4);
        Form b = random_form(alg, rng, 4);
        Form c = random_form(alg, rng, 4);
        Form lhs = wedge(wedge(a, b), c);
        Form rhs = wedge(a, wedge(b, c));
        CHECK(form_is_zero(lhs - rhs, 1e-9, 4, trial));
    }
}

TEST_CASE("graded commutativity on homogeneous pieces") {
    auto alg = Algebra::make({{GenKind::Dzbar, 1, 1},
                              {GenKind::Dzbar, 2, 1},
                              {GenKind::Dx, 1, 1},
                              {GenKind::Dt, 1, 0}});
    // pick homogeneous forms of degree p and q
    Form a(alg);
    a.add_term(alg->mask_of({{GenKind::Dzbar, 1, 1}, {GenKind::Dx, 1, 1}}), ev(X));
    Form b(alg);
    b.add_term(alg->mask_of(std::vector<Gen>{{GenKind::Dt, 1, 0}}), ev(T));
    // deg 2 * deg 1: a^b = (-1)^{2*1} b^a
    Form diff = wedge(a, b) - wedge(b, a);
    CHECK(diff.structurally_zero());
}

TEST_CASE("pullback commutes with wedge and d") {
    auto src = Algebra::make({{GenKind::Dx, 1, 1}, {GenKind::Dt, 1, 0}});
    auto tgt = Algebra::make({{GenKind::Dx, 1, 1}, {GenKind::Drho, 1, 0}, {GenKind::Dxi, 1, 1}});
    std::map<Var, Expr> sub{{T, ev(RHO) * ev(XI)}};

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Form a = random_form(src, rng, 3);
        Form b = random_form(src, rng, 3);
        Form pw = pullback(wedge(a, b), sub, {}, tgt);
        Form wp = wedge(pullback(a, sub, {}, tgt), pullback(b, sub, {}, tgt));
        CHECK(form_is_zero(pw - wp, 1e-9, 4, 100 + trial));

        const std::vector<VarKind> all{VarKind::PosX, VarKind::Schwinger, VarKind::ChartRho,
                                       VarKind::ChartXi};
        Form pd = pullback(exterior_derivative(a, all), sub, {}, tgt);
        Form dp = exterior_derivative(pullback(a, sub, {}, tgt), all);
        CHECK(form_is_zero(pd - dp, 1e-9, 4, 200 + trial));
    }
}

TEST_CASE("cartan formula vs lie derivative finite differences") {
    auto alg = Algebra::make({{GenKind::Dx, 1, 1}, {GenKind::Dx, 2, 1}});
    Var X1{VarKind::PosX, 1, 1}, X2{VarKind::PosX, 2, 1};
    Gen dx1{GenKind::Dx, 1, 1}, dx2{GenKind::Dx, 2, 1};

    // omega = x1^2 x2 dx1 + x2^3 dx2 ; v = a x1 d/dx1 + b x2 d/dx2 (exact flow)
    Form omega(alg);
    omega.add_term(alg->mask_of(dx1), Expr::ipow(ev(X1), 2) * ev(X2));
    omega.add_term(alg->mask_of(dx2), Expr::ipow(ev(X2), 3));
    const double a = 0.7, b = -0.4;
    std::map<Gen, Expr> field{{dx1, Expr::constant(a) * ev(X1)},
                              {dx2, Expr::constant(b) * ev(X2)}};

    const std::vector<VarKind> cls{VarKind::PosX};
    Form cartan = exterior_derivative(contract(omega, field), cls) +
                  contract(exterior_derivative(omega, cls), field);

    // flow phi_eps: x1 -> e^{a eps} x1, x2 -> e^{b eps} x2
    auto flowed = [&](double eps) {
        std::map<Var, Expr> sub{
            {X1, Expr::constant(std::exp(a * eps)) * ev(X1)},
            {X2, Expr::constant(std::exp(b * eps)) * ev(X2)}};
        return pullback(omega, sub, {}, alg);
    };
    const double eps = 1e-5;
    Form lieff = flowed(eps) - flowed(-eps);

    auto pt = [](const Var& v) { return v.a == 1 ? Complex(0.8) : Complex(-1.1); };
    NumericForm lhs = evaluate(cartan, pt);
    NumericForm rhs = evaluate(lieff, pt);
    for (const auto& [mask, c] : lhs.coeff) {
        const Complex fd = rhs.coeff.count(mask) ? rhs.coeff[mask] / (2 * eps) : Complex(0.0);
        CHECK(std::abs(c - fd) < 1e-6);
    }
}
