#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "tholo/wick.hpp"

using namespace tholo;

namespace {

const double SQRT_2PI = std::sqrt(2.0 * std::acos(-1.0));
const double PI = std::acos(-1.0);

Var wv(int i) { return {VarKind::PosZ, i, 1}; }
Var wbv(int i) { return {VarKind::PosZbar, i, 1}; }
Var qv(int i) { return {VarKind::PosX, i, 1}; }

Mat mat1(double a) {
    Mat m(1, 1);
    m(0, 0) = a;
    return m;
}

} // namespace

TEST_CASE("real moments: standard gaussian") {
    // normalized 1-d: prefactor cancels the (2 pi)^{1/2}
    GaussianSpec spec({}, {}, {qv(1)}, Mat(0, 0), mat1(1.0), Complex(1.0 / SQRT_2PI));
    CHECK(gaussian_moment(spec, {}).real() == doctest::Approx(1.0));
    CHECK(gaussian_moment(spec, {{qv(1), 2}}).real() == doctest::Approx(1.0));
    CHECK(gaussian_moment(spec, {{qv(1), 4}}).real() == doctest::Approx(3.0));
    CHECK(gaussian_moment(spec, {{qv(1), 6}}).real() == doctest::Approx(15.0));
    CHECK(gaussian_moment(spec, {{qv(1), 3}}) == Complex(0.0));

    CHECK(gaussian_moment_oracle(spec, {{qv(1), 4}}).real() == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("complex moments") {
    const double a = 2.5;
    GaussianSpec spec({wv(1)}, {wbv(1)}, {}, mat1(a), Mat(0, 0));
    // zero monomial -> normalization pi/a
    CHECK(gaussian_moment(spec, {}).real() == doctest::Approx(PI / a));
    // E[w wbar] = (1/a) * normalization
    CHECK(gaussian_moment(spec, {{wv(1), 1}, {wbv(1), 1}}).real() ==
          doctest::Approx(PI / (a * a)));
    // unbalanced -> 0
    CHECK(gaussian_moment(spec, {{wv(1), 1}}) == Complex(0.0));
    CHECK(gaussian_moment(spec, {{wv(1), 2}, {wbv(1), 1}}) == Complex(0.0));

    CHECK(gaussian_moment_oracle(spec, {{wv(1), 1}, {wbv(1), 1}}).real() ==
          doctest::Approx(PI / (a * a)).epsilon(1e-10));
}

TEST_CASE("correlated real moments both paths") {
    Mat b(2, 2);
    b(0, 0) = 2.0;
    b(0, 1) = b(1, 0) = 0.6;
    b(1, 1) = 1.5;
    GaussianSpec spec({}, {}, {qv(1), qv(2)}, Mat(0, 0), b);
    const Mat binv = spec.B_inv();
    const Complex m22 = gaussian_moment(spec, {{qv(1), 2}, {qv(2), 2}});
    const Complex expect =
        spec.normalization() * (binv(0, 0) * binv(1, 1) + 2.0 * binv(0, 1) * binv(0, 1));
    CHECK(m22.real() == doctest::Approx(expect.real()).epsilon(1e-12));
    const Complex oracle = gaussian_moment_oracle(spec, {{qv(1), 2}, {qv(2), 2}});
    CHECK(m22.real() == doctest::Approx(oracle.real()).epsilon(1e-10));
}

TEST_CASE("spec construction from quadratic form") {
    // exponent -2 w wbar - q^2  ->  A = [2], B = [2]
    QuadForm quad;
    quad[{wv(1), wbv(1)}] = Complex(-2.0);
    quad[{qv(1), qv(1)}] = Complex(-1.0);
    GaussianSpec spec = GaussianSpec::from_quad(quad, {wv(1)}, {wbv(1)}, {qv(1)});
    CHECK(spec.A()(0, 0) == doctest::Approx(2.0));
    CHECK(spec.B()(0, 0) == doctest::Approx(2.0));

    // non-positive-definite B rejected
    QuadForm bad;
    bad[{qv(1), qv(1)}] = Complex(1.0);
    CHECK_THROWS_AS(GaussianSpec::from_quad(bad, {}, {}, {qv(1)}), std::invalid_argument);

    // w-w term rejected
    QuadForm ww;
    ww[{wv(1), wv(2)}] = Complex(-1.0);
    CHECK_THROWS_AS(GaussianSpec::from_quad(ww, {wv(1), wv(2)}, {wbv(1), wbv(2)}, {}),
                    std::invalid_argument);
}

TEST_CASE("wick vs oracle on random specs") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    std::uniform_int_distribution<int> degree(0, 2);
    int done = 0;
    while (done < 200) {
        // random sizes with 2 n_c + n_r <= 6
        std::uniform_int_distribution<int> ncd(0, 2);
        const int nc = ncd(rng);
        std::uniform_int_distribution<int> nrd(nc == 0 ? 1 : 0, 4 - 2 * nc < 0 ? 0 : 4 - 2 * nc);
        const int nr = nrd(rng);
        const std::size_t snc = std::size_t(nc), snr = std::size_t(nr);
        Mat a(snc, snc), b(snr, snr);
        for (int i = 0; i < nc; ++i) {
            for (int j = 0; j < nc; ++j) a(std::size_t(i), std::size_t(j)) = uni(rng);
            a(std::size_t(i), std::size_t(i)) += 1.5;
        }
        for (int i = 0; i < nr; ++i)
            for (int j = i; j < nr; ++j) {
                const double v = uni(rng);
                b(std::size_t(i), std::size_t(j)) = v;
                b(std::size_t(j), std::size_t(i)) = v;
            }
        for (int i = 0; i < nr; ++i) b(std::size_t(i), std::size_t(i)) += 1.5;
        // symmetrize A (our engine always produces symmetric A)
        for (int i = 0; i < nc; ++i)
            for (int j = 0; j < i; ++j) {
                const double v = 0.5 * (a(std::size_t(i), std::size_t(j)) +
                                        a(std::size_t(j), std::size_t(i)));
                a(std::size_t(i), std::size_t(j)) = a(std::size_t(j), std::size_t(i)) = v;
            }
        std::vector<Var> ws, wbs, qs;
        for (int i = 1; i <= nc; ++i) ws.push_back(wv(i)), wbs.push_back(wbv(i));
        for (int i = 1; i <= nr; ++i) qs.push_back(qv(i));
        GaussianSpec spec(ws, wbs, qs, a, b);

        Monomial m;
        int total = 0;
        const int bal = nc > 0 ? degree(rng) : 0;
        for (int k = 0; k < bal; ++k) {
            std::uniform_int_distribution<int> pick(1, nc);
            m[wv(pick(rng))] += 1;
            m[wbv(pick(rng))] += 1;
            total += 2;
        }
        if (nr > 0)
            for (int k = 0; k < 2 * degree(rng) && total < 6; k += 2) {
                std::uniform_int_distribution<int> pick(1, nr);
                m[qv(pick(rng))] += 1;
                m[qv(pick(rng))] += 1;
                total += 2;
            }
        const Complex fast = gaussian_moment(spec, m);
        const Complex slow = gaussian_moment_oracle(spec, m);
        CHECK(std::abs(fast - slow) <= 1e-8 * std::max(1.0, std::abs(slow)));
        ++done;
    }
}

TEST_CASE("parity and balance selection rules") {
    Mat b(2, 2);
    b(0, 0) = 1.2;
    b(1, 1) = 0.8;
    b(0, 1) = b(1, 0) = 0.3;
    GaussianSpec spec({wv(1)}, {wbv(1)}, {qv(1), qv(2)}, mat1(2.0), b);
    CHECK(gaussian_moment(spec, {{qv(1), 1}, {qv(2), 2}}) == Complex(0.0));
    CHECK(gaussian_moment(spec, {{wv(1), 2}, {wbv(1), 1}, {qv(1), 2}}) == Complex(0.0));
    CHECK(gaussian_moment(spec, {{wv(1), 1}, {wbv(1), 1}, {qv(1), 1}, {qv(2), 1}}) !=
          Complex(0.0));
}

TEST_CASE("det scaling of moments") {
    // scaling A by lambda scales the (k,k) moment by lambda^{-k-n_c}
    Mat a(2, 2);
    a(0, 0) = 1.7;
    a(1, 1) = 2.1;
    a(0, 1) = a(1, 0) = -0.4;
    const double lambda = 1.9;
    Mat al = a;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) al(i, j) *= lambda;
    GaussianSpec s1({wv(1), wv(2)}, {wbv(1), wbv(2)}, {}, a, Mat(0, 0));
    GaussianSpec s2({wv(1), wv(2)}, {wbv(1), wbv(2)}, {}, al, Mat(0, 0));
    Monomial m{{wv(1), 1}, {wbv(2), 1}};
    const Complex m1 = gaussian_moment(s1, m);
    const Complex m2 = gaussian_moment(s2, m);
    CHECK(std::abs(m2 - m1 * std::pow(lambda, -1.0 - 2.0)) <= 1e-12 * std::abs(m1));
}

TEST_CASE("integrate positions over a simple gaussian form") {
    // algebra: dw, dwbar for one variable; int e^{-a w wbar} dw^dwbar = -2i pi/a
    auto alg = Algebra::make({{GenKind::Dz, 1, 1}, {GenKind::Dzbar, 1, 1}, {GenKind::Dt, 1, 0}});
    const double a = 1.3;
    Expr gauss = Expr::exp_of(Expr::constant(-a) * Expr::variable(wv(1)) * Expr::variable(wbv(1)));
    Form f(alg);
    f.add_term(alg->mask_of({{GenKind::Dz, 1, 1}, {GenKind::Dzbar, 1, 1}}), gauss);
    // term that misses position top degree dies
    f.add_term(alg->mask_of(std::vector<Gen>{{GenKind::Dt, 1, 0}}), gauss);

    GaussianSpec spec = GaussianSpec::from_quad(QuadForm{{{wv(1), wbv(1)}, Complex(-a)}},
                                                {wv(1)}, {wbv(1)}, {});
    NumericForm out = integrate_positions(f, spec);
    REQUIRE(out.coeff.size() == 1);
    const Complex val = out.coeff.begin()->second;
    CHECK(out.coeff.begin()->first == 0); // scalar part
    CHECK(val.real() == doctest::Approx(0.0));
    CHECK(val.imag() == doctest::Approx(-2.0 * PI / a));

    // mismatched covariance is rejected
    GaussianSpec wrong = GaussianSpec::from_quad(QuadForm{{{wv(1), wbv(1)}, Complex(-2.0 * a)}},
                                                 {wv(1)}, {wbv(1)}, {});
    CHECK_THROWS_AS(integrate_positions(f, wrong), std::invalid_argument);
}

TEST_CASE("integrate positions keeps schwinger parts with signs") {
    // f = e^{-q^2} (dq ^ dt) : position top = {dq}; residual dt with the
    // merge sign wedge_sign({dq},{dt}) = +1
    auto alg = Algebra::make({{GenKind::Dx, 1, 1}, {GenKind::Dt, 1, 0}});
    Expr gauss = Expr::exp_of(-(Expr::variable(qv(1)) * Expr::variable(qv(1))));
    Form dq = Form::generator(alg, {GenKind::Dx, 1, 1});
    Form dt = Form::generator(alg, {GenKind::Dt, 1, 0});
    Form f = wedge(dq, dt) * gauss;
    GaussianSpec spec = GaussianSpec::from_quad(QuadForm{{{qv(1), qv(1)}, Complex(-1.0)}}, {},
                                                {}, {qv(1)});
    NumericForm out = integrate_positions(f, spec);
    REQUIRE(out.coeff.size() == 1);
    CHECK(out.coeff.begin()->second.real() == doctest::Approx(std::sqrt(PI)));

    // reversed wedge flips the sign
    Form g = wedge(dt, dq) * gauss;
    NumericForm out2 = integrate_positions(g, spec);
    CHECK(out2.coeff.begin()->second.real() == doctest::Approx(-std::sqrt(PI)));
}
