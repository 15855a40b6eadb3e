#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tholo/kernels.hpp"

using namespace tholo;

namespace {

const double PI = std::acos(-1.0);

const std::vector<Signature> ALL_SIGS{{1, 0}, {2, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 1}};

} // namespace

TEST_CASE("heat kernel coefficient values") {
    CHECK(heat_kernel_coefficient({1, 0}, 1.0, SpacetimePoint::zero({1, 0})).real() ==
          doctest::Approx(1.0 / (2.0 * PI)));
    CHECK(heat_kernel_coefficient({0, 1}, 1.0, SpacetimePoint::zero({0, 1})).real() ==
          doctest::Approx(1.0 / (2.0 * std::sqrt(PI))));

    SpacetimePoint p;
    p.z = {Complex(0.3, -0.2)};
    p.x = {};
    const double t = 0.7;
    const double expect =
        std::exp(-2.0 * std::norm(p.z[0]) / (4.0 * t)) / (2.0 * PI * t);
    CHECK(heat_kernel_coefficient({1, 0}, t, p).real() == doctest::Approx(expect));

    CHECK_THROWS_AS(kernel_eval(heat_kernel_form({1, 0}), {1, 0}, 0.0, SpacetimePoint::zero({1, 0})),
                    std::invalid_argument);
}

TEST_CASE("heat kernel total mass is one") {
    for (const Signature& sig : ALL_SIGS)
        for (double t : {0.5, 1.0, 2.0})
            CHECK(heat_mass(sig, t) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("heat kernel semigroup") {
    for (const Signature& sig : {Signature{1, 0}, Signature{0, 1}, Signature{1, 1}}) {
        SpacetimePoint p = SpacetimePoint::zero(sig);
        if (sig.d > 0) p.z[0] = Complex(0.4, 0.1);
        if (sig.d_prime > 0) p.x[0] = -0.3;
        const double s = 0.6, t = 0.9;
        const double conv = heat_convolution(sig, s, t, p);
        const double direct = heat_kernel_coefficient(sig, s + t, p).real();
        CHECK(conv == doctest::Approx(direct).epsilon(1e-4));
    }
}

TEST_CASE("schwinger propagator: uv product form matches the definition") {
    for (const Signature& sig : ALL_SIGS) {
        Form diff = schwinger_propagator(sig) - schwinger_propagator_uv(sig);
        CHECK(form_is_zero(diff, 1e-10, 30, 11));
    }
}

TEST_CASE("propagator closedness and euler contraction") {
    for (const Signature& sig : ALL_SIGS) {
        CAPTURE(sig.d);
        CAPTURE(sig.d_prime);
        CHECK(form_is_zero(propagator_closedness_residual(sig), 1e-10, 100, 17));
        CHECK(form_is_zero(euler_contraction_residual(sig), 1e-10, 100, 19));
    }
}

TEST_CASE("bochner-martinelli values") {
    // (1,0): scalar coefficient 1/(pi z)
    SpacetimePoint p;
    p.z = {Complex(0.8, -0.5)};
    NumericForm bm = bochner_martinelli({1, 0}, p);
    REQUIRE(bm.coeff.size() == 1);
    const Complex expect = 1.0 / (PI * p.z[0]);
    CHECK(std::abs(bm.coeff.begin()->second - expect) < 1e-12);

    CHECK_THROWS_AS(bochner_martinelli({1, 0}, SpacetimePoint::zero({1, 0})),
                    std::invalid_argument);

    // displayed normalization doubles only the x components
    SpacetimePoint pm;
    pm.z = {Complex(0.4, 0.3)};
    pm.x = {0.6};
    NumericForm work = bochner_martinelli({1, 1}, pm);
    NumericForm disp = bochner_martinelli({1, 1}, pm, true);
    auto alg11 = kernel_algebra({1, 1});
    const std::uint64_t dx_mask = alg11->mask_of(Gen{GenKind::Dx, 0, 1});
    const std::uint64_t dzb_mask = alg11->mask_of(Gen{GenKind::Dzbar, 0, 1});
    CHECK(std::abs(disp.coeff[dx_mask] - work.coeff[dx_mask]) < 1e-14);
    CHECK(std::abs(disp.coeff[dzb_mask] - 2.0 * work.coeff[dzb_mask]) < 1e-14);

    // homogeneity of degree 1 - 2d - d' under p -> lambda p
    for (const Signature& sig : {Signature{1, 0}, Signature{1, 1}, Signature{2, 1}}) {
        SpacetimePoint q = SpacetimePoint::zero(sig);
        for (int k = 0; k < sig.d; ++k) q.z[std::size_t(k)] = Complex(0.5 + 0.1 * k, -0.2);
        for (int k = 0; k < sig.d_prime; ++k) q.x[std::size_t(k)] = 0.7 - 0.3 * k;
        const double lambda = 1.7;
        SpacetimePoint ql = q;
        for (auto& z : ql.z) z *= lambda;
        for (auto& x : ql.x) x *= lambda;
        NumericForm b1 = bochner_martinelli(sig, q);
        NumericForm b2 = bochner_martinelli(sig, ql);
        const double scale = std::pow(lambda, 1.0 - 2.0 * sig.d - sig.d_prime);
        for (const auto& [mask, c] : b1.coeff) {
            REQUIRE(b2.coeff.count(mask) == 1);
            CHECK(std::abs(b2.coeff[mask] - c * scale) < 1e-10 * std::abs(c));
        }
    }
}

TEST_CASE("regularized propagator converges to bochner-martinelli") {
    // (1,0) at z = 1: limit is 1/pi
    SpacetimePoint p;
    p.z = {Complex(1.0, 0.0)};
    NumericForm reg = regularized_propagator({1, 0}, 1e-8, 1e4, p);
    REQUIRE(reg.coeff.size() == 1);
    // the finite-L tail is 1/(2 pi L); quadrature itself is far below it
    CHECK(std::abs(reg.coeff.begin()->second - Complex(1.0 / PI)) < 2e-5);
    NumericForm reg_far = regularized_propagator({1, 0}, 1e-8, 1e6, p);
    CHECK(std::abs(reg_far.coeff.begin()->second - Complex(1.0 / PI)) < 1e-6);

    // eps == L -> zero form
    CHECK(regularized_propagator({1, 0}, 1.0, 1.0, p).coeff.empty());
    CHECK_THROWS_AS(regularized_propagator({1, 0}, 2.0, 1.0, p), std::invalid_argument);

    // monotone approach as eps halves
    NumericForm bm = bochner_martinelli({1, 0}, p);
    double prev = 1e9;
    for (double eps : {1e-2, 0.25e-2, 0.0625e-2}) {
        NumericForm reg_eps = regularized_propagator({1, 0}, eps, 1e4, p);
        const double err = std::abs(reg_eps.coeff.begin()->second - bm.coeff.begin()->second);
        CHECK(err < prev + 1e-14);
        prev = err;
    }

    // twenty sample points, (1,0) and (1,1), relative 1e-5; radii stay
    // below 0.45 so the finite-L tail |p|^2/(2L) sits inside the tolerance
    for (const Signature& sig : {Signature{1, 0}, Signature{1, 1}}) {
        for (int s = 0; s < 20; ++s) {
            SpacetimePoint q = SpacetimePoint::zero(sig);
            const double ang = 0.3 + 0.29 * s;
            const double rad = 0.15 + 0.012 * s;
            q.z[0] = Complex(std::cos(ang), std::sin(ang)) * rad;
            if (sig.d_prime > 0) {
                q.z[0] *= 0.8;
                q.x[0] = rad * 0.5;
            }
            NumericForm reg2 = regularized_propagator(sig, 1e-8, 1e4, q);
            NumericForm bm2 = bochner_martinelli(sig, q);
            for (const auto& [mask, c] : bm2.coeff) {
                REQUIRE(reg2.coeff.count(mask) == 1);
                CHECK(std::abs(reg2.coeff[mask] - c) <= 1e-5 * std::abs(c));
            }
        }
    }
}

TEST_CASE("green pairing ratios") {
    // the working kernel pairs to exactly delta for every signature tested
    CHECK(std::abs(green_pairing_ratio({1, 0}) - Complex(1.0)) < 1e-3);
    CHECK(std::abs(green_pairing_ratio({1, 1}) - Complex(1.0)) < 1e-3);
    CHECK(std::abs(green_pairing_ratio({0, 1}) - Complex(1.0)) < 1e-3);
    // the weight-1 display overcounts the x-direction: measured 2 at (0,1)
    CHECK(std::abs(green_pairing_ratio({0, 1}, 1.0, 96, /*displayed=*/true) - Complex(2.0)) <
          1e-3);
}
