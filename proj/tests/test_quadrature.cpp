#include <doctest.h>

#include <cmath>

#include "tholo/quadrature.hpp"

using namespace tholo;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    Rule1D r = gauss_legendre(8);
    double sum = 0, x7 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        sum += r.weights[i];
        x7 += r.weights[i] * std::pow(r.nodes[i], 14);
    }
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(x7 == doctest::Approx(2.0 / 15.0).epsilon(1e-12)); // int x^14 over [-1,1]

    Rule1D ab = gauss_legendre(16, 0.0, 2.0);
    double ig = 0;
    for (std::size_t i = 0; i < ab.nodes.size(); ++i)
        ig += ab.weights[i] * std::exp(-ab.nodes[i]);
    CHECK(ig == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("gauss-hermite moments") {
    Rule1D r = gauss_hermite(32);
    const double s2pi = std::sqrt(2.0 * std::acos(-1.0));
    double m0 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        m0 += r.weights[i];
        m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
        m4 += r.weights[i] * std::pow(r.nodes[i], 4);
    }
    CHECK(m0 == doctest::Approx(s2pi).epsilon(1e-12));
    CHECK(m2 / m0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 / m0 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("tensor product enumeration") {
    std::vector<Rule1D> axes{gauss_legendre(5, 0, 1), gauss_legendre(5, 0, 1)};
    double vol = 0, xy = 0;
    tensor_for_each(axes, [&](const std::vector<double>& p, double w) {
        vol += w;
        xy += w * p[0] * p[1];
    });
    CHECK(vol == doctest::Approx(1.0));
    CHECK(xy == doctest::Approx(0.25));
}

TEST_CASE("richardson extrapolation") {
    // f(h) = 1 + h + h^2: values at h = 1, 1/2, 1/4, 1/8
    std::vector<double> v;
    for (int k = 0; k < 5; ++k) {
        double h = std::pow(0.5, k);
        v.push_back(1.0 + h + h * h);
    }
    auto [lim, err] = richardson_limit(v);
    CHECK(lim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(err < 1e-10);
}
