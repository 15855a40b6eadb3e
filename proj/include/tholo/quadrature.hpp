#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace tholo {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre on [-1, 1].
Rule1D gauss_legendre(int n);

// Gauss-Legendre mapped to [a, b].
Rule1D gauss_legendre(int n, double a, double b);

// Probabilists' Gauss-Hermite: integrates f against e^{-x^2/2} dx
// (weights sum to sqrt(2*pi)).
Rule1D gauss_hermite(int n);

// Visit every node of the tensor product of `axes` rules; f receives the node
// coordinates and the product weight. Axis 0 varies slowest, so the
// enumeration order is deterministic.
void tensor_for_each(const std::vector<Rule1D>& axes,
                     const std::function<void(const std::vector<double>&, double)>& f);

// Quadrature configuration shared by the CLI and the engine
// ({"nodes_per_axis", "mc_samples", "seed", "richardson_levels"}).
struct QuadratureSpec {
    int nodes_per_axis = 12;
    int mc_samples = 4096;
    std::uint64_t seed = 1;
    int richardson_levels = 6;
    int jobs = 1;
};

// Extrapolate f(h), f(h/2), f(h/4), ... to h -> 0 assuming a full Taylor
// expansion in h. Returns the accelerated limit and an error estimate from
// the difference of the last two table diagonals.
std::pair<double, double> richardson_limit(const std::vector<double>& values);

} // namespace tholo
