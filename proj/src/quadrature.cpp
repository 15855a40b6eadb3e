#include "tholo/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace tholo {

Rule1D gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton from the Chebyshev-like initial guess.
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = w;
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

Rule1D gauss_legendre(int n, double a, double b) {
    Rule1D r = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = mid + half * r.nodes[i];
        r.weights[i] *= half;
    }
    return r;
}

Rule1D gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1 required");
    // Physicists' rule (weight e^{-x^2}) by Newton on H_n, then rescaled to
    // the probabilists' convention.
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pi = std::acos(-1.0);
    const double pim4 = std::pow(pi, -0.25);
    double x = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0)
            x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            x -= 1.14 * std::pow(n, 0.426) / x;
        else if (i == 2)
            x = 1.86 * x - 0.86 * r.nodes[n - 1];
        else if (i == 3)
            x = 1.91 * x - 0.91 * r.nodes[n - 2];
        else
            x = 2.0 * x - r.nodes[n - i + 1];
        double dp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p0 = pim4, p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = x * std::sqrt(2.0 / (k + 1)) * p0 -
                                  std::sqrt(double(k) / (k + 1)) * p1;
                p1 = p0;
                p0 = p2;
            }
            dp = std::sqrt(2.0 * n) * p1;
            const double dx = p0 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = 2.0 / (dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = r.weights[n - 1 - i];
    }
    // e^{-x^2} -> e^{-u^2/2} via u = sqrt(2) x.
    const double s = std::sqrt(2.0);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] *= s;
        r.weights[i] *= s;
    }
    return r;
}

void tensor_for_each(const std::vector<Rule1D>& axes,
                     const std::function<void(const std::vector<double>&, double)>& f) {
    const std::size_t dim = axes.size();
    if (dim == 0) {
        std::vector<double> empty;
        f(empty, 1.0);
        return;
    }
    std::vector<std::size_t> idx(dim, 0);
    std::vector<double> pt(dim);
    while (true) {
        double w = 1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            pt[a] = axes[a].nodes[idx[a]];
            w *= axes[a].weights[idx[a]];
        }
        f(pt, w);
        std::size_t a = dim;
        while (a-- > 0) {
            if (++idx[a] < axes[a].nodes.size()) break;
            idx[a] = 0;
            if (a == 0) return;
        }
    }
}

std::pair<double, double> richardson_limit(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("richardson_limit: empty input");
    if (n == 1) return {values[0], 0.0};
    // T[k][j] eliminates the h^(j) term, step ratio 2.
    std::vector<std::vector<double>> t(n);
    t[0] = values;
    double prev = values.back();
    double best = values.back();
    double err = std::fabs(values[n - 1] - values[n - 2]);
    for (std::size_t j = 1; j < n; ++j) {
        const double fac = std::pow(2.0, double(j));
        t[j].resize(n - j);
        for (std::size_t k = 0; k < n - j; ++k)
            t[j][k] = (fac * t[j - 1][k + 1] - t[j - 1][k]) / (fac - 1.0);
        best = t[j].back();
        err = std::fabs(best - prev);
        prev = best;
    }
    return {best, err};
}

} // namespace tholo
