#include "tholo/kernels.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "tholo/quadrature.hpp"
#include "tholo/wick.hpp"

namespace tholo {

namespace {

double pi() { return std::acos(-1.0); }

} // namespace

SpacetimePoint SpacetimePoint::zero(const Signature& sig) {
    SpacetimePoint p;
    p.z.assign(std::size_t(sig.d), Complex(0.0));
    p.x.assign(std::size_t(sig.d_prime), 0.0);
    return p;
}

bool SpacetimePoint::is_origin() const {
    for (const Complex& zi : z)
        if (zi != Complex(0.0)) return false;
    for (double xi : x)
        if (xi != 0.0) return false;
    return true;
}

Var kernel_tau() { return {VarKind::Schwinger, 0, 0}; }
Var kernel_z(int k) { return {VarKind::PosZ, 0, k}; }
Var kernel_zbar(int k) { return {VarKind::PosZbar, 0, k}; }
Var kernel_x(int k) { return {VarKind::PosX, 0, k}; }

AlgebraPtr kernel_algebra(const Signature& sig) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, AlgebraPtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{sig.d, sig.d_prime}];
    if (!slot) {
        std::vector<Gen> gens;
        for (int k = 1; k <= sig.d; ++k) gens.push_back({GenKind::Dz, 0, k});
        for (int k = 1; k <= sig.d; ++k) gens.push_back({GenKind::Dzbar, 0, k});
        for (int k = 1; k <= sig.d_prime; ++k) gens.push_back({GenKind::Dx, 0, k});
        gens.push_back({GenKind::Dt, 0, 0});
        slot = Algebra::make(std::move(gens));
    }
    return slot;
}

namespace {

Expr tau_expr() { return Expr::variable(kernel_tau()); }

// -(2 sum z zbar + sum x^2) / (4 tau^2)
Expr heat_exponent(const Signature& sig) {
    std::vector<Expr> terms;
    for (int k = 1; k <= sig.d; ++k)
        terms.push_back(Expr::constant(-0.5) * Expr::variable(kernel_z(k)) *
                        Expr::variable(kernel_zbar(k)) * Expr::ipow(tau_expr(), -2));
    for (int k = 1; k <= sig.d_prime; ++k)
        terms.push_back(Expr::constant(-0.25) * Expr::ipow(Expr::variable(kernel_x(k)), 2) *
                        Expr::ipow(tau_expr(), -2));
    return Expr::sum(std::move(terms));
}

std::vector<Gen> space_top_gens(const Signature& sig) {
    std::vector<Gen> gens;
    for (int k = 1; k <= sig.d; ++k) gens.push_back({GenKind::Dzbar, 0, k});
    for (int k = 1; k <= sig.d_prime; ++k) gens.push_back({GenKind::Dx, 0, k});
    return gens;
}

Form coefficient_derivative(const Form& f, const Var& v) {
    Form r(f.algebra());
    for (const auto& [mask, c] : f.terms()) r.add_term(mask, derivative(c, v));
    return r;
}

} // namespace

Form heat_kernel_form(const Signature& sig) {
    auto alg = kernel_algebra(sig);
    const double norm =
        1.0 / (std::pow(2.0, sig.d + sig.d_prime) * std::pow(pi(), sig.d + 0.5 * sig.d_prime));
    Expr coeff = Expr::constant(norm) * Expr::ipow(tau_expr(), -(2 * sig.d + sig.d_prime)) *
                 Expr::exp_of(heat_exponent(sig));
    Form f(alg);
    f.add_term(alg->mask_of(space_top_gens(sig)), coeff);
    return f;
}

Form dbar_star(const Form& f, const Signature& sig) {
    Form acc(f.algebra());
    for (int k = 1; k <= sig.d; ++k) {
        Form c = contract(f, {{Gen{GenKind::Dzbar, 0, k}, Expr::constant(1.0)}});
        acc = acc + coefficient_derivative(c, kernel_z(k)) * Expr::constant(-2.0);
    }
    return acc;
}

Form d_star(const Form& f, const Signature& sig) {
    Form acc(f.algebra());
    for (int k = 1; k <= sig.d_prime; ++k) {
        Form c = contract(f, {{Gen{GenKind::Dx, 0, k}, Expr::constant(1.0)}});
        acc = acc + coefficient_derivative(c, kernel_x(k)) * Expr::constant(-1.0);
    }
    return acc;
}

Form schwinger_propagator(const Signature& sig) {
    Form h = heat_kernel_form(sig);
    Form g = dbar_star(h, sig) + d_star(h, sig);
    // -dt ^ G + H with dt = 2 tau dtau
    Form dtau = Form::generator(h.algebra(), Gen{GenKind::Dt, 0, 0});
    return h + wedge(dtau * (Expr::constant(-2.0) * tau_expr()), g);
}

Form schwinger_propagator_uv(const Signature& sig) {
    auto alg = kernel_algebra(sig);
    const double pref = std::pow(pi(), -(sig.d + 0.5 * sig.d_prime));
    Form p = Form::scalar(alg, Expr::constant(pref) * Expr::exp_of(heat_exponent(sig)));
    const Gen dtau{GenKind::Dt, 0, 0};
    for (int k = 1; k <= sig.d; ++k) {
        // du_k = dzbar_k/(2 tau^2) - zbar_k tau^-3 dtau
        Form du = Form::one_form(
            alg, {{Gen{GenKind::Dzbar, 0, k}, Expr::constant(0.5) * Expr::ipow(tau_expr(), -2)},
                  {dtau, Expr::constant(-1.0) * Expr::variable(kernel_zbar(k)) *
                             Expr::ipow(tau_expr(), -3)}});
        p = wedge(p, du);
    }
    for (int k = 1; k <= sig.d_prime; ++k) {
        // dv_k = dx_k/(2 tau) - x_k/(2 tau^2) dtau
        Form dv = Form::one_form(
            alg, {{Gen{GenKind::Dx, 0, k}, Expr::constant(0.5) * Expr::ipow(tau_expr(), -1)},
                  {dtau, Expr::constant(-0.5) * Expr::variable(kernel_x(k)) *
                             Expr::ipow(tau_expr(), -2)}});
        p = wedge(p, dv);
    }
    return p;
}

Form propagator_closedness_residual(const Signature& sig) {
    return exterior_derivative(schwinger_propagator(sig),
                               {VarKind::Schwinger, VarKind::PosZbar, VarKind::PosX});
}

Form euler_contraction_residual(const Signature& sig) {
    // Eu_t = t d/dt = (tau/2) d/dtau; the x-part carries weight 1/2 (the
    // scaling that fixes u and v), as in the rank-bound proof.
    std::map<Gen, Expr> field;
    field[{GenKind::Dt, 0, 0}] = Expr::constant(0.5) * tau_expr();
    for (int k = 1; k <= sig.d; ++k)
        field[{GenKind::Dzbar, 0, k}] = Expr::variable(kernel_zbar(k));
    for (int k = 1; k <= sig.d_prime; ++k)
        field[{GenKind::Dx, 0, k}] = Expr::constant(0.5) * Expr::variable(kernel_x(k));
    return contract(schwinger_propagator(sig), field);
}

NumericForm kernel_eval(const Form& f, const Signature& sig, double t, const SpacetimePoint& p) {
    if (!(t > 0.0)) throw std::invalid_argument("kernel_eval: t > 0 required");
    if (int(p.z.size()) != sig.d || int(p.x.size()) != sig.d_prime)
        throw std::invalid_argument("kernel_eval: point does not match the signature");
    const double tau = std::sqrt(t);
    return evaluate(f, [&](const Var& v) -> Complex {
        switch (v.kind) {
            case VarKind::Schwinger: return Complex(tau, 0.0);
            case VarKind::PosZ: return p.z[std::size_t(v.b - 1)];
            case VarKind::PosZbar: return std::conj(p.z[std::size_t(v.b - 1)]);
            case VarKind::PosX: return Complex(p.x[std::size_t(v.b - 1)], 0.0);
            default: throw std::invalid_argument("kernel_eval: unexpected variable");
        }
    });
}

Complex heat_kernel_coefficient(const Signature& sig, double t, const SpacetimePoint& p) {
    Form h = heat_kernel_form(sig);
    NumericForm nf = kernel_eval(h, sig, t, p);
    const std::uint64_t mask = h.algebra()->mask_of(space_top_gens(sig));
    auto it = nf.coeff.find(mask);
    return it == nf.coeff.end() ? Complex(0.0) : it->second;
}

double heat_mass(const Signature& sig, double t, int nodes) {
    // the coefficient factorizes over axes; integrate each axis by GL
    const double origin = heat_kernel_coefficient(sig, t, SpacetimePoint::zero(sig)).real();
    const double r = 10.0 * std::sqrt(2.0 * t);
    Rule1D rule = gauss_legendre(nodes, -r, r);
    double ic = 0.0, ir = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        ic += rule.weights[i] * std::exp(-rule.nodes[i] * rule.nodes[i] / (2.0 * t));
        ir += rule.weights[i] * std::exp(-rule.nodes[i] * rule.nodes[i] / (4.0 * t));
    }
    return origin * std::pow(ic, 2 * sig.d) * std::pow(ir, sig.d_prime);
}

double heat_convolution(const Signature& sig, double s, double t, const SpacetimePoint& p,
                        int nodes) {
    const int dims = 2 * sig.d + sig.d_prime;
    const double r = 8.0 * std::sqrt(2.0 * std::max(s, t));
    std::vector<Rule1D> axes(std::size_t(dims), gauss_legendre(nodes, -r, r));
    double acc = 0.0;
    tensor_for_each(axes, [&](const std::vector<double>& y, double w) {
        SpacetimePoint py, pdiff;
        py.z.resize(std::size_t(sig.d));
        pdiff.z.resize(std::size_t(sig.d));
        py.x.resize(std::size_t(sig.d_prime));
        pdiff.x.resize(std::size_t(sig.d_prime));
        for (int k = 0; k < sig.d; ++k) {
            py.z[std::size_t(k)] = Complex(y[std::size_t(2 * k)], y[std::size_t(2 * k + 1)]);
            pdiff.z[std::size_t(k)] = p.z[std::size_t(k)] - py.z[std::size_t(k)];
        }
        for (int k = 0; k < sig.d_prime; ++k) {
            py.x[std::size_t(k)] = y[std::size_t(2 * sig.d + k)];
            pdiff.x[std::size_t(k)] = p.x[std::size_t(k)] - py.x[std::size_t(k)];
        }
        acc += w * heat_kernel_coefficient(sig, s, pdiff).real() *
               heat_kernel_coefficient(sig, t, py).real();
    });
    return acc;
}

NumericForm bochner_martinelli(const Signature& sig, const SpacetimePoint& p,
                               bool displayed_normalization) {
    if (int(p.z.size()) != sig.d || int(p.x.size()) != sig.d_prime)
        throw std::invalid_argument("bochner_martinelli: point does not match the signature");
    if (p.is_origin()) throw std::invalid_argument("bochner_martinelli: singular at the origin");
    auto alg = kernel_algebra(sig);
    double norm2 = 0.0;
    for (const Complex& zi : p.z) norm2 += 2.0 * std::norm(zi);
    for (double xi : p.x) norm2 += xi * xi;
    const double pref = std::pow(2.0, sig.d) * std::tgamma(sig.d + 0.5 * sig.d_prime) /
                        std::pow(pi(), sig.d + 0.5 * sig.d_prime);
    const double denom = std::pow(norm2, sig.d + 0.5 * sig.d_prime);
    // The x-sum carries weight 1/2 relative to the zbar-sum: that is the
    // kernel the heat flow integrates to, and the one that is closed away
    // from the origin and unit-normalized in (dbar+d) P = delta. The
    // alternative weight 1 reproduces the textbook display, kept selectable
    // for reference.
    const double xw = displayed_normalization ? 1.0 : 0.5;
    NumericForm out(alg);
    // sum_i (-1)^{i-1} zbar_i (prod_{j != i} dzbar_j) d^{d'} x
    for (int i = 1; i <= sig.d; ++i) {
        std::vector<Gen> gens;
        for (int j = 1; j <= sig.d; ++j)
            if (j != i) gens.push_back({GenKind::Dzbar, 0, j});
        for (int k = 1; k <= sig.d_prime; ++k) gens.push_back({GenKind::Dx, 0, k});
        const double sign = (i % 2 == 1) ? 1.0 : -1.0;
        out.add(alg->mask_of(gens),
                Complex(sign * pref / denom) * std::conj(p.z[std::size_t(i - 1)]));
    }
    // sum_i (-1)^{d+i-1} (x_i / 2) d^d zbar (prod_{j != i} dx_j)
    for (int i = 1; i <= sig.d_prime; ++i) {
        std::vector<Gen> gens;
        for (int j = 1; j <= sig.d; ++j) gens.push_back({GenKind::Dzbar, 0, j});
        for (int k = 1; k <= sig.d_prime; ++k)
            if (k != i) gens.push_back({GenKind::Dx, 0, k});
        const double sign = ((sig.d + i - 1) % 2 == 0) ? 1.0 : -1.0;
        out.add(alg->mask_of(gens), Complex(sign * pref / denom * xw * p.x[std::size_t(i - 1)]));
    }
    return out;
}

NumericForm regularized_propagator(const Signature& sig, double eps, double L,
                                   const SpacetimePoint& p, int nodes) {
    if (eps > L || eps <= 0.0) throw std::invalid_argument("regularized_propagator: need 0 < eps <= L");
    auto alg = kernel_algebra(sig);
    NumericForm out(alg);
    if (eps == L) return out;
    Form h = heat_kernel_form(sig);
    Form g = dbar_star(h, sig) + d_star(h, sig);
    // Panels of unit width in log t keep the integrand analytic on each
    // panel's Bernstein ellipse (the exp(-r^2/4t) factor blows up off-axis
    // on wide log-t intervals, which ruins a single global rule).
    const double s0 = std::log(eps), s1 = std::log(L);
    const int panels = std::max(1, int(std::ceil(s1 - s0)));
    const int per_panel = std::max(8, nodes / panels);
    for (int pn = 0; pn < panels; ++pn) {
        const double a = s0 + (s1 - s0) * pn / panels;
        const double b = s0 + (s1 - s0) * (pn + 1) / panels;
        Rule1D rule = gauss_legendre(per_panel, a, b);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = std::exp(rule.nodes[i]);
            out = out + kernel_eval(g, sig, t, p) * Complex(rule.weights[i] * t, 0.0);
        }
    }
    return out;
}

Complex green_pairing_ratio(const Signature& sig, double sigma, int nodes,
                            bool displayed_normalization) {
    auto alg = kernel_algebra(sig);
    // test form phi = f d^d z, f a Gaussian of width sigma with f(0) = 1
    std::vector<Gen> zgens;
    for (int k = 1; k <= sig.d; ++k) zgens.push_back({GenKind::Dz, 0, k});
    const std::uint64_t zmask = alg->mask_of(zgens);

    auto f_of = [&](const SpacetimePoint& p) {
        double e = 0.0;
        for (const Complex& zi : p.z) e += std::norm(zi);
        for (double xi : p.x) e += xi * xi;
        return std::exp(-e / (sigma * sigma));
    };
    // (dbar + d) phi as a numeric form at p
    auto dphi_at = [&](const SpacetimePoint& p) {
        NumericForm df(alg);
        const double f = f_of(p);
        for (int k = 1; k <= sig.d; ++k) {
            NumericForm part(alg);
            part.add(alg->mask_of(Gen{GenKind::Dzbar, 0, k}),
                     -p.z[std::size_t(k - 1)] / (sigma * sigma) * f);
            NumericForm zf(alg);
            zf.add(zmask, Complex(1.0));
            df = df + wedge(part, zf);
        }
        for (int k = 1; k <= sig.d_prime; ++k) {
            NumericForm part(alg);
            part.add(alg->mask_of(Gen{GenKind::Dx, 0, k}),
                     Complex(-2.0 * p.x[std::size_t(k - 1)] / (sigma * sigma) * f));
            NumericForm zf(alg);
            zf.add(zmask, Complex(1.0));
            df = df + wedge(part, zf);
        }
        return df;
    };

    // canonical full position top mask and its Lebesgue conversion
    std::vector<Gen> top = zgens;
    for (int k = 1; k <= sig.d; ++k) top.push_back({GenKind::Dzbar, 0, k});
    for (int k = 1; k <= sig.d_prime; ++k) top.push_back({GenKind::Dx, 0, k});
    const std::uint64_t top_mask = alg->mask_of(top);
    const Complex measure = position_measure_factor(sig.d);

    Complex integral(0.0);
    auto accumulate = [&](const SpacetimePoint& p, double lebesgue_weight) {
        NumericForm wedge_form =
            wedge(bochner_martinelli(sig, p, displayed_normalization), dphi_at(p));
        auto it = wedge_form.coeff.find(top_mask);
        if (it != wedge_form.coeff.end()) integral += it->second * measure * lebesgue_weight;
    };

    const double R = 8.0 * sigma;
    if (sig.d == 0 && sig.d_prime == 1) {
        for (double lo : {-R, 0.0}) {
            Rule1D rule = gauss_legendre(nodes, lo, lo + R);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                SpacetimePoint p;
                p.x = {rule.nodes[i]};
                accumulate(p, rule.weights[i]);
            }
        }
    } else if (sig.d == 1 && sig.d_prime == 0) {
        Rule1D rr = gauss_legendre(nodes, 0.0, R);
        Rule1D th = gauss_legendre(nodes, 0.0, 2.0 * pi());
        for (std::size_t i = 0; i < rr.nodes.size(); ++i)
            for (std::size_t j = 0; j < th.nodes.size(); ++j) {
                SpacetimePoint p;
                p.z = {Complex(rr.nodes[i] * std::cos(th.nodes[j]),
                               rr.nodes[i] * std::sin(th.nodes[j]))};
                accumulate(p, rr.weights[i] * th.weights[j] * rr.nodes[i]);
            }
    } else if (sig.d == 1 && sig.d_prime == 1) {
        Rule1D rr = gauss_legendre(nodes, 0.0, R);
        Rule1D th = gauss_legendre(nodes / 2, 0.0, pi());
        Rule1D ph = gauss_legendre(nodes / 2, 0.0, 2.0 * pi());
        for (std::size_t i = 0; i < rr.nodes.size(); ++i)
            for (std::size_t j = 0; j < th.nodes.size(); ++j)
                for (std::size_t k = 0; k < ph.nodes.size(); ++k) {
                    const double r = rr.nodes[i], t = th.nodes[j], f = ph.nodes[k];
                    SpacetimePoint p;
                    p.z = {Complex(r * std::sin(t) * std::cos(f), r * std::sin(t) * std::sin(f))};
                    p.x = {r * std::cos(t)};
                    accumulate(p, rr.weights[i] * th.weights[j] * ph.weights[k] * r * r *
                                      std::sin(t));
                }
    } else {
        throw std::invalid_argument("green_pairing_ratio: signature not supported");
    }

    // expected delta pairing: delta d^d zbar d^{d'} x ^ f(0) d^d z
    std::vector<Gen> dgens;
    for (int k = 1; k <= sig.d; ++k) dgens.push_back({GenKind::Dzbar, 0, k});
    for (int k = 1; k <= sig.d_prime; ++k) dgens.push_back({GenKind::Dx, 0, k});
    const std::uint64_t dmask = alg->mask_of(dgens);
    const double s = wedge_sign(dmask, zmask);
    const Complex expected = Complex(s) * measure; // f(0) = 1
    const double parity = ((sig.d + sig.d_prime) % 2 == 0) ? 1.0 : -1.0;
    return parity * integral / expected;
}

} // namespace tholo
