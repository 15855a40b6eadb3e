#include "tholo/wick.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tholo/quadrature.hpp"

namespace tholo {

namespace {

int find_var(const std::vector<Var>& vars, const Var& v) {
    auto it = std::find(vars.begin(), vars.end(), v);
    return it == vars.end() ? -1 : int(it - vars.begin());
}

} // namespace

GaussianSpec::GaussianSpec(std::vector<Var> w_vars, std::vector<Var> wbar_vars,
                           std::vector<Var> q_vars, Mat A, Mat B, Complex prefactor)
    : w_(std::move(w_vars)), wbar_(std::move(wbar_vars)), q_(std::move(q_vars)),
      a_(std::move(A)), b_(std::move(B)), prefactor_(prefactor) {
    const std::size_t nc = w_.size(), nr = q_.size();
    if (wbar_.size() != nc) throw std::invalid_argument("GaussianSpec: w/wbar size mismatch");
    if (a_.rows() != nc || a_.cols() != nc) throw std::invalid_argument("GaussianSpec: A shape");
    if (b_.rows() != nr || b_.cols() != nr) throw std::invalid_argument("GaussianSpec: B shape");
    if (nr > 0 && !is_positive_definite(b_))
        throw std::invalid_argument("GaussianSpec: B not positive definite");
    if (nc > 0 && !is_positive_definite(a_))
        throw std::invalid_argument("GaussianSpec: A not positive definite");
    a_inv_ = nc ? inverse(a_) : Mat(0, 0);
    b_inv_ = nr ? inverse(b_) : Mat(0, 0);
    const double pi = std::acos(-1.0);
    norm_ = prefactor_ * std::pow(pi, double(nc)) / lu_det(a_) *
            std::pow(2.0 * pi, 0.5 * double(nr)) / std::sqrt(lu_det(b_));
}

GaussianSpec GaussianSpec::from_quad(const QuadForm& quad, std::vector<Var> w_vars,
                                     std::vector<Var> wbar_vars, std::vector<Var> q_vars,
                                     Complex prefactor) {
    const std::size_t nc = w_vars.size(), nr = q_vars.size();
    Mat A(nc, nc), B(nr, nr);
    for (const auto& [key, c] : quad) {
        const auto& [u, v] = key;
        if (std::abs(c.imag()) > 1e-12 * (1.0 + std::abs(c)))
            throw std::invalid_argument("GaussianSpec: complex exponent coefficient");
        const int wi = find_var(w_vars, u), wbj = find_var(wbar_vars, v);
        if (wi >= 0 && wbj >= 0) {
            A(std::size_t(wi), std::size_t(wbj)) = -c.real();
            continue;
        }
        const int qi = find_var(q_vars, u), qj = find_var(q_vars, v);
        if (qi >= 0 && qj >= 0) {
            if (qi == qj) {
                B(std::size_t(qi), std::size_t(qi)) = -2.0 * c.real();
            } else {
                B(std::size_t(qi), std::size_t(qj)) = -c.real();
                B(std::size_t(qj), std::size_t(qi)) = -c.real();
            }
            continue;
        }
        throw std::invalid_argument("GaussianSpec: exponent term " + var_name(u) + "*" +
                                    var_name(v) + " outside the w-wbar / q-q pattern");
    }
    return GaussianSpec(std::move(w_vars), std::move(wbar_vars), std::move(q_vars),
                        std::move(A), std::move(B), prefactor);
}

QuadForm GaussianSpec::quad() const {
    QuadForm q;
    for (std::size_t i = 0; i < w_.size(); ++i)
        for (std::size_t j = 0; j < w_.size(); ++j)
            if (a_(i, j) != 0.0) q[{w_[i], wbar_[j]}] += Complex(-a_(i, j));
    for (std::size_t i = 0; i < q_.size(); ++i) {
        if (b_(i, i) != 0.0) q[{q_[i], q_[i]}] += Complex(-0.5 * b_(i, i));
        for (std::size_t j = i + 1; j < q_.size(); ++j)
            if (b_(i, j) != 0.0) q[{q_[i], q_[j]}] += Complex(-b_(i, j));
    }
    return q;
}

int GaussianSpec::w_index(const Var& v) const { return find_var(w_, v); }
int GaussianSpec::q_index(const Var& v) const { return find_var(q_, v); }

namespace {

// Sum over bijections (w occurrence i) -> (wbar occurrence sigma(i)) of
// prod (A^-1)_{wbar, w}.
Complex complex_pairings(const Mat& a_inv, std::vector<int>& ws, std::vector<int>& wbs,
                         std::size_t i) {
    if (i == ws.size()) return Complex(1.0);
    Complex acc(0.0);
    for (std::size_t j = 0; j < wbs.size(); ++j) {
        if (wbs[j] < 0) continue;
        const int b = wbs[j];
        wbs[j] = -1;
        acc += a_inv(std::size_t(b), std::size_t(ws[i])) * complex_pairings(a_inv, ws, wbs, i + 1);
        wbs[j] = b;
    }
    return acc;
}

// Isserlis sum over perfect matchings of the q occurrence list.
Complex real_pairings(const Mat& b_inv, std::vector<int>& qs) {
    if (qs.empty()) return Complex(1.0);
    const int first = qs[0];
    Complex acc(0.0);
    for (std::size_t j = 1; j < qs.size(); ++j) {
        std::vector<int> rest;
        rest.reserve(qs.size() - 2);
        for (std::size_t k = 1; k < qs.size(); ++k)
            if (k != j) rest.push_back(qs[k]);
        acc += b_inv(std::size_t(first), std::size_t(qs[j])) * real_pairings(b_inv, rest);
    }
    return acc;
}

} // namespace

Complex gaussian_moment(const GaussianSpec& spec, const Monomial& m) {
    std::vector<int> ws, wbs, qs;
    int degree = 0;
    for (const auto& [v, p] : m) {
        if (p < 1) throw std::invalid_argument("gaussian_moment: exponent < 1");
        degree += p;
        int idx;
        if ((idx = spec.w_index(v)) >= 0) {
            for (int k = 0; k < p; ++k) ws.push_back(idx);
        } else if ((idx = find_var(spec.wbar_vars(), v)) >= 0) {
            for (int k = 0; k < p; ++k) wbs.push_back(idx);
        } else if ((idx = spec.q_index(v)) >= 0) {
            for (int k = 0; k < p; ++k) qs.push_back(idx);
        } else {
            throw std::invalid_argument("gaussian_moment: variable " + var_name(v) +
                                        " not in the Gaussian spec");
        }
    }
    if (degree > 12) throw std::invalid_argument("gaussian_moment: total degree above cap 12");
    if (ws.size() != wbs.size()) return Complex(0.0);
    if (qs.size() % 2 != 0) return Complex(0.0);
    const Complex cpart = complex_pairings(spec.A_inv(), ws, wbs, 0);
    const Complex rpart = real_pairings(spec.B_inv(), qs);
    return spec.normalization() * cpart * rpart;
}

Complex gaussian_moment_oracle(const GaussianSpec& spec, const Monomial& m, int nodes_per_axis) {
    const std::size_t nc = spec.w_vars().size(), nr = spec.q_vars().size();
    const std::size_t dims = 2 * nc + nr;
    if (dims > 8) throw std::invalid_argument("gaussian_moment_oracle: dimension cap exceeded");
    int maxdeg = 0;
    for (const auto& [v, p] : m) {
        (void)v;
        maxdeg += p;
    }
    if (nodes_per_axis <= 0) nodes_per_axis = std::max(8, maxdeg + 2);

    // exponent -w A wbar = -(x A x + y A y) for w = x + i y and symmetric A
    Mat bx(nc, nc);
    for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < nc; ++j) bx(i, j) = spec.A()(i, j) + spec.A()(j, i);
    const Mat lx = nc ? cholesky(bx) : Mat(0, 0);
    const Mat lq = nr ? cholesky(spec.B()) : Mat(0, 0);
    // q = L^{-T} u; evaluate by solving L^T q = u
    const Mat lxT = lx.transposed(), lqT = lq.transposed();

    double jac = 1.0;
    for (std::size_t i = 0; i < nc; ++i) jac /= lx(i, i) * lx(i, i);
    for (std::size_t i = 0; i < nr; ++i) jac /= lq(i, i);

    std::vector<Rule1D> axes(dims, gauss_hermite(nodes_per_axis));
    Complex acc(0.0);
    std::vector<double> xs(nc), ys(nc), qs(nr);
    tensor_for_each(axes, [&](const std::vector<double>& u, double wgt) {
        if (nc) {
            std::vector<double> ux(u.begin(), u.begin() + long(nc));
            std::vector<double> uy(u.begin() + long(nc), u.begin() + long(2 * nc));
            xs = lu_solve(lxT, ux);
            ys = lu_solve(lxT, uy);
        }
        if (nr) {
            std::vector<double> uq(u.begin() + long(2 * nc), u.end());
            qs = lu_solve(lqT, uq);
        }
        Complex val(1.0);
        for (const auto& [v, p] : m) {
            Complex base;
            int idx;
            if ((idx = spec.w_index(v)) >= 0)
                base = Complex(xs[std::size_t(idx)], ys[std::size_t(idx)]);
            else if ((idx = find_var(spec.wbar_vars(), v)) >= 0)
                base = Complex(xs[std::size_t(idx)], -ys[std::size_t(idx)]);
            else if ((idx = spec.q_index(v)) >= 0)
                base = Complex(qs[std::size_t(idx)], 0.0);
            else
                throw std::invalid_argument("gaussian_moment_oracle: unknown variable");
            for (int k = 0; k < p; ++k) val *= base;
        }
        acc += wgt * val;
    });
    return spec.prefactor() * jac * acc;
}

void CompiledForm::add(std::uint64_t mask, const Monomial& mono, Complex c) {
    if (c == Complex(0.0)) return;
    Poly& p = terms[mask];
    auto [it, fresh] = p.terms.try_emplace(mono, c);
    if (!fresh) {
        it->second += c;
        if (it->second == Complex(0.0)) p.terms.erase(it);
    }
}

CompiledForm compile_form(const Form& f) {
    CompiledForm cf;
    cf.alg = f.algebra();
    bool have_quad = false;
    for (const auto& [mask, c] : f.terms()) {
        PolyGauss pg = poly_gauss_decompose(c);
        if (pg.poly.terms.empty()) continue;
        if (!have_quad) {
            cf.quad = pg.quad;
            have_quad = true;
        } else {
            // all coefficients must share one Gaussian
            if (pg.quad.size() != cf.quad.size())
                throw std::invalid_argument("compile_form: coefficients mix Gaussians");
            auto ia = cf.quad.begin();
            for (auto ib = pg.quad.begin(); ib != pg.quad.end(); ++ib, ++ia) {
                if (ia->first != ib->first ||
                    std::abs(ia->second - ib->second) > 1e-9 * (1.0 + std::abs(ia->second)))
                    throw std::invalid_argument("compile_form: coefficients mix Gaussians");
            }
        }
        for (const auto& [mono, coef] : pg.poly.terms) cf.add(mask, mono, coef);
    }
    return cf;
}

Complex position_measure_factor(int n_c) {
    Complex f(1.0);
    for (int i = 0; i < n_c; ++i) f *= Complex(0.0, -2.0);
    if (((n_c * (n_c - 1) / 2) & 1) != 0) f = -f;
    return f;
}

PositionsIntegral integrate_positions_scaled(const CompiledForm& cf, const GaussianSpec& spec) {
    // validate the compiled Gaussian against the declared covariance
    {
        const QuadForm expect = spec.quad();
        if (expect.size() != cf.quad.size())
            throw std::invalid_argument("integrate_positions: integrand Gaussian does not match spec");
        auto ia = expect.begin();
        for (auto ib = cf.quad.begin(); ib != cf.quad.end(); ++ib, ++ia) {
            if (ia->first != ib->first ||
                std::abs(ia->second - ib->second) > 1e-7 * (1.0 + std::abs(ia->second)))
                throw std::invalid_argument(
                    "integrate_positions: integrand Gaussian does not match spec");
        }
    }
    std::uint64_t position_mask = 0;
    for (std::size_t i = 0; i < cf.alg->size(); ++i) {
        const GenKind k = cf.alg->gens()[i].kind;
        if (k == GenKind::Dz || k == GenKind::Dzbar || k == GenKind::Dx)
            position_mask |= 1ull << i;
    }
    const Complex measure = position_measure_factor(int(spec.w_vars().size()));
    PositionsIntegral out;
    out.form = NumericForm(cf.alg);
    for (const auto& [mask, poly] : cf.terms) {
        if ((mask & position_mask) != position_mask) continue; // not top degree in positions
        const std::uint64_t rest = mask & ~position_mask;
        const int sign = wedge_sign(position_mask, rest);
        Complex acc(0.0);
        double scale = 0.0;
        for (const auto& [mono, c] : poly.terms) {
            const Complex term = c * gaussian_moment(spec, mono);
            acc += term;
            scale += std::abs(term);
        }
        out.form.add(rest, double(sign) * measure * acc);
        out.scale[rest] += std::abs(measure) * scale;
    }
    return out;
}

NumericForm integrate_positions(const CompiledForm& cf, const GaussianSpec& spec) {
    return integrate_positions_scaled(cf, spec).form;
}

NumericForm integrate_positions(const Form& f, const GaussianSpec& spec) {
    return integrate_positions(compile_form(f), spec);
}

} // namespace tholo
