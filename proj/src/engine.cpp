#include "tholo/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>

namespace tholo {

namespace {

double pi() { return std::acos(-1.0); }

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            Monomial m = ma;
            for (const auto& [v, p] : mb) m[v] += p;
            auto [it, fresh] = r.terms.try_emplace(m, ca * cb);
            if (!fresh) it->second += ca * cb;
        }
    return r;
}

Poly poly_scale(const Poly& a, Complex s) {
    Poly r;
    for (const auto& [m, c] : a.terms)
        if (c * s != Complex(0.0)) r.terms.emplace(m, c * s);
    return r;
}

} // namespace

Var w_var(int i, int k) { return {VarKind::PosZ, i, k}; }
Var wbar_var(int i, int k) { return {VarKind::PosZbar, i, k}; }
Var q_var(int i, int k) { return {VarKind::PosX, i, k}; }
Var ttilde_var(int e) { return {VarKind::Schwinger, e, 0}; }

AlgebraPtr problem_algebra(const DecoratedGraph& g, const Signature& sig) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int, int>, AlgebraPtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{g.vertex_count(), sig.d, sig.d_prime, g.edge_count()}];
    if (!slot) {
        std::vector<Gen> gens;
        for (int i = 1; i <= g.vertex_count(); ++i)
            for (int k = 1; k <= sig.d; ++k) {
                gens.push_back({GenKind::Dz, i, k});
                gens.push_back({GenKind::Dzbar, i, k});
            }
        for (int i = 1; i <= g.vertex_count(); ++i)
            for (int k = 1; k <= sig.d_prime; ++k) gens.push_back({GenKind::Dx, i, k});
        for (int e = 0; e < g.edge_count(); ++e) gens.push_back({GenKind::Dt, e, 0});
        slot = Algebra::make(std::move(gens));
    }
    return slot;
}

TestSource TestSource::top_default(const DecoratedGraph& g, const Signature& sig) {
    TestSource src;
    src.sigma.assign(std::size_t(g.vertex_count()), 1.0);
    const int n = g.vertex_count();
    for (int i = 1; i <= n; ++i)
        for (int k = 1; k <= sig.d; ++k) src.form_factor.push_back({GenKind::Dz, i, k});
    for (int k = 1; k <= sig.d; ++k) src.form_factor.push_back({GenKind::Dzbar, n, k});
    for (int k = 1; k <= sig.d_prime; ++k) src.form_factor.push_back({GenKind::Dx, n, k});
    return src;
}

TestSource TestSource::top_with_extra(const DecoratedGraph& g, const Signature& sig,
                                      const std::vector<Gen>& extra) {
    TestSource src = top_default(g, sig);
    for (const Gen& e : extra) src.form_factor.push_back(e);
    return src;
}

GraphIntegralProblem::GraphIntegralProblem(DecoratedGraph g, Signature s, TestSource src,
                                           double L_, double eps_)
    : graph(std::move(g)), sig(s), source(std::move(src)), L(L_), eps(eps_) {
    if (!graph.is_connected() || graph.has_self_loop())
        throw std::invalid_argument("GraphIntegralProblem: connected, no self-loops required");
    for (const Edge& e : graph.edges())
        if (int(e.decoration.size()) != sig.d)
            throw std::invalid_argument("GraphIntegralProblem: decoration length != d");
    if (int(source.sigma.size()) != graph.vertex_count())
        throw std::invalid_argument("GraphIntegralProblem: one sigma per vertex required");
    if (!(L > 0.0) || eps < 0.0 || eps > L)
        throw std::invalid_argument("GraphIntegralProblem: need 0 <= eps <= L");
}

// ----------------------------------------------------------------------
// Sources

namespace {

// Source in the original z coordinates on the problem algebra.
Form source_z_form(const GraphIntegralProblem& p) {
    auto alg = problem_algebra(p.graph, p.sig);
    std::vector<Expr> expo;
    for (int i = 1; i <= p.graph.vertex_count(); ++i) {
        const double c = 1.0 / (p.source.sigma[std::size_t(i - 1)] * p.source.sigma[std::size_t(i - 1)]);
        for (int k = 1; k <= p.sig.d; ++k)
            expo.push_back(Expr::constant(-c) * Expr::variable(w_var(i, k)) *
                           Expr::variable(wbar_var(i, k)));
        for (int k = 1; k <= p.sig.d_prime; ++k)
            expo.push_back(Expr::constant(-c) * Expr::ipow(Expr::variable(q_var(i, k)), 2));
    }
    Expr coeff = Expr::exp_of(Expr::sum(std::move(expo)));
    for (const auto& [v, pw] : p.source.poly) coeff = coeff * Expr::ipow(Expr::variable(v), pw);
    Form f = Form::scalar(alg, coeff);
    for (const Gen& g : p.source.form_factor) f = wedge(f, Form::generator(alg, g));
    return f;
}

std::map<Var, Expr> difference_substitution(const GraphIntegralProblem& p) {
    const int n = p.graph.vertex_count();
    std::map<Var, Expr> sub;
    for (int i = 1; i < n; ++i) {
        for (int k = 1; k <= p.sig.d; ++k) {
            sub[w_var(i, k)] = Expr::variable(w_var(i, k)) + Expr::variable(w_var(n, k));
            sub[wbar_var(i, k)] =
                Expr::variable(wbar_var(i, k)) + Expr::variable(wbar_var(n, k));
        }
        for (int k = 1; k <= p.sig.d_prime; ++k)
            sub[q_var(i, k)] = Expr::variable(q_var(i, k)) + Expr::variable(q_var(n, k));
    }
    return sub;
}

} // namespace

Form compile_source(const GraphIntegralProblem& p) {
    auto alg = problem_algebra(p.graph, p.sig);
    return pullback(source_z_form(p), difference_substitution(p), {}, alg);
}

Form reflect_source(const GraphIntegralProblem& p, const Form& source) {
    if (p.sig.d_prime < 1)
        throw std::invalid_argument("reflect_source: needs a topological direction");
    std::map<Var, Expr> sub;
    for (int i = 1; i < p.graph.vertex_count(); ++i)
        sub[q_var(i, 1)] = -Expr::variable(q_var(i, 1));
    return pullback(source, sub, {}, source.algebra());
}

Form source_exterior_derivative(const Form& source) {
    return exterior_derivative(source, {VarKind::PosZbar, VarKind::PosX});
}

// ----------------------------------------------------------------------
// Integrand

namespace {

// incidence entries of the non-base vertices for one edge: (vertex, +-1)
std::vector<std::pair<int, double>> edge_rho(const DecoratedGraph& g, int e) {
    std::vector<std::pair<int, double>> out;
    const Edge& ed = g.edge(e);
    const int n = g.vertex_count();
    if (ed.head < n) out.emplace_back(ed.head, 1.0);
    if (ed.tail < n) out.emplace_back(ed.tail, -1.0);
    return out;
}

} // namespace

Form build_integrand(const GraphIntegralProblem& p, const Form& source) {
    auto alg = problem_algebra(p.graph, p.sig);
    const int m = p.graph.edge_count();
    const double pref = std::pow(pi(), -(p.sig.d + 0.5 * p.sig.d_prime) * m);

    std::vector<Expr> expo;
    for (int e = 0; e < m; ++e) {
        const auto rho = edge_rho(p.graph, e);
        const Expr inv_t2 = Expr::ipow(Expr::variable(ttilde_var(e)), -2);
        for (int k = 1; k <= p.sig.d; ++k) {
            std::vector<Expr> zw, zwb;
            for (const auto& [i, r] : rho) {
                zw.push_back(Expr::constant(r) * Expr::variable(w_var(i, k)));
                zwb.push_back(Expr::constant(r) * Expr::variable(wbar_var(i, k)));
            }
            expo.push_back(Expr::constant(-0.5) * Expr::sum(zw) * Expr::sum(zwb) * inv_t2);
        }
        for (int k = 1; k <= p.sig.d_prime; ++k) {
            std::vector<Expr> zq;
            for (const auto& [i, r] : rho)
                zq.push_back(Expr::constant(r) * Expr::variable(q_var(i, k)));
            expo.push_back(Expr::constant(-0.25) * Expr::ipow(Expr::sum(zq), 2) * inv_t2);
        }
    }
    Form f = Form::scalar(alg, Expr::constant(pref) * Expr::exp_of(Expr::sum(std::move(expo))));

    for (int e = 0; e < m; ++e) {
        const auto rho = edge_rho(p.graph, e);
        const Expr t = Expr::variable(ttilde_var(e));
        const Expr inv_t2 = Expr::ipow(t, -2);
        const Gen dt{GenKind::Dt, e, 0};
        // decoration factor prod_k (u^e_k)^{n_k}
        Expr dec = Expr::constant(1.0);
        for (int k = 1; k <= p.sig.d; ++k) {
            const int nk = p.graph.edge(e).decoration[std::size_t(k - 1)];
            if (nk == 0) continue;
            std::vector<Expr> u;
            for (const auto& [i, r] : rho)
                u.push_back(Expr::constant(0.5 * r) * Expr::variable(wbar_var(i, k)) * inv_t2);
            dec = dec * Expr::ipow(Expr::sum(u), nk);
        }
        f = f * dec;
        for (int k = 1; k <= p.sig.d; ++k) {
            // du^e_k = sum_i rho_i dwbar^i_k/(2 t^2) - (2 u^e_k / t) dt
            std::vector<std::pair<Gen, Expr>> parts;
            std::vector<Expr> u;
            for (const auto& [i, r] : rho) {
                parts.emplace_back(Gen{GenKind::Dzbar, i, k}, Expr::constant(0.5 * r) * inv_t2);
                u.push_back(Expr::constant(r) * Expr::variable(wbar_var(i, k)));
            }
            parts.emplace_back(dt, Expr::constant(-1.0) * Expr::sum(u) * Expr::ipow(t, -3));
            f = wedge(f, Form::one_form(alg, parts));
        }
        for (int k = 1; k <= p.sig.d_prime; ++k) {
            // dv^e_k = sum_i rho_i dq^i_k/(2 t) - (v^e_k / t) dt
            std::vector<std::pair<Gen, Expr>> parts;
            std::vector<Expr> v;
            for (const auto& [i, r] : rho) {
                parts.emplace_back(Gen{GenKind::Dx, i, k},
                                   Expr::constant(0.5 * r) * Expr::ipow(t, -1));
                v.push_back(Expr::constant(r) * Expr::variable(q_var(i, k)));
            }
            parts.emplace_back(dt, Expr::constant(-0.5) * Expr::sum(v) * inv_t2);
            f = wedge(f, Form::one_form(alg, parts));
        }
    }
    return wedge(f, source);
}

// ----------------------------------------------------------------------
// Hot path: numeric integrand per Schwinger node

namespace {

struct EdgeFactorTerm {
    std::uint64_t mask;
    Poly poly;
};

void wedge_into(std::map<std::uint64_t, Poly>& acc, const std::vector<EdgeFactorTerm>& factor) {
    std::map<std::uint64_t, Poly> out;
    for (const auto& [ma, pa] : acc)
        for (const auto& f : factor) {
            if (ma & f.mask) continue;
            const int sign = wedge_sign(ma, f.mask);
            Poly prod = poly_mul(pa, f.poly);
            if (sign < 0) prod = poly_scale(prod, Complex(-1.0));
            Poly& slot = out[ma | f.mask];
            for (const auto& [m, c] : prod.terms) {
                auto [it, fresh] = slot.terms.try_emplace(m, c);
                if (!fresh) it->second += c;
            }
        }
    acc = std::move(out);
}

} // namespace

GaussianSpec node_gaussian(const GraphIntegralProblem& p, const std::vector<double>& ttilde,
                           bool include_base) {
    const int n = p.graph.vertex_count();
    const int nv = include_base ? n : n - 1;
    std::vector<Var> ws, wbs, qs;
    for (int i = 1; i <= nv; ++i)
        for (int k = 1; k <= p.sig.d; ++k) {
            ws.push_back(w_var(i, k));
            wbs.push_back(wbar_var(i, k));
        }
    for (int i = 1; i <= nv; ++i)
        for (int k = 1; k <= p.sig.d_prime; ++k) qs.push_back(q_var(i, k));

    Mat mlap(std::size_t(n - 1), std::size_t(n - 1));
    for (int e = 0; e < p.graph.edge_count(); ++e) {
        const auto rho = edge_rho(p.graph, e);
        const double w = 1.0 / (ttilde[std::size_t(e)] * ttilde[std::size_t(e)]);
        for (const auto& [i, ri] : rho)
            for (const auto& [j, rj] : rho)
                mlap(std::size_t(i - 1), std::size_t(j - 1)) += ri * rj * w;
    }
    auto sig2 = [&](int i) {
        const double s = p.source.sigma[std::size_t(i - 1)];
        return 1.0 / (s * s);
    };
    const std::size_t nc = ws.size(), nr = qs.size();
    Mat a(nc, nc), b(nr, nr);
    auto widx = [&](int i, int k) { return std::size_t((i - 1) * p.sig.d + (k - 1)); };
    auto qidx = [&](int i, int k) { return std::size_t((i - 1) * p.sig.d_prime + (k - 1)); };
    for (int k = 1; k <= p.sig.d; ++k) {
        for (int i = 1; i < n; ++i)
            for (int j = 1; j < n; ++j)
                a(widx(i, k), widx(j, k)) += 0.5 * mlap(std::size_t(i - 1), std::size_t(j - 1));
        if (include_base) {
            for (int i = 1; i < n; ++i) {
                a(widx(i, k), widx(i, k)) += sig2(i);
                a(widx(i, k), widx(n, k)) += sig2(i);
                a(widx(n, k), widx(i, k)) += sig2(i);
                a(widx(n, k), widx(n, k)) += sig2(i);
            }
            a(widx(n, k), widx(n, k)) += sig2(n);
        }
    }
    for (int k = 1; k <= p.sig.d_prime; ++k) {
        for (int i = 1; i < n; ++i)
            for (int j = 1; j < n; ++j)
                b(qidx(i, k), qidx(j, k)) += 0.5 * mlap(std::size_t(i - 1), std::size_t(j - 1));
        if (include_base) {
            for (int i = 1; i < n; ++i) {
                b(qidx(i, k), qidx(i, k)) += 2.0 * sig2(i);
                b(qidx(i, k), qidx(n, k)) += 2.0 * sig2(i);
                b(qidx(n, k), qidx(i, k)) += 2.0 * sig2(i);
                b(qidx(n, k), qidx(n, k)) += 2.0 * sig2(i);
            }
            b(qidx(n, k), qidx(n, k)) += 2.0 * sig2(n);
        }
    }
    return GaussianSpec(std::move(ws), std::move(wbs), std::move(qs), std::move(a), std::move(b));
}

CompiledForm integrand_at_node(const GraphIntegralProblem& p, const CompiledForm& source,
                               const std::vector<double>& ttilde) {
    const int m = p.graph.edge_count();
    if (int(ttilde.size()) != m) throw std::invalid_argument("integrand_at_node: node size");
    auto alg = source.alg;
    CompiledForm acc;
    acc.alg = alg;
    acc.quad = source.quad;
    const double pref = std::pow(pi(), -(p.sig.d + 0.5 * p.sig.d_prime) * m);
    for (const auto& [mask, poly] : source.terms) acc.terms[mask] = poly_scale(poly, pref);

    for (int e = 0; e < m; ++e) {
        const auto rho = edge_rho(p.graph, e);
        const double t = ttilde[std::size_t(e)];
        const double inv2t2 = 0.5 / (t * t);
        const std::uint64_t dt_bit = alg->mask_of(Gen{GenKind::Dt, e, 0});

        // graph Gaussian exponent contributions (PosZ orders before PosZbar)
        for (int k = 1; k <= p.sig.d; ++k)
            for (const auto& [i, ri] : rho)
                for (const auto& [j, rj] : rho)
                    acc.quad[{w_var(i, k), wbar_var(j, k)}] += Complex(-ri * rj * inv2t2);
        for (int k = 1; k <= p.sig.d_prime; ++k)
            for (const auto& [i, ri] : rho)
                for (const auto& [j, rj] : rho) {
                    if (i > j) continue;
                    const double c = (i == j) ? -0.25 * ri * rj / (t * t)
                                              : -0.5 * ri * rj / (t * t);
                    acc.quad[{q_var(i, k), q_var(j, k)}] += Complex(c);
                }

        // decoration polynomial
        for (int k = 1; k <= p.sig.d; ++k) {
            const int nk = p.graph.edge(e).decoration[std::size_t(k - 1)];
            for (int rep = 0; rep < nk; ++rep) {
                Poly u;
                for (const auto& [i, ri] : rho) u.terms[{{wbar_var(i, k), 1}}] = ri * inv2t2;
                for (auto& [mask, poly] : acc.terms) poly = poly_mul(poly, u);
            }
        }

        // du and dv one-forms
        for (int k = 1; k <= p.sig.d; ++k) {
            std::vector<EdgeFactorTerm> du;
            for (const auto& [i, ri] : rho) {
                EdgeFactorTerm term;
                term.mask = alg->mask_of(Gen{GenKind::Dzbar, i, k});
                term.poly.terms[{}] = ri * inv2t2;
                du.push_back(std::move(term));
            }
            EdgeFactorTerm dt_term;
            dt_term.mask = dt_bit;
            for (const auto& [i, ri] : rho)
                dt_term.poly.terms[{{wbar_var(i, k), 1}}] = -ri / (t * t * t);
            du.push_back(std::move(dt_term));
            wedge_into(acc.terms, du);
        }
        for (int k = 1; k <= p.sig.d_prime; ++k) {
            std::vector<EdgeFactorTerm> dv;
            for (const auto& [i, ri] : rho) {
                EdgeFactorTerm term;
                term.mask = alg->mask_of(Gen{GenKind::Dx, i, k});
                term.poly.terms[{}] = 0.5 * ri / t;
                dv.push_back(std::move(term));
            }
            EdgeFactorTerm dt_term;
            dt_term.mask = dt_bit;
            for (const auto& [i, ri] : rho)
                dt_term.poly.terms[{{q_var(i, k), 1}}] = -0.5 * ri / (t * t);
            dv.push_back(std::move(dt_term));
            wedge_into(acc.terms, dv);
        }
    }
    return acc;
}

namespace {

// algebra mask -> edge mask for the Dt part
std::map<std::uint64_t, Complex> to_edge_masks(const NumericForm& nf) {
    std::map<std::uint64_t, Complex> out;
    const auto& gens = nf.alg->gens();
    for (const auto& [mask, c] : nf.coeff) {
        std::uint64_t em = 0;
        std::uint64_t rest = mask;
        while (rest) {
            const int i = std::countr_zero(rest);
            rest &= rest - 1;
            const Gen& g = gens[std::size_t(i)];
            if (g.kind != GenKind::Dt)
                throw std::logic_error("reduce_positions: residual non-Dt generator");
            em |= 1ull << g.a;
        }
        out[em] += c;
    }
    return out;
}

} // namespace

std::map<std::uint64_t, Complex> reduce_positions(const GraphIntegralProblem& p,
                                                  const std::vector<double>& ttilde) {
    CompiledForm source = compile_form(compile_source(p));
    CompiledForm cf = integrand_at_node(p, source, ttilde);
    std::vector<Var> ws, wbs, qs;
    for (int i = 1; i <= p.graph.vertex_count(); ++i) {
        for (int k = 1; k <= p.sig.d; ++k) {
            ws.push_back(w_var(i, k));
            wbs.push_back(wbar_var(i, k));
        }
    }
    for (int i = 1; i <= p.graph.vertex_count(); ++i)
        for (int k = 1; k <= p.sig.d_prime; ++k) qs.push_back(q_var(i, k));
    GaussianSpec spec = GaussianSpec::from_quad(cf.quad, ws, wbs, qs);
    return to_edge_masks(integrate_positions(cf, spec));
}

DtFormEvaluator reduced_evaluator(const GraphIntegralProblem& p, const Form& source) {
    auto compiled = std::make_shared<CompiledForm>(compile_form(source));
    auto pp = std::make_shared<GraphIntegralProblem>(p);
    return [compiled, pp](const std::vector<double>& ttilde) {
        CompiledForm cf = integrand_at_node(*pp, *compiled, ttilde);
        std::vector<Var> ws, wbs, qs;
        for (int i = 1; i <= pp->graph.vertex_count(); ++i)
            for (int k = 1; k <= pp->sig.d; ++k) {
                ws.push_back(w_var(i, k));
                wbs.push_back(wbar_var(i, k));
            }
        for (int i = 1; i <= pp->graph.vertex_count(); ++i)
            for (int k = 1; k <= pp->sig.d_prime; ++k) qs.push_back(q_var(i, k));
        GaussianSpec spec = GaussianSpec::from_quad(cf.quad, ws, wbs, qs);
        return to_edge_masks(integrate_positions(cf, spec));
    };
}

DtFormEvaluator reduced_evaluator(const GraphIntegralProblem& p) {
    return reduced_evaluator(p, compile_source(p));
}

IntegralResult w_eps_L(const GraphIntegralProblem& p) {
    if (!(p.eps > 0.0)) throw std::invalid_argument("w_eps_L: eps > 0 required");
    DtFormEvaluator eval = reduced_evaluator(p);
    return integrate_box_top(eval, p.graph.edge_count(), std::sqrt(p.eps), std::sqrt(p.L),
                             p.quad);
}

IntegralResult w_0_L(const GraphIntegralProblem& p, const Form& source) {
    DtFormEvaluator eval = reduced_evaluator(p, source);
    return integrate_box_top(eval, p.graph.edge_count(), 0.0, std::sqrt(p.L), p.quad);
}

IntegralResult w_0_L(const GraphIntegralProblem& p) { return w_0_L(p, compile_source(p)); }

namespace {

DtFormEvaluator absolute_evaluator(const DtFormEvaluator& eval) {
    return [eval](const std::vector<double>& t) {
        auto coeffs = eval(t);
        for (auto& [mask, c] : coeffs) c = Complex(std::abs(c), 0.0);
        return coeffs;
    };
}

} // namespace

double w_0_L_scale(const GraphIntegralProblem& p) {
    DtFormEvaluator eval = absolute_evaluator(reduced_evaluator(p));
    return std::abs(
        integrate_box_top(eval, p.graph.edge_count(), 0.0, std::sqrt(p.L), p.quad).value);
}

IntegralResult anomaly_functional(const GraphIntegralProblem& p, const Form& source) {
    DtFormEvaluator eval = reduced_evaluator(p, source);
    EdgeSet all;
    for (int e = 0; e < p.graph.edge_count(); ++e) all.insert(e);
    return integrate_origin_stratum(eval, p.graph.edge_count(), all, p.L, p.quad);
}

IntegralResult anomaly_functional(const GraphIntegralProblem& p) {
    return anomaly_functional(p, compile_source(p));
}

double anomaly_scale(const GraphIntegralProblem& p) {
    DtFormEvaluator eval = absolute_evaluator(reduced_evaluator(p));
    EdgeSet all;
    for (int e = 0; e < p.graph.edge_count(); ++e) all.insert(e);
    return std::abs(integrate_origin_stratum(eval, p.graph.edge_count(), all, p.L, p.quad).value);
}

bool numeric_zero(const IntegralResult& r, double scale) {
    return std::abs(r.value) <= std::max(3.0 * r.error, 1e-6 * scale);
}

BoundaryIdentityReport boundary_identity_check(const GraphIntegralProblem& p) {
    BoundaryIdentityReport rep;
    const int m = p.graph.edge_count();
    const int n = p.graph.vertex_count();
    Form source = compile_source(p);

    const double lhs_sign =
        (((p.sig.d + p.sig.d_prime) * m + p.sig.d_prime * n) % 2 == 0) ? 1.0 : -1.0;
    IntegralResult lhs = w_0_L(p, source_exterior_derivative(source));
    rep.lhs = lhs_sign * lhs.value;
    rep.lhs_error = lhs.error;

    DtFormEvaluator eval = reduced_evaluator(p, source);
    Complex acc(0.0);
    double err = 0.0;
    for (const BoundaryStratum& bs : boundary_strata(p.graph, p.L)) {
        IntegralResult part =
            bs.kind == BoundaryStratum::Kind::Origin
                ? integrate_origin_stratum(eval, m, bs.edges, p.L, p.quad)
                : integrate_scale_face(eval, m, *bs.edges.begin(), p.L, p.quad);
        std::string name = bs.kind == BoundaryStratum::Kind::Origin ? "origin{" : "scale{";
        for (int e : bs.edges) name += std::to_string(e) + ",";
        name += "}";
        rep.strata.emplace_back(name, double(bs.sign) * part.value);
        acc += double(bs.sign) * part.value;
        err += part.error;
    }
    const double rhs_sign = (m % 2 == 0) ? 1.0 : -1.0;
    rep.rhs = rhs_sign * acc;
    rep.rhs_error = err;
    rep.scale = std::abs(rep.lhs) + std::abs(rep.rhs);
    for (const auto& [name, v] : rep.strata) {
        (void)name;
        rep.scale += std::abs(v);
    }
    return rep;
}

// ----------------------------------------------------------------------

KontsevichReport kontsevich_check(const DecoratedGraph& g, double L, const QuadratureSpec& quad) {
    if (!g.is_connected() || g.has_self_loop())
        throw std::invalid_argument("kontsevich_check: connected graph without self-loops");
    if (betti_1(g) < 1) throw std::invalid_argument("kontsevich_check: h_1 >= 1 required");
    const Signature sig(0, 2);
    const int n = g.vertex_count();
    const int m = g.edge_count();

    // algebra without base-vertex generators: Phi = 1 and the base is not
    // integrated (translation invariance)
    std::vector<Gen> gens;
    for (int i = 1; i < n; ++i)
        for (int k = 1; k <= 2; ++k) gens.push_back({GenKind::Dx, i, k});
    for (int e = 0; e < m; ++e) gens.push_back({GenKind::Dt, e, 0});
    auto alg = Algebra::make(std::move(gens));

    std::vector<Var> qs;
    for (int i = 1; i < n; ++i)
        for (int k = 1; k <= 2; ++k) qs.push_back(q_var(i, k));

    KontsevichReport rep;
    const int grid = 5;
    std::vector<std::size_t> idx(std::size_t(m), 0);
    while (true) {
        std::vector<double> t(std::size_t(m));
        for (int e = 0; e < m; ++e)
            t[std::size_t(e)] = std::sqrt(L) * (double(idx[std::size_t(e)]) + 0.5) / grid;

        CompiledForm cf;
        cf.alg = alg;
        const double pref = std::pow(pi(), -double(m));
        cf.terms[0].terms[{}] = pref;
        for (int e = 0; e < m; ++e) {
            const auto rho = edge_rho(g, e);
            const double te = t[std::size_t(e)];
            const std::uint64_t dt_bit = alg->mask_of(Gen{GenKind::Dt, e, 0});
            for (int k = 1; k <= 2; ++k)
                for (const auto& [i, ri] : rho)
                    for (const auto& [j, rj] : rho) {
                        if (i > j) continue;
                        const double c = (i == j) ? -0.25 * ri * rj / (te * te)
                                                  : -0.5 * ri * rj / (te * te);
                        cf.quad[{q_var(i, k), q_var(j, k)}] += Complex(c);
                    }
            for (int k = 1; k <= 2; ++k) {
                std::vector<EdgeFactorTerm> dv;
                for (const auto& [i, ri] : rho) {
                    EdgeFactorTerm term;
                    term.mask = alg->mask_of(Gen{GenKind::Dx, i, k});
                    term.poly.terms[{}] = 0.5 * ri / te;
                    dv.push_back(std::move(term));
                }
                EdgeFactorTerm dt_term;
                dt_term.mask = dt_bit;
                for (const auto& [i, ri] : rho)
                    dt_term.poly.terms[{{q_var(i, k), 1}}] = -0.5 * ri / (te * te);
                dv.push_back(std::move(dt_term));
                wedge_into(cf.terms, dv);
            }
        }
        GaussianSpec spec = GaussianSpec::from_quad(cf.quad, {}, {}, qs);
        PositionsIntegral out = integrate_positions_scaled(cf, spec);
        for (const auto& [mask, c] : out.form.coeff) {
            rep.max_component = std::max(rep.max_component, std::abs(c));
            (void)mask;
        }
        for (const auto& [mask, s] : out.scale) {
            rep.scale = std::max(rep.scale, s);
            (void)mask;
        }
        ++rep.grid_nodes;

        std::size_t a = std::size_t(m);
        bool done = false;
        while (a-- > 0) {
            if (++idx[a] < std::size_t(grid)) break;
            idx[a] = 0;
            if (a == 0) done = true;
        }
        if (done || m == 0) break;
    }
    (void)quad;
    rep.max_error = 1e-14 * rep.scale; // exact Wick evaluation, roundoff only
    rep.pass = rep.max_component <= std::max(3.0 * rep.max_error, 1e-6 * rep.scale);
    return rep;
}

RankVanishingReport rank_vanishing_check(const GraphIntegralProblem& p, int samples) {
    RankVanishingReport rep;
    const int m = p.graph.edge_count();
    const int D = p.sig.total();
    for (std::uint32_t bits = 1; bits < (1u << m); ++bits) {
        EdgeSet s;
        std::set<int> verts;
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) {
                s.insert(e);
                verts.insert(p.graph.edge(e).head);
                verts.insert(p.graph.edge(e).tail);
            }
        // connected subgraph on its induced vertices?
        std::vector<Edge> sub_edges;
        std::map<int, int> relabel;
        for (int v : verts) relabel[v] = int(relabel.size()) + 1;
        for (int e : s)
            sub_edges.push_back({relabel[p.graph.edge(e).head], relabel[p.graph.edge(e).tail], {}});
        DecoratedGraph sub(int(verts.size()), sub_edges);
        if (!sub.is_connected()) continue;
        if (D * int(verts.size()) < (D - 1) * int(s.size()) + D + 1) {
            rep.vanishes = true;
            rep.witness = s;
            break;
        }
    }
    // cross-validate on random Schwinger nodes
    std::mt19937_64 rng(p.quad.seed + 7);
    std::uniform_real_distribution<double> uni(0.1, std::sqrt(p.L));
    DtFormEvaluator eval = reduced_evaluator(p);
    DtFormEvaluator abseval = absolute_evaluator(eval);
    double scale = 1.0;
    for (int sm = 0; sm < samples; ++sm) {
        std::vector<double> t;
        for (int e = 0; e < m; ++e) t.push_back(uni(rng));
        for (const auto& [mask, c] : eval(t)) {
            rep.max_reduced = std::max(rep.max_reduced, std::abs(c));
            (void)mask;
        }
        for (const auto& [mask, c] : abseval(t)) {
            scale = std::max(scale, std::abs(c));
            (void)mask;
        }
    }
    rep.max_reduced /= scale;
    return rep;
}

ExponentBoundReport exponent_bound_check(const DecoratedGraph& g, int samples,
                                         std::uint64_t seed) {
    ExponentBoundReport rep;
    const int m = g.edge_count();
    const int n = g.vertex_count() - 1;
    // c_Gamma = |E| max |(rho rho^T)^{ee'}| with the reduced incidence matrix
    Mat rho(std::size_t(m), std::size_t(n));
    for (int e = 0; e < m; ++e) {
        for (const auto& [i, r] : edge_rho(g, e)) rho(std::size_t(e), std::size_t(i - 1)) = r;
    }
    Mat rrt = rho * rho.transposed();
    double maxentry = 0.0;
    for (std::size_t i = 0; i < rrt.rows(); ++i)
        for (std::size_t j = 0; j < rrt.cols(); ++j)
            maxentry = std::max(maxentry, std::fabs(rrt(i, j)));
    rep.c_gamma = m * maxentry;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> loguni(-2.0, 1.0);
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        std::vector<double> t1, t2;
        for (int e = 0; e < m; ++e) {
            const double v = std::pow(10.0, loguni(rng));
            t1.push_back(v);
            t2.push_back(v * v);
        }
        Mat minv = inverse(weighted_laplacian(g, SchwingerPoint(t1)));
        Mat msq = weighted_laplacian(g, SchwingerPoint(t2));
        Mat prod = minv * msq * minv;
        // symmetrize against roundoff
        for (std::size_t i = 0; i < prod.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double v = 0.5 * (prod(i, j) + prod(j, i));
                prod(i, j) = prod(j, i) = v;
            }
        const double lo = symmetric_eigenvalues(prod).front();
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, lo);
        if (lo < 1.0 / rep.c_gamma - 1e-12) ++rep.violations;
    }
    return rep;
}

// ----------------------------------------------------------------------
// Subgraph boundary reduction

namespace {

// contract every edge of S: the induced subgraph collapses to one vertex
DecoratedGraph contract_subgraph(const DecoratedGraph& g, const EdgeSet& s,
                                 std::map<int, int>* vertex_map_out) {
    std::set<int> verts;
    for (int e : s) {
        verts.insert(g.edge(e).head);
        verts.insert(g.edge(e).tail);
    }
    const int merged = *verts.begin();
    std::map<int, int> vmap;
    int next = 1;
    for (int v = 1; v <= g.vertex_count(); ++v) {
        if (verts.count(v) && v != merged) continue;
        vmap[v] = next++;
    }
    for (int v : verts) vmap[v] = vmap[merged];
    std::vector<Edge> edges;
    for (int e = 0; e < g.edge_count(); ++e) {
        if (s.count(e)) continue;
        Edge ne = g.edge(e);
        ne.head = vmap[ne.head];
        ne.tail = vmap[ne.tail];
        edges.push_back(ne);
    }
    if (vertex_map_out) *vertex_map_out = vmap;
    return DecoratedGraph(next - 1, std::move(edges));
}

} // namespace

SubgraphReductionReport subgraph_boundary_reduction(const GraphIntegralProblem& p,
                                                    const EdgeSet& s) {
    if (s.empty() || int(s.size()) >= p.graph.edge_count())
        throw std::invalid_argument("subgraph_boundary_reduction: need a proper nonempty subset");
    SubgraphReductionReport rep;

    // direct stratum integral
    DtFormEvaluator eval = reduced_evaluator(p);
    IntegralResult direct =
        integrate_origin_stratum(eval, p.graph.edge_count(), s, p.L, p.quad);
    rep.direct = direct.value;
    rep.direct_error = direct.error;
    {
        DtFormEvaluator abseval = absolute_evaluator(eval);
        rep.scale = std::abs(
            integrate_origin_stratum(abseval, p.graph.edge_count(), s, p.L, p.quad).value);
    }

    // standalone subgraph
    std::set<int> verts;
    for (int e : s) {
        verts.insert(p.graph.edge(e).head);
        verts.insert(p.graph.edge(e).tail);
    }
    // attachment vertices of the rest of the graph
    std::set<int> attach;
    for (int e = 0; e < p.graph.edge_count(); ++e) {
        if (s.count(e)) continue;
        if (verts.count(p.graph.edge(e).head)) attach.insert(p.graph.edge(e).head);
        if (verts.count(p.graph.edge(e).tail)) attach.insert(p.graph.edge(e).tail);
    }
    if (attach.size() > 1)
        throw std::invalid_argument(
            "subgraph_boundary_reduction: the factored route needs a single attachment vertex");
    const int attach_vertex = attach.empty() ? *verts.rbegin() : *attach.begin();

    // relabel so the attachment vertex is the subgraph base (last)
    std::map<int, int> sub_label;
    int next = 1;
    for (int v : verts)
        if (v != attach_vertex) sub_label[v] = next++;
    sub_label[attach_vertex] = next;
    std::vector<Edge> sub_edges;
    for (int e : s) {
        Edge ne = p.graph.edge(e);
        ne.head = sub_label[ne.head];
        ne.tail = sub_label[ne.tail];
        sub_edges.push_back(ne);
    }
    DecoratedGraph sub(int(verts.size()), std::move(sub_edges));
    rep.subgraph_laman = is_laman(sub, p.sig);

    if (!rep.subgraph_laman) {
        rep.factored = Complex(0.0);
        rep.factored_error = 0.0;
        return rep;
    }

    if (p.sig.d != 1 || p.sig.d_prime != 0 || sub.decoration_degree() != 0)
        throw std::invalid_argument(
            "subgraph_boundary_reduction: factored route implemented for undecorated (1,0)");

    // anomaly jet of the standalone subgraph: O(w^alpha G) = c_alpha alpha! B
    const int nsub = sub.vertex_count();
    QuadratureSpec jet_quad = p.quad;
    std::vector<Complex> c_times_B; // alpha = 0 and the single first-order jets
    {
        GraphIntegralProblem sp(sub, p.sig, TestSource::top_default(sub, p.sig), p.L, 0.0);
        sp.quad = jet_quad;
        c_times_B.push_back(anomaly_functional(sp).value);
        for (int i = 1; i < nsub; ++i) {
            TestSource probe = TestSource::top_default(sub, p.sig);
            probe.poly[w_var(i, 1)] = 1;
            GraphIntegralProblem spi(sub, p.sig, probe, p.L, 0.0);
            spi.quad = jet_quad;
            c_times_B.push_back(anomaly_functional(spi).value);
        }
    }
    // base integral B of the probes: Gaussian with exponent sum_i |z|^2/sigma^2
    double cB = 0.0;
    for (int i = 1; i <= nsub; ++i) cB += 1.0;
    Complex B;
    {
        QuadForm quad;
        quad[{w_var(1, 1), wbar_var(1, 1)}] = Complex(-cB);
        GaussianSpec bspec = GaussianSpec::from_quad(quad, {w_var(1, 1)}, {wbar_var(1, 1)}, {});
        B = position_measure_factor(1) * gaussian_moment(bspec, {});
    }

    // effective sources on the contracted graph: extract the d omega
    // component of the big source in collapse coordinates, differentiate,
    // restrict to the diagonal, relabel
    std::map<int, int> vmap;
    DecoratedGraph contracted = contract_subgraph(p.graph, s, &vmap);
    const int merged_new = vmap.at(attach_vertex);
    auto big_alg = problem_algebra(p.graph, p.sig);
    auto small_alg = problem_algebra(contracted, p.sig);

    Form phi_z = source_z_form(p);
    // collapse coordinates: z^v = omega_v + z^attach for v in G' non-base.
    // Reuse the omega variables as the original vars; substitute for the rest.
    std::map<Var, Expr> collapse;
    for (int v : verts) {
        if (v == attach_vertex) continue;
        collapse[w_var(v, 1)] = Expr::variable(w_var(v, 1)) + Expr::variable(w_var(attach_vertex, 1));
        collapse[wbar_var(v, 1)] =
            Expr::variable(wbar_var(v, 1)) + Expr::variable(wbar_var(attach_vertex, 1));
    }
    Form phi_omega = pullback(phi_z, collapse, {}, big_alg);

    // pair the d omega directions against the subgraph anomaly: contract each
    // non-base G' holomorphic generator, in the fixed vertex order
    std::vector<int> omega_verts;
    for (int v : verts)
        if (v != attach_vertex) omega_verts.push_back(v);
    Form paired = phi_omega;
    for (int v : omega_verts)
        paired = contract(paired, {{Gen{GenKind::Dz, v, 1}, Expr::constant(1.0)}});

    auto restrict_and_relabel = [&](const Form& f) {
        std::map<Var, Expr> kill;
        for (int v : omega_verts) {
            kill[w_var(v, 1)] = Expr();
            kill[wbar_var(v, 1)] = Expr();
        }
        std::map<Gen, Form> kill_gens;
        for (int v : omega_verts) {
            kill_gens[{GenKind::Dz, v, 1}] = Form(big_alg);
            kill_gens[{GenKind::Dzbar, v, 1}] = Form(big_alg);
        }
        Form restricted = pullback(f, kill, kill_gens, big_alg);
        // relabel remaining vertices to the contracted graph indices
        std::map<Var, Expr> rename;
        std::map<Gen, Form> rename_gens;
        for (int v = 1; v <= p.graph.vertex_count(); ++v) {
            if (verts.count(v) && v != attach_vertex) continue;
            const int nv = vmap.at(v);
            rename[w_var(v, 1)] = Expr::variable(w_var(nv, 1));
            rename[wbar_var(v, 1)] = Expr::variable(wbar_var(nv, 1));
            rename_gens[{GenKind::Dz, v, 1}] = Form::generator(small_alg, {GenKind::Dz, nv, 1});
            rename_gens[{GenKind::Dzbar, v, 1}] =
                Form::generator(small_alg, {GenKind::Dzbar, nv, 1});
        }
        return pullback(restricted, rename, rename_gens, small_alg);
    };

    // contracted-graph problems driven by the restricted sources
    std::vector<double> contracted_sigma;
    auto contracted_source_form = [&](const Form& zform) {
        // push z-coordinates to difference coordinates of the contracted graph
        const int cn = contracted.vertex_count();
        std::map<Var, Expr> sub2;
        for (int i = 1; i < cn; ++i) {
            sub2[w_var(i, 1)] = Expr::variable(w_var(i, 1)) + Expr::variable(w_var(cn, 1));
            sub2[wbar_var(i, 1)] =
                Expr::variable(wbar_var(i, 1)) + Expr::variable(wbar_var(cn, 1));
        }
        return pullback(zform, sub2, {}, small_alg);
    };

    TestSource dummy = TestSource::top_default(contracted, p.sig);
    GraphIntegralProblem cp(contracted, p.sig, dummy, p.L, 0.0);
    cp.quad = p.quad;

    Complex factored(0.0);
    double ferr = 0.0;
    {
        Form psi0 = restrict_and_relabel(paired);
        IntegralResult r0 = w_0_L(cp, contracted_source_form(psi0));
        factored += (c_times_B[0] / B) * r0.value;
        ferr += std::abs(c_times_B[0] / B) * r0.error;
        for (std::size_t a = 0; a < omega_verts.size(); ++a) {
            Form dpaired(big_alg);
            for (const auto& [mask, c] : paired.terms())
                dpaired.add_term(mask, derivative(c, w_var(omega_verts[a], 1)));
            Form psi1 = restrict_and_relabel(dpaired);
            IntegralResult r1 = w_0_L(cp, contracted_source_form(psi1));
            factored += (c_times_B[1 + a] / B) * r1.value;
            ferr += std::abs(c_times_B[1 + a] / B) * r1.error;
        }
    }
    (void)merged_new;
    rep.factored = factored;
    rep.factored_error = ferr;
    return rep;
}

} // namespace tholo
