#include "tholo/expr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tholo {

namespace {

std::size_t hash_combine(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

std::size_t hash_complex(Complex c) {
    std::size_t h = std::hash<double>{}(c.real());
    return hash_combine(h, std::hash<double>{}(c.imag()));
}

} // namespace

std::string var_name(const Var& v) {
    std::ostringstream os;
    switch (v.kind) {
        case VarKind::PosZ: os << "w" << v.a << "_" << v.b; break;
        case VarKind::PosZbar: os << "wb" << v.a << "_" << v.b; break;
        case VarKind::PosX: os << "q" << v.a << "_" << v.b; break;
        case VarKind::Schwinger: os << "s" << v.a; break;
        case VarKind::ChartRho: os << "rho" << v.a; break;
        case VarKind::ChartXi: os << "xi" << v.a << "_" << v.b; break;
    }
    return os.str();
}

struct ExprBuilder {
    static Expr make(Expr::Node n) {
        std::size_t h = std::size_t(n.op) * 1099511628211ull;
        switch (n.op) {
            case Expr::Op::Const: h = hash_combine(h, hash_complex(n.cval)); break;
            case Expr::Op::Variable:
                h = hash_combine(h, std::size_t(n.var.kind));
                h = hash_combine(h, std::size_t(n.var.a) * 131 + std::size_t(n.var.b));
                break;
            default: break;
        }
        h = hash_combine(h, std::size_t(n.power));
        for (const Expr& k : n.kids) h = hash_combine(h, k.hash());
        n.hash = h;
        return Expr(std::make_shared<const Expr::Node>(std::move(n)));
    }
};

Expr::Expr() : node_() {
    static const std::shared_ptr<const Node> zero =
        [] {
            Node n;
            n.op = Op::Const;
            n.cval = Complex(0.0);
            return ExprBuilder::make(std::move(n)).node_;
        }();
    node_ = zero;
}

Expr Expr::constant(Complex c) {
    Node n;
    n.op = Op::Const;
    n.cval = c;
    return ExprBuilder::make(std::move(n));
}

Expr Expr::variable(Var v) {
    Node n;
    n.op = Op::Variable;
    n.var = v;
    return ExprBuilder::make(std::move(n));
}

int Expr::compare(const Expr& a, const Expr& b) {
    if (a.raw() == b.raw()) return 0;
    if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
    switch (a.op()) {
        case Op::Const: {
            const Complex x = a.const_value(), y = b.const_value();
            if (x.real() != y.real()) return x.real() < y.real() ? -1 : 1;
            if (x.imag() != y.imag()) return x.imag() < y.imag() ? -1 : 1;
            return 0;
        }
        case Op::Variable:
            if (a.var() != b.var()) return a.var() < b.var() ? -1 : 1;
            return 0;
        default: {
            if (a.power() != b.power()) return a.power() < b.power() ? -1 : 1;
            if (a.kids().size() != b.kids().size())
                return a.kids().size() < b.kids().size() ? -1 : 1;
            for (std::size_t i = 0; i < a.kids().size(); ++i) {
                const int c = compare(a.kids()[i], b.kids()[i]);
                if (c != 0) return c;
            }
            return 0;
        }
    }
}

namespace {

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return Expr::compare(a, b) < 0; }
};

// Split a term into (constant coefficient, core), where core has no leading
// constant factor.
std::pair<Complex, Expr> coeff_core(const Expr& e) {
    if (e.op() == Expr::Op::Const) return {e.const_value(), Expr::constant(1.0)};
    if (e.op() == Expr::Op::Prod && !e.kids().empty() && e.kids()[0].is_const()) {
        std::vector<Expr> rest(e.kids().begin() + 1, e.kids().end());
        if (rest.size() == 1) return {e.kids()[0].const_value(), rest[0]};
        // rebuild without re-simplifying: children are already canonical
        Expr::Node n;
        n.op = Expr::Op::Prod;
        n.kids = std::move(rest);
        return {e.kids()[0].const_value(), ExprBuilder::make(std::move(n))};
    }
    return {Complex(1.0), e};
}

} // namespace

Expr Expr::sum(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    for (Expr& t : terms) {
        if (t.op() == Op::Sum)
            flat.insert(flat.end(), t.kids().begin(), t.kids().end());
        else
            flat.push_back(std::move(t));
    }
    Complex cacc(0.0);
    std::map<Expr, Complex, ExprLess> collected;
    for (const Expr& t : flat) {
        auto [c, core] = coeff_core(t);
        if (core.is_const()) {
            cacc += c * core.const_value();
        } else {
            collected[core] += c;
        }
    }
    std::vector<Expr> out;
    if (cacc != Complex(0.0)) out.push_back(constant(cacc));
    for (auto& [core, c] : collected) {
        if (c == Complex(0.0)) continue;
        out.push_back(c == Complex(1.0) ? core : prod({constant(c), core}));
    }
    if (out.empty()) return Expr();
    if (out.size() == 1) return out[0];
    Node n;
    n.op = Op::Sum;
    n.kids = std::move(out);
    return ExprBuilder::make(std::move(n));
}

Expr Expr::prod(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    for (Expr& f : factors) {
        if (f.op() == Op::Prod)
            flat.insert(flat.end(), f.kids().begin(), f.kids().end());
        else
            flat.push_back(std::move(f));
    }
    Complex cacc(1.0);
    std::map<Expr, int, ExprLess> powers; // base -> total exponent
    std::vector<Expr> exp_args;
    for (const Expr& f : flat) {
        if (f.is_const()) {
            cacc *= f.const_value();
        } else if (f.op() == Op::Exp) {
            exp_args.push_back(f.kids()[0]);
        } else if (f.op() == Op::IPow) {
            powers[f.kids()[0]] += f.power();
        } else {
            powers[f] += 1;
        }
    }
    if (cacc == Complex(0.0)) return Expr();
    std::vector<Expr> out;
    if (cacc != Complex(1.0)) out.push_back(constant(cacc));
    for (auto& [base, p] : powers) {
        if (p == 0) continue;
        out.push_back(p == 1 ? base : ipow(base, p));
    }
    if (!exp_args.empty()) {
        Expr arg = sum(std::move(exp_args));
        Expr ex = exp_of(arg);
        if (ex.is_const()) {
            if (out.empty() || !out[0].is_const())
                out.insert(out.begin(), ex);
            else
                out[0] = constant(out[0].const_value() * ex.const_value());
        } else {
            out.push_back(ex);
        }
    }
    if (out.empty()) return constant(1.0);
    if (out.size() == 1) return out[0];
    Node n;
    n.op = Op::Prod;
    n.kids = std::move(out);
    return ExprBuilder::make(std::move(n));
}

Expr Expr::ipow(Expr base, int p) {
    if (p == 0) return constant(1.0);
    if (p == 1) return base;
    if (base.is_const()) {
        const Complex b = base.const_value();
        if (b == Complex(0.0) && p < 0) throw std::domain_error("ipow: 0 to a negative power");
        Complex r(1.0);
        for (int i = 0; i < std::abs(p); ++i) r *= b;
        return constant(p > 0 ? r : Complex(1.0) / r);
    }
    if (base.op() == Op::IPow) return ipow(base.kids()[0], base.power() * p);
    if (base.op() == Op::Prod) {
        std::vector<Expr> ks;
        for (const Expr& k : base.kids()) ks.push_back(ipow(k, p));
        return prod(std::move(ks));
    }
    Node n;
    n.op = Op::IPow;
    n.power = p;
    n.kids = {std::move(base)};
    return ExprBuilder::make(std::move(n));
}

Expr Expr::exp_of(Expr arg) {
    if (arg.is_const()) return constant(std::exp(arg.const_value()));
    Node n;
    n.op = Op::Exp;
    n.kids = {std::move(arg)};
    return ExprBuilder::make(std::move(n));
}

Expr Expr::inv_of(Expr arg) {
    if (arg.is_const()) {
        if (arg.const_value() == Complex(0.0)) throw std::domain_error("inv_of: zero");
        return constant(Complex(1.0) / arg.const_value());
    }
    if (arg.op() == Op::Inv) return arg.kids()[0];
    if (arg.op() == Op::IPow) return ipow(arg.kids()[0], -arg.power());
    if (arg.op() == Op::Variable) return ipow(arg, -1);
    Node n;
    n.op = Op::Inv;
    n.kids = {std::move(arg)};
    return ExprBuilder::make(std::move(n));
}

Expr operator-(const Expr& a, const Expr& b) {
    return Expr::sum({a, Expr::prod({Expr::constant(-1.0), b})});
}

Expr Expr::operator-() const { return prod({constant(-1.0), *this}); }

Expr derivative(const Expr& e, const Var& v) {
    switch (e.op()) {
        case Expr::Op::Const: return Expr();
        case Expr::Op::Variable: return e.var() == v ? Expr::constant(1.0) : Expr();
        case Expr::Op::Sum: {
            std::vector<Expr> out;
            for (const Expr& k : e.kids()) out.push_back(derivative(k, v));
            return Expr::sum(std::move(out));
        }
        case Expr::Op::Prod: {
            std::vector<Expr> out;
            for (std::size_t i = 0; i < e.kids().size(); ++i) {
                Expr dk = derivative(e.kids()[i], v);
                if (dk.is_zero()) continue;
                std::vector<Expr> fac{dk};
                for (std::size_t j = 0; j < e.kids().size(); ++j)
                    if (j != i) fac.push_back(e.kids()[j]);
                out.push_back(Expr::prod(std::move(fac)));
            }
            return Expr::sum(std::move(out));
        }
        case Expr::Op::IPow: {
            Expr dk = derivative(e.kids()[0], v);
            if (dk.is_zero()) return Expr();
            return Expr::prod({Expr::constant(double(e.power())),
                               Expr::ipow(e.kids()[0], e.power() - 1), dk});
        }
        case Expr::Op::Exp: {
            Expr dk = derivative(e.kids()[0], v);
            if (dk.is_zero()) return Expr();
            return Expr::prod({dk, e});
        }
        case Expr::Op::Inv: {
            Expr dk = derivative(e.kids()[0], v);
            if (dk.is_zero()) return Expr();
            return Expr::prod({Expr::constant(-1.0), dk, Expr::inv_of(e.kids()[0]),
                               Expr::inv_of(e.kids()[0])});
        }
    }
    return Expr();
}

namespace {

Expr substitute_impl(const Expr& e, const std::map<Var, Expr>& sub,
                     std::unordered_map<const Expr::Node*, Expr>& memo) {
    auto it = memo.find(e.raw());
    if (it != memo.end()) return it->second;
    Expr result;
    switch (e.op()) {
        case Expr::Op::Const: result = e; break;
        case Expr::Op::Variable: {
            auto s = sub.find(e.var());
            result = s == sub.end() ? e : s->second;
            break;
        }
        case Expr::Op::Sum: {
            std::vector<Expr> ks;
            for (const Expr& k : e.kids()) ks.push_back(substitute_impl(k, sub, memo));
            result = Expr::sum(std::move(ks));
            break;
        }
        case Expr::Op::Prod: {
            std::vector<Expr> ks;
            for (const Expr& k : e.kids()) ks.push_back(substitute_impl(k, sub, memo));
            result = Expr::prod(std::move(ks));
            break;
        }
        case Expr::Op::IPow:
            result = Expr::ipow(substitute_impl(e.kids()[0], sub, memo), e.power());
            break;
        case Expr::Op::Exp:
            result = Expr::exp_of(substitute_impl(e.kids()[0], sub, memo));
            break;
        case Expr::Op::Inv:
            result = Expr::inv_of(substitute_impl(e.kids()[0], sub, memo));
            break;
    }
    memo.emplace(e.raw(), result);
    return result;
}

} // namespace

Expr substitute(const Expr& e, const std::map<Var, Expr>& sub) {
    std::unordered_map<const Expr::Node*, Expr> memo;
    return substitute_impl(e, sub, memo);
}

namespace {

Complex evaluate_impl(const Expr& e, const std::function<Complex(const Var&)>& point,
                      std::unordered_map<const Expr::Node*, Complex>& memo) {
    auto it = memo.find(e.raw());
    if (it != memo.end()) return it->second;
    Complex r(0.0);
    switch (e.op()) {
        case Expr::Op::Const: r = e.const_value(); break;
        case Expr::Op::Variable: r = point(e.var()); break;
        case Expr::Op::Sum:
            for (const Expr& k : e.kids()) r += evaluate_impl(k, point, memo);
            break;
        case Expr::Op::Prod:
            r = Complex(1.0);
            for (const Expr& k : e.kids()) r *= evaluate_impl(k, point, memo);
            break;
        case Expr::Op::IPow: {
            const Complex b = evaluate_impl(e.kids()[0], point, memo);
            Complex p(1.0);
            for (int i = 0; i < std::abs(e.power()); ++i) p *= b;
            r = e.power() >= 0 ? p : Complex(1.0) / p;
            break;
        }
        case Expr::Op::Exp: r = std::exp(evaluate_impl(e.kids()[0], point, memo)); break;
        case Expr::Op::Inv: r = Complex(1.0) / evaluate_impl(e.kids()[0], point, memo); break;
    }
    memo.emplace(e.raw(), r);
    return r;
}

} // namespace

Complex evaluate(const Expr& e, const std::function<Complex(const Var&)>& point) {
    std::unordered_map<const Expr::Node*, Complex> memo;
    return evaluate_impl(e, point, memo);
}

namespace {

void collect_vars_impl(const Expr& e, std::set<Var>& out,
                       std::set<const Expr::Node*>& seen) {
    if (!seen.insert(e.raw()).second) return;
    if (e.op() == Expr::Op::Variable) {
        out.insert(e.var());
        return;
    }
    for (const Expr& k : e.kids()) collect_vars_impl(k, out, seen);
}

} // namespace

void collect_vars(const Expr& e, std::set<Var>& out) {
    std::set<const Expr::Node*> seen;
    collect_vars_impl(e, out, seen);
}

std::string to_string(const Expr& e) {
    std::ostringstream os;
    switch (e.op()) {
        case Expr::Op::Const: {
            const Complex c = e.const_value();
            if (c.imag() == 0.0)
                os << c.real();
            else
                os << "(" << c.real() << (c.imag() >= 0 ? "+" : "") << c.imag() << "i)";
            break;
        }
        case Expr::Op::Variable: os << var_name(e.var()); break;
        case Expr::Op::Sum:
            os << "(";
            for (std::size_t i = 0; i < e.kids().size(); ++i)
                os << (i ? " + " : "") << to_string(e.kids()[i]);
            os << ")";
            break;
        case Expr::Op::Prod:
            for (std::size_t i = 0; i < e.kids().size(); ++i)
                os << (i ? "*" : "") << to_string(e.kids()[i]);
            break;
        case Expr::Op::IPow: os << to_string(e.kids()[0]) << "^" << e.power(); break;
        case Expr::Op::Exp: os << "exp(" << to_string(e.kids()[0]) << ")"; break;
        case Expr::Op::Inv: os << "1/(" << to_string(e.kids()[0]) << ")"; break;
    }
    return os.str();
}

bool expr_is_zero(const Expr& e, double tol, int trials, std::uint64_t seed) {
    if (e.is_zero()) return true;
    std::set<Var> vars;
    collect_vars(e, vars);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    std::uniform_real_distribution<double> pos(0.3, 2.0);
    for (int trial = 0; trial < trials; ++trial) {
        std::map<Var, Complex> point;
        for (const Var& v : vars) {
            switch (v.kind) {
                case VarKind::PosZ:
                case VarKind::PosZbar: point[v] = Complex(uni(rng), uni(rng)); break;
                case VarKind::PosX: point[v] = Complex(uni(rng), 0.0); break;
                default: point[v] = Complex(pos(rng), 0.0); break;
            }
        }
        const Complex val = evaluate(e, [&](const Var& v) { return point.at(v); });
        if (std::abs(val) > tol) return false;
    }
    return true;
}

// ----------------------------------------------------------------------

namespace {

Poly poly_one() {
    Poly p;
    p.terms[{}] = Complex(1.0);
    return p;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            Monomial m = ma;
            for (const auto& [v, p] : mb) m[v] += p;
            r.terms[m] += ca * cb;
        }
    for (auto it = r.terms.begin(); it != r.terms.end();)
        it = it->second == Complex(0.0) ? r.terms.erase(it) : std::next(it);
    return r;
}

Poly poly_add(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [m, c] : b.terms) r.terms[m] += c;
    for (auto it = r.terms.begin(); it != r.terms.end();)
        it = it->second == Complex(0.0) ? r.terms.erase(it) : std::next(it);
    return r;
}

bool quad_close(const QuadForm& a, const QuadForm& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        if (std::abs(ia->second - ib->second) >
            1e-9 * (1.0 + std::abs(ia->second) + std::abs(ib->second)))
            return false;
    }
    return true;
}

PolyGauss pg_decompose(const Expr& e) {
    switch (e.op()) {
        case Expr::Op::Const: {
            PolyGauss r;
            if (e.const_value() != Complex(0.0)) r.poly.terms[{}] = e.const_value();
            return r;
        }
        case Expr::Op::Variable: {
            PolyGauss r;
            r.poly.terms[{{e.var(), 1}}] = Complex(1.0);
            return r;
        }
        case Expr::Op::Sum: {
            PolyGauss r = pg_decompose(e.kids()[0]);
            for (std::size_t i = 1; i < e.kids().size(); ++i) {
                PolyGauss k = pg_decompose(e.kids()[i]);
                if (r.poly.terms.empty()) {
                    r = std::move(k);
                    continue;
                }
                if (k.poly.terms.empty()) continue;
                if (!quad_close(r.quad, k.quad))
                    throw std::invalid_argument(
                        "poly_gauss_decompose: sum mixes different Gaussians near " +
                        to_string(e.kids()[i]));
                r.poly = poly_add(r.poly, k.poly);
            }
            return r;
        }
        case Expr::Op::Prod: {
            PolyGauss r;
            r.poly = poly_one();
            for (const Expr& k : e.kids()) {
                PolyGauss kk = pg_decompose(k);
                r.poly = poly_mul(r.poly, kk.poly);
                for (const auto& [key, c] : kk.quad) r.quad[key] += c;
            }
            return r;
        }
        case Expr::Op::IPow: {
            if (e.power() < 0) {
                // negative powers only of constants (already folded) -> reject
                throw std::invalid_argument("poly_gauss_decompose: negative power of " +
                                            to_string(e.kids()[0]));
            }
            PolyGauss base = pg_decompose(e.kids()[0]);
            if (!base.quad.empty())
                throw std::invalid_argument("poly_gauss_decompose: power of a Gaussian");
            PolyGauss r;
            r.poly = poly_one();
            for (int i = 0; i < e.power(); ++i) r.poly = poly_mul(r.poly, base.poly);
            return r;
        }
        case Expr::Op::Exp: {
            PolyGauss arg = pg_decompose(e.kids()[0]);
            if (!arg.quad.empty())
                throw std::invalid_argument("poly_gauss_decompose: nested exp");
            PolyGauss r;
            Complex c0(0.0);
            for (const auto& [m, c] : arg.poly.terms) {
                int deg = 0;
                for (const auto& [v, p] : m) deg += p;
                if (deg == 0) {
                    c0 = c;
                } else if (deg == 2) {
                    std::pair<Var, Var> key;
                    if (m.size() == 1)
                        key = {m.begin()->first, m.begin()->first};
                    else
                        key = {m.begin()->first, std::next(m.begin())->first};
                    r.quad[key] += c;
                } else {
                    throw std::invalid_argument(
                        "poly_gauss_decompose: exp argument is not quadratic: " +
                        to_string(e.kids()[0]));
                }
            }
            r.poly.terms[{}] = std::exp(c0);
            return r;
        }
        case Expr::Op::Inv:
            throw std::invalid_argument("poly_gauss_decompose: reciprocal of " +
                                        to_string(e.kids()[0]));
    }
    return {};
}

} // namespace

PolyGauss poly_gauss_decompose(const Expr& e) { return pg_decompose(e); }

} // namespace tholo
