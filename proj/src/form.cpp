#include "tholo/form.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <stdexcept>

namespace tholo {

std::string gen_name(const Gen& g) {
    std::ostringstream os;
    switch (g.kind) {
        case GenKind::Dz: os << "dw" << g.a << "_" << g.b; break;
        case GenKind::Dzbar: os << "dwb" << g.a << "_" << g.b; break;
        case GenKind::Dx: os << "dq" << g.a << "_" << g.b; break;
        case GenKind::Dt: os << "ds" << g.a; break;
        case GenKind::Drho: os << "drho" << g.a; break;
        case GenKind::Dxi: os << "dxi" << g.a << "_" << g.b; break;
    }
    return os.str();
}

Gen gen_of_var(const Var& v) {
    switch (v.kind) {
        case VarKind::PosZ: return {GenKind::Dz, v.a, v.b};
        case VarKind::PosZbar: return {GenKind::Dzbar, v.a, v.b};
        case VarKind::PosX: return {GenKind::Dx, v.a, v.b};
        case VarKind::Schwinger: return {GenKind::Dt, v.a, v.b};
        case VarKind::ChartRho: return {GenKind::Drho, v.a, v.b};
        case VarKind::ChartXi: return {GenKind::Dxi, v.a, v.b};
    }
    throw std::logic_error("gen_of_var: bad kind");
}

Var var_of_gen(const Gen& g) {
    switch (g.kind) {
        case GenKind::Dz: return {VarKind::PosZ, g.a, g.b};
        case GenKind::Dzbar: return {VarKind::PosZbar, g.a, g.b};
        case GenKind::Dx: return {VarKind::PosX, g.a, g.b};
        case GenKind::Dt: return {VarKind::Schwinger, g.a, g.b};
        case GenKind::Drho: return {VarKind::ChartRho, g.a, g.b};
        case GenKind::Dxi: return {VarKind::ChartXi, g.a, g.b};
    }
    throw std::logic_error("var_of_gen: bad kind");
}

std::shared_ptr<const Algebra> Algebra::make(std::vector<Gen> gens) {
    std::sort(gens.begin(), gens.end());
    gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
    if (gens.size() > 64) throw std::invalid_argument("Algebra: more than 64 generators");
    auto a = std::make_shared<Algebra>();
    a->gens_ = std::move(gens);
    return a;
}

int Algebra::index_of(const Gen& g) const {
    auto it = std::lower_bound(gens_.begin(), gens_.end(), g);
    if (it == gens_.end() || *it != g) return -1;
    return int(it - gens_.begin());
}

std::uint64_t Algebra::mask_of(const Gen& g) const {
    const int i = index_of(g);
    if (i < 0) throw std::invalid_argument("Algebra: generator " + gen_name(g) + " not in algebra");
    return 1ull << i;
}

std::uint64_t Algebra::mask_of(const std::vector<Gen>& gs) const {
    std::uint64_t m = 0;
    for (const Gen& g : gs) {
        const std::uint64_t bit = mask_of(g);
        if (m & bit) throw std::invalid_argument("Algebra: repeated generator in subset");
        m |= bit;
    }
    return m;
}

int wedge_sign(std::uint64_t a, std::uint64_t b) {
    int inv = 0;
    std::uint64_t bb = b;
    while (bb) {
        const int j = std::countr_zero(bb);
        bb &= bb - 1;
        inv += std::popcount(a >> (j + 1));
    }
    return (inv & 1) ? -1 : 1;
}

void NumericForm::add(std::uint64_t mask, Complex c) {
    if (c == Complex(0.0)) return;
    auto [it, fresh] = coeff.try_emplace(mask, c);
    if (!fresh) {
        it->second += c;
        if (it->second == Complex(0.0)) coeff.erase(it);
    }
}

NumericForm wedge(const NumericForm& x, const NumericForm& y) {
    if (x.alg != y.alg) throw std::invalid_argument("NumericForm wedge: different algebras");
    NumericForm r(x.alg);
    for (const auto& [ma, ca] : x.coeff)
        for (const auto& [mb, cb] : y.coeff) {
            if (ma & mb) continue;
            r.add(ma | mb, double(wedge_sign(ma, mb)) * ca * cb);
        }
    return r;
}

NumericForm operator+(const NumericForm& x, const NumericForm& y) {
    if (x.alg != y.alg) throw std::invalid_argument("NumericForm add: different algebras");
    NumericForm r = x;
    for (const auto& [m, c] : y.coeff) r.add(m, c);
    return r;
}

NumericForm NumericForm::operator*(Complex s) const {
    NumericForm r(alg);
    for (const auto& [m, c] : coeff) r.add(m, s * c);
    return r;
}

Form Form::scalar(AlgebraPtr alg, Expr c) {
    Form f(std::move(alg));
    f.add_term(0, std::move(c));
    return f;
}

Form Form::generator(AlgebraPtr alg, const Gen& g) {
    Form f(alg);
    f.add_term(alg->mask_of(g), Expr::constant(1.0));
    return f;
}

Form Form::one_form(AlgebraPtr alg, const std::vector<std::pair<Gen, Expr>>& parts) {
    Form f(alg);
    for (const auto& [g, c] : parts) f.add_term(alg->mask_of(g), c);
    return f;
}

void Form::add_term(std::uint64_t mask, Expr c) {
    if (c.is_zero()) return;
    auto it = terms_.find(mask);
    if (it == terms_.end()) {
        terms_.emplace(mask, std::move(c));
    } else {
        Expr s = it->second + c;
        if (s.is_zero())
            terms_.erase(it);
        else
            it->second = std::move(s);
    }
}

Form operator+(const Form& a, const Form& b) {
    if (a.alg_ != b.alg_) throw std::invalid_argument("Form add: different algebras");
    Form r = a;
    for (const auto& [m, c] : b.terms_) r.add_term(m, c);
    return r;
}

Form operator-(const Form& a, const Form& b) {
    if (a.alg_ != b.alg_) throw std::invalid_argument("Form sub: different algebras");
    Form r = a;
    for (const auto& [m, c] : b.terms_) r.add_term(m, -c);
    return r;
}

Form wedge(const Form& a, const Form& b) {
    if (a.alg_ != b.alg_) throw std::invalid_argument("Form wedge: different algebras");
    Form r(a.alg_);
    for (const auto& [ma, ca] : a.terms_)
        for (const auto& [mb, cb] : b.terms_) {
            if (ma & mb) continue;
            const int s = wedge_sign(ma, mb);
            Expr c = s == 1 ? ca * cb : Expr::prod({Expr::constant(-1.0), ca, cb});
            r.add_term(ma | mb, std::move(c));
        }
    return r;
}

Form Form::operator*(const Expr& s) const {
    Form r(alg_);
    for (const auto& [m, c] : terms_) r.add_term(m, s * c);
    return r;
}

Form exterior_derivative(const Form& a, const std::vector<VarKind>& classes) {
    Form r(a.algebra());
    for (const auto& [mask, c] : a.terms()) {
        std::set<Var> vars;
        collect_vars(c, vars);
        for (const Var& v : vars) {
            if (std::find(classes.begin(), classes.end(), v.kind) == classes.end()) continue;
            Expr dc = derivative(c, v);
            if (dc.is_zero()) continue;
            const std::uint64_t gbit = a.algebra()->mask_of(gen_of_var(v));
            if (gbit & mask) continue;
            const int s = wedge_sign(gbit, mask);
            r.add_term(gbit | mask, s == 1 ? dc : -dc);
        }
    }
    return r;
}

Form contract(const Form& a, const std::map<Gen, Expr>& field) {
    Form r(a.algebra());
    std::map<std::uint64_t, Expr> bits;
    for (const auto& [g, c] : field) bits.emplace(a.algebra()->mask_of(g), c);
    for (const auto& [mask, c] : a.terms()) {
        int pos = 0;
        std::uint64_t rest = mask;
        while (rest) {
            const std::uint64_t bit = rest & (0ull - rest);
            rest &= rest - 1;
            auto it = bits.find(bit);
            if (it != bits.end() && !it->second.is_zero()) {
                Expr term = it->second * c;
                r.add_term(mask & ~bit, (pos & 1) ? -term : term);
            }
            ++pos;
        }
    }
    return r;
}

Form pullback(const Form& a, const std::map<Var, Expr>& vars,
              const std::map<Gen, Form>& extra_gens, AlgebraPtr target) {
    // image of each source generator as a 1-form on the target
    std::map<std::uint64_t, Form> images;
    const auto& src = a.algebra();
    for (const auto& [mask, c] : a.terms()) {
        (void)c;
        std::uint64_t rest = mask;
        while (rest) {
            const std::uint64_t bit = rest & (0ull - rest);
            rest &= rest - 1;
            if (images.count(bit)) continue;
            const Gen g = src->gens()[std::size_t(std::countr_zero(bit))];
            auto xit = extra_gens.find(g);
            if (xit != extra_gens.end()) {
                images.emplace(bit, xit->second);
                continue;
            }
            const Var v = var_of_gen(g);
            auto vit = vars.find(v);
            if (vit == vars.end()) {
                images.emplace(bit, Form::generator(target, g));
                continue;
            }
            // d of the substituted expression
            std::set<Var> uvars;
            collect_vars(vit->second, uvars);
            Form img(target);
            for (const Var& u : uvars) {
                Expr du = derivative(vit->second, u);
                if (!du.is_zero()) img.add_term(target->mask_of(gen_of_var(u)), du);
            }
            images.emplace(bit, std::move(img));
        }
    }
    Form r(target);
    for (const auto& [mask, c] : a.terms()) {
        Form acc = Form::scalar(target, substitute(c, vars));
        std::uint64_t rest = mask;
        while (rest && !acc.structurally_zero()) {
            const std::uint64_t bit = rest & (0ull - rest);
            rest &= rest - 1;
            acc = wedge(acc, images.at(bit));
        }
        r = r + acc;
    }
    return r;
}

Expr top_component(const Form& a, const std::vector<Gen>& gens) {
    const std::uint64_t want = a.algebra()->mask_of(gens);
    auto it = a.terms().find(want);
    if (it == a.terms().end()) return Expr();
    // sign of the permutation sorting the requested order into canonical order
    std::vector<int> idx;
    for (const Gen& g : gens) idx.push_back(a.algebra()->index_of(g));
    int inv = 0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j)
            if (idx[i] > idx[j]) ++inv;
    return (inv & 1) ? -it->second : it->second;
}

NumericForm evaluate(const Form& a, const std::function<Complex(const Var&)>& point) {
    NumericForm r(a.algebra());
    for (const auto& [mask, c] : a.terms()) r.add(mask, evaluate(c, point));
    return r;
}

bool form_is_zero(const Form& a, double tol, int trials, std::uint64_t seed) {
    for (const auto& [mask, c] : a.terms()) {
        (void)mask;
        if (!expr_is_zero(c, tol, trials, seed)) return false;
    }
    return true;
}

std::string to_string(const Form& a) {
    if (a.terms().empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [mask, c] : a.terms()) {
        if (!first) os << " + ";
        first = false;
        os << "(" << to_string(c) << ")";
        std::uint64_t rest = mask;
        while (rest) {
            const int i = std::countr_zero(rest);
            rest &= rest - 1;
            os << " " << gen_name(a.algebra()->gens()[std::size_t(i)]);
        }
    }
    return os.str();
}

} // namespace tholo
