#include "tholo/schwinger.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "tholo/form.hpp"

namespace tholo {

Flag::Flag(int edge_count_, std::vector<EdgeSet> levels_)
    : edge_count(edge_count_), levels(std::move(levels_)) {
    for (const EdgeSet& s : levels) {
        if (s.empty()) throw std::invalid_argument("Flag: empty level");
        for (int e : s)
            if (e < 0 || e >= edge_count) throw std::invalid_argument("Flag: edge out of range");
    }
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (!std::includes(levels[k - 1].begin(), levels[k - 1].end(), levels[k].begin(),
                           levels[k].end()) ||
            levels[k].size() == levels[k - 1].size())
            throw std::invalid_argument("Flag: levels must be strictly decreasing");
    }
}

int Flag::level_of(int e) const {
    int lvl = 0;
    for (std::size_t k = 0; k < levels.size(); ++k)
        if (levels[k].count(e)) lvl = int(k) + 1;
    return lvl;
}

CornerChart::CornerChart(Flag flag_, std::vector<double> rho_, std::map<int, double> xi_,
                         std::map<int, double> t_)
    : flag(std::move(flag_)), rho(std::move(rho_)), xi(std::move(xi_)), t(std::move(t_)) {
    const int m = flag.depth();
    if (int(rho.size()) != m) throw std::invalid_argument("CornerChart: rho size mismatch");
    for (double r : rho)
        if (!(r >= 0.0)) throw std::invalid_argument("CornerChart: rho >= 0 required");
    for (int e = 0; e < flag.edge_count; ++e) {
        const int lvl = flag.level_of(e);
        if (lvl == 0) {
            if (!t.count(e) || !(t.at(e) > 0.0))
                throw std::invalid_argument("CornerChart: missing box coordinate");
        } else if (!xi.count(e) || !(xi.at(e) > 0.0)) {
            throw std::invalid_argument("CornerChart: missing sphere coordinate");
        }
    }
    // normalization: for each level k, sum over e in S_k of
    // (prod_{k < l <= level(e)} rho_l * xi_e)^2 equals 1
    for (int k = 1; k <= m; ++k) {
        double acc = 0.0;
        for (int e : flag.levels[std::size_t(k - 1)]) {
            double v = xi.at(e);
            for (int l = k + 1; l <= flag.level_of(e); ++l) v *= rho[std::size_t(l - 1)];
            acc += v * v;
        }
        if (std::fabs(acc - 1.0) > 1e-9)
            throw std::invalid_argument("CornerChart: level normalization violated");
    }
}

bool CornerChart::on_boundary() const {
    return std::any_of(rho.begin(), rho.end(), [](double r) { return r == 0.0; });
}

SchwingerPoint chart_to_interior(const CornerChart& chart) {
    if (chart.on_boundary())
        throw std::invalid_argument("chart_to_interior: boundary point (some rho = 0)");
    std::vector<double> t(std::size_t(chart.flag.edge_count));
    for (int e = 0; e < chart.flag.edge_count; ++e) {
        const int lvl = chart.flag.level_of(e);
        if (lvl == 0) {
            t[std::size_t(e)] = chart.t.at(e);
        } else {
            double v = chart.xi.at(e);
            for (int l = 1; l <= lvl; ++l) v *= chart.rho[std::size_t(l - 1)];
            t[std::size_t(e)] = v;
        }
    }
    return SchwingerPoint(std::move(t));
}

CornerChart interior_to_chart(const SchwingerPoint& t, const Flag& flag) {
    const int m = flag.depth();
    std::vector<double> r(std::size_t(m) + 1, 1.0); // r[k] = sqrt(sum_{e in S_k} t_e^2)
    for (int k = 1; k <= m; ++k) {
        double acc = 0.0;
        for (int e : flag.levels[std::size_t(k - 1)]) acc += t[std::size_t(e)] * t[std::size_t(e)];
        r[std::size_t(k)] = std::sqrt(acc);
    }
    std::vector<double> rho(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k)
        rho[std::size_t(k - 1)] = k == 1 ? r[1] : r[std::size_t(k)] / r[std::size_t(k - 1)];
    std::map<int, double> xi, box;
    for (int e = 0; e < flag.edge_count; ++e) {
        const int lvl = flag.level_of(e);
        if (lvl == 0)
            box[e] = t[std::size_t(e)];
        else
            xi[e] = t[std::size_t(e)] / r[std::size_t(lvl)];
    }
    return CornerChart(flag, std::move(rho), std::move(xi), std::move(box));
}

CornerChart t_square(const CornerChart& chart) {
    const Flag& flag = chart.flag;
    const int m = flag.depth();
    // Partial squared radii with the common rho powers of each level taken
    // out: D_k = sum_{e in S_k} (prod_{k < l <= level(e)} rho_l^2 * xi_e^2)^2,
    // finite and positive down to the boundary.
    std::vector<double> d(std::size_t(m) + 1, 1.0);
    for (int k = 1; k <= m; ++k) {
        double acc = 0.0;
        for (int e : flag.levels[std::size_t(k - 1)]) {
            double v = chart.xi.at(e) * chart.xi.at(e);
            for (int l = k + 1; l <= flag.level_of(e); ++l)
                v *= chart.rho[std::size_t(l - 1)] * chart.rho[std::size_t(l - 1)];
            acc += v * v;
        }
        d[std::size_t(k)] = acc;
    }
    std::vector<double> rho(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
        const double rk = chart.rho[std::size_t(k - 1)];
        rho[std::size_t(k - 1)] =
            rk * rk * std::sqrt(d[std::size_t(k)] / (k == 1 ? 1.0 : d[std::size_t(k - 1)]));
    }
    std::map<int, double> xi, box;
    for (auto& [e, v] : chart.t) box[e] = v * v;
    for (auto& [e, v] : chart.xi)
        xi[e] = v * v / std::sqrt(d[std::size_t(flag.level_of(e))]);
    return CornerChart(flag, std::move(rho), std::move(xi), std::move(box));
}

// ----------------------------------------------------------------------

namespace {

struct ChartMonomial {
    std::vector<int> rho_exp;
    double coeff;
};

// t_e as a monomial in the chart coordinates.
ChartMonomial edge_monomial(const CornerChart& chart, int e) {
    const int m = chart.flag.depth();
    ChartMonomial cm{std::vector<int>(std::size_t(m), 0), 0.0};
    const int lvl = chart.flag.level_of(e);
    if (lvl == 0) {
        cm.coeff = chart.t.at(e);
    } else {
        cm.coeff = chart.xi.at(e);
        for (int l = 1; l <= lvl; ++l) cm.rho_exp[std::size_t(l - 1)] = 1;
    }
    return cm;
}

ChartMonomial product_over(const CornerChart& chart, const EdgeSet& edges, double sign,
                           int skip = -1) {
    const int m = chart.flag.depth();
    ChartMonomial cm{std::vector<int>(std::size_t(m), 0), sign};
    for (int e : edges) {
        if (e == skip) continue;
        ChartMonomial f = edge_monomial(chart, e);
        cm.coeff *= f.coeff;
        for (int l = 0; l < m; ++l) cm.rho_exp[std::size_t(l)] += f.rho_exp[std::size_t(l)];
    }
    return cm;
}

struct FactoredSum {
    std::vector<int> min_exp;
    double reduced; // sum of coeff * prod rho^(exp - min_exp) at the chart point
    bool empty = true;
};

FactoredSum factor_and_evaluate(const CornerChart& chart, const std::vector<ChartMonomial>& terms) {
    FactoredSum fs;
    const int m = chart.flag.depth();
    fs.min_exp.assign(std::size_t(m), 0);
    if (terms.empty()) return fs;
    fs.empty = false;
    fs.min_exp = terms[0].rho_exp;
    for (const ChartMonomial& t : terms)
        for (int l = 0; l < m; ++l)
            fs.min_exp[std::size_t(l)] = std::min(fs.min_exp[std::size_t(l)], t.rho_exp[std::size_t(l)]);
    fs.reduced = 0.0;
    for (const ChartMonomial& t : terms) {
        double v = t.coeff;
        for (int l = 0; l < m; ++l) {
            const int p = t.rho_exp[std::size_t(l)] - fs.min_exp[std::size_t(l)];
            for (int i = 0; i < p; ++i) v *= chart.rho[std::size_t(l)];
        }
        fs.reduced += v;
    }
    return fs;
}

double evaluate_ratio(const CornerChart& chart, const FactoredSum& num, const FactoredSum& den) {
    if (num.empty) return 0.0;
    if (den.empty) throw std::logic_error("extended inverse: empty denominator");
    double v = num.reduced / den.reduced;
    for (std::size_t l = 0; l < num.min_exp.size(); ++l) {
        const int p = num.min_exp[l] - den.min_exp[l];
        const double r = chart.rho[l];
        if (p > 0) {
            for (int i = 0; i < p; ++i) v *= r;
        } else if (p < 0) {
            if (r == 0.0)
                throw std::runtime_error("extended inverse: negative rho power at the boundary");
            for (int i = 0; i < -p; ++i) v /= r;
        }
    }
    return v;
}

FactoredSum tree_complements(const DecoratedGraph& g, const CornerChart& chart) {
    auto trees = spanning_trees(g);
    if (!trees) throw std::invalid_argument("extended inverse: graph disconnected");
    std::vector<ChartMonomial> terms;
    for (const EdgeSet& tree : *trees) {
        EdgeSet comp;
        for (int e = 0; e < g.edge_count(); ++e)
            if (!tree.count(e)) comp.insert(e);
        terms.push_back(product_over(chart, comp, 1.0));
    }
    return factor_and_evaluate(chart, terms);
}

} // namespace

double extended_m_inverse(const DecoratedGraph& g, const CornerChart& chart, int i, int j) {
    const int n = g.vertex_count() - 1;
    if (i < 1 || i > n || j < 1 || j > n)
        throw std::invalid_argument("extended_m_inverse: index out of range");
    std::vector<ChartMonomial> num;
    for (const EdgeSet& cut : cut_sets_or_empty(g, {i, j}, {g.vertex_count()}))
        num.push_back(product_over(chart, cut, 1.0));
    return evaluate_ratio(chart, factor_and_evaluate(chart, num), tree_complements(g, chart));
}

double extended_d_inverse(const DecoratedGraph& g, const CornerChart& chart, int e, int j) {
    const int n = g.vertex_count() - 1;
    if (e < 0 || e >= g.edge_count() || j < 1 || j > n)
        throw std::invalid_argument("extended_d_inverse: index out of range");
    const Edge& ed = g.edge(e);
    std::vector<ChartMonomial> num;
    for (const EdgeSet& cut :
         cut_sets_or_empty(g, {j, ed.head}, {g.vertex_count(), ed.tail})) {
        if (!cut.count(e)) throw std::logic_error("extended_d_inverse: cut misses its edge");
        num.push_back(product_over(chart, cut, 1.0, e));
    }
    for (const EdgeSet& cut :
         cut_sets_or_empty(g, {j, ed.tail}, {g.vertex_count(), ed.head})) {
        if (!cut.count(e)) throw std::logic_error("extended_d_inverse: cut misses its edge");
        num.push_back(product_over(chart, cut, -1.0, e));
    }
    return evaluate_ratio(chart, factor_and_evaluate(chart, num), tree_complements(g, chart));
}

// ----------------------------------------------------------------------

int origin_stratum_sign(const EdgeSet& subgraph, int edge_count) {
    std::uint64_t s_mask = 0, b_mask = 0;
    for (int e = 0; e < edge_count; ++e) {
        if (subgraph.count(e))
            s_mask |= 1ull << e;
        else
            b_mask |= 1ull << e;
    }
    return -wedge_sign(s_mask, b_mask);
}

int scale_face_sign(int e) { return (e % 2 == 0) ? 1 : -1; }

std::vector<BoundaryStratum> boundary_strata(const DecoratedGraph& g, double L) {
    (void)L;
    if (!g.is_connected()) throw std::invalid_argument("boundary_strata: graph disconnected");
    const int m = g.edge_count();
    std::vector<BoundaryStratum> out;
    for (std::uint32_t bits = 1; bits < (1u << m); ++bits) {
        EdgeSet s;
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) s.insert(e);
        out.push_back({BoundaryStratum::Kind::Origin, s, origin_stratum_sign(s, m)});
    }
    for (int e = 0; e < m; ++e)
        out.push_back({BoundaryStratum::Kind::ScaleFace, {e}, scale_face_sign(e)});
    return out;
}

void hyperspherical(const std::vector<double>& theta, std::vector<double>& xi, Mat* jac) {
    const std::size_t k = theta.size() + 1;
    xi.assign(k, 1.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t a = 0; a < std::min(i, theta.size()); ++a) xi[i] *= std::sin(theta[a]);
        if (i < theta.size()) xi[i] *= std::cos(theta[i]);
    }
    if (jac) {
        *jac = Mat(k, k - 1);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t a = 0; a < k - 1; ++a) {
                if (a > i) continue; // xi_i depends on theta_a only for a <= i
                double v = 1.0;
                for (std::size_t b = 0; b < std::min(i, theta.size()); ++b) {
                    if (b == a)
                        v *= std::cos(theta[b]);
                    else
                        v *= std::sin(theta[b]);
                }
                if (i < theta.size()) {
                    if (a == i)
                        v *= -std::sin(theta[i]);
                    else
                        v *= std::cos(theta[i]);
                }
                (*jac)(i, a) = v;
            }
    }
}

// ----------------------------------------------------------------------

namespace {

IntegralResult box_top_at(const DtFormEvaluator& eval, int m, double lo, double hi, int nodes) {
    IntegralResult res;
    const std::uint64_t top = (m >= 64) ? ~0ull : ((1ull << m) - 1);
    std::vector<Rule1D> axes(std::size_t(m), gauss_legendre(nodes, lo, hi));
    Complex acc(0.0);
    long count = 0;
    tensor_for_each(axes, [&](const std::vector<double>& t, double w) {
        auto coeffs = eval(t);
        auto it = coeffs.find(top);
        if (it != coeffs.end()) acc += w * it->second;
        ++count;
    });
    res.value = acc;
    res.nodes = count;
    return res;
}

} // namespace

IntegralResult integrate_box_top(const DtFormEvaluator& eval, int m, double lo, double hi,
                                 const QuadratureSpec& quad) {
    if (m == 0) {
        IntegralResult res;
        auto coeffs = eval({});
        auto it = coeffs.find(0);
        res.value = it == coeffs.end() ? Complex(0.0) : it->second;
        res.nodes = 1;
        res.seed = quad.seed;
        return res;
    }
    if (!(hi > lo)) {
        IntegralResult res;
        res.seed = quad.seed;
        return res;
    }
    const int n = std::max(4, quad.nodes_per_axis);
    const int n0 = std::max(3, (2 * n) / 3);
    IntegralResult coarse = box_top_at(eval, m, lo, hi, n0);
    IntegralResult fine = box_top_at(eval, m, lo, hi, n);
    fine.error = std::abs(fine.value - coarse.value);
    fine.nodes += coarse.nodes;
    fine.seed = quad.seed;
    return fine;
}

namespace {

struct StratumAccumulator {
    Complex value{0.0};
    double rich_err = 0.0;
    long nodes = 0;
};

// Boundary values are extrapolated pointwise (Richardson in the radius at
// each quadrature node) and only then integrated over the sphere-times-box
// face. Extrapolating the whole slice integral instead would let mass that
// migrates into deeper corners leak into this stratum and double-count it.
StratumAccumulator stratum_run(const DtFormEvaluator& eval, int m,
                               const std::vector<int>& s_edges, double L, int nodes, int levels,
                               double rho0) {
    const int k = int(s_edges.size());
    std::vector<bool> in_s(std::size_t(m), false);
    for (int e : s_edges) in_s[std::size_t(e)] = true;
    std::vector<int> b_edges;
    for (int e = 0; e < m; ++e)
        if (!in_s[std::size_t(e)]) b_edges.push_back(e);

    std::vector<Rule1D> axes;
    const double half_pi = 0.5 * std::acos(-1.0);
    for (int a = 0; a < k - 1; ++a) axes.push_back(gauss_legendre(nodes, 0.0, half_pi));
    for (std::size_t b = 0; b < b_edges.size(); ++b)
        axes.push_back(gauss_legendre(nodes, 0.0, std::sqrt(L)));

    std::uint64_t s_mask = 0, b_mask = 0;
    for (int e : s_edges) s_mask |= 1ull << e;
    for (int e : b_edges) b_mask |= 1ull << e;

    StratumAccumulator acc;
    tensor_for_each(axes, [&](const std::vector<double>& pt, double w) {
        std::vector<double> theta(pt.begin(), pt.begin() + (k - 1));
        std::vector<double> xi;
        Mat jac;
        hyperspherical(theta, xi, &jac);

        // keep the whole ladder inside the smoothness radius of this node:
        // closer to a deeper corner (small box coordinate) means a smaller base
        double base = rho0;
        for (std::size_t b = 0; b < b_edges.size(); ++b)
            base = std::min(base, 0.25 * pt[std::size_t(k - 1) + b]);

        std::vector<double> re_l, im_l;
        for (int l = 0; l < levels; ++l) {
            const double rho = base * std::pow(0.5, l);
            std::vector<double> t(static_cast<std::size_t>(m));
            for (int i = 0; i < k; ++i)
                t[std::size_t(s_edges[std::size_t(i)])] = rho * xi[std::size_t(i)];
            for (std::size_t b = 0; b < b_edges.size(); ++b)
                t[std::size_t(b_edges[b])] = pt[std::size_t(k - 1) + b];
            auto coeffs = eval(t);
            ++acc.nodes;

            double rho_pow = 1.0;
            for (int i = 0; i < k - 1; ++i) rho_pow *= rho;

            Complex v(0.0);
            // surviving masks: all of B plus all of S except one edge
            for (int skip = 0; skip < k; ++skip) {
                const std::uint64_t mask =
                    (s_mask & ~(1ull << s_edges[std::size_t(skip)])) | b_mask;
                auto it = coeffs.find(mask);
                if (it == coeffs.end()) continue;
                Mat minor(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(k - 1));
                int r = 0;
                for (int i = 0; i < k; ++i) {
                    if (i == skip) continue;
                    for (int a = 0; a < k - 1; ++a)
                        minor(std::size_t(r), std::size_t(a)) = jac(std::size_t(i), std::size_t(a));
                    ++r;
                }
                const double det = (k == 1) ? 1.0 : lu_det(minor);
                const int merge =
                    wedge_sign(s_mask & ~(1ull << s_edges[std::size_t(skip)]), b_mask);
                v += it->second * rho_pow * det * double(merge);
            }
            re_l.push_back(v.real());
            im_l.push_back(v.imag());
        }
        auto [re, re_err] = richardson_limit(re_l);
        auto [im, im_err] = richardson_limit(im_l);
        acc.value += w * Complex(re, im);
        acc.rich_err += w * std::hypot(re_err, im_err);
    });
    return acc;
}

} // namespace

IntegralResult integrate_origin_stratum(const DtFormEvaluator& eval, int m, const EdgeSet& edges,
                                        double L, const QuadratureSpec& quad) {
    if (edges.empty()) throw std::invalid_argument("integrate_origin_stratum: empty edge set");
    std::vector<int> s_edges(edges.begin(), edges.end());
    IntegralResult res;
    res.seed = quad.seed;
    const int n = std::max(4, quad.nodes_per_axis);
    const int n0 = std::max(3, (2 * n) / 3);
    const int levels = std::max(3, quad.richardson_levels);
    const double rho0 = 0.1 * std::sqrt(L);
    StratumAccumulator fine = stratum_run(eval, m, s_edges, L, n, levels, rho0);
    StratumAccumulator coarse = stratum_run(eval, m, s_edges, L, n0, levels, rho0);
    res.value = fine.value;
    res.nodes = fine.nodes + coarse.nodes;
    const double quad_err = std::abs(fine.value - coarse.value);
    res.error = fine.rich_err + quad_err;
    res.converged = fine.rich_err <= std::max(1e-7, 0.05 * std::abs(res.value));
    return res;
}

IntegralResult integrate_scale_face(const DtFormEvaluator& eval, int m, int e, double L,
                                    const QuadratureSpec& quad) {
    if (e < 0 || e >= m) throw std::invalid_argument("integrate_scale_face: bad edge");
    IntegralResult res;
    res.seed = quad.seed;
    const std::uint64_t mask = ((m >= 64) ? ~0ull : ((1ull << m) - 1)) & ~(1ull << e);
    auto run = [&](int nodes) {
        std::vector<Rule1D> axes(std::size_t(m - 1), gauss_legendre(nodes, 0.0, std::sqrt(L)));
        Complex acc(0.0);
        tensor_for_each(axes, [&](const std::vector<double>& pt, double w) {
            std::vector<double> t(static_cast<std::size_t>(m));
            int b = 0;
            for (int i = 0; i < m; ++i) t[std::size_t(i)] = (i == e) ? std::sqrt(L) : pt[std::size_t(b++)];
            auto coeffs = eval(t);
            ++res.nodes;
            auto it = coeffs.find(mask);
            if (it != coeffs.end()) acc += w * it->second;
        });
        return acc;
    };
    const int n = std::max(4, quad.nodes_per_axis);
    const int n0 = std::max(3, (2 * n) / 3);
    const Complex coarse = run(n0);
    const Complex fine = run(n);
    res.value = fine;
    res.error = std::abs(fine - coarse);
    return res;
}

DtFormEvaluator dt_form_evaluator(const Form& f) {
    return [f](const std::vector<double>& t) {
        NumericForm nf = evaluate(f, [&](const Var& v) -> Complex {
            if (v.kind != VarKind::Schwinger)
                throw std::invalid_argument("dt_form_evaluator: non-Schwinger variable");
            return Complex(t.at(std::size_t(v.a)), 0.0);
        });
        // translate algebra masks to edge masks
        std::map<std::uint64_t, Complex> out;
        const auto& gens = f.algebra()->gens();
        for (const auto& [mask, c] : nf.coeff) {
            std::uint64_t em = 0;
            std::uint64_t rest = mask;
            while (rest) {
                const int i = std::countr_zero(rest);
                rest &= rest - 1;
                const Gen& g = gens[std::size_t(i)];
                if (g.kind != GenKind::Dt)
                    throw std::invalid_argument("dt_form_evaluator: non-Dt generator");
                em |= 1ull << g.a;
            }
            out[em] += c;
        }
        return out;
    };
}

double stokes_residual(const DecoratedGraph& g, const Form& omega, double L,
                       const QuadratureSpec& quad) {
    const int m = g.edge_count();
    if (m > 3) throw std::invalid_argument("stokes_residual: desk scale is m <= 3");
    Form domega = exterior_derivative(omega, {VarKind::Schwinger});
    DtFormEvaluator ev_omega = dt_form_evaluator(omega);
    DtFormEvaluator ev_domega = dt_form_evaluator(domega);

    // Volume integral of d omega in polar coordinates: the positive-orthant
    // ball of radius sqrt(L) sits inside the box, and the leftover region is
    // covered by extending the radius to sqrt(m L) while clamping integrand
    // evaluation to the box (coefficients vanish outside by construction of
    // the test forms; polynomial forms are integrated directly instead).
    const std::uint64_t top = (1ull << m) - 1;
    bool origin_localized = false;
    {
        // detect a Gaussian cutoff: coefficients that vanish at the far corner
        std::vector<double> corner(std::size_t(m), std::sqrt(L));
        double far = 0.0;
        for (const auto& [mask, c] : ev_omega(corner)) {
            (void)mask;
            far += std::abs(c);
        }
        std::vector<double> near(std::size_t(m), 0.05 * std::sqrt(L));
        double near_sum = 0.0;
        for (const auto& [mask, c] : ev_omega(near)) {
            (void)mask;
            near_sum += std::abs(c);
        }
        origin_localized = far < 1e-9 * (1.0 + near_sum);
    }

    Complex volume(0.0);
    const int n = std::max(6, quad.nodes_per_axis);
    if (!origin_localized) {
        IntegralResult box = integrate_box_top(ev_domega, m, 0.0, std::sqrt(L), quad);
        volume = box.value;
    } else {
        // polar over the orthant ball of radius sqrt(L); the cutoff makes the
        // remainder negligible
        const double half_pi = 0.5 * std::acos(-1.0);
        std::vector<Rule1D> axes;
        for (int a = 0; a < m - 1; ++a) axes.push_back(gauss_legendre(n, 0.0, half_pi));
        Rule1D rad = gauss_legendre(4 * n, 0.0, std::sqrt(L));
        tensor_for_each(axes, [&](const std::vector<double>& th, double wang) {
            std::vector<double> xi;
            Mat jac;
            hyperspherical(th, xi, &jac);
            // det [xi | J] for the polar volume element r^{m-1}
            Mat full(static_cast<std::size_t>(m), static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) {
                full(std::size_t(i), 0) = xi[std::size_t(i)];
                for (int a = 0; a < m - 1; ++a)
                    full(std::size_t(i), std::size_t(a + 1)) = jac(std::size_t(i), std::size_t(a));
            }
            const double angular = lu_det(full);
            for (std::size_t ri = 0; ri < rad.nodes.size(); ++ri) {
                const double r = rad.nodes[ri];
                std::vector<double> t(static_cast<std::size_t>(m));
                for (int i = 0; i < m; ++i) t[std::size_t(i)] = r * xi[std::size_t(i)];
                auto coeffs = ev_domega(t);
                auto it = coeffs.find(top);
                if (it == coeffs.end()) continue;
                double rpow = 1.0;
                for (int i = 0; i < m - 1; ++i) rpow *= r;
                volume += wang * rad.weights[ri] * it->second * rpow * angular;
            }
        });
    }

    Complex boundary(0.0);
    for (const BoundaryStratum& bs : boundary_strata(g, L)) {
        IntegralResult part =
            bs.kind == BoundaryStratum::Kind::Origin
                ? integrate_origin_stratum(ev_omega, m, bs.edges, L, quad)
                : integrate_scale_face(ev_omega, m, *bs.edges.begin(), L, quad);
        boundary += double(bs.sign) * part.value;
    }
    return std::abs(volume - boundary);
}

} // namespace tholo
