#include "tholo/graph.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tholo {

Signature::Signature(int d_, int d_prime_) : d(d_), d_prime(d_prime_) {
    if (d < 0 || d_prime < 0 || d + d_prime < 1)
        throw std::invalid_argument("Signature: need d, d' >= 0 and d + d' >= 1");
}

namespace {

void check_edges(int vertex_count, const std::vector<Edge>& edges, bool allow_loops) {
    if (vertex_count < 1) throw std::invalid_argument("graph: need at least one vertex");
    for (const Edge& e : edges) {
        if (e.head < 1 || e.head > vertex_count || e.tail < 1 || e.tail > vertex_count)
            throw std::invalid_argument("graph: vertex index out of range");
        if (!allow_loops && e.head == e.tail)
            throw std::invalid_argument("graph: self-loop not permitted here");
        for (int n : e.decoration)
            if (n < 0) throw std::invalid_argument("graph: decoration must be non-negative");
    }
}

} // namespace

DecoratedGraph::DecoratedGraph(int vertex_count, std::vector<Edge> edges)
    : vertex_count_(vertex_count), edges_(std::move(edges)) {
    check_edges(vertex_count_, edges_, /*allow_loops=*/false);
}

DecoratedGraph DecoratedGraph::with_self_loops(int vertex_count, std::vector<Edge> edges) {
    check_edges(vertex_count, edges, /*allow_loops=*/true);
    DecoratedGraph g;
    g.vertex_count_ = vertex_count;
    g.edges_ = std::move(edges);
    return g;
}

bool DecoratedGraph::has_self_loop() const {
    return std::any_of(edges_.begin(), edges_.end(),
                       [](const Edge& e) { return e.head == e.tail; });
}

int DecoratedGraph::component_count() const {
    std::vector<int> parent(static_cast<std::size_t>(vertex_count_));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[std::size_t(v)] != v) v = parent[std::size_t(v)] = parent[std::size_t(parent[std::size_t(v)])];
        return v;
    };
    for (const Edge& e : edges_) parent[std::size_t(find(e.head - 1))] = find(e.tail - 1);
    int count = 0;
    for (int v = 0; v < vertex_count_; ++v)
        if (find(v) == v) ++count;
    return count;
}

bool DecoratedGraph::is_connected() const { return component_count() == 1; }

int DecoratedGraph::decoration_degree() const {
    int total = 0;
    for (const Edge& e : edges_)
        for (int n : e.decoration) total += n;
    return total;
}

SchwingerPoint::SchwingerPoint(std::vector<double> values) : t(std::move(values)) {
    for (double v : t)
        if (!(v > 0.0)) throw std::invalid_argument("SchwingerPoint: t_e > 0 required");
}

Mat incidence_matrix(const DecoratedGraph& g) {
    if (g.has_self_loop())
        throw std::invalid_argument("incidence_matrix: graph has a self-loop");
    Mat rho(std::size_t(g.edge_count()), std::size_t(g.vertex_count()));
    for (int e = 0; e < g.edge_count(); ++e) {
        rho(std::size_t(e), std::size_t(g.edge(e).head - 1)) = 1.0;
        rho(std::size_t(e), std::size_t(g.edge(e).tail - 1)) = -1.0;
    }
    return rho;
}

namespace {

// Components of the subgraph on all vertices with the given edges.
int components_with_edges(const DecoratedGraph& g, const EdgeSet& keep) {
    std::vector<int> parent(static_cast<std::size_t>(g.vertex_count()));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[std::size_t(v)] != v) v = parent[std::size_t(v)] = parent[std::size_t(parent[std::size_t(v)])];
        return v;
    };
    for (int e : keep) parent[std::size_t(find(g.edge(e).head - 1))] = find(g.edge(e).tail - 1);
    int count = 0;
    for (int v = 0; v < g.vertex_count(); ++v)
        if (find(v) == v) ++count;
    return count;
}

bool subset_is_forest(const DecoratedGraph& g, const EdgeSet& keep) {
    // Acyclic iff #vertices - #components == #edges.
    return g.vertex_count() - components_with_edges(g, keep) == int(keep.size());
}

// Component id per vertex under the kept edges.
std::vector<int> component_ids(const DecoratedGraph& g, const EdgeSet& keep) {
    std::vector<int> parent(static_cast<std::size_t>(g.vertex_count()));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[std::size_t(v)] != v) v = parent[std::size_t(v)] = parent[std::size_t(parent[std::size_t(v)])];
        return v;
    };
    for (int e : keep) parent[std::size_t(find(g.edge(e).head - 1))] = find(g.edge(e).tail - 1);
    std::vector<int> id(static_cast<std::size_t>(g.vertex_count()));
    for (int v = 0; v < g.vertex_count(); ++v) id[std::size_t(v)] = find(v);
    return id;
}

} // namespace

std::optional<std::set<EdgeSet>> spanning_trees(const DecoratedGraph& g) {
    if (!g.is_connected()) return std::nullopt;
    const int m = g.edge_count();
    const int want = g.vertex_count() - 1;
    std::set<EdgeSet> trees;
    for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
        if (int(std::popcount(bits)) != want) continue;
        EdgeSet s;
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) s.insert(e);
        if (components_with_edges(g, s) == 1 && subset_is_forest(g, s)) trees.insert(s);
    }
    return trees;
}

std::set<EdgeSet> cut_sets_or_empty(const DecoratedGraph& g, const std::set<int>& v1,
                                    const std::set<int>& v2) {
    for (int v : v1)
        if (v2.count(v)) return {};
    if (v1.empty() || v2.empty()) return {};

    const int m = g.edge_count();
    auto divides_into_two_trees = [&](const EdgeSet& cut) {
        EdgeSet keep;
        for (int e = 0; e < m; ++e)
            if (!cut.count(e)) keep.insert(e);
        if (components_with_edges(g, keep) != 2) return false;
        if (!subset_is_forest(g, keep)) return false;
        const std::vector<int> id = component_ids(g, keep);
        const int id1 = id[std::size_t(*v1.begin() - 1)];
        const int id2 = id[std::size_t(*v2.begin() - 1)];
        if (id1 == id2) return false;
        for (int v : v1)
            if (id[std::size_t(v - 1)] != id1) return false;
        for (int v : v2)
            if (id[std::size_t(v - 1)] != id2) return false;
        return true;
    };

    std::vector<EdgeSet> candidates;
    for (std::uint32_t bits = 1; bits < (1u << m); ++bits) {
        EdgeSet cut;
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) cut.insert(e);
        if (divides_into_two_trees(cut)) candidates.push_back(cut);
    }
    std::set<EdgeSet> result;
    for (const EdgeSet& c : candidates) {
        bool minimal = true;
        for (const EdgeSet& other : candidates) {
            if (other == c) continue;
            if (std::includes(c.begin(), c.end(), other.begin(), other.end())) {
                minimal = false;
                break;
            }
        }
        if (minimal) result.insert(c);
    }
    return result;
}

std::set<EdgeSet> cut_sets(const DecoratedGraph& g, const std::set<int>& v1,
                           const std::set<int>& v2) {
    if (v1.empty() || v2.empty())
        throw std::invalid_argument("cut_sets: vertex sets must be nonempty");
    for (int v : v1)
        if (v2.count(v)) throw std::invalid_argument("cut_sets: vertex sets overlap");
    return cut_sets_or_empty(g, v1, v2);
}

Mat weighted_laplacian(const DecoratedGraph& g, const SchwingerPoint& t) {
    if (!g.is_connected()) throw std::invalid_argument("weighted_laplacian: graph disconnected");
    if (g.has_self_loop()) throw std::invalid_argument("weighted_laplacian: self-loop present");
    if (int(t.size()) != g.edge_count())
        throw std::invalid_argument("weighted_laplacian: wrong number of Schwinger parameters");
    const std::size_t n = std::size_t(g.vertex_count() - 1);
    Mat m(n, n);
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        const double w = 1.0 / t[std::size_t(e)];
        auto add = [&](int a, int b, double s) {
            if (a <= int(n) && b <= int(n)) m(std::size_t(a - 1), std::size_t(b - 1)) += s * w;
        };
        add(ed.head, ed.head, 1.0);
        add(ed.tail, ed.tail, 1.0);
        add(ed.head, ed.tail, -1.0);
        add(ed.tail, ed.head, -1.0);
    }
    return m;
}

double kirchhoff_det(const DecoratedGraph& g, const SchwingerPoint& t) {
    auto trees = spanning_trees(g);
    if (!trees) throw std::invalid_argument("kirchhoff_det: graph disconnected");
    double num = 0.0;
    for (const EdgeSet& tree : *trees) {
        double prod = 1.0;
        for (int e = 0; e < g.edge_count(); ++e)
            if (!tree.count(e)) prod *= t[std::size_t(e)];
        num += prod;
    }
    double denom = 1.0;
    for (int e = 0; e < g.edge_count(); ++e) denom *= t[std::size_t(e)];
    return num / denom;
}

namespace {

double tree_complement_sum(const DecoratedGraph& g, const SchwingerPoint& t) {
    auto trees = spanning_trees(g);
    if (!trees) throw std::invalid_argument("graph disconnected");
    double num = 0.0;
    for (const EdgeSet& tree : *trees) {
        double prod = 1.0;
        for (int e = 0; e < g.edge_count(); ++e)
            if (!tree.count(e)) prod *= t[std::size_t(e)];
        num += prod;
    }
    return num;
}

} // namespace

double laplacian_inverse_entry(const DecoratedGraph& g, const SchwingerPoint& t, int i, int j) {
    const int n = g.vertex_count() - 1;
    if (i < 1 || i > n || j < 1 || j > n)
        throw std::invalid_argument("laplacian_inverse_entry: index out of range");
    const int base = g.vertex_count();
    double num = 0.0;
    for (const EdgeSet& cut : cut_sets_or_empty(g, {i, j}, {base})) {
        double prod = 1.0;
        for (int e : cut) prod *= t[std::size_t(e)];
        num += prod;
    }
    return num / tree_complement_sum(g, t);
}

double d_inverse_entry(const DecoratedGraph& g, const SchwingerPoint& t, int e, int j) {
    const int n = g.vertex_count() - 1;
    if (e < 0 || e >= g.edge_count() || j < 1 || j > n)
        throw std::invalid_argument("d_inverse_entry: index out of range");
    double acc = 0.0;
    const Edge& ed = g.edge(e);
    for (int i = 1; i <= n; ++i) {
        double rho = 0.0;
        if (ed.head == i) rho += 1.0;
        if (ed.tail == i) rho -= 1.0;
        if (rho != 0.0) acc += rho * laplacian_inverse_entry(g, t, i, j);
    }
    return acc / t[std::size_t(e)];
}

bool is_laman(const DecoratedGraph& g, const Signature& sig) {
    if (!g.is_connected() || g.has_self_loop())
        throw std::invalid_argument("is_laman: connected graph without self-loops required");
    const int D = sig.total();
    const int m = g.edge_count();
    if (D * g.vertex_count() != (D - 1) * m + D + 1) return false;
    for (std::uint32_t bits = 1; bits < (1u << m); ++bits) {
        std::set<int> verts;
        int edges = 0;
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) {
                ++edges;
                verts.insert(g.edge(e).head);
                verts.insert(g.edge(e).tail);
            }
        if (verts.size() < 2) continue;
        if (D * int(verts.size()) < (D - 1) * edges + D + 1) return false;
    }
    return true;
}

int betti_1(const DecoratedGraph& g) {
    return g.edge_count() - g.vertex_count() + g.component_count();
}

DecoratedGraph contract_edge(const DecoratedGraph& g, int e,
                             std::vector<int>* flagged_self_loops) {
    if (e < 0 || e >= g.edge_count()) throw std::invalid_argument("contract_edge: bad edge index");
    const Edge& ed = g.edge(e);
    if (ed.head == ed.tail) throw std::invalid_argument("contract_edge: cannot contract a self-loop");
    const int keep = std::min(ed.head, ed.tail);
    const int drop = std::max(ed.head, ed.tail);
    auto remap = [&](int v) {
        if (v == drop) v = keep;
        return v > drop ? v - 1 : v;
    };
    std::vector<Edge> edges;
    for (int k = 0; k < g.edge_count(); ++k) {
        if (k == e) continue;
        Edge ne = g.edge(k);
        ne.head = remap(ne.head);
        ne.tail = remap(ne.tail);
        if (ne.head == ne.tail && flagged_self_loops) flagged_self_loops->push_back(k);
        edges.push_back(ne);
    }
    return DecoratedGraph::with_self_loops(g.vertex_count() - 1, std::move(edges));
}

// ----------------------------------------------------------------------

StableGraph::StableGraph(int vertex_count, std::vector<std::pair<int, int>> edges,
                         std::vector<int> genus, std::vector<int> legs)
    : vertex_count_(vertex_count), edges_(std::move(edges)), genus_(std::move(genus)),
      legs_(std::move(legs)) {
    if (vertex_count_ < 1) throw std::invalid_argument("StableGraph: need a vertex");
    if (int(genus_.size()) != vertex_count_)
        throw std::invalid_argument("StableGraph: genus list size mismatch");
    if (legs_.empty()) legs_.assign(std::size_t(vertex_count_), 0);
    if (int(legs_.size()) != vertex_count_)
        throw std::invalid_argument("StableGraph: leg list size mismatch");
    std::vector<int> valency(static_cast<std::size_t>(vertex_count_));
    for (auto& [a, b] : edges_) {
        if (a < 1 || a > vertex_count_ || b < 1 || b > vertex_count_)
            throw std::invalid_argument("StableGraph: vertex index out of range");
        valency[std::size_t(a - 1)] += 1;
        valency[std::size_t(b - 1)] += 1; // a self-loop counts twice
    }
    for (int v = 0; v < vertex_count_; ++v) {
        const int val = valency[std::size_t(v)] + legs_[std::size_t(v)];
        const int gv = genus_[std::size_t(v)];
        if (gv < 0) throw std::invalid_argument("StableGraph: negative genus");
        if (gv == 0 && val < 3)
            throw std::invalid_argument("StableGraph: genus-0 vertex with valency < 3");
        if (gv == 1 && val < 1)
            throw std::invalid_argument("StableGraph: genus-1 vertex with valency < 1");
    }
}

int StableGraph::betti_1() const {
    std::vector<int> parent(static_cast<std::size_t>(vertex_count_));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[std::size_t(v)] != v) v = parent[std::size_t(v)] = parent[std::size_t(parent[std::size_t(v)])];
        return v;
    };
    for (auto& [a, b] : edges_) parent[std::size_t(find(a - 1))] = find(b - 1);
    int comp = 0;
    for (int v = 0; v < vertex_count_; ++v)
        if (find(v) == v) ++comp;
    return int(edges_.size()) - vertex_count_ + comp;
}

int StableGraph::genus() const {
    return betti_1() + std::accumulate(genus_.begin(), genus_.end(), 0);
}

long StableGraph::automorphism_order() const {
    if (vertex_count_ > 6 || int(edges_.size()) > 8)
        throw std::invalid_argument("automorphism_order: graph above brute-force cap");
    std::vector<int> perm(static_cast<std::size_t>(vertex_count_));
    std::iota(perm.begin(), perm.end(), 0);
    auto key = [&](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    std::map<std::pair<int, int>, int> mult;
    for (auto& [a, b] : edges_) mult[key(a, b)] += 1;
    auto factorial = [](int n) {
        long f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    long total = 0;
    do {
        bool ok = true;
        for (int v = 1; v <= vertex_count_ && ok; ++v) {
            const int w = perm[std::size_t(v - 1)] + 1;
            ok = genus_[std::size_t(v - 1)] == genus_[std::size_t(w - 1)] &&
                 legs_[std::size_t(v - 1)] == legs_[std::size_t(w - 1)];
        }
        if (!ok) continue;
        for (auto& [k, c] : mult) {
            auto mapped = key(perm[std::size_t(k.first - 1)] + 1, perm[std::size_t(k.second - 1)] + 1);
            auto it = mult.find(mapped);
            if (it == mult.end() || it->second != c) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        long ways = 1;
        for (auto& [k, c] : mult) {
            ways *= factorial(c);
            if (k.first == k.second)
                for (int i = 0; i < c; ++i) ways *= 2; // half-edge swap per loop
        }
        total += ways;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

StableGraph StableGraph::contract_edge(int e) const {
    if (e < 0 || e >= int(edges_.size()))
        throw std::invalid_argument("StableGraph::contract_edge: bad edge index");
    auto [a, b] = edges_[std::size_t(e)];
    if (a == b) throw std::invalid_argument("StableGraph::contract_edge: self-loop");
    const int keep = std::min(a, b), drop = std::max(a, b);
    auto remap = [&](int v) {
        if (v == drop) v = keep;
        return v > drop ? v - 1 : v;
    };
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < int(edges_.size()); ++k) {
        if (k == e) continue;
        edges.emplace_back(remap(edges_[std::size_t(k)].first), remap(edges_[std::size_t(k)].second));
    }
    std::vector<int> genus, legs;
    for (int v = 1; v <= vertex_count_; ++v) {
        if (v == drop) continue;
        genus.push_back(genus_[std::size_t(v - 1)] + (v == keep ? genus_[std::size_t(drop - 1)] : 0));
        legs.push_back(legs_[std::size_t(v - 1)] + (v == keep ? legs_[std::size_t(drop - 1)] : 0));
    }
    return StableGraph(vertex_count_ - 1, std::move(edges), std::move(genus), std::move(legs));
}

// ----------------------------------------------------------------------

GraphFile parse_graph_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(std::string("graph JSON: ") + err.what());
    }
    for (auto& [k, v] : j.items()) {
        (void)v;
        if (k != "vertices" && k != "edges" && k != "d" && k != "d_prime")
            throw std::invalid_argument("graph JSON: unknown key '" + k + "'");
    }
    if (!j.contains("vertices") || !j.contains("edges"))
        throw std::invalid_argument("graph JSON: need 'vertices' and 'edges'");
    const int n = j.at("vertices").get<int>();
    const int d = j.value("d", 0);
    const int dp = j.value("d_prime", 0);
    std::vector<Edge> edges;
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.head = je.at("head").get<int>();
        e.tail = je.at("tail").get<int>();
        if (je.contains("decoration")) e.decoration = je.at("decoration").get<std::vector<int>>();
        if (int(e.decoration.size()) < d) e.decoration.resize(std::size_t(d), 0);
        if (int(e.decoration.size()) > d)
            throw std::invalid_argument("graph JSON: decoration longer than d");
        edges.push_back(std::move(e));
    }
    return GraphFile{DecoratedGraph::with_self_loops(n, std::move(edges)),
                     Signature(d, dp)};
}

GraphFile load_graph_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open graph file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_graph_json(ss.str());
}

std::string graph_to_json(const DecoratedGraph& g, const Signature& sig) {
    nlohmann::json j;
    j["vertices"] = g.vertex_count();
    j["d"] = sig.d;
    j["d_prime"] = sig.d_prime;
    j["edges"] = nlohmann::json::array();
    for (const Edge& e : g.edges())
        j["edges"].push_back({{"head", e.head}, {"tail", e.tail}, {"decoration", e.decoration}});
    return j.dump(2);
}

} // namespace tholo
