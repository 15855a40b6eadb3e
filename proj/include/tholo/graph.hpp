#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tholo/linalg.hpp"

namespace tholo {

// Spacetime R^{d'} x C^d.
struct Signature {
    int d = 0;       // holomorphic directions
    int d_prime = 0; // topological directions

    Signature() = default;
    Signature(int d_, int d_prime_);
    int total() const { return d + d_prime; }
};

struct Edge {
    int head = 0; // 1-based vertex index
    int tail = 0;
    std::vector<int> decoration; // n(e), one entry per holomorphic direction
};

// Ordered directed multigraph with per-edge holomorphic decorations.
// Vertices are 1..vertex_count; the edge order is the order of `edges`.
class DecoratedGraph {
public:
    // Rejects self-loops (the constructor used by integral problems).
    DecoratedGraph(int vertex_count, std::vector<Edge> edges);

    // Permits self-loops; integral operations reject such graphs themselves.
    static DecoratedGraph with_self_loops(int vertex_count, std::vector<Edge> edges);

    int vertex_count() const { return vertex_count_; }
    int edge_count() const { return int(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[std::size_t(e)]; }

    bool has_self_loop() const;
    bool is_connected() const;
    int component_count() const;

    // Total holomorphic decoration degree sum_e sum_i n_{i,e}.
    int decoration_degree() const;

private:
    DecoratedGraph() = default;
    int vertex_count_ = 0;
    std::vector<Edge> edges_;
};

// Per-edge Schwinger parameters, strictly positive.
struct SchwingerPoint {
    std::vector<double> t;

    explicit SchwingerPoint(std::vector<double> values);
    double operator[](std::size_t e) const { return t[e]; }
    std::size_t size() const { return t.size(); }
};

using EdgeSet = std::set<int>; // edge indices, 0-based

// Incidence matrix rho^e_i: +1 at the head, -1 at the tail (rows = edges,
// columns = vertices). Rejects self-loops.
Mat incidence_matrix(const DecoratedGraph& g);

// All spanning trees as edge subsets; empty optional when disconnected.
std::optional<std::set<EdgeSet>> spanning_trees(const DecoratedGraph& g);

// Cut(G; v1, v2): minimal edge subsets whose removal splits G into exactly
// two spanning trees, one containing v1, the other v2. Vertex sets are
// 1-based. Throws if v1 and v2 overlap or either is empty.
std::set<EdgeSet> cut_sets(const DecoratedGraph& g, const std::set<int>& v1,
                           const std::set<int>& v2);

// Same but returns {} instead of throwing when the vertex sets overlap;
// the d^-1 assembly feeds it degenerate arguments on base-adjacent edges.
std::set<EdgeSet> cut_sets_or_empty(const DecoratedGraph& g, const std::set<int>& v1,
                                    const std::set<int>& v2);

// Weighted Laplacian M_G(t)_{ij} = sum_e rho^e_i (1/t_e) rho^e_j over
// 1 <= i,j <= |G_0|-1 (last vertex is the base).
Mat weighted_laplacian(const DecoratedGraph& g, const SchwingerPoint& t);

// det M_G(t) via the matrix-tree sum (sum over trees of prod_{e not in T} t_e)
// divided by prod_e t_e.
double kirchhoff_det(const DecoratedGraph& g, const SchwingerPoint& t);

// (M_G(t)^-1)^{ij} from the cut-set formula; i, j are 1-based, <= |G_0|-1.
double laplacian_inverse_entry(const DecoratedGraph& g, const SchwingerPoint& t, int i, int j);

// (d_G(t)^-1)^{ej} = (1/t_e) sum_i rho^e_i (M^-1)^{ij}; |value| <= 2.
double d_inverse_entry(const DecoratedGraph& g, const SchwingerPoint& t, int e, int j);

// Laman condition for C^d x R^{d'}: every subgraph with >= 2 vertices obeys
// (d+d')|V'| >= (d+d'-1)|E'| + d+d'+1, with equality on the whole graph.
bool is_laman(const DecoratedGraph& g, const Signature& sig);

// First Betti number |E| - |V| + #components.
int betti_1(const DecoratedGraph& g);

// Edge contraction; `flagged_self_loops` collects edges that became loops.
DecoratedGraph contract_edge(const DecoratedGraph& g, int e,
                             std::vector<int>* flagged_self_loops = nullptr);

// ----------------------------------------------------------------------
// Stable graphs (undirected multigraphs with vertex genera and legs).

class StableGraph {
public:
    // edges as unordered {a, b} pairs (1-based); legs[i] = number of external
    // half-edges at vertex i+1. Throws if stability fails (genus-0 vertices
    // need valency >= 3, genus-1 vertices valency >= 1).
    StableGraph(int vertex_count, std::vector<std::pair<int, int>> edges,
                std::vector<int> genus, std::vector<int> legs = {});

    int vertex_count() const { return vertex_count_; }
    int edge_count() const { return int(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    int genus_of(int v) const { return genus_[std::size_t(v - 1)]; }
    int legs_of(int v) const { return legs_[std::size_t(v - 1)]; }

    int betti_1() const;
    int genus() const; // b_1 + sum of vertex genera

    // Exact |Aut| by brute force over genus/leg-preserving vertex
    // permutations; edges are undirected, parallel edges contribute
    // multiplicity factorials and each self-loop a half-edge swap factor 2.
    // Throws above desk scale (|V| > 6 or |E| > 8).
    long automorphism_order() const;

    StableGraph contract_edge(int e) const;

private:
    int vertex_count_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<int> genus_;
    std::vector<int> legs_;
};

// ----------------------------------------------------------------------
// JSON graph files:
// {"vertices": n, "edges": [{"head": h, "tail": t, "decoration": [..]}],
//  "d": d, "d_prime": d'}
struct GraphFile {
    DecoratedGraph graph;
    Signature sig;
};

GraphFile load_graph_json(const std::string& path);
GraphFile parse_graph_json(const std::string& text);
std::string graph_to_json(const DecoratedGraph& g, const Signature& sig);

} // namespace tholo
