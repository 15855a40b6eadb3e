#include <doctest.h>

#include <cstdint>
#include <stdexcept>
#include <random>

#include "tholo/graph.hpp"
#include "tholo/linalg.hpp"

using namespace tholo;

namespace {

DecoratedGraph single_edge() { return DecoratedGraph(2, {{2, 1, {}}}); }

// a: 1->2, b: 2->3, c: 3->1
DecoratedGraph triangle() { return DecoratedGraph(3, {{2, 1, {}}, {3, 2, {}}, {1, 3, {}}}); }

DecoratedGraph banana() { return DecoratedGraph(2, {{2, 1, {}}, {2, 1, {}}}); }

DecoratedGraph theta() { return DecoratedGraph(2, {{2, 1, {}}, {2, 1, {}}, {2, 1, {}}}); }

// Brute-force spanning-tree enumeration independent of the library: grow all
// edge subsets, check size/connectivity by DFS on an adjacency list.
int count_spanning_trees_oracle(const DecoratedGraph& g) {
    const int n = g.vertex_count(), m = g.edge_count();
    int count = 0;
    for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
        int edges = 0;
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) ++edges;
        if (edges != n - 1) continue;
        std::vector<std::vector<int>> adj(std::size_t(n) + 1);
        for (int e = 0; e < m; ++e)
            if (bits & (1u << e)) {
                adj[std::size_t(g.edge(e).head)].push_back(g.edge(e).tail);
                adj[std::size_t(g.edge(e).tail)].push_back(g.edge(e).head);
            }
        std::vector<bool> seen(std::size_t(n) + 1, false);
        std::vector<int> stack{1};
        seen[1] = true;
        int reached = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : adj[std::size_t(v)])
                if (!seen[std::size_t(w)]) {
                    seen[std::size_t(w)] = true;
                    ++reached;
                    stack.push_back(w);
                }
        }
        if (reached == n) ++count;
    }
    return count;
}

std::vector<DecoratedGraph> desk_suite() {
    std::vector<DecoratedGraph> gs;
    gs.push_back(single_edge());
    gs.push_back(triangle());
    gs.push_back(banana());
    gs.push_back(theta());
    // 4-cycle
    gs.push_back(DecoratedGraph(4, {{2, 1, {}}, {3, 2, {}}, {4, 3, {}}, {1, 4, {}}}));
    // K4 minus an edge
    gs.push_back(DecoratedGraph(4, {{2, 1, {}}, {3, 2, {}}, {4, 3, {}}, {1, 4, {}}, {3, 1, {}}}));
    // chain with doubled first link: 1=2-3
    gs.push_back(DecoratedGraph(3, {{2, 1, {}}, {2, 1, {}}, {3, 2, {}}}));
    return gs;
}

} // namespace

TEST_CASE("incidence matrix definitions") {
    Mat r1 = incidence_matrix(single_edge());
    CHECK(r1(0, 0) == -1.0);
    CHECK(r1(0, 1) == 1.0);

    Mat r3 = incidence_matrix(triangle());
    const double expect[3][3] = {{-1, 1, 0}, {0, -1, 1}, {1, 0, -1}};
    for (int e = 0; e < 3; ++e)
        for (int v = 0; v < 3; ++v) CHECK(r3(std::size_t(e), std::size_t(v)) == expect[e][v]);

    // rows sum to zero; reversing an edge negates its row
    DecoratedGraph rev(3, {{1, 2, {}}, {3, 2, {}}, {1, 3, {}}});
    Mat rr = incidence_matrix(rev);
    for (int v = 0; v < 3; ++v) CHECK(rr(0, std::size_t(v)) == -r3(0, std::size_t(v)));
    for (int e = 0; e < 3; ++e) {
        double s = 0;
        for (int v = 0; v < 3; ++v) s += r3(std::size_t(e), std::size_t(v));
        CHECK(s == 0.0);
    }

    DecoratedGraph loop = DecoratedGraph::with_self_loops(1, {{1, 1, {}}});
    CHECK_THROWS_AS(incidence_matrix(loop), std::invalid_argument);
}

TEST_CASE("spanning trees") {
    auto t1 = spanning_trees(single_edge());
    REQUIRE(t1.has_value());
    CHECK(t1->size() == 1);
    CHECK(t1->count(EdgeSet{0}) == 1);

    auto t3 = spanning_trees(triangle());
    REQUIRE(t3.has_value());
    CHECK(int(t3->size()) == count_spanning_trees_oracle(triangle()));
    CHECK(t3->size() == 3);
    CHECK(t3->count(EdgeSet{0, 1}) == 1);
    CHECK(t3->count(EdgeSet{1, 2}) == 1);
    CHECK(t3->count(EdgeSet{0, 2}) == 1);

    auto tb = spanning_trees(banana());
    REQUIRE(tb.has_value());
    CHECK(tb->size() == 2);

    DecoratedGraph disconnected(3, {{2, 1, {}}});
    CHECK_FALSE(spanning_trees(disconnected).has_value());

    for (const auto& g : desk_suite()) {
        auto trees = spanning_trees(g);
        REQUIRE(trees.has_value());
        CHECK(int(trees->size()) == count_spanning_trees_oracle(g));
        for (const EdgeSet& tr : *trees) CHECK(int(tr.size()) == g.vertex_count() - 1);
    }
}

TEST_CASE("cut sets") {
    auto c = cut_sets(triangle(), {1}, {3});
    CHECK(c.size() == 2);
    CHECK(c.count(EdgeSet{0, 2}) == 1); // {a, c}
    CHECK(c.count(EdgeSet{1, 2}) == 1); // {b, c}

    auto c1 = cut_sets(single_edge(), {1}, {2});
    CHECK(c1.size() == 1);
    CHECK(c1.count(EdgeSet{0}) == 1);

    auto cb = cut_sets(banana(), {1}, {2});
    CHECK(cb.size() == 1);
    CHECK(cb.count(EdgeSet{0, 1}) == 1);

    CHECK_THROWS_AS(cut_sets(triangle(), {1, 2}, {2}), std::invalid_argument);
}

TEST_CASE("weighted laplacian entries") {
    Mat m1 = weighted_laplacian(single_edge(), SchwingerPoint({1.0}));
    CHECK(m1(0, 0) == doctest::Approx(1.0));

    Mat m3 = weighted_laplacian(triangle(), SchwingerPoint({1, 1, 1}));
    CHECK(m3(0, 0) == doctest::Approx(2.0));
    CHECK(m3(1, 1) == doctest::Approx(2.0));
    CHECK(m3(0, 1) == doctest::Approx(-1.0));

    Mat mt = weighted_laplacian(triangle(), SchwingerPoint({1, 2, 4}));
    CHECK(mt(0, 0) == doctest::Approx(1.0 + 0.25));
    CHECK(mt(1, 1) == doctest::Approx(1.0 + 0.5));
    CHECK(mt(0, 1) == doctest::Approx(-1.0));

    CHECK_THROWS_AS(SchwingerPoint({1.0, -1.0}), std::invalid_argument);

    // rho^T diag(1/t) rho restricted to 1..n-1 reproduces the laplacian
    for (const auto& g : desk_suite()) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> uni(0.1, 5.0);
        std::vector<double> tv;
        for (int e = 0; e < g.edge_count(); ++e) tv.push_back(uni(rng));
        SchwingerPoint t(tv);
        Mat rho = incidence_matrix(g);
        Mat m = weighted_laplacian(g, t);
        const std::size_t n = std::size_t(g.vertex_count() - 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0;
                for (int e = 0; e < g.edge_count(); ++e)
                    s += rho(std::size_t(e), i) * rho(std::size_t(e), j) / t[std::size_t(e)];
                CHECK(m(i, j) == doctest::Approx(s).epsilon(1e-14));
            }
    }
}

TEST_CASE("kirchhoff determinant vs dense LU") {
    CHECK(kirchhoff_det(single_edge(), SchwingerPoint({2.0})) == doctest::Approx(0.5));
    CHECK(kirchhoff_det(triangle(), SchwingerPoint({1, 1, 1})) == doctest::Approx(3.0));
    double t1 = 0.7, t2 = 2.3;
    CHECK(kirchhoff_det(banana(), SchwingerPoint({t1, t2})) ==
          doctest::Approx((t1 + t2) / (t1 * t2)));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(0.05, 10.0);
    for (const auto& g : desk_suite()) {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> tv;
            for (int e = 0; e < g.edge_count(); ++e) tv.push_back(uni(rng));
            SchwingerPoint t(tv);
            const double kd = kirchhoff_det(g, t);
            const double lu = lu_det(weighted_laplacian(g, t));
            CHECK(std::fabs(kd - lu) <= 1e-10 * std::fabs(lu));
        }
    }
}

TEST_CASE("laplacian inverse entries vs direct inversion") {
    CHECK(laplacian_inverse_entry(triangle(), SchwingerPoint({1, 1, 1}), 1, 1) ==
          doctest::Approx(2.0 / 3.0));
    CHECK(laplacian_inverse_entry(triangle(), SchwingerPoint({1, 1, 1}), 1, 2) ==
          doctest::Approx(1.0 / 3.0));
    CHECK(laplacian_inverse_entry(single_edge(), SchwingerPoint({3.7}), 1, 1) ==
          doctest::Approx(3.7));
    CHECK_THROWS_AS(laplacian_inverse_entry(triangle(), SchwingerPoint({1, 1, 1}), 0, 1),
                    std::invalid_argument);

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(0.05, 10.0);
    for (const auto& g : desk_suite()) {
        const int n = g.vertex_count() - 1;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> tv;
            for (int e = 0; e < g.edge_count(); ++e) tv.push_back(uni(rng));
            SchwingerPoint t(tv);
            Mat minv = inverse(weighted_laplacian(g, t));
            for (int i = 1; i <= n; ++i)
                for (int j = 1; j <= n; ++j) {
                    const double formula = laplacian_inverse_entry(g, t, i, j);
                    const double direct = minv(std::size_t(i - 1), std::size_t(j - 1));
                    CHECK(std::fabs(formula - direct) <= 1e-10 * std::max(1.0, std::fabs(direct)));
                }
        }
    }
}

TEST_CASE("d-inverse entries: formula, bound") {
    // triangle, t = 1: (d^-1)^{a,1} = (1/1) * (rho^a_1 M^-1_11 + rho^a_2 M^-1_21)
    //                              = -2/3 + 1/3 = -1/3
    CHECK(d_inverse_entry(triangle(), SchwingerPoint({1, 1, 1}), 0, 1) ==
          doctest::Approx(-1.0 / 3.0));
    CHECK(d_inverse_entry(single_edge(), SchwingerPoint({0.42}), 0, 1) == doctest::Approx(-1.0));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(1e-3, 1e3);
    for (const auto& g : desk_suite()) {
        const int n = g.vertex_count() - 1;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> tv;
            for (int e = 0; e < g.edge_count(); ++e) tv.push_back(uni(rng));
            SchwingerPoint t(tv);
            Mat minv = inverse(weighted_laplacian(g, t));
            Mat rho = incidence_matrix(g);
            for (int e = 0; e < g.edge_count(); ++e)
                for (int j = 1; j <= n; ++j) {
                    const double v = d_inverse_entry(g, t, e, j);
                    CHECK(std::fabs(v) <= 2.0 + 1e-12);
                    double direct = 0;
                    for (int i = 1; i <= n; ++i)
                        direct += rho(std::size_t(e), std::size_t(i - 1)) *
                                  minv(std::size_t(i - 1), std::size_t(j - 1));
                    direct /= t[std::size_t(e)];
                    CHECK(std::fabs(v - direct) <= 1e-10 * std::max(1.0, std::fabs(direct)));
                }
        }
    }
}

TEST_CASE("laman detection") {
    CHECK(is_laman(triangle(), Signature(1, 1)));
    CHECK(is_laman(banana(), Signature(1, 0)));
    CHECK_FALSE(is_laman(banana(), Signature(1, 1)));
    CHECK(is_laman(triangle(), Signature(0, 2)));
    CHECK_FALSE(is_laman(theta(), Signature(0, 2)));
    CHECK(is_laman(theta(), Signature(0, 1)));
    // 4-cycle is Laman for d+d' = 3
    DecoratedGraph cycle4(4, {{2, 1, {}}, {3, 2, {}}, {4, 3, {}}, {1, 4, {}}});
    CHECK(is_laman(cycle4, Signature(1, 2)));
    CHECK_FALSE(is_laman(cycle4, Signature(1, 1)));
    // K4 minus an edge is Laman for d+d' = 2
    DecoratedGraph k4e(4, {{2, 1, {}}, {3, 2, {}}, {4, 3, {}}, {1, 4, {}}, {3, 1, {}}});
    CHECK(is_laman(k4e, Signature(1, 1)));

    // Laman equality is exact
    for (const auto& [g, sig] :
         std::vector<std::pair<DecoratedGraph, Signature>>{{triangle(), Signature(1, 1)},
                                                           {banana(), Signature(1, 0)},
                                                           {cycle4, Signature(1, 2)}}) {
        if (!is_laman(g, sig)) continue;
        const int D = sig.total();
        CHECK(D * g.vertex_count() - (D - 1) * g.edge_count() - (D + 1) == 0);
    }
}

TEST_CASE("betti numbers") {
    DecoratedGraph path(3, {{2, 1, {}}, {3, 2, {}}});
    CHECK(betti_1(path) == 0);
    CHECK(betti_1(triangle()) == 1);
    CHECK(betti_1(theta()) == 2);
}

TEST_CASE("edge contraction") {
    auto g1 = contract_edge(single_edge(), 0);
    CHECK(g1.vertex_count() == 1);
    CHECK(g1.edge_count() == 0);

    auto g3 = contract_edge(triangle(), 0);
    CHECK(g3.vertex_count() == 2);
    CHECK(g3.edge_count() == 2);
    CHECK_FALSE(g3.has_self_loop());
    CHECK(betti_1(g3) == 1); // banana

    std::vector<int> flagged;
    auto gb = contract_edge(banana(), 0, &flagged);
    CHECK(gb.vertex_count() == 1);
    CHECK(gb.has_self_loop());
    CHECK(flagged.size() == 1);

    auto loop = DecoratedGraph::with_self_loops(1, {{1, 1, {}}});
    CHECK_THROWS_AS(contract_edge(loop, 0), std::invalid_argument);
}

TEST_CASE("stable graphs") {
    StableGraph vertex1(1, {}, {1}, {1});
    CHECK(vertex1.genus() == 1);
    CHECK(vertex1.automorphism_order() == 1);

    StableGraph theta_sg(2, {{1, 2}, {1, 2}, {1, 2}}, {0, 0});
    CHECK(theta_sg.genus() == 2);
    CHECK(theta_sg.automorphism_order() == 12);

    StableGraph banana_sg(2, {{1, 2}, {1, 2}}, {1, 1});
    CHECK(banana_sg.genus() == 3);
    CHECK(banana_sg.automorphism_order() == 4);

    StableGraph tri_g1(3, {{1, 2}, {2, 3}, {3, 1}}, {1, 0, 0}, {0, 1, 1});
    CHECK(tri_g1.genus() == 2);

    // aut order divides |V|! |E|! 2^|E|
    auto factorial = [](int n) {
        long f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    for (const StableGraph& sg : {theta_sg, banana_sg, tri_g1}) {
        long bound = factorial(sg.vertex_count()) * factorial(sg.edge_count()) *
                     (1L << sg.edge_count());
        CHECK(bound % sg.automorphism_order() == 0);
    }

    CHECK_THROWS_AS(StableGraph(1, {}, {0}), std::invalid_argument);       // unstable
    CHECK_THROWS_AS(StableGraph(3, {{1, 2}, {2, 3}, {3, 1}}, {1, 0, 0}),
                    std::invalid_argument); // bare genus-0 bivalent vertices

    auto con = banana_sg.contract_edge(0);
    CHECK(con.vertex_count() == 1);
    CHECK(con.genus_of(1) == 2);
    CHECK(con.genus() == 3); // self-loop keeps b1
}

TEST_CASE("graph json round trip") {
    const char* text = R"({"vertices": 3,
      "edges": [{"head": 2, "tail": 1, "decoration": [1]},
                {"head": 3, "tail": 2, "decoration": [0]},
                {"head": 1, "tail": 3, "decoration": [2]}],
      "d": 1, "d_prime": 1})";
    GraphFile gf = parse_graph_json(text);
    CHECK(gf.graph.vertex_count() == 3);
    CHECK(gf.graph.edge_count() == 3);
    CHECK(gf.sig.d == 1);
    CHECK(gf.sig.d_prime == 1);
    CHECK(gf.graph.edge(2).decoration[0] == 2);
    GraphFile round = parse_graph_json(graph_to_json(gf.graph, gf.sig));
    CHECK(round.graph.edge_count() == 3);
    CHECK(round.graph.edge(0).head == 2);

    CHECK_THROWS_AS(parse_graph_json("{\"vertices\": 2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_graph_json("{\"vertices\": 2, \"edges\": [], \"bogus\": 1}"),
                    std::invalid_argument);
}
