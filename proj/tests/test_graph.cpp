#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <random>

#include "diracgraph/graph.hpp"

using namespace diracgraph;

namespace {

MetricGraph tadpole() {
    return MetricGraph({"v"}, {{"loop", "v", "v", 2.0}}, {{"h1", "v"}});
}

MetricGraph triangle_with_halfline() {
    return MetricGraph({"a", "b", "c"},
                       {{"e1", "a", "b", 1.0},
                        {"e2", "b", "c", 1.0},
                        {"e3", "c", "a", 1.0}},
                       {{"h1", "a"}});
}

MetricGraph path3() {
    return MetricGraph({"v0", "v1", "v2"},
                       {{"e1", "v0", "v1", 1.0}, {"e2", "v1", "v2", 1.0}}, {});
}

/// Brute-force BFS distance oracle over the bounded-edge adjacency.
int bfs_distance(const MetricGraph& g, const std::string& s,
                 const std::string& t) {
    std::map<std::string, int> dist;
    std::queue<std::string> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
        auto v = q.front();
        q.pop();
        for (const auto& e : g.bounded_edges()) {
            for (const auto& [x, y] : {std::pair{e.from, e.to}, {e.to, e.from}}) {
                if (x == v && !dist.count(y)) {
                    dist[y] = dist[v] + 1;
                    q.push(y);
                }
            }
        }
    }
    return dist.count(t) ? dist[t] : -1;
}

/// Random connected core: tree plus optional extra edges; half-lines on a
/// vertex subset.
MetricGraph random_graph(std::mt19937& rng, int nv, int extra_edges,
                         bool halflines_on_all_leaves, bool free_all_leaves) {
    std::vector<std::string> vs;
    for (int i = 0; i < nv; ++i) vs.push_back("v" + std::to_string(i));
    std::vector<BoundedEdge> es;
    std::uniform_real_distribution<double> len(0.5, 2.0);
    for (int i = 1; i < nv; ++i) {
        std::uniform_int_distribution<int> par(0, i - 1);
        es.push_back({"e" + std::to_string(es.size()), vs[par(rng)], vs[i], len(rng)});
    }
    for (int k = 0; k < extra_edges; ++k) {
        std::uniform_int_distribution<int> pick(0, nv - 1);
        es.push_back({"e" + std::to_string(es.size()), vs[pick(rng)], vs[pick(rng)],
                      len(rng)});
    }
    std::vector<HalfLine> hs;
    MetricGraph probe(vs, es, {});
    int hid = 0;
    for (const auto& v : vs) {
        bool leaf = probe.core_degree(v) == 1;
        if (leaf && halflines_on_all_leaves && !free_all_leaves)
            hs.push_back({"h" + std::to_string(hid++), v});
    }
    if (hs.empty()) hs.push_back({"h0", vs[0]});
    return MetricGraph(vs, es, hs);
}

} // namespace

TEST_CASE("construction and validation") {
    MetricGraph g({"a", "b"}, {{"e", "a", "b", 1.0}}, {});
    CHECK(g.compact_core().total_length == doctest::Approx(1.0));
    CHECK(g.compact_core().edge_ids.size() == 1);

    auto t = tadpole();
    CHECK(t.compact_core().total_length == doctest::Approx(2.0));
    CHECK(t.half_lines().size() == 1);
    CHECK(t.degree("v") == 3);
    CHECK(t.core_degree("v") == 2);

    CHECK_THROWS_AS(MetricGraph({"a"}, {{"e", "a", "z", 1.0}}, {}), ConfigError);
    CHECK_THROWS_AS(MetricGraph({"a", "b"}, {{"e", "a", "b", 0.0}}, {}),
                    ConfigError);
    CHECK_THROWS_AS(MetricGraph({"a", "b"}, {{"e", "a", "a", 1.0}}, {}),
                    ConfigError);  // disconnected (b unreachable)
    CHECK_THROWS_AS(
        MetricGraph({"a", "b"},
                    {{"e", "a", "b", 1.0}, {"e", "b", "a", 1.0}}, {}),
        ConfigError);  // duplicate id
}

TEST_CASE("graph distance") {
    auto p = path3();
    CHECK(p.graph_distance("v0", "v0") == 0);
    CHECK(p.graph_distance("v0", "v2") == 2);

    std::vector<std::string> vs;
    std::vector<BoundedEdge> es;
    for (int i = 0; i < 5; ++i) vs.push_back("w" + std::to_string(i));
    for (int i = 0; i < 4; ++i)
        es.push_back({"e" + std::to_string(i), vs[i], vs[i + 1], 1.0});
    MetricGraph chain(vs, es, {});
    CHECK(chain.graph_distance("w0", "w4") == 4);
}

TEST_CASE("graph distance matches BFS oracle, symmetric, triangle inequality") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_graph(rng, 8, trial % 3, false, false);
        const auto& vs = g.vertices();
        for (const auto& a : vs)
            for (const auto& b : vs) {
                int d = g.graph_distance(a, b);
                CHECK(d == bfs_distance(g, a, b));
                CHECK(d == g.graph_distance(b, a));
                for (const auto& c : vs)
                    CHECK(d <= g.graph_distance(a, c) + g.graph_distance(c, b));
            }
    }
}

TEST_CASE("tree with at most one free leaf") {
    // path core, half-lines at one end only: two leaves, one free -> ok;
    // no half-lines at either end -> two free leaves -> fails.
    MetricGraph ok({"v0", "v1", "v2"},
                   {{"e1", "v0", "v1", 1.0}, {"e2", "v1", "v2", 1.0}},
                   {{"h", "v0"}});
    auto r1 = ok.core_is_tree_with_at_most_one_free_leaf();
    CHECK(r1.satisfied);
    CHECK(r1.free_leaves == std::vector<std::string>{"v2"});

    MetricGraph bad({"v0", "v1", "v2"},
                    {{"e1", "v0", "v1", 1.0}, {"e2", "v1", "v2", 1.0}},
                    {{"h", "v1"}});
    auto r2 = bad.core_is_tree_with_at_most_one_free_leaf();
    CHECK_FALSE(r2.satisfied);
    CHECK(r2.free_leaves.size() == 2);

    auto tri = triangle_with_halfline();
    CHECK_FALSE(tri.core_is_tree_with_at_most_one_free_leaf().satisfied);
    CHECK_FALSE(tri.core_is_tree_with_at_most_one_free_leaf().core_is_tree);
}

TEST_CASE("simple cycle search") {
    auto tri = triangle_with_halfline();
    auto cyc = tri.find_simple_cycle();
    REQUIRE(cyc.has_value());
    CHECK(cyc->size() == 3);
    // walk must be closed and repeat no edge
    std::set<std::string> seen;
    for (const auto& s : *cyc) CHECK(seen.insert(s.edge_id).second);

    auto t = tadpole();
    auto loop = t.find_simple_cycle();
    REQUIRE(loop.has_value());
    CHECK(loop->size() == 1);
    CHECK((*loop)[0].edge_id == "loop");

    CHECK_FALSE(path3().find_simple_cycle().has_value());

    // parallel edges form a 2-cycle
    MetricGraph par({"a", "b"},
                    {{"e1", "a", "b", 1.0}, {"e2", "a", "b", 1.5}}, {});
    auto c2 = par.find_simple_cycle();
    REQUIRE(c2.has_value());
    CHECK(c2->size() == 2);
}

TEST_CASE("cycle walk is consistently oriented") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = random_graph(rng, 7, 2, false, false);
        auto cyc = g.find_simple_cycle();
        if (!cyc) continue;
        // consecutive steps chain head-to-tail and the walk closes
        auto head = [&](const CycleStep& s) {
            const auto& e = g.bounded_edge(s.edge_id);
            return s.forward ? e.to : e.from;
        };
        auto tail = [&](const CycleStep& s) {
            const auto& e = g.bounded_edge(s.edge_id);
            return s.forward ? e.from : e.to;
        };
        for (size_t i = 0; i < cyc->size(); ++i)
            CHECK(head((*cyc)[i]) == tail((*cyc)[(i + 1) % cyc->size()]));
    }
}

TEST_CASE("attach pendant") {
    auto t = tadpole();
    auto g2 = t.attach_pendant("h1", 3.0);
    CHECK(g2.compact_core().total_length == doctest::Approx(5.0));
    CHECK(g2.half_lines().size() == 1);
    CHECK(g2.half_lines()[0].anchor == MetricGraph::pendant_vertex_name("h1"));
    auto g3 = g2.attach_pendant(g2.half_lines()[0].id, 1.0);
    CHECK(g3.compact_core().total_length == doctest::Approx(6.0));
    CHECK_THROWS_AS(t.attach_pendant("h1", 0.0), ConfigError);
    CHECK_THROWS_AS(t.attach_pendant("loop", 1.0), ConfigError);
}

TEST_CASE("zero propagation basics") {
    // star: center x, three legs with half-lines at two of the leaf ends
    MetricGraph star({"x", "l1", "l2", "l3"},
                     {{"e1", "x", "l1", 1.0},
                      {"e2", "x", "l2", 1.0},
                      {"e3", "x", "l3", 1.0}},
                     {{"h1", "l1"}, {"h2", "l2"}});
    auto r = star.zero_propagation({"h1", "h2"});
    CHECK(r.forces_all_zero);

    auto tri = triangle_with_halfline();
    auto r2 = tri.zero_propagation({"h1"});
    CHECK_FALSE(r2.forces_all_zero);
    CHECK_FALSE(r2.closure.count("e1"));

    auto r3 = tri.zero_propagation({});
    CHECK(r3.closure.empty());
}

TEST_CASE("zero propagation is monotone and idempotent") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = random_graph(rng, 6, trial % 2, true, false);
        std::set<std::string> small, big;
        for (const auto& h : g.half_lines()) big.insert(h.id);
        if (!g.half_lines().empty()) small.insert(g.half_lines()[0].id);
        auto cs = g.zero_propagation(small);
        auto cb = g.zero_propagation(big);
        CHECK(std::includes(cb.closure.begin(), cb.closure.end(),
                            cs.closure.begin(), cs.closure.end()));
        auto again = g.zero_propagation(cs.closure);
        CHECK(again.closure == cs.closure);
    }
}

TEST_CASE("zero propagation on random trees and cycles") {
    std::mt19937 rng(41);
    int tree_runs = 0, cycle_runs = 0;
    while (tree_runs < 100 || cycle_runs < 100) {
        bool want_cycle = cycle_runs < 100 && (tree_runs >= 100 || (rng() & 1));
        auto g = random_graph(rng, 6, want_cycle ? 2 : 0, true, false);
        std::set<std::string> hz;
        for (const auto& h : g.half_lines()) hz.insert(h.id);
        auto chk = g.core_is_tree_with_at_most_one_free_leaf();
        auto r = g.zero_propagation(hz);
        if (chk.satisfied && !want_cycle) {
            CHECK(r.forces_all_zero);
            ++tree_runs;
        } else if (g.find_simple_cycle().has_value()) {
            CHECK_FALSE(r.forces_all_zero);
            ++cycle_runs;
        }
    }
}
