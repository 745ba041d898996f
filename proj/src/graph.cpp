#include "diracgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>

namespace diracgraph {

Region Region::core_plus_segment(std::string hl, double ell) {
    if (ell < 0.0) throw ConfigError("Region segment length must be >= 0");
    Region r;
    r.kind = Kind::CoreUnionSegment;
    r.halfline_id = std::move(hl);
    r.ell = ell;
    return r;
}

MetricGraph::MetricGraph(std::vector<std::string> vertices,
                         std::vector<BoundedEdge> bounded_edges,
                         std::vector<HalfLine> half_lines)
    : vertices_(std::move(vertices)),
      bounded_edges_(std::move(bounded_edges)),
      half_lines_(std::move(half_lines)) {
    validate();
}

void MetricGraph::validate() const {
    std::set<std::string> vs(vertices_.begin(), vertices_.end());
    if (vs.size() != vertices_.size())
        throw ConfigError("DuplicateId: repeated vertex name");
    if (vertices_.empty())
        throw ConfigError("graph has no vertices");

    std::set<std::string> ids;
    for (const auto& e : bounded_edges_) {
        if (!ids.insert(e.id).second)
            throw ConfigError("DuplicateId: edge '" + e.id + "'");
        if (!vs.count(e.from))
            throw ConfigError("UnknownVertex: edge '" + e.id + "' references '" + e.from + "'");
        if (!vs.count(e.to))
            throw ConfigError("UnknownVertex: edge '" + e.id + "' references '" + e.to + "'");
        if (!(e.length > 0.0) || !std::isfinite(e.length))
            throw ConfigError("NonPositiveLength: edge '" + e.id + "'");
    }
    for (const auto& h : half_lines_) {
        if (!ids.insert(h.id).second)
            throw ConfigError("DuplicateId: edge '" + h.id + "'");
        if (!vs.count(h.anchor))
            throw ConfigError("UnknownVertex: half-line '" + h.id + "' references '" + h.anchor + "'");
    }

    // connectivity over bounded edges (half-lines attach to a single vertex
    // and cannot disconnect anything)
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& e : bounded_edges_) {
        adj[e.from].push_back(e.to);
        adj[e.to].push_back(e.from);
    }
    std::set<std::string> seen;
    std::deque<std::string> work{vertices_.front()};
    seen.insert(vertices_.front());
    while (!work.empty()) {
        auto v = work.front();
        work.pop_front();
        for (const auto& w : adj[v])
            if (seen.insert(w).second) work.push_back(w);
    }
    if (seen.size() != vertices_.size())
        throw ConfigError("Disconnected: graph is not connected");
}

bool MetricGraph::has_vertex(const std::string& v) const {
    return std::find(vertices_.begin(), vertices_.end(), v) != vertices_.end();
}

const BoundedEdge& MetricGraph::bounded_edge(const std::string& id) const {
    for (const auto& e : bounded_edges_)
        if (e.id == id) return e;
    throw ConfigError("unknown bounded edge '" + id + "'");
}

const HalfLine& MetricGraph::half_line(const std::string& id) const {
    for (const auto& h : half_lines_)
        if (h.id == id) return h;
    throw ConfigError("NotAHalfLine: '" + id + "'");
}

bool MetricGraph::is_half_line(const std::string& id) const {
    for (const auto& h : half_lines_)
        if (h.id == id) return true;
    return false;
}

int MetricGraph::degree(const std::string& v) const {
    return core_degree(v) + halfline_count(v);
}

int MetricGraph::core_degree(const std::string& v) const {
    int d = 0;
    for (const auto& e : bounded_edges_) {
        if (e.from == v) ++d;
        if (e.to == v) ++d;
    }
    return d;
}

int MetricGraph::halfline_count(const std::string& v) const {
    int d = 0;
    for (const auto& h : half_lines_)
        if (h.anchor == v) ++d;
    return d;
}

CompactCore MetricGraph::compact_core() const {
    CompactCore core;
    for (const auto& e : bounded_edges_) {
        core.edge_ids.push_back(e.id);
        core.vertices.insert(e.from);
        core.vertices.insert(e.to);
        core.total_length += e.length;
    }
    return core;
}

int MetricGraph::graph_distance(const std::string& v, const std::string& w) const {
    if (!has_vertex(v)) throw ConfigError("VertexNotFound: '" + v + "'");
    if (!has_vertex(w)) throw ConfigError("VertexNotFound: '" + w + "'");
    if (v == w) return 0;
    std::map<std::string, int> dist;
    dist[v] = 0;
    std::queue<std::string> q;
    q.push(v);
    while (!q.empty()) {
        auto cur = q.front();
        q.pop();
        for (const auto& e : bounded_edges_) {
            for (const auto& nb : {e.from == cur ? e.to : std::string(),
                                   e.to == cur ? e.from : std::string()}) {
                if (nb.empty() || dist.count(nb)) continue;
                dist[nb] = dist[cur] + 1;
                if (nb == w) return dist[nb];
                q.push(nb);
            }
        }
    }
    throw ConfigError("VertexNotFound: no path between '" + v + "' and '" + w + "'");
}

MetricGraph::TreeCheck MetricGraph::core_is_tree_with_at_most_one_free_leaf() const {
    if (bounded_edges_.empty()) throw ConfigError("EmptyCore");
    TreeCheck out;

    // A connected multigraph is a tree iff |E| = |V| - 1 and it has no
    // self-loop (self-loops and parallel edges are simple cycles).
    auto core = compact_core();
    bool has_loop = false;
    std::set<std::pair<std::string, std::string>> pairs;
    bool has_parallel = false;
    for (const auto& e : bounded_edges_) {
        if (e.from == e.to) has_loop = true;
        auto key = std::minmax(e.from, e.to);
        if (!pairs.insert({key.first, key.second}).second) has_parallel = true;
    }
    out.core_is_tree = !has_loop && !has_parallel &&
                       bounded_edges_.size() + 1 == core.vertices.size();

    for (const auto& v : core.vertices) {
        if (core_degree(v) == 1 && halfline_count(v) == 0)
            out.free_leaves.push_back(v);
    }
    std::sort(out.free_leaves.begin(), out.free_leaves.end());
    out.satisfied = out.core_is_tree && out.free_leaves.size() <= 1;
    return out;
}

std::optional<std::vector<CycleStep>> MetricGraph::find_simple_cycle() const {
    // Edges sorted by id for determinism.
    std::vector<const BoundedEdge*> edges;
    for (const auto& e : bounded_edges_) edges.push_back(&e);
    std::sort(edges.begin(), edges.end(),
              [](const BoundedEdge* a, const BoundedEdge* b) { return a->id < b->id; });

    // Self-loop: a 1-edge cycle.
    for (const auto* e : edges)
        if (e->from == e->to) return std::vector<CycleStep>{{e->id, true}};

    // Parallel pair: a 2-edge cycle.
    for (size_t i = 0; i < edges.size(); ++i)
        for (size_t j = i + 1; j < edges.size(); ++j) {
            const auto *a = edges[i], *b = edges[j];
            if ((a->from == b->from && a->to == b->to) ||
                (a->from == b->to && a->to == b->from)) {
                bool b_forward = (b->from == a->to);
                return std::vector<CycleStep>{{a->id, true}, {b->id, b_forward}};
            }
        }

    // DFS over the simple skeleton; back edge closes a cycle.
    std::map<std::string, std::vector<std::pair<std::string, const BoundedEdge*>>> adj;
    for (const auto* e : edges) {
        adj[e->from].push_back({e->to, e});
        adj[e->to].push_back({e->from, e});
    }
    for (auto& [v, nbrs] : adj)
        std::sort(nbrs.begin(), nbrs.end(),
                  [](const auto& a, const auto& b) { return a.second->id < b.second->id; });

    std::set<std::string> visited;
    std::vector<std::string> core_vs;
    for (const auto& [v, _] : adj) core_vs.push_back(v);
    for (const auto& root : core_vs) {
        if (visited.count(root)) continue;
        // parent edge along the DFS tree
        std::map<std::string, const BoundedEdge*> parent_edge;
        std::map<std::string, std::string> parent;
        std::vector<std::string> stack{root};
        visited.insert(root);
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (const auto& [w, e] : adj[v]) {
                if (parent_edge.count(v) && parent_edge[v] == e) continue;
                if (!visited.count(w)) {
                    visited.insert(w);
                    parent[w] = v;
                    parent_edge[w] = e;
                    stack.push_back(w);
                } else {
                    // back edge v -> w: cycle = tree path w..v plus e
                    std::vector<std::string> pv{v}, pw{w};
                    auto lift = [&](std::vector<std::string>& path) {
                        while (parent.count(path.back())) path.push_back(parent[path.back()]);
                    };
                    lift(pv);
                    lift(pw);
                    // lowest common ancestor
                    std::set<std::string> on_pv(pv.begin(), pv.end());
                    std::string lca;
                    for (const auto& x : pw)
                        if (on_pv.count(x)) { lca = x; break; }
                    if (lca.empty()) continue;
                    std::vector<std::string> walk;  // v .. lca .. w
                    for (const auto& x : pv) {
                        walk.push_back(x);
                        if (x == lca) break;
                    }
                    std::vector<std::string> down;
                    for (const auto& x : pw) {
                        if (x == lca) break;
                        down.push_back(x);
                    }
                    std::reverse(down.begin(), down.end());
                    for (const auto& x : down) walk.push_back(x);
                    // steps w -> ... -> v via tree edges, then close with e
                    std::reverse(walk.begin(), walk.end());  // w .. v
                    std::vector<CycleStep> cyc;
                    for (size_t k = 0; k + 1 < walk.size(); ++k) {
                        const BoundedEdge* te = parent_edge.count(walk[k + 1]) &&
                                                        parent[walk[k + 1]] == walk[k]
                                                    ? parent_edge[walk[k + 1]]
                                                    : parent_edge[walk[k]];
                        cyc.push_back({te->id, te->from == walk[k]});
                    }
                    cyc.push_back({e->id, e->from == v});
                    return cyc;
                }
            }
        }
    }
    return std::nullopt;
}

std::string MetricGraph::pendant_vertex_name(const std::string& halfline_id) {
    return halfline_id + "_v";
}
std::string MetricGraph::pendant_edge_name(const std::string& halfline_id) {
    return halfline_id + "_seg";
}

MetricGraph MetricGraph::attach_pendant(const std::string& halfline_id, double ell) const {
    if (!(ell > 0.0)) throw ConfigError("NonPositiveLength: pendant length must be > 0");
    const HalfLine& hl = half_line(halfline_id);

    auto vs = vertices_;
    std::string v_new = pendant_vertex_name(halfline_id);
    while (std::find(vs.begin(), vs.end(), v_new) != vs.end()) v_new += "_";
    vs.push_back(v_new);

    auto es = bounded_edges_;
    std::string e_new = pendant_edge_name(halfline_id);
    auto id_taken = [&](const std::string& id) {
        for (const auto& e : es)
            if (e.id == id) return true;
        for (const auto& h : half_lines_)
            if (h.id == id) return true;
        return false;
    };
    while (id_taken(e_new)) e_new += "_";
    es.push_back({e_new, hl.anchor, v_new, ell});

    std::vector<HalfLine> hs;
    for (const auto& h : half_lines_) {
        if (h.id == halfline_id)
            hs.push_back({h.id, v_new});
        else
            hs.push_back(h);
    }
    return MetricGraph(std::move(vs), std::move(es), std::move(hs));
}

MetricGraph::ZeroPropagation
MetricGraph::zero_propagation(const std::set<std::string>& initially_zero) const {
    size_t total = bounded_edges_.size() + half_lines_.size();
    for (const auto& id : initially_zero)
        if (!is_half_line(id)) (void)bounded_edge(id);  // id must exist

    ZeroPropagation out;
    out.closure = initially_zero;
    // incidences per vertex; a self-loop appears twice
    std::map<std::string, std::vector<std::string>> inc;
    for (const auto& e : bounded_edges_) {
        inc[e.from].push_back(e.id);
        inc[e.to].push_back(e.id);
    }
    for (const auto& h : half_lines_) inc[h.anchor].push_back(h.id);

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [v, ids] : inc) {
            std::vector<std::string> unknown;
            for (const auto& id : ids)
                if (!out.closure.count(id)) unknown.push_back(id);
            // a self-loop occupies two incidences; it can only be forced if it
            // is the single unknown edge *and* appears once (i.e. never: both
            // its ends are unknown together), so require exactly one unknown
            // incidence
            if (unknown.size() == 1) {
                out.closure.insert(unknown.front());
                changed = true;
            }
        }
    }
    out.forces_all_zero = out.closure.size() == total;
    return out;
}

std::vector<std::string> MetricGraph::halfline_vertices() const {
    std::vector<std::string> out;
    for (const auto& v : vertices_)
        if (halfline_count(v) > 0) out.push_back(v);
    return out;
}

std::vector<CycleStep> MetricGraph::simple_path(const std::string& v,
                                                const std::string& w) const {
    if (!has_vertex(v)) throw ConfigError("VertexNotFound: '" + v + "'");
    if (!has_vertex(w)) throw ConfigError("VertexNotFound: '" + w + "'");
    if (v == w) return {};
    // BFS by edge id order for determinism
    std::map<std::string, std::pair<std::string, const BoundedEdge*>> pred;
    std::queue<std::string> q;
    q.push(v);
    pred[v] = {"", nullptr};
    while (!q.empty() && !pred.count(w)) {
        auto cur = q.front();
        q.pop();
        std::vector<const BoundedEdge*> out;
        for (const auto& e : bounded_edges_)
            if (e.from == cur || e.to == cur) out.push_back(&e);
        std::sort(out.begin(), out.end(),
                  [](const BoundedEdge* a, const BoundedEdge* b) { return a->id < b->id; });
        for (const auto* e : out) {
            std::string nb = e->from == cur ? e->to : e->from;
            if (nb == cur) continue;  // self-loop
            if (pred.count(nb)) continue;
            pred[nb] = {cur, e};
            q.push(nb);
        }
    }
    if (!pred.count(w)) throw ConfigError("no path between '" + v + "' and '" + w + "'");
    std::vector<CycleStep> steps;
    std::string cur = w;
    while (cur != v) {
        auto [prev, e] = pred[cur];
        steps.push_back({e->id, e->from == prev});
        cur = prev;
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
}

} // namespace diracgraph
