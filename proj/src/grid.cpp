#include "diracgraph/grid.hpp"

#include <cmath>

namespace diracgraph {

DofLayout::DofLayout(const MetricGraph& g, const Grid& grid)
    : graph_(g), grid_(grid) {
    for (const auto& v : g.vertices()) {
        int idx = static_cast<int>(vertex_index_.size());
        vertex_index_.emplace(v, idx);
    }
    // Truncated half-lines end at fresh degree-1 vertices.
    for (const auto& hl : g.half_lines()) {
        std::string end = hl.id + "__end";
        int idx = static_cast<int>(vertex_index_.size());
        vertex_index_.emplace(end, idx);
    }

    auto add_edge = [&](const std::string& id, const std::string& from,
                        const std::string& to, double len, bool from_hl) {
        GridEdge e;
        e.id = id;
        e.from = from;
        e.to = to;
        e.len = len;
        e.from_halfline = from_hl;
        e.n = std::max(2, static_cast<int>(std::ceil(len / grid_.h - 1e-12)));
        e.he = len / e.n;
        edges_.push_back(e);
    };
    for (const auto& be : g.bounded_edges())
        add_edge(be.id, be.from, be.to, be.length, false);
    for (const auto& hl : g.half_lines())
        add_edge(hl.id, hl.anchor, hl.id + "__end", grid_.L, true);

    n_u1_ = static_cast<int>(vertex_index_.size());
    n_cells_ = 0;
    for (auto& e : edges_) {
        e.first_interior = n_u1_;
        n_u1_ += e.n - 1;
        e.first_cell = n_cells_;
        n_cells_ += e.n;
    }
    // Cells are numbered after all u1 DOFs in the stacked coordinate vector.
    for (auto& e : edges_) e.first_cell += n_u1_;
}

const GridEdge& DofLayout::edge(const std::string& id) const {
    for (const auto& e : edges_)
        if (e.id == id) return e;
    throw ConfigError("unknown edge id: " + id);
}

int DofLayout::vertex_dof(const std::string& v) const {
    auto it = vertex_index_.find(v);
    if (it == vertex_index_.end()) throw ConfigError("unknown vertex: " + v);
    return it->second;
}

int DofLayout::node_dof(const GridEdge& e, int j) const {
    if (j == 0) return vertex_dof(e.from);
    if (j == e.n) return vertex_dof(e.to);
    return e.first_interior + (j - 1);
}

} // namespace diracgraph
