#pragma once

#include <map>
#include <string>
#include <vector>

#include "diracgraph/graph.hpp"

namespace diracgraph {

/// Discretization parameters. Half-lines are truncated to [0, L]; the
/// truncation end is a degree-1 vertex carrying the natural condition.
struct Grid {
    double h = 0.05;   // target cell size
    double L = 15.0;   // half-line truncation length

    Grid() = default;
    Grid(double h_, double L_) : h(h_), L(L_) {
        if (!(h > 0.0)) throw ConfigError("grid spacing must be > 0");
        if (!(L > 0.0)) throw ConfigError("truncation length must be > 0");
    }
};

/// Discrete edge: n uniform cells over [0, len]. First spinor component u1
/// lives at the n+1 cell boundaries (endpoints shared through vertex DOFs),
/// u2 at the n cell midpoints.
struct GridEdge {
    std::string id;
    std::string from;       // vertex at x = 0
    std::string to;         // vertex at x = len (truncation vertex for half-lines)
    double len = 0.0;
    bool from_halfline = false;
    int n = 0;              // cell count
    double he = 0.0;        // len / n
    int first_interior = 0; // global u1 index of node 1 (nodes 1..n-1)
    int first_cell = 0;     // global u2 index of cell 0
};

/// Global DOF numbering: u1 vertex DOFs first, then per-edge interior nodes,
/// then per-edge cells. Total complex dimension = n_u1 + n_cells.
class DofLayout {
public:
    DofLayout(const MetricGraph& g, const Grid& grid);

    const MetricGraph& graph() const { return graph_; }
    const Grid& grid() const { return grid_; }
    const std::vector<GridEdge>& edges() const { return edges_; }
    const GridEdge& edge(const std::string& id) const;

    int n_vertices() const { return static_cast<int>(vertex_index_.size()); }
    int n_u1() const { return n_u1_; }
    int n_cells() const { return n_cells_; }
    int dim() const { return n_u1_ + n_cells_; }

    int vertex_dof(const std::string& v) const;
    /// Global u1 index of node j (0..n) of edge e.
    int node_dof(const GridEdge& e, int j) const;
    /// Global u2 index of cell c (0..n-1) of edge e.
    int cell_dof(const GridEdge& e, int c) const { return e.first_cell + c; }

    /// Midpoint coordinate of cell c on its edge.
    static double cell_mid(const GridEdge& e, int c) { return (c + 0.5) * e.he; }

private:
    MetricGraph graph_;  // owned copy: the layout must outlive its source
    Grid grid_;
    std::vector<GridEdge> edges_;
    std::map<std::string, int> vertex_index_;
    int n_u1_ = 0;
    int n_cells_ = 0;
};

} // namespace diracgraph
