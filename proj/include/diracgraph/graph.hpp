#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diracgraph/errors.hpp"

namespace diracgraph {

/// A bounded edge [0, length] with x = 0 at `from`.
struct BoundedEdge {
    std::string id;
    std::string from;
    std::string to;
    double length = 0.0;
};

/// An unbounded edge identified with [0, inf), x = 0 at `anchor`.
struct HalfLine {
    std::string id;
    std::string anchor;
};

/// The subgraph of all bounded edges.
struct CompactCore {
    std::vector<std::string> edge_ids;
    std::set<std::string> vertices;
    double total_length = 0.0;
    bool empty() const { return edge_ids.empty(); }
};

/// Support of the nonlinearity: the compact core, optionally extended by an
/// initial segment [0, ell] of one half-line.
struct Region {
    enum class Kind { CoreOnly, CoreUnionSegment };
    Kind kind = Kind::CoreOnly;
    std::string halfline_id;  // CoreUnionSegment only
    double ell = 0.0;         // segment length, >= 0

    static Region core() { return Region{}; }
    static Region core_plus_segment(std::string hl, double ell);
};

/// One step of a simple cycle: edge id plus traversal direction
/// (forward = from->to).
struct CycleStep {
    std::string edge_id;
    bool forward = true;
};

/// Connected metric graph with bounded edges and half-lines.
/// Self-loops and parallel edges are allowed; a self-loop counts as two
/// incidences at its vertex. Immutable after construction.
class MetricGraph {
public:
    MetricGraph(std::vector<std::string> vertices,
                std::vector<BoundedEdge> bounded_edges,
                std::vector<HalfLine> half_lines);

    const std::vector<std::string>& vertices() const { return vertices_; }
    const std::vector<BoundedEdge>& bounded_edges() const { return bounded_edges_; }
    const std::vector<HalfLine>& half_lines() const { return half_lines_; }

    bool has_vertex(const std::string& v) const;
    const BoundedEdge& bounded_edge(const std::string& id) const;
    const HalfLine& half_line(const std::string& id) const;
    bool is_half_line(const std::string& id) const;

    /// Count of edge-ends (bounded and half-line) meeting at v; a self-loop
    /// contributes 2.
    int degree(const std::string& v) const;
    /// Same restricted to bounded edges.
    int core_degree(const std::string& v) const;
    /// Number of half-lines anchored at v.
    int halfline_count(const std::string& v) const;

    CompactCore compact_core() const;

    /// Combinatorial distance: minimal edge count of a path v -> w. Only
    /// bounded edges connect distinct vertices.
    int graph_distance(const std::string& v, const std::string& w) const;

    /// True iff the core is a connected tree whose leaves, except at most
    /// one, are each incident to a half-line. Also returns the "free" leaves
    /// (core leaves with no half-line).
    struct TreeCheck {
        bool satisfied = false;
        bool core_is_tree = false;
        std::vector<std::string> free_leaves;
    };
    TreeCheck core_is_tree_with_at_most_one_free_leaf() const;

    /// A simple cycle in the compact core, if any. Deterministic: ties broken
    /// by lexicographic edge id. A self-loop is a 1-edge cycle.
    std::optional<std::vector<CycleStep>> find_simple_cycle() const;

    /// Replace half-line hl by a bounded edge of length ell ending at a fresh
    /// vertex, with a new half-line anchored there.
    MetricGraph attach_pendant(const std::string& halfline_id, double ell) const;

    /// Name of the vertex created by the most recent attach_pendant on this
    /// graph's naming scheme (anchor + "_pendant..." suffix avoided; see impl).
    static std::string pendant_vertex_name(const std::string& halfline_id);
    static std::string pendant_edge_name(const std::string& halfline_id);

    /// Worklist fixpoint of the rule: at any vertex, if every incident edge
    /// except one is known-zero, the remaining one is zero too. Half-lines
    /// participate as incident edges. Returns the closure and whether it
    /// covers every edge (bounded and half-line).
    struct ZeroPropagation {
        std::set<std::string> closure;
        bool forces_all_zero = false;
    };
    ZeroPropagation zero_propagation(const std::set<std::string>& initially_zero) const;

    /// Vertices incident with at least one half-line.
    std::vector<std::string> halfline_vertices() const;

    /// Simple path between two vertices as oriented edge steps (bounded edges
    /// only). Throws ConfigError if no path exists.
    std::vector<CycleStep> simple_path(const std::string& v, const std::string& w) const;

private:
    std::vector<std::string> vertices_;
    std::vector<BoundedEdge> bounded_edges_;
    std::vector<HalfLine> half_lines_;

    void validate() const;
};

} // namespace diracgraph
