#pragma once

#include <filesystem>
#include <string>

#include "diracgraph/solver.hpp"

namespace diracgraph {

/// Graph document: JSON with top-level keys
///   vertices: list of strings
///   edges:    list of objects {id, from, to?, length?, halfline?: true};
///             halfline:true edges omit to/length.
MetricGraph parse_graph_document(const std::string& text);
MetricGraph load_graph(const std::filesystem::path& path);
/// Canonical re-emission (fixed field order, 17-significant-digit floats);
/// parse(graph_document(g)) round-trips byte-identically.
std::string graph_document(const MetricGraph& g);

/// Self-contained solve artifact: the problem statement plus the outcome,
/// sufficient to rebuild the operator and replay the residual.
struct StoredReport {
    MetricGraph graph{{"v"}, {}, {{"h", "v"}}};  // replaced on load
    DiracParams params{1.0, 1.0};
    Grid grid;
    NonlinearitySpec spec;
    SolveReport report;
};

std::string report_to_json(const StoredReport& sr);
StoredReport report_from_json(const std::string& text);

Branch branch_from_name(const std::string& name);

/// Canonical float formatting (%.17g): every finite double round-trips
/// exactly through parse + re-emit.
std::string format_float(double v);

/// Per-edge tabular dumps <dir>/u_<edge_id>.csv with columns
/// x,re_u1,im_u1,re_u2,im_u2; node rows carry u1 (u2 blank), cell-midpoint
/// rows carry u2 (u1 blank), interleaved in increasing x.
void write_spinor_csv(const AssembledOperator& op, const CVec& u,
                      const std::filesystem::path& dir);

} // namespace diracgraph
