#include "diracgraph/special_spinors.hpp"

#include <cmath>

namespace diracgraph {

namespace {

double hat(double b, double x) { return std::max(0.0, 1.0 - b * x); }

double bump(double t) {
    // C_c^infinity bump on (1, 3), peak at t = 2
    double s = t - 2.0;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

} // namespace

CVec cycle_eigenfunction(const AssembledOperator& op,
                         const std::vector<CycleStep>& cycle) {
    if (cycle.empty()) throw ConfigError("empty cycle");
    const auto& layout = op.layout();
    CVec z = CVec::Zero(op.dim());
    for (const auto& step : cycle) {
        const auto& e = layout.edge(step.edge_id);
        double s = step.forward ? 1.0 : -1.0;
        for (int c = 0; c < e.n; ++c) z[layout.cell_dof(e, c)] = s;
    }
    return z;
}

CVec build_phi_b_plateau(const AssembledOperator& op, double b) {
    if (!(b > 0.0)) throw ConfigError("b must be > 0");
    const auto& layout = op.layout();
    CVec z = CVec::Zero(op.dim());
    for (const auto& e : layout.edges()) {
        for (int j = 0; j <= e.n; ++j) {
            double val = e.from_halfline ? hat(b, j * e.he) : 1.0;
            z[layout.node_dof(e, j)] = val;
        }
    }
    return z;
}

CVec build_phi_b_bump(const AssembledOperator& op, double b,
                      const std::string& halfline_id) {
    if (!(b > 0.0)) throw ConfigError("b must be > 0");
    const auto& layout = op.layout();
    if (!layout.graph().is_half_line(halfline_id))
        throw ConfigError("not a half-line: " + halfline_id);
    const auto& e = layout.edge(halfline_id);
    if (b * e.len < 3.0)
        throw ConfigError("truncation length too short for the bump support");
    CVec z = CVec::Zero(op.dim());
    for (int j = 0; j <= e.n; ++j)
        z[layout.node_dof(e, j)] = bump(b * j * e.he);
    return z;
}

CVec build_phi_b_path(const AssembledOperator& op, double b,
                      const std::string& v, const std::string& w) {
    if (!(b > 0.0)) throw ConfigError("b must be > 0");
    const auto& g = op.layout().graph();
    if (v == w)
        throw ConfigError("HypothesisUnmet: need two distinct half-line vertices");
    std::string hv, hw;
    for (const auto& h : g.half_lines()) {
        if (h.anchor == v && hv.empty()) hv = h.id;
        if (h.anchor == w && hw.empty()) hw = h.id;
    }
    if (hv.empty() || hw.empty())
        throw ConfigError("HypothesisUnmet: both vertices need a half-line");

    const auto& layout = op.layout();
    CVec z = CVec::Zero(op.dim());
    for (const auto& step : g.simple_path(v, w)) {
        const auto& e = layout.edge(step.edge_id);
        double s = step.forward ? 1.0 : -1.0;
        for (int c = 0; c < e.n; ++c) z[layout.cell_dof(e, c)] = s;
    }
    for (const auto& [hid, sgn] : {std::pair{hv, -1.0}, {hw, 1.0}}) {
        const auto& e = layout.edge(hid);
        for (int c = 0; c < e.n; ++c)
            z[layout.cell_dof(e, c)] = sgn * hat(b, DofLayout::cell_mid(e, c));
    }
    return z;
}

} // namespace diracgraph
