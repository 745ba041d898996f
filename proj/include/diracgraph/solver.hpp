#pragma once

#include <map>
#include <string>

#include "diracgraph/functionals.hpp"
#include "diracgraph/gns.hpp"

namespace diracgraph {

/// Penalization schedule: barrier exponent r_n increases without bound while
/// the constraint weight mu_n decreases to zero, sharpening the surrogate
/// mass constraint stage by stage.
struct ContinuationSchedule {
    std::vector<double> r;
    std::vector<double> mu;
    double stage_tol = 1e-8;

    static ContinuationSchedule standard(double r0 = 2.0, double mu0 = 0.1,
                                         int stages = 12);
    void validate() const;
    int stages() const { return static_cast<int>(r.size()); }
};

enum class Branch { Normalized, SubNormalized, Trivial, Failed, Undecided };
std::string branch_name(Branch b);

struct SolveReport {
    CVec u;                  // spinor in plain (complex) coordinates
    double omega = 0.0;
    double mass = 0.0;              // ||u||_2^2
    double energy_level = 0.0;      // 1/2 (D u, u)_2 - Psi(u)
    double residual_norm = 0.0;
    Branch branch = Branch::Failed;
    std::vector<double> omega_track;  // per-stage multiplier 2 f'_{r_n}(s_n)
    std::vector<double> level_track;  // per-stage mountain-pass level
    std::vector<double> mass_track;   // per-stage ||u||_2^2
    double shift = 0.0;
    std::map<std::string, double> diagnostics;
};

/// Critical point of the reduced penalized action J_{r,mu} on the positive
/// block: Newton on grad J = 0 with a regularized step and backtracking on
/// ||grad J||, seeded at the maximizer of J along a mountain-pass ray. On
/// Newton failure, falls back to a discretized-path minimax search. A
/// converged trivial point triggers one automatic reseed, then NumericError.
struct MountainPassResult {
    Vec c;              // full coefficient vector (positive block + reduction)
    double level = 0.0; // J value
    double grad_norm = 0.0;
    int iters = 0;
    bool used_path_fallback = false;
};
MountainPassResult mountain_pass_solve(const ActionFrame& frame,
                                       const PenalizationSpec& pen,
                                       const std::optional<Vec>& seed_pos = {},
                                       double tol = 1e-8);

/// Penalized continuation: one mountain-pass solve per stage, warm-started,
/// tracking the stage multiplier omega_n = 2 f'_{r_n}(s_n) and the mass.
/// Terminal classification per the dichotomy bands (see implementation);
/// candidate limits are polished by direct_solve before the invariants are
/// checked. shift moves the spectral frame: the equation solved is
/// D u - (shift + omega) u = nonlinearity.
SolveReport continuation_solve(const AssembledOperator& op,
                               const NonlinearitySpec& spec,
                               const ContinuationSchedule& schedule,
                               double shift, unsigned seed = 1);

enum class DirectMode { FixedOmega, FixedMass };

/// Newton on the strong-form equation in real-gauge nodal coordinates.
/// FixedOmega: frequency given, field unknown. FixedMass: ||u||_2^2 = target
/// enforced with omega as the unknown multiplier (bordered system). Global
/// phase is fixed by the real gauge slice plus a positive designated
/// component. residual_history (if given) receives the Newton residual norms.
SolveReport direct_solve(const AssembledOperator& op,
                         const NonlinearitySpec& spec, DirectMode mode,
                         double target, const CVec& initial,
                         double tol = 1e-10, int max_iter = 80,
                         std::vector<double>* residual_history = nullptr);

/// Non-existence inequality chains, evaluated step by step on a discrete
/// zero-frequency solution. consistent = every inequality of the chain holds
/// (within roundoff slack); ratio = the terminal contradiction quantity,
/// which must be >= 1 whenever a nontrivial solution exists.
enum class ChainVariant {
    Subcritical,  // 2 < p < 4, core coupling constant
    PGe4,         // p >= 4, whole-graph constant + energy bound
    H1Plain,      // 2 < p < 4, H1 interpolation constants
    H1Energy      // 2 < p < 6, sup + H1 constants + energy bound
};
struct ChainStep {
    std::string name;
    double lhs = 0.0, rhs = 0.0;  // the inequality lhs <= rhs (or >= : noted)
    bool holds = false;
};
struct ChainReport {
    ChainVariant variant;
    std::vector<ChainStep> steps;
    double ratio = 0.0;
    bool consistent = false;
};
ChainReport verify_nonexistence_chain(const CVec& u,
                                      const AssembledOperator& op,
                                      const NonlinearitySpec& spec,
                                      ChainVariant variant,
                                      const Thresholds& thresholds);

/// Tolerance version of the tree unique-continuation argument: edges with
/// sup |u| < tol are marked zero, the vertex-by-vertex propagation rule is
/// run, and the result is true iff the closure covers the whole graph and
/// sup |u| < 10 tol holds everywhere.
bool numerical_unique_continuation(const AssembledOperator& op, const CVec& u,
                                   double tol);

/// Pointwise strong-form residual magnitudes at interior sample points
/// (interior u1 nodes and u2 cell midpoints; rows touching a vertex are
/// skipped). standard: D u - omega u - a chi |u|^{p-2} u. mirrored: the
/// component-swapped field (u2, -u1) under D v + omega v + a chi |v|^{p-2} v,
/// written with its own stencils.
struct InteriorSamples {
    std::vector<double> at_nodes;  // first-equation rows, interior u1 nodes
    std::vector<double> at_cells;  // second-equation rows, cell midpoints
};
InteriorSamples interior_residual_standard(const AssembledOperator& op,
                                           const CVec& u, double omega,
                                           double a, double p,
                                           const Region& region);
InteriorSamples interior_residual_mirrored(const AssembledOperator& op,
                                           const CVec& u, double omega,
                                           double a, double p,
                                           const Region& region);

/// Transplant a field from g (solved with Region core+segment(hl, ell)) to
/// attach_pendant(g, hl, ell): the first ell of the half-line becomes a
/// bounded pendant edge, the rest the new half-line. Requires the two grids
/// to share cell boundaries along the half-line (same spacing, ell a cell
/// multiple); throws ConfigError otherwise. Mass is preserved exactly.
CVec transplant_pendant(const AssembledOperator& op_src, const CVec& u,
                        const std::string& halfline_id, double ell,
                        const AssembledOperator& op_dst);

enum class SweepAxis { Coupling, Exponent, SegmentLength, Mass, Speed, Shift };

struct SweepCell {
    double value = 0.0;
    bool ok = false;
    std::string error;
    SolveReport report;
};

/// One continuation solve per axis value, warm-started where the operator is
/// unchanged; failures are recorded per cell and the sweep continues.
std::vector<SweepCell> sweep(const MetricGraph& g, const DiracParams& base,
                             const Grid& grid, const NonlinearitySpec& base_spec,
                             SweepAxis axis, const std::vector<double>& values,
                             const ContinuationSchedule& schedule, double shift,
                             unsigned seed = 1);

} // namespace diracgraph
