#pragma once

#include <vector>

#include "diracgraph/operator.hpp"

namespace diracgraph {

/// Exact-ODE validation oracle for compact graphs. On each edge the
/// eigenvalue equation is a constant-coefficient 2x2 system with explicit
/// fundamental matrix; vertex conditions close a square linear system whose
/// singular values vanish exactly at eigenvalues. Roots are located as local
/// minima of the scaled smallest singular value over a lambda mesh and
/// refined by ternary search.
///
/// Throws ConfigError if the graph has half-lines, NumericError if the mesh
/// is too coarse to isolate minima (no minima found where the dense solver
/// finds eigenvalues is detected by the caller/tests).
std::vector<double> secular_eigenvalues(const MetricGraph& g,
                                        const DiracParams& params,
                                        double lo, double hi,
                                        int mesh = 4000,
                                        double accept_ratio = 1e-7);

/// Scaled singular-value indicator sigma_min/sigma_max of the secular matrix
/// at lambda (exposed for tests).
double secular_indicator(const MetricGraph& g, const DiracParams& params,
                         double lambda);

} // namespace diracgraph
