#pragma once

#include "diracgraph/operator.hpp"

namespace diracgraph {

/// Eigenvector at -mc^2 supported on a simple cycle: u1 = 0, u2 = +-1 on the
/// cycle edges (sign following the traversal direction), 0 elsewhere. Exact
/// at the discrete level: apply(op, phi) = -mc^2 phi up to roundoff.
CVec cycle_eigenfunction(const AssembledOperator& op,
                         const std::vector<CycleStep>& cycle);

/// Plateau test function: u1 = 1 on the compact core, max(0, 1 - b x) on
/// every half-line, u2 = 0. Its squared L2 norm is N/(3b) + |K| when the
/// truncation length exceeds 1/b.
CVec build_phi_b_plateau(const AssembledOperator& op, double b);

/// Smooth bump supported on one half-line: u1(x) = exp(-1/(1-(bx-2)^2)) for
/// bx in (1, 3), 0 elsewhere; u2 = 0.
CVec build_phi_b_bump(const AssembledOperator& op, double b,
                      const std::string& halfline_id);

/// Lower-component test function between two half-line vertices: u2 = +-1
/// along a simple path v -> w, -max(0,1-bx) on a half-line at v and
/// +max(0,1-bx) on a half-line at w, signs chosen so every signed vertex sum
/// vanishes; u1 = 0. Throws ConfigError when v or w has no half-line or
/// v == w.
CVec build_phi_b_path(const AssembledOperator& op, double b,
                      const std::string& v, const std::string& w);

} // namespace diracgraph
