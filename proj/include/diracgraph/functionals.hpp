#pragma once

#include <optional>

#include "diracgraph/operator.hpp"

namespace diracgraph {

/// Power nonlinearity a * chi_region * |u|^{p-2} u. sign = +1 selects the
/// equation Du - wu = a chi |u|^{p-2} u, sign = -1 its reflected companion
/// Du + wu = -a chi |u|^{p-2} u (handled through the mirrored action).
struct NonlinearitySpec {
    double a = 0.1;
    double p = 3.0;
    int sign = +1;
    Region region = Region::core();

    void validate() const {
        if (a < 0.0) throw ConfigError("coupling a must be >= 0");
        if (!(p > 2.0)) throw ConfigError("exponent p must be > 2");
        if (sign != 1 && sign != -1) throw ConfigError("sign must be +-1");
    }
};

struct PenalizationSpec {
    double r = 2.0;
    double mu = 0.1;

    void validate() const {
        if (!(r > 1.0)) throw ConfigError("penalization exponent r must be > 1");
        if (!(mu > 0.0)) throw ConfigError("penalization mu must be > 0");
    }
};

/// Barrier family f_r(s) = s^r / (1 - s) on [0, 1).
double f_r(double r, double s);
double f_r_prime(double r, double s);
double f_r_second(double r, double s);

/// Quadrature cache for the nonlinear term over a region: per covered cell,
/// the midpoint value |u|^2 = |(u1_l + u1_r)/2|^2 + |u2|^2 weighted by the
/// overlap length of the cell with the region.
class NonlinearTerm {
public:
    NonlinearTerm(const AssembledOperator& op, const Region& region);

    struct QCell {
        int cell;  // global u2 index
        int nl, nr;  // global u1 node indices
        double w;  // overlap length
    };
    const std::vector<QCell>& cells() const { return cells_; }

    /// Psi(u) = (a/p) * integral over the region of |u|^p.
    double psi(const CVec& z, double a, double p) const;
    double psi_real(const Vec& w, double a, double p) const;
    /// Dual derivative N(z): Psi(z + d) = Psi(z) + Re(d^H N) + O(d^2);
    /// N is the quadrature of a chi |u|^{p-2} u against test functions.
    CVec dpsi(const CVec& z, double a, double p) const;
    Vec dpsi_real(const Vec& w, double a, double p) const;
    /// Jacobian of dpsi_real (symmetric, sparse 3x3 cell blocks).
    SpMat hess_real(const Vec& w, double a, double p) const;

private:
    std::vector<QCell> cells_;
    int dim_;
};

/// Everything of the variational machinery in one frame: the real-gauge
/// eigenbasis of the (possibly shifted) operator, with the mirrored side
/// folded in as a sign flip of the spectrum. Coefficient vectors c are real;
/// the field is u = gauge(V c).
///
/// Shifted signed spectrum: nu_i = side * lambda_i - shift, side = +1 for
/// the standard action, -1 for the mirrored one. The action is
///   I_omega(c) = 1/2 sum nu_i c_i^2 - (omega/2) sum c_i^2 - Psi(Vc),
/// the penalized functional
///   I_{r,mu}(c) = 1/2 sum nu_i c_i^2 - Psi(Vc) - f_r(s(c)),
///   s(c) = sum (1 + mu*|nu_i|) c_i^2.
class ActionFrame {
public:
    ActionFrame(const AssembledOperator& op, const NonlinearitySpec& spec,
                double shift = 0.0);

    const AssembledOperator& op() const { return *op_; }
    const NonlinearitySpec& spec() const { return spec_; }
    double shift() const { return shift_; }
    int side() const { return side_; }
    int n() const { return static_cast<int>(nu_.size()); }
    const Vec& nu() const { return nu_; }
    /// true entries: nu_i > 0 (the "positive" subspace of this frame)
    const std::vector<bool>& positive() const { return pos_; }

    /// Real-gauge nodal vector of c, and the complex spinor it represents.
    Vec field(const Vec& c) const;
    CVec spinor(const Vec& c) const;
    /// Coefficients of a complex spinor's real-slice representative: the
    /// global phase is fixed so that sum_i c_i^2 (complex) is real positive,
    /// then the real part is taken. For a spinor already in the real slice
    /// this is exact.
    Vec coeff_of(const CVec& z) const;

    double psi_c(const Vec& c) const;
    Vec grad_psi_c(const Vec& c) const;
    Mat hess_psi_c(const Vec& c) const;

    double action(const Vec& c, double omega) const;
    Vec grad_action(const Vec& c, double omega) const;

    double s_value(const Vec& c, double mu_pen) const;
    /// Penalized action; throws ConfigError when s(c) >= 1 (outside U_mu).
    double perturbed(const Vec& c, const PenalizationSpec& pen) const;
    Vec grad_perturbed(const Vec& c, const PenalizationSpec& pen) const;
    Mat hess_perturbed(const Vec& c, const PenalizationSpec& pen) const;

    /// Maximize the (penalized when pen is set, omega = 0) action over the
    /// negative block with the positive block held at c_pos. Returns the
    /// full coefficient vector; strict concavity makes the maximizer unique.
    struct ReduceResult {
        Vec c;
        bool converged = false;
        int iters = 0;
        double grad_norm = 0.0;
    };
    ReduceResult reduce(const Vec& c_pos,
                        const std::optional<PenalizationSpec>& pen,
                        double tol = 1e-9, int max_iter = 200) const;

    /// J(v) = I(v + h(v)) and its gradient in the positive block
    /// (envelope property). c_pos entries on the negative block are ignored.
    struct Reduced {
        double value = 0.0;
        Vec grad_pos;  // full-length, zero on the negative block
        Vec c_full;
        bool converged = false;
    };
    Reduced reduced_action(const Vec& c_pos,
                           const std::optional<PenalizationSpec>& pen) const;

    /// Restrict/extend helpers for the positive block.
    Vec project_pos_block(const Vec& c) const;
    Vec project_neg_block(const Vec& c) const;

private:
    const AssembledOperator* op_;
    NonlinearitySpec spec_;
    double shift_;
    int side_;
    Vec nu_;
    std::vector<bool> pos_;
    NonlinearTerm term_;
};

/// Strong-form defect of the frequency-omega equation selected by spec.sign,
/// as an L2 (Riesz) gradient: M^{-1}(A z -+ omega M z -+ N(z)).
CVec residual(const AssembledOperator& op, const NonlinearTerm& term,
              const CVec& z, double omega, const NonlinearitySpec& spec);
/// Its L2 norm sqrt(<r, r>_M).
double residual_norm(const AssembledOperator& op, const NonlinearTerm& term,
                     const CVec& z, double omega, const NonlinearitySpec& spec);

} // namespace diracgraph
