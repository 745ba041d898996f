#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "diracgraph/grid.hpp"

namespace diracgraph {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

/// Physical parameters of the operator -i c s1 d/dx + m c^2 s3.
struct DiracParams {
    double m = 1.0;
    double c = 1.0;

    DiracParams() = default;
    DiracParams(double m_, double c_) : m(m_), c(c_) {
        if (!(m > 0.0)) throw ConfigError("mass must be > 0");
        if (!(c > 0.0)) throw ConfigError("speed must be > 0");
    }
    /// Gap edge m c^2.
    double gamma() const { return m * c * c; }
};

/// Mixed Galerkin discretization of the Dirac operator with Kirchhoff-type
/// vertex conditions: u1 continuous piecewise-linear (vertex DOFs shared),
/// u2 piecewise-constant per cell. In the gauge u2 = i*w2 the stiffness
/// matrix is real symmetric:
///
///   Ar = [ mc^2 M1   C^T  ]      C[cell, left node]  = +c
///        [   C    -mc^2 M2 ],    C[cell, right node] = -c
///
/// and the complex operator is A = U Ar U^H with U = diag(I, iI). The mass
/// matrix M is the consistent P1 mass for u1 and diag(h_e) for u2.
/// Coordinates are stacked (all u1 nodes, then all u2 cells).
class AssembledOperator {
public:
    AssembledOperator(const MetricGraph& g, const DiracParams& params,
                      const Grid& grid);

    const DofLayout& layout() const { return layout_; }
    const DiracParams& params() const { return params_; }
    int dim() const { return layout_.dim(); }
    int n_u1() const { return layout_.n_u1(); }

    const SpMat& stiffness_real() const { return Ar_; }
    const SpMat& mass() const { return M_; }

    /// Complex stiffness action A z (a dual vector).
    CVec apply_form(const CVec& z) const;
    /// Operator action M^{-1} A z.
    CVec apply(const CVec& z) const;
    /// M^{-1} g for a dual vector g.
    CVec mass_solve(const CVec& g) const;
    Vec mass_solve(const Vec& g) const;

    std::complex<double> inner_l2(const CVec& z, const CVec& y) const;
    double norm_l2_sq(const CVec& z) const;

    // --- dense eigendecomposition (computed on first use) ---
    /// Eigenvalues of Ar v = lambda M v, ascending; eigenvectors M-orthonormal.
    const Vec& eigenvalues() const;
    const Mat& eigenvectors_real() const;
    /// True if some |lambda| < 1e-12 (assigned to the positive subspace).
    bool zero_eigenvalue_present() const;

    /// Coefficients c_i = <z, phi_i>_M of z in the complex eigenbasis.
    CVec to_coeff(const CVec& z) const;
    CVec from_coeff(const CVec& c) const;
    Vec to_coeff(const Vec& w) const;   // real-gauge variant
    Vec from_coeff(const Vec& c) const;

    CVec project_pos(const CVec& z) const;
    CVec project_neg(const CVec& z) const;
    /// Quadratic-form norm ||u||^2 = sum |lambda_i| |c_i|^2.
    double y_norm_sq(const CVec& z) const;
    /// |D|^s z via the eigenexpansion.
    CVec abs_power(const CVec& z, double s) const;

    /// All eigenvalues in [lo, hi] (dense path).
    std::vector<double> eigenvalues_in(double lo, double hi) const;

    /// The k eigenvalues of smallest magnitude, via shift-invert Lanczos with
    /// a sparse factorization of Ar; suitable for large grids where the dense
    /// decomposition is too expensive. Deterministic for a fixed seed.
    std::vector<double> eigenvalues_near_zero(int k, unsigned seed = 7,
                                              int max_iter = 300) const;

    /// Real-gauge transform w = U^H z and its inverse z = U w.
    static CVec gauge_forward(const CVec& z, int n_u1);
    static CVec gauge_backward(const CVec& w, int n_u1);

private:
    void ensure_eigen() const;
    void ensure_mass_factor() const;

    DofLayout layout_;
    DiracParams params_;
    SpMat Ar_, M_;

    mutable bool have_eigen_ = false;
    mutable Vec lambda_;
    mutable Mat V_;       // columns M-orthonormal
    mutable Mat MV_;      // M * V, cached for coefficient transforms
    mutable bool have_mass_factor_ = false;
    mutable Eigen::SimplicialLDLT<SpMat> mass_factor_;
};

} // namespace diracgraph
