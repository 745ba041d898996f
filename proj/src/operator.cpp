#include "diracgraph/operator.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>

namespace diracgraph {

namespace {
constexpr double kZeroEigTol = 1e-12;
}

AssembledOperator::AssembledOperator(const MetricGraph& g,
                                     const DiracParams& params,
                                     const Grid& grid)
    : layout_(g, grid), params_(params) {
    const int n = layout_.dim();
    const double gamma = params_.gamma();
    std::vector<Eigen::Triplet<double>> ta, tm;
    ta.reserve(static_cast<size_t>(8 * n));
    tm.reserve(static_cast<size_t>(4 * n));
    for (const auto& e : layout_.edges()) {
        for (int c = 0; c < e.n; ++c) {
            const int jl = layout_.node_dof(e, c);
            const int jr = layout_.node_dof(e, c + 1);
            const int jc = layout_.cell_dof(e, c);
            const double he = e.he;
            // consistent P1 mass on the cell
            tm.emplace_back(jl, jl, he / 3.0);
            tm.emplace_back(jr, jr, he / 3.0);
            tm.emplace_back(jl, jr, he / 6.0);
            tm.emplace_back(jr, jl, he / 6.0);
            tm.emplace_back(jc, jc, he);
            // mass term mc^2 s3
            ta.emplace_back(jl, jl, gamma * he / 3.0);
            ta.emplace_back(jr, jr, gamma * he / 3.0);
            ta.emplace_back(jl, jr, gamma * he / 6.0);
            ta.emplace_back(jr, jl, gamma * he / 6.0);
            ta.emplace_back(jc, jc, -gamma * he);
            // first-order coupling (integrated by parts against u1 hats)
            ta.emplace_back(jl, jc, params_.c);
            ta.emplace_back(jc, jl, params_.c);
            ta.emplace_back(jr, jc, -params_.c);
            ta.emplace_back(jc, jr, -params_.c);
        }
    }
    Ar_.resize(n, n);
    M_.resize(n, n);
    Ar_.setFromTriplets(ta.begin(), ta.end());
    M_.setFromTriplets(tm.begin(), tm.end());
}

CVec AssembledOperator::gauge_forward(const CVec& z, int n_u1) {
    CVec w = z;
    const std::complex<double> mi(0.0, -1.0);
    w.tail(z.size() - n_u1) *= mi;
    return w;
}

CVec AssembledOperator::gauge_backward(const CVec& w, int n_u1) {
    CVec z = w;
    const std::complex<double> pi(0.0, 1.0);
    z.tail(w.size() - n_u1) *= pi;
    return z;
}

CVec AssembledOperator::apply_form(const CVec& z) const {
    CVec w = gauge_forward(z, n_u1());
    CVec aw(dim());
    aw.real() = Ar_ * w.real().eval();
    aw.imag() = Ar_ * w.imag().eval();
    return gauge_backward(aw, n_u1());
}

void AssembledOperator::ensure_mass_factor() const {
    if (have_mass_factor_) return;
    mass_factor_.compute(M_);
    if (mass_factor_.info() != Eigen::Success)
        throw NumericError("mass matrix factorization failed");
    have_mass_factor_ = true;
}

Vec AssembledOperator::mass_solve(const Vec& g) const {
    ensure_mass_factor();
    return mass_factor_.solve(g);
}

CVec AssembledOperator::mass_solve(const CVec& g) const {
    ensure_mass_factor();
    CVec r(dim());
    r.real() = mass_factor_.solve(g.real().eval());
    r.imag() = mass_factor_.solve(g.imag().eval());
    return r;
}

CVec AssembledOperator::apply(const CVec& z) const {
    return mass_solve(apply_form(z));
}

std::complex<double> AssembledOperator::inner_l2(const CVec& z,
                                                 const CVec& y) const {
    CVec mz(dim());
    mz.real() = M_ * z.real().eval();
    mz.imag() = M_ * z.imag().eval();
    return y.dot(mz);  // conjugates y
}

double AssembledOperator::norm_l2_sq(const CVec& z) const {
    return inner_l2(z, z).real();
}

void AssembledOperator::ensure_eigen() const {
    if (have_eigen_) return;
    Mat Ad = Mat(Ar_);
    Mat Md = Mat(M_);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Ad, Md);
    if (es.info() != Eigen::Success)
        throw NumericError("generalized eigendecomposition failed");
    lambda_ = es.eigenvalues();
    V_ = es.eigenvectors();
    MV_ = Md * V_;
    have_eigen_ = true;
}

const Vec& AssembledOperator::eigenvalues() const {
    ensure_eigen();
    return lambda_;
}

const Mat& AssembledOperator::eigenvectors_real() const {
    ensure_eigen();
    return V_;
}

bool AssembledOperator::zero_eigenvalue_present() const {
    ensure_eigen();
    return lambda_.cwiseAbs().minCoeff() < kZeroEigTol;
}

Vec AssembledOperator::to_coeff(const Vec& w) const {
    ensure_eigen();
    return MV_.transpose() * w;
}

Vec AssembledOperator::from_coeff(const Vec& c) const {
    ensure_eigen();
    return V_ * c;
}

CVec AssembledOperator::to_coeff(const CVec& z) const {
    ensure_eigen();
    CVec w = gauge_forward(z, n_u1());
    CVec c(dim());
    c.real() = MV_.transpose() * w.real().eval();
    c.imag() = MV_.transpose() * w.imag().eval();
    return c;
}

CVec AssembledOperator::from_coeff(const CVec& c) const {
    ensure_eigen();
    CVec w(dim());
    w.real() = V_ * c.real().eval();
    w.imag() = V_ * c.imag().eval();
    return gauge_backward(w, n_u1());
}

CVec AssembledOperator::project_pos(const CVec& z) const {
    CVec c = to_coeff(z);
    for (int i = 0; i < c.size(); ++i)
        if (lambda_[i] < -kZeroEigTol) c[i] = 0.0;
    return from_coeff(c);
}

CVec AssembledOperator::project_neg(const CVec& z) const {
    CVec c = to_coeff(z);
    for (int i = 0; i < c.size(); ++i)
        if (lambda_[i] >= -kZeroEigTol) c[i] = 0.0;
    return from_coeff(c);
}

double AssembledOperator::y_norm_sq(const CVec& z) const {
    CVec c = to_coeff(z);
    double s = 0.0;
    for (int i = 0; i < c.size(); ++i) s += std::abs(lambda_[i]) * std::norm(c[i]);
    return s;
}

CVec AssembledOperator::abs_power(const CVec& z, double s) const {
    CVec c = to_coeff(z);
    for (int i = 0; i < c.size(); ++i) c[i] *= std::pow(std::abs(lambda_[i]), s);
    return from_coeff(c);
}

std::vector<double> AssembledOperator::eigenvalues_in(double lo,
                                                      double hi) const {
    ensure_eigen();
    std::vector<double> out;
    for (int i = 0; i < lambda_.size(); ++i)
        if (lambda_[i] >= lo && lambda_[i] <= hi) out.push_back(lambda_[i]);
    return out;
}

std::vector<double> AssembledOperator::eigenvalues_near_zero(
    int k, unsigned seed, int max_iter) const {
    const int n = dim();
    if (k <= 0) return {};
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(Ar_);
    lu.factorize(Ar_);
    if (lu.info() != Eigen::Success)
        throw NumericError("shift-invert factorization failed (eigenvalue at shift?)");

    // Lanczos for B = Ar^{-1} M, self-adjoint in the M-inner product. The
    // extremal eigenvalues theta of B are the reciprocals of the pencil
    // eigenvalues closest to zero.
    const int miter = std::min(max_iter, n);
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss;
    Vec q(n);
    for (int i = 0; i < n; ++i) q[i] = gauss(rng);
    auto m_ip = [&](const Vec& a, const Vec& b) { return a.dot(Vec(M_ * b)); };
    q /= std::sqrt(m_ip(q, q));
    std::vector<Vec> Q{q};
    std::vector<double> alpha, beta;
    Vec prev = Vec::Zero(n);
    double beta_prev = 0.0;
    for (int j = 0; j < miter; ++j) {
        Vec v = lu.solve(Vec(M_ * Q[j]));
        double a = m_ip(Q[j], v);
        alpha.push_back(a);
        v -= a * Q[j];
        if (j > 0) v -= beta_prev * prev;
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& qq : Q) v -= m_ip(qq, v) * qq;
        double b = std::sqrt(std::max(0.0, m_ip(v, v)));
        if (b < 1e-13) break;
        beta.push_back(b);
        prev = Q[j];
        beta_prev = b;
        Q.push_back(v / b);
    }
    const int m = static_cast<int>(alpha.size());
    Mat T = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(T);
    std::vector<double> theta(es.eigenvalues().data(),
                              es.eigenvalues().data() + m);
    // largest |theta| first -> smallest |lambda| first
    std::sort(theta.begin(), theta.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    std::vector<double> out;
    for (int i = 0; i < std::min<int>(k, m); ++i) {
        if (std::abs(theta[i]) < 1e-300) break;
        out.push_back(1.0 / theta[i]);
    }
    std::sort(out.begin(), out.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    return out;
}

} // namespace diracgraph
