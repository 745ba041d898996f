#include "diracgraph/functionals.hpp"

#include <cmath>
#include <limits>

namespace diracgraph {

namespace {
// below this, the rank-one curvature term of the nonlinearity is dropped
// (it scales like rho^{p/2-1} and vanishes with rho for p > 2)
constexpr double kRhoFloor = 1e-28;
}

double f_r(double r, double s) {
    if (!(r > 1.0)) throw ConfigError("f_r requires r > 1");
    if (s < 0.0 || s >= 1.0) throw ConfigError("f_r domain is [0, 1)");
    return std::pow(s, r) / (1.0 - s);
}

double f_r_prime(double r, double s) {
    if (!(r > 1.0)) throw ConfigError("f_r requires r > 1");
    if (s < 0.0 || s >= 1.0) throw ConfigError("f_r domain is [0, 1)");
    if (s == 0.0) return 0.0;
    double om = 1.0 - s;
    return r * std::pow(s, r - 1.0) / om + std::pow(s, r) / (om * om);
}

double f_r_second(double r, double s) {
    if (!(r > 1.0)) throw ConfigError("f_r requires r > 1");
    if (s < 0.0 || s >= 1.0) throw ConfigError("f_r domain is [0, 1)");
    if (s == 0.0) {
        if (r == 2.0) return 2.0;
        if (r > 2.0) return 0.0;
        return std::numeric_limits<double>::infinity();
    }
    double om = 1.0 - s;
    return r * (r - 1.0) * std::pow(s, r - 2.0) / om +
           2.0 * r * std::pow(s, r - 1.0) / (om * om) +
           2.0 * std::pow(s, r) / (om * om * om);
}

NonlinearTerm::NonlinearTerm(const AssembledOperator& op, const Region& region)
    : dim_(op.dim()) {
    const auto& layout = op.layout();
    const auto& g = layout.graph();
    if (region.kind == Region::Kind::CoreUnionSegment) {
        if (!g.is_half_line(region.halfline_id))
            throw ConfigError("region segment must name a half-line");
        if (region.ell > layout.grid().L)
            throw ConfigError("region segment exceeds the truncation length");
    }
    for (const auto& e : layout.edges()) {
        double cover = 0.0;
        if (!e.from_halfline)
            cover = e.len;
        else if (region.kind == Region::Kind::CoreUnionSegment &&
                 e.id == region.halfline_id)
            cover = region.ell;
        else
            continue;
        for (int c = 0; c < e.n; ++c) {
            double xl = c * e.he;
            double w = std::min(cover - xl, e.he);
            if (w <= 0.0) break;
            cells_.push_back({layout.cell_dof(e, c), layout.node_dof(e, c),
                              layout.node_dof(e, c + 1), w});
        }
    }
}

double NonlinearTerm::psi(const CVec& z, double a, double p) const {
    double s = 0.0;
    for (const auto& q : cells_) {
        double rho = std::norm(0.5 * (z[q.nl] + z[q.nr])) + std::norm(z[q.cell]);
        s += q.w * std::pow(rho, p / 2.0);
    }
    return a / p * s;
}

double NonlinearTerm::psi_real(const Vec& w, double a, double p) const {
    double s = 0.0;
    for (const auto& q : cells_) {
        double av = 0.5 * (w[q.nl] + w[q.nr]);
        double rho = av * av + w[q.cell] * w[q.cell];
        s += q.w * std::pow(rho, p / 2.0);
    }
    return a / p * s;
}

CVec NonlinearTerm::dpsi(const CVec& z, double a, double p) const {
    CVec g = CVec::Zero(dim_);
    for (const auto& q : cells_) {
        std::complex<double> av = 0.5 * (z[q.nl] + z[q.nr]);
        double rho = std::norm(av) + std::norm(z[q.cell]);
        double f = a * q.w * std::pow(rho, (p - 2.0) / 2.0);
        g[q.cell] += f * z[q.cell];
        g[q.nl] += 0.5 * f * av;
        g[q.nr] += 0.5 * f * av;
    }
    return g;
}

Vec NonlinearTerm::dpsi_real(const Vec& w, double a, double p) const {
    Vec g = Vec::Zero(dim_);
    for (const auto& q : cells_) {
        double av = 0.5 * (w[q.nl] + w[q.nr]);
        double rho = av * av + w[q.cell] * w[q.cell];
        double f = a * q.w * std::pow(rho, (p - 2.0) / 2.0);
        g[q.cell] += f * w[q.cell];
        g[q.nl] += 0.5 * f * av;
        g[q.nr] += 0.5 * f * av;
    }
    return g;
}

SpMat NonlinearTerm::hess_real(const Vec& w, double a, double p) const {
    const double q2 = (p - 2.0) / 2.0;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(cells_.size() * 9);
    for (const auto& q : cells_) {
        double av = 0.5 * (w[q.nl] + w[q.nr]);
        double b = w[q.cell];
        double rho = av * av + b * b;
        double f = a * q.w * std::pow(rho, q2);
        // first-order part: f * B with B = [[1/4,1/4,0],[1/4,1/4,0],[0,0,1]]
        int id[3] = {q.nl, q.nr, q.cell};
        double B[3][3] = {{0.25, 0.25, 0.0}, {0.25, 0.25, 0.0}, {0.0, 0.0, 1.0}};
        double local[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) local[i][j] = f * B[i][j];
        if (rho > kRhoFloor && q2 > 0.0) {
            // rank-one part: 2 q2 f / rho * (Bt)(Bt)^T, Bt = (av/2, av/2, b)
            double bt[3] = {0.5 * av, 0.5 * av, b};
            double fac = 2.0 * q2 * f / rho;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) local[i][j] += fac * bt[i] * bt[j];
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (local[i][j] != 0.0) t.emplace_back(id[i], id[j], local[i][j]);
    }
    SpMat H(dim_, dim_);
    H.setFromTriplets(t.begin(), t.end());
    return H;
}

CVec residual(const AssembledOperator& op, const NonlinearTerm& term,
              const CVec& z, double omega, const NonlinearitySpec& spec) {
    CVec mz(op.dim());
    mz.real() = op.mass() * z.real().eval();
    mz.imag() = op.mass() * z.imag().eval();
    CVec dual;
    if (spec.sign > 0)
        dual = op.apply_form(z) - omega * mz - term.dpsi(z, spec.a, spec.p);
    else
        dual = op.apply_form(z) + omega * mz + term.dpsi(z, spec.a, spec.p);
    return op.mass_solve(dual);
}

double residual_norm(const AssembledOperator& op, const NonlinearTerm& term,
                     const CVec& z, double omega,
                     const NonlinearitySpec& spec) {
    CVec r = residual(op, term, z, omega, spec);
    return std::sqrt(std::max(0.0, op.norm_l2_sq(r)));
}

// ---------------------------------------------------------------------------

ActionFrame::ActionFrame(const AssembledOperator& op,
                         const NonlinearitySpec& spec, double shift)
    : op_(&op), spec_(spec), shift_(shift), side_(spec.sign >= 0 ? +1 : -1),
      term_(op, spec.region) {
    spec_.validate();
    if (std::abs(shift_) >= op.params().gamma())
        throw ConfigError("shift must lie inside the spectral gap");
    const Vec& lam = op.eigenvalues();
    nu_ = side_ * lam.array() - shift_;
    pos_.resize(nu_.size());
    for (int i = 0; i < nu_.size(); ++i) pos_[i] = nu_[i] >= -1e-12;
}

Vec ActionFrame::field(const Vec& c) const { return op_->from_coeff(c); }

CVec ActionFrame::spinor(const Vec& c) const {
    Vec w = field(c);
    return AssembledOperator::gauge_backward(w.cast<std::complex<double>>(),
                                             op_->n_u1());
}

Vec ActionFrame::coeff_of(const CVec& z) const {
    CVec c = op_->to_coeff(z);
    std::complex<double> s2 = (c.array() * c.array()).sum();
    double theta = 0.5 * std::arg(s2);
    return (c * std::polar(1.0, -theta)).real();
}

double ActionFrame::psi_c(const Vec& c) const {
    return term_.psi_real(field(c), spec_.a, spec_.p);
}

Vec ActionFrame::grad_psi_c(const Vec& c) const {
    Vec g = term_.dpsi_real(field(c), spec_.a, spec_.p);
    return op_->eigenvectors_real().transpose() * g;
}

Mat ActionFrame::hess_psi_c(const Vec& c) const {
    SpMat J = term_.hess_real(field(c), spec_.a, spec_.p);
    const Mat& V = op_->eigenvectors_real();
    return V.transpose() * (J * V);
}

double ActionFrame::action(const Vec& c, double omega) const {
    double quad = 0.5 * (nu_.array() * c.array().square()).sum();
    return quad - 0.5 * omega * c.squaredNorm() - psi_c(c);
}

Vec ActionFrame::grad_action(const Vec& c, double omega) const {
    return (nu_.array() * c.array()).matrix() - omega * c - grad_psi_c(c);
}

double ActionFrame::s_value(const Vec& c, double mu_pen) const {
    return ((1.0 + mu_pen * nu_.array().abs()) * c.array().square()).sum();
}

double ActionFrame::perturbed(const Vec& c, const PenalizationSpec& pen) const {
    pen.validate();
    double s = s_value(c, pen.mu);
    if (s >= 1.0) throw NumericError("outside U_mu: (T_mu u, u) >= 1");
    double quad = 0.5 * (nu_.array() * c.array().square()).sum();
    return quad - psi_c(c) - f_r(pen.r, s);
}

Vec ActionFrame::grad_perturbed(const Vec& c,
                                const PenalizationSpec& pen) const {
    double s = s_value(c, pen.mu);
    if (s >= 1.0) throw NumericError("outside U_mu: (T_mu u, u) >= 1");
    Vec t = (1.0 + pen.mu * nu_.array().abs()).matrix();
    return (nu_.array() * c.array()).matrix() - grad_psi_c(c) -
           2.0 * f_r_prime(pen.r, s) * (t.array() * c.array()).matrix();
}

Mat ActionFrame::hess_perturbed(const Vec& c,
                                const PenalizationSpec& pen) const {
    double s = s_value(c, pen.mu);
    if (s >= 1.0) throw NumericError("outside U_mu: (T_mu u, u) >= 1");
    Vec t = (1.0 + pen.mu * nu_.array().abs()).matrix();
    Vec tc = (t.array() * c.array()).matrix();
    Mat H = (-hess_psi_c(c)).eval();
    H.diagonal() += nu_ - 2.0 * f_r_prime(pen.r, s) * t;
    H.noalias() -= 4.0 * f_r_second(pen.r, s) * tc * tc.transpose();
    return H;
}

Vec ActionFrame::project_pos_block(const Vec& c) const {
    Vec out = c;
    for (int i = 0; i < out.size(); ++i)
        if (!pos_[i]) out[i] = 0.0;
    return out;
}

Vec ActionFrame::project_neg_block(const Vec& c) const {
    Vec out = c;
    for (int i = 0; i < out.size(); ++i)
        if (pos_[i]) out[i] = 0.0;
    return out;
}

ActionFrame::ReduceResult ActionFrame::reduce(
    const Vec& c_pos, const std::optional<PenalizationSpec>& pen, double tol,
    int max_iter) const {
    const int n = this->n();
    std::vector<int> neg;
    for (int i = 0; i < n; ++i)
        if (!pos_[i]) neg.push_back(i);
    const int k = static_cast<int>(neg.size());

    Vec c = project_pos_block(c_pos);
    if (pen && s_value(c, pen->mu) >= 1.0)
        throw NumericError("LeftU_mu: positive part already outside U_mu");

    auto value = [&](const Vec& cc) {
        return pen ? perturbed(cc, *pen) : action(cc, 0.0);
    };
    auto feasible = [&](const Vec& cc) {
        return !pen || s_value(cc, pen->mu) < 1.0;
    };
    auto grad_full = [&](const Vec& cc) {
        return pen ? grad_perturbed(cc, *pen) : grad_action(cc, 0.0);
    };

    ReduceResult res;
    double fval = value(c);
    for (int it = 0; it < max_iter; ++it) {
        Vec g = grad_full(c);
        Vec gn(k);
        for (int i = 0; i < k; ++i) gn[i] = g[neg[i]];
        res.grad_norm = gn.norm();
        if (res.grad_norm <= tol) {
            res.c = c;
            res.converged = true;
            res.iters = it;
            return res;
        }
        // Newton ascent in the concave negative block
        Mat Hfull = pen ? hess_perturbed(c, *pen) : [&] {
            Mat H = (-hess_psi_c(c)).eval();
            H.diagonal() += nu_;
            return H;
        }();
        Mat Hn(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) Hn(i, j) = Hfull(neg[i], neg[j]);
        // -Hn is positive definite by concavity; regularize defensively
        Eigen::LLT<Mat> llt(-Hn);
        Vec d;
        if (llt.info() == Eigen::Success) {
            d = llt.solve(gn);
        } else {
            Mat R = -Hn;
            R.diagonal().array() += 1e-10 + gn.norm();
            d = Eigen::LLT<Mat>(R).solve(gn);
        }
        // Armijo backtracking on the ascent direction
        double slope = gn.dot(d);
        // near the maximum the predicted improvement drops below roundoff in
        // the value; Armijo comparisons become noise, so take the plain
        // Newton step (safe in the concave near-quadratic regime)
        if (0.5 * slope <= 1e-12 * (1.0 + std::abs(fval))) {
            Vec trial = c;
            for (int i = 0; i < k; ++i) trial[neg[i]] += d[i];
            if (feasible(trial)) {
                c = trial;
                fval = value(c);
                continue;
            }
        }
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vec trial = c;
            for (int i = 0; i < k; ++i) trial[neg[i]] += step * d[i];
            if (feasible(trial)) {
                double ft = value(trial);
                if (ft >= fval + 1e-4 * step * slope) {
                    c = trial;
                    fval = ft;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    Vec g = grad_full(c);
    double gn = 0.0;
    for (int i : neg) gn += g[i] * g[i];
    res.grad_norm = std::sqrt(gn);
    res.c = c;
    res.converged = res.grad_norm <= tol;
    res.iters = max_iter;
    return res;
}

ActionFrame::Reduced ActionFrame::reduced_action(
    const Vec& c_pos, const std::optional<PenalizationSpec>& pen) const {
    auto rr = reduce(c_pos, pen);
    if (!rr.converged)
        throw NumericError("reduction maximization did not converge");
    Reduced out;
    out.c_full = rr.c;
    out.converged = true;
    out.value = pen ? perturbed(rr.c, *pen) : action(rr.c, 0.0);
    Vec g = pen ? grad_perturbed(rr.c, *pen) : grad_action(rr.c, 0.0);
    out.grad_pos = project_pos_block(g);
    return out;
}

} // namespace diracgraph
