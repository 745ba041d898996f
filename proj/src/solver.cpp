#include "diracgraph/solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "diracgraph/special_spinors.hpp"

namespace diracgraph {

// ---------------------------------------------------------------------------
// schedule

ContinuationSchedule ContinuationSchedule::standard(double r0, double mu0,
                                                    int stages) {
    if (stages < 1) throw ConfigError("schedule needs at least one stage");
    ContinuationSchedule s;
    for (int n = 0; n < stages; ++n) {
        s.r.push_back(r0 + n);
        s.mu.push_back(mu0 * std::pow(2.0, -n));
    }
    s.validate();
    return s;
}

void ContinuationSchedule::validate() const {
    if (r.empty() || r.size() != mu.size())
        throw ConfigError("schedule r/mu sequences must be nonempty and equal length");
    for (size_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r[i]) || !std::isfinite(mu[i]))
            throw ConfigError("schedule entries must be finite");
        if (!(r[i] > 1.0)) throw ConfigError("schedule r entries must be > 1");
        if (!(mu[i] > 0.0)) throw ConfigError("schedule mu entries must be > 0");
        if (i > 0 && !(r[i] > r[i - 1]))
            throw ConfigError("schedule r must be strictly increasing");
        if (i > 0 && !(mu[i] < mu[i - 1]))
            throw ConfigError("schedule mu must be strictly decreasing");
    }
    if (!(stage_tol > 0.0)) throw ConfigError("stage tolerance must be > 0");
}

std::string branch_name(Branch b) {
    switch (b) {
        case Branch::Normalized: return "Normalized";
        case Branch::SubNormalized: return "SubNormalized";
        case Branch::Trivial: return "Trivial";
        case Branch::Failed: return "Failed";
        case Branch::Undecided: return "Undecided";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// mountain pass

namespace {

std::vector<int> pos_indices(const ActionFrame& frame) {
    std::vector<int> P;
    for (int i = 0; i < frame.n(); ++i)
        if (frame.positive()[i]) P.push_back(i);
    return P;
}

Vec embed_pos(const std::vector<int>& P, int n, const Vec& vp) {
    Vec c = Vec::Zero(n);
    for (size_t k = 0; k < P.size(); ++k) c[P[k]] = vp[k];
    return c;
}

Vec restrict_pos(const std::vector<int>& P, const Vec& c) {
    Vec vp(P.size());
    for (size_t k = 0; k < P.size(); ++k) vp[k] = c[P[k]];
    return vp;
}

/// Default mountain-pass seed direction in the positive block: a plateau
/// profile for the standard equation, the cycle mode for the mirrored one.
Vec default_seed_direction(const ActionFrame& frame) {
    const AssembledOperator& op = frame.op();
    CVec phi;
    if (frame.side() < 0) {
        auto cyc = op.layout().graph().find_simple_cycle();
        if (cyc)
            phi = cycle_eigenfunction(op, *cyc);
        else
            phi = build_phi_b_plateau(op, 0.05);
    } else {
        phi = build_phi_b_plateau(op, 0.05);
    }
    Vec c = frame.coeff_of(phi);
    for (int i = 0; i < frame.n(); ++i)
        if (!frame.positive()[i]) c[i] = 0.0;
    double nrm = c.norm();
    if (nrm < 1e-14)
        throw NumericError("mountain pass seed has no positive component");
    return c / nrm;
}

struct JEval {
    bool feasible = false;
    double value = 0.0;
    Vec grad;    // positive-block gradient
    Vec c_full;
};

JEval eval_J(const ActionFrame& frame, const PenalizationSpec& pen,
             const std::vector<int>& P, const Vec& vp) {
    JEval out;
    try {
        auto red = frame.reduced_action(embed_pos(P, frame.n(), vp), pen);
        if (!red.converged) return out;
        out.feasible = true;
        out.value = red.value;
        out.grad = restrict_pos(P, red.grad_pos);
        out.c_full = red.c_full;
    } catch (const NumericError&) {
        // outside U_mu or reduction failure: treated as infeasible
    }
    return out;
}

/// Maximizer of J along t -> t*dir, coarse scan + local refinement.
/// Also reports the first scanned t with J < 0 (0 if none found).
struct RayScan {
    double t_best = 0.0;
    double j_best = -std::numeric_limits<double>::infinity();
    double t_negative = 0.0;
};

RayScan scan_ray(const ActionFrame& frame, const PenalizationSpec& pen,
                 const std::vector<int>& P, const Vec& dir) {
    RayScan rs;
    const int steps = 160;
    double prev_ok = 0.0;
    for (int k = 1; k <= steps; ++k) {
        double t = 1.2 * k / steps;
        auto e = eval_J(frame, pen, P, Vec(t * dir));
        if (!e.feasible) break;
        prev_ok = t;
        if (e.value > rs.j_best) {
            rs.j_best = e.value;
            rs.t_best = t;
        }
        if (e.value < 0.0 && rs.t_negative == 0.0) rs.t_negative = t;
        if (e.value < 0.0 && e.value < rs.j_best - 10.0) break;
    }
    // golden-section refinement around the best sample
    double lo = std::max(0.0, rs.t_best - 1.2 / steps);
    double hi = std::min(prev_ok, rs.t_best + 1.2 / steps);
    for (int it = 0; it < 40 && hi - lo > 1e-12; ++it) {
        double t1 = lo + 0.382 * (hi - lo), t2 = lo + 0.618 * (hi - lo);
        auto e1 = eval_J(frame, pen, P, Vec(t1 * dir));
        auto e2 = eval_J(frame, pen, P, Vec(t2 * dir));
        double j1 = e1.feasible ? e1.value : -1e300;
        double j2 = e2.feasible ? e2.value : -1e300;
        if (j1 >= j2)
            hi = t2;
        else
            lo = t1;
        double tb = j1 >= j2 ? t1 : t2;
        double jb = std::max(j1, j2);
        if (jb > rs.j_best) {
            rs.j_best = jb;
            rs.t_best = tb;
        }
    }
    return rs;
}

Mat reduced_hessian(const ActionFrame& frame, const PenalizationSpec& pen,
                    const std::vector<int>& P, const Vec& c_full) {
    Mat H = frame.hess_perturbed(c_full, pen);
    std::vector<int> N;
    for (int i = 0; i < frame.n(); ++i)
        if (!frame.positive()[i]) N.push_back(i);
    const int np = static_cast<int>(P.size()), nn = static_cast<int>(N.size());
    Mat Hpp(np, np), Hpn(np, nn), Hnn(nn, nn);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j) Hpp(i, j) = H(P[i], P[j]);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nn; ++j) Hpn(i, j) = H(P[i], N[j]);
    for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j) Hnn(i, j) = H(N[i], N[j]);
    if (nn == 0) return Hpp;
    // Schur complement: the implicit-function Hessian of the reduced map
    return Hpp - Hpn * Hnn.fullPivLu().solve(Hpn.transpose());
}

/// Newton on grad J = 0 with Levenberg regularization and backtracking on
/// the gradient norm. Returns true on ||grad|| <= tol.
bool newton_on_gradient(const ActionFrame& frame, const PenalizationSpec& pen,
                        const std::vector<int>& P, Vec& v, double tol,
                        int max_iter, int& iters_out) {
    auto e = eval_J(frame, pen, P, v);
    if (!e.feasible) return false;
    for (int it = 0; it < max_iter; ++it) {
        iters_out = it + 1;
        double gn = e.grad.norm();
        if (gn <= tol) return true;
        Mat Hred = reduced_hessian(frame, pen, P, e.c_full);
        double tau = 0.0;
        bool accepted = false;
        for (int reg = 0; reg < 8 && !accepted; ++reg) {
            Mat Hr = Hred;
            if (tau > 0.0)
                for (int i = 0; i < Hr.rows(); ++i) Hr(i, i) += tau;
            Vec delta = Hr.fullPivLu().solve(-e.grad);
            if (!delta.allFinite()) {
                tau = tau == 0.0 ? 1e-8 : tau * 100.0;
                continue;
            }
            // trust region: never jump by more than half the current
            // amplitude, so the iteration cannot tunnel into the basin of
            // the trivial critical point
            double cap = 0.5 * std::max(v.norm(), 1e-3);
            if (delta.norm() > cap) delta *= cap / delta.norm();
            double alpha = 1.0;
            for (int ls = 0; ls < 30; ++ls) {
                auto et = eval_J(frame, pen, P, Vec(v + alpha * delta));
                if (et.feasible &&
                    (et.grad.norm() < gn * (1.0 - 1e-4 * alpha) ||
                     et.grad.norm() <= tol)) {
                    v += alpha * delta;
                    e = et;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) tau = tau == 0.0 ? 1e-8 : tau * 100.0;
        }
        if (!accepted) return false;
    }
    return e.grad.norm() <= tol;
}

/// Discretized-path minimax: descend the maximal node of a path from 0 to a
/// negative-level endpoint, with periodic even redistribution.
Vec path_minimax(const ActionFrame& frame, const PenalizationSpec& pen,
                 const std::vector<int>& P, const Vec& dir, double t_end) {
    const int K = 25;
    const int np = static_cast<int>(P.size());
    std::vector<Vec> nodes(K + 1, Vec::Zero(np));
    for (int k = 0; k <= K; ++k) nodes[k] = (t_end * k / K) * dir;
    auto val = [&](const Vec& v) {
        auto e = eval_J(frame, pen, P, v);
        return e.feasible ? e.value : 1e300;  // infeasible = off limits
    };
    for (int sweep = 0; sweep < 150; ++sweep) {
        int kmax = 1;
        double jmax = -1e300;
        for (int k = 1; k < K; ++k) {
            double jv = val(nodes[k]);
            if (jv < 1e299 && jv > jmax) {
                jmax = jv;
                kmax = k;
            }
        }
        auto e = eval_J(frame, pen, P, nodes[kmax]);
        if (!e.feasible || e.grad.norm() < 1e-10) break;
        double eta = 0.1 / std::max(1.0, e.grad.norm());
        bool moved = false;
        for (int ls = 0; ls < 20; ++ls) {
            Vec cand = nodes[kmax] - eta * e.grad;
            double jc = val(cand);
            if (jc < jmax) {
                nodes[kmax] = cand;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if (!moved) break;
        if (sweep % 25 == 24) {
            // even redistribution along the polyline
            std::vector<double> arc(K + 1, 0.0);
            for (int k = 1; k <= K; ++k)
                arc[k] = arc[k - 1] + (nodes[k] - nodes[k - 1]).norm();
            std::vector<Vec> fresh = nodes;
            for (int k = 1; k < K; ++k) {
                double target = arc[K] * k / K;
                int j = 1;
                while (j < K && arc[j] < target) ++j;
                double seg = arc[j] - arc[j - 1];
                double w = seg > 0.0 ? (target - arc[j - 1]) / seg : 0.0;
                fresh[k] = (1.0 - w) * nodes[j - 1] + w * nodes[j];
            }
            nodes = fresh;
        }
    }
    int kmax = 1;
    double jmax = -1e300;
    for (int k = 1; k < K; ++k) {
        double jv = val(nodes[k]);
        if (jv < 1e299 && jv > jmax) {
            jmax = jv;
            kmax = k;
        }
    }
    return nodes[kmax];
}

} // namespace

MountainPassResult mountain_pass_solve(const ActionFrame& frame,
                                       const PenalizationSpec& pen,
                                       const std::optional<Vec>& seed_pos,
                                       double tol) {
    pen.validate();
    auto P = pos_indices(frame);
    if (P.empty()) throw NumericError("positive spectral block is empty");

    Vec v;
    bool reseeded = false;
    if (seed_pos && seed_pos->size() == frame.n() &&
        restrict_pos(P, *seed_pos).norm() > 1e-10) {
        v = restrict_pos(P, *seed_pos);
        // the saddle moves outward when the barrier widens: re-locate the
        // maximizer along the seed's own ray under the current penalization
        Vec dir = v / v.norm();
        auto rs = scan_ray(frame, pen, P, dir);
        if (rs.t_best > 0.0) v = rs.t_best * dir;
    } else {
        Vec dir = restrict_pos(P, default_seed_direction(frame));
        dir /= dir.norm();
        auto rs = scan_ray(frame, pen, P, dir);
        v = rs.t_best * dir;
        reseeded = true;
    }

    MountainPassResult out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        int iters = 0;
        bool ok = newton_on_gradient(frame, pen, P, v, tol, 80, iters);
        out.iters += iters;
        if (!ok) {
            // barrier homotopy: approach a sharp barrier exponent through a
            // doubling ramp of easier subproblems, warm-starting each one
            std::vector<double> ramp;
            for (double rr = std::max(2.0, pen.r / 16.0); rr < pen.r; rr *= 2.0)
                ramp.push_back(rr);
            if (!ramp.empty()) {
                PenalizationSpec p0{ramp.front(), pen.mu};
                Vec dir = restrict_pos(P, default_seed_direction(frame));
                dir /= dir.norm();
                Vec vr = scan_ray(frame, p0, P, dir).t_best * dir;
                bool ramp_ok = true;
                for (double rr : ramp) {
                    PenalizationSpec pr{rr, pen.mu};
                    if (vr.norm() > 0.0) {
                        Vec d = vr / vr.norm();
                        auto rr_scan = scan_ray(frame, pr, P, d);
                        if (rr_scan.t_best > 0.0) vr = rr_scan.t_best * d;
                    }
                    int ri = 0;
                    ramp_ok = newton_on_gradient(frame, pr, P, vr, 1e-6, 60, ri);
                    out.iters += ri;
                    if (!ramp_ok) break;
                }
                if (ramp_ok) {
                    if (vr.norm() > 0.0) {
                        Vec d = vr / vr.norm();
                        auto rr_scan = scan_ray(frame, pen, P, d);
                        if (rr_scan.t_best > 0.0) vr = rr_scan.t_best * d;
                    }
                    int ri = 0;
                    ok = newton_on_gradient(frame, pen, P, vr, tol, 80, ri);
                    out.iters += ri;
                    if (ok) v = vr;
                }
            }
        }
        if (!ok) {
            // fallback: path minimax from the default direction, then polish
            Vec dir = restrict_pos(P, default_seed_direction(frame));
            dir /= dir.norm();
            auto rs = scan_ray(frame, pen, P, dir);
            double t_end = rs.t_negative > 0.0 ? rs.t_negative * 1.02
                                               : rs.t_best * 1.5;
            v = path_minimax(frame, pen, P, dir, t_end);
            out.used_path_fallback = true;
            int polish_iters = 0;
            ok = newton_on_gradient(frame, pen, P, v, tol, 80, polish_iters);
            out.iters += polish_iters;
            if (!ok) throw NumericError("NoConvergence: mountain pass search failed");
        }
        auto e = eval_J(frame, pen, P, v);
        if (!e.feasible)
            throw NumericError("NoConvergence: converged point infeasible");
        if (v.norm() < 1e-8 || e.value <= 1e-14) {
            if (reseeded || attempt == 1)
                throw NumericError("CollapseToZero: only the trivial point found");
            // automatic reseed from the ray maximizer
            Vec dir = restrict_pos(P, default_seed_direction(frame));
            dir /= dir.norm();
            auto rs = scan_ray(frame, pen, P, dir);
            v = rs.t_best * dir;
            reseeded = true;
            continue;
        }
        out.c = e.c_full;
        out.level = e.value;
        out.grad_norm = e.grad.norm();
        return out;
    }
    throw NumericError("CollapseToZero: only the trivial point found");
}

// ---------------------------------------------------------------------------
// direct solve

namespace {

/// Real-slice representative of a complex spinor in the real gauge, with the
/// largest-|u1| component forced positive.
Vec real_slice(const AssembledOperator& op, const CVec& z) {
    CVec wc = AssembledOperator::gauge_forward(z, op.n_u1());
    std::complex<double> s2 = 0.0;
    for (int i = 0; i < wc.size(); ++i) s2 += wc[i] * wc[i];
    double theta = 0.5 * std::arg(s2);
    Vec w = (std::exp(std::complex<double>(0, -theta)) * wc).real();
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < op.n_u1(); ++i)
        if (std::abs(w[i]) > best) {
            best = std::abs(w[i]);
            imax = i;
        }
    if (w[imax] < 0.0) w = -w;
    return w;
}

double energy_of(const AssembledOperator& op, const NonlinearTerm& term,
                 const CVec& z, int side, double shift,
                 const NonlinearitySpec& spec) {
    CVec Az = op.apply_form(z);
    double duu = std::real(z.dot(Az));  // (D u, u)_2
    double l2 = op.norm_l2_sq(z);
    return 0.5 * side * duu - 0.5 * shift * l2 - term.psi(z, spec.a, spec.p);
}

} // namespace

SolveReport direct_solve(const AssembledOperator& op,
                         const NonlinearitySpec& spec, DirectMode mode,
                         double target, const CVec& initial, double tol,
                         int max_iter, std::vector<double>* residual_history) {
    spec.validate();
    NonlinearTerm term(op, spec.region);
    const int side = spec.sign;
    const SpMat& Ar = op.stiffness_real();
    const SpMat& M = op.mass();

    Vec w = real_slice(op, initial);
    double omega = mode == DirectMode::FixedOmega ? target : 0.0;
    if (mode == DirectMode::FixedMass) {
        if (!(target > 0.0)) throw ConfigError("mass target must be > 0");
        double m0 = w.dot(M * w);
        if (m0 > 0.0) w *= std::sqrt(target / m0);
        // initial multiplier: Rayleigh-type estimate from the residual
        Vec Fw = Ar * w - side * term.dpsi_real(w, spec.a, spec.p);
        omega = side * w.dot(Fw) / target;
    }

    auto Fval = [&](const Vec& ww, double om) {
        return Vec(Ar * ww - side * (om * (M * ww) +
                                     term.dpsi_real(ww, spec.a, spec.p)));
    };
    auto res_norm = [&](const Vec& F) {
        Vec r = op.mass_solve(F);
        return std::sqrt(std::abs(r.dot(M * r)));
    };

    SolveReport rep;
    rep.shift = mode == DirectMode::FixedOmega ? target : 0.0;
    bool converged = false;
    Vec F = Fval(w, omega);
    for (int it = 0; it < max_iter; ++it) {
        double rn = res_norm(F);
        double cviol = mode == DirectMode::FixedMass
                           ? std::abs(w.dot(M * w) - target)
                           : 0.0;
        if (residual_history) residual_history->push_back(rn + cviol);
        if (rn <= tol && cviol <= tol * std::max(1.0, target)) {
            converged = true;
            break;
        }
        SpMat J = Ar - side * (omega * M +
                               term.hess_real(w, spec.a, spec.p));
        Eigen::SparseLU<SpMat> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) {
            // SingularJacobian: retry with a small spectral shift
            SpMat Jr = J + 1e-10 * M;
            lu.compute(Jr);
            if (lu.info() != Eigen::Success) {
                rep.branch = Branch::Failed;
                rep.diagnostics["singular_jacobian"] = 1.0;
                break;
            }
        }
        Vec dw;
        double domega = 0.0;
        if (mode == DirectMode::FixedOmega) {
            dw = lu.solve(Vec(-F));
        } else {
            Vec Mw = M * w;
            Vec d1 = lu.solve(F);
            Vec d2 = lu.solve(Mw);
            double G = w.dot(Mw) - target;
            double den = 2.0 * side * Mw.dot(d2);
            if (std::abs(den) < 1e-300) {
                rep.branch = Branch::Failed;
                rep.diagnostics["singular_bordered_system"] = 1.0;
                break;
            }
            domega = (2.0 * Mw.dot(d1) - G) / den;
            dw = -d1 + side * domega * d2;
        }
        if (!dw.allFinite() || !std::isfinite(domega)) {
            rep.branch = Branch::Failed;
            break;
        }
        // backtracking on the combined defect
        double base = res_norm(F) +
                      (mode == DirectMode::FixedMass
                           ? std::abs(w.dot(M * w) - target)
                           : 0.0);
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 25; ++ls) {
            Vec wt = w + alpha * dw;
            double ot = omega + alpha * domega;
            Vec Ft = Fval(wt, ot);
            double cand = res_norm(Ft) +
                          (mode == DirectMode::FixedMass
                               ? std::abs(wt.dot(M * wt) - target)
                               : 0.0);
            if (cand < base * (1.0 - 1e-4 * alpha) || cand <= tol) {
                w = wt;
                omega = ot;
                F = Ft;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) {
            rep.branch = Branch::Failed;
            rep.diagnostics["line_search_stall"] = 1.0;
            break;
        }
    }

    // gauge fixing: designated (largest-|u1|) component real positive
    {
        int imax = 0;
        double best = -1.0;
        for (int i = 0; i < op.n_u1(); ++i)
            if (std::abs(w[i]) > best) {
                best = std::abs(w[i]);
                imax = i;
            }
        if (best > 0.0 && w[imax] < 0.0) w = -w;
    }

    CVec z = AssembledOperator::gauge_backward(
        CVec(w.cast<std::complex<double>>()), op.n_u1());
    rep.u = z;
    rep.omega = omega;
    rep.mass = w.dot(M * w);
    rep.residual_norm = residual_norm(op, term, z, omega, spec);
    rep.energy_level = energy_of(op, term, z, side, 0.0, spec);
    const double gamma = op.params().gamma();
    if (!converged) {
        if (rep.branch != Branch::Failed) rep.branch = Branch::Failed;
    } else if (rep.mass < 1e-12) {
        rep.branch = Branch::Trivial;
    } else if (std::abs(rep.mass - 1.0) <= 1e-8 && std::abs(omega) < gamma &&
               rep.residual_norm <= 1e-8) {
        rep.branch = Branch::Normalized;
    } else if (mode == DirectMode::FixedOmega && rep.mass < 1.0 &&
               rep.residual_norm <= 1e-8 && std::sqrt(rep.mass) >= 1e-6) {
        rep.branch = Branch::SubNormalized;
    } else {
        rep.branch = Branch::Undecided;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// continuation

SolveReport continuation_solve(const AssembledOperator& op,
                               const NonlinearitySpec& spec,
                               const ContinuationSchedule& schedule,
                               double shift, unsigned /*seed*/) {
    spec.validate();
    schedule.validate();
    const double gamma = op.params().gamma();
    if (!(std::abs(shift) < gamma))
        throw ConfigError("shift must lie inside the spectral gap");

    ActionFrame frame(op, spec, shift);
    NonlinearTerm term(op, spec.region);

    SolveReport rep;
    rep.shift = shift;
    std::optional<Vec> warm;
    Vec c_last;
    int completed = 0;
    for (int n = 0; n < schedule.stages(); ++n) {
        PenalizationSpec pen{schedule.r[n], schedule.mu[n]};
        MountainPassResult mp;
        try {
            mp = mountain_pass_solve(frame, pen, warm, schedule.stage_tol);
        } catch (const NumericError&) {
            if (n == 0) {
                rep.branch = Branch::Failed;
                rep.diagnostics["failed_stage"] = n;
                return rep;
            }
            rep.diagnostics["failed_stage"] = n;
            break;  // keep the last good stage (StageFailure)
        }
        c_last = mp.c;
        warm = mp.c;
        double s_n = frame.s_value(mp.c, pen.mu);
        rep.omega_track.push_back(2.0 * f_r_prime(pen.r, s_n));
        rep.level_track.push_back(mp.level);
        rep.mass_track.push_back(mp.c.squaredNorm());
        ++completed;
    }
    if (completed == 0) {
        rep.branch = Branch::Failed;
        return rep;
    }
    rep.diagnostics["stages_completed"] = completed;

    CVec z = frame.spinor(c_last);
    double mass = rep.mass_track.back();
    double omega_n = rep.omega_track.back();

    if (std::sqrt(mass) < 1e-8) {
        rep.u = z;
        rep.branch = Branch::Trivial;
        return rep;
    }

    // dichotomy bands on the raw continuation limit, then a direct polish of
    // the classified candidate so the reported invariants hold at full
    // precision
    if (std::abs(mass - 1.0) <= 1e-6 ||
        (std::abs(mass - 1.0) <= 5e-2 && omega_n > 1e-4)) {
        double omega_total = shift + frame.side() * 0.0;  // filled by polish
        (void)omega_total;
        SolveReport polished =
            direct_solve(op, spec, DirectMode::FixedMass, 1.0, z, 1e-12, 80);
        if (polished.branch == Branch::Normalized) {
            polished.omega_track = rep.omega_track;
            polished.level_track = rep.level_track;
            polished.mass_track = rep.mass_track;
            polished.shift = shift;
            polished.diagnostics.insert(rep.diagnostics.begin(),
                                        rep.diagnostics.end());
            polished.energy_level =
                energy_of(op, term, polished.u, frame.side(), shift, spec);
            return polished;
        }
        rep.diagnostics["polish_branch_fixed_mass"] =
            static_cast<double>(polished.branch);
    }
    if (mass < 1.0 - 1e-3 && omega_n < 1e-6) {
        double omega_eq = frame.side() * shift;  // total frequency at the
                                                 // shift frame (omega_n -> 0)
        SolveReport polished = direct_solve(op, spec, DirectMode::FixedOmega,
                                            omega_eq, z, 1e-12, 80);
        if (polished.branch == Branch::SubNormalized &&
            std::abs(polished.omega - omega_eq) <= 1e-6) {
            polished.omega_track = rep.omega_track;
            polished.level_track = rep.level_track;
            polished.mass_track = rep.mass_track;
            polished.shift = shift;
            polished.diagnostics.insert(rep.diagnostics.begin(),
                                        rep.diagnostics.end());
            polished.energy_level =
                energy_of(op, term, polished.u, frame.side(), shift, spec);
            return polished;
        }
        rep.diagnostics["polish_branch_fixed_omega"] =
            static_cast<double>(polished.branch);
    }

    rep.u = z;
    rep.mass = mass;
    rep.omega = frame.side() * shift + omega_n;
    rep.residual_norm =
        residual_norm(op, term, z, frame.side() * (shift + omega_n), spec);
    rep.energy_level = energy_of(op, term, z, frame.side(), shift, spec);
    rep.branch = Branch::Undecided;
    return rep;
}

// ---------------------------------------------------------------------------
// non-existence chains

namespace {

double region_lp(const NonlinearTerm& term, const CVec& z, double p) {
    return term.psi(z, p, p);  // a = p makes the prefactor 1
}

double sup_region(const AssembledOperator& op, const NonlinearTerm& term,
                  const CVec& z) {
    CVec w = AssembledOperator::gauge_forward(z, op.n_u1());
    double best = 0.0;
    for (const auto& q : term.cells()) {
        std::complex<double> av = 0.5 * (w[q.nl] + w[q.nr]);
        double rho = std::norm(av) + std::norm(w[q.cell]);
        best = std::max(best, rho);
    }
    return std::sqrt(best);
}

ChainStep step_le(const std::string& name, double lhs, double rhs) {
    // lhs <= rhs with a tiny multiplicative slack for roundoff
    return {name, lhs, rhs, lhs <= rhs * (1.0 + 1e-9) + 1e-300};
}

ChainStep step_le_tol(const std::string& name, double lhs, double rhs,
                      double slack) {
    return {name, lhs, rhs, lhs <= rhs * (1.0 + slack) + 1e-300};
}

} // namespace

ChainReport verify_nonexistence_chain(const CVec& u,
                                      const AssembledOperator& op,
                                      const NonlinearitySpec& spec,
                                      ChainVariant variant,
                                      const Thresholds& thresholds) {
    spec.validate();
    const double p = spec.p, a = spec.a;
    const double gamma = op.params().gamma();
    const double cc = op.params().c, m = op.params().m;
    NonlinearTerm term(op, spec.region);

    const double l2 = op.norm_l2_sq(u);
    if (l2 < 1e-12)
        throw ConfigError("WrongRegime: trivial input rejected");
    if (!(l2 < 1.0))
        throw ConfigError("WrongRegime: the chain requires mass < 1");

    CVec up = op.project_pos(u), um = op.project_neg(u);
    const double Y = op.y_norm_sq(u);
    const double Yp = op.y_norm_sq(up), Ym = op.y_norm_sq(um);
    const double l2p = op.norm_l2_sq(up), l2m = op.norm_l2_sq(um);
    const double intp = region_lp(term, u, p);
    const double intp_plus = region_lp(term, up, p);
    const double intp_minus = region_lp(term, um, p);
    const double energy = 0.5 * (Yp - Ym) - (a / p) * intp;

    // discrete H1 norm via the eigenexpansion
    CVec coef = op.to_coeff(u);
    double h1 = 0.0, dnorm2 = 0.0;
    {
        const Vec& lam = op.eigenvalues();
        for (int i = 0; i < coef.size(); ++i) {
            double ci2 = std::norm(coef[i]);
            dnorm2 += lam[i] * lam[i] * ci2;
            h1 += (1.0 + std::max(0.0, lam[i] * lam[i] - gamma * gamma) /
                             (cc * cc)) * ci2;
        }
    }

    ChainReport out;
    out.variant = variant;
    auto& S = out.steps;

    // the pairing steps hold exactly only for exact solutions; allow the
    // discretization defect a modest slack
    const double num_slack = 1e-4;

    switch (variant) {
        case ChainVariant::Subcritical: {
            if (!(p > 2.0 && p < 4.0))
                throw ConfigError("WrongRegime: variant requires 2 < p < 4");
            double C = thresholds.c_core();
            // cell-midpoint quadrature of |u|^{p-1} (|u+| + |u-|)
            double cross = 0.0;
            {
                CVec w = AssembledOperator::gauge_forward(u, op.n_u1());
                CVec wp = AssembledOperator::gauge_forward(up, op.n_u1());
                CVec wm = AssembledOperator::gauge_forward(um, op.n_u1());
                auto cell_abs = [&](const CVec& x,
                                    const NonlinearTerm::QCell& q) {
                    std::complex<double> av = 0.5 * (x[q.nl] + x[q.nr]);
                    return std::sqrt(std::norm(av) + std::norm(x[q.cell]));
                };
                for (const auto& q : term.cells())
                    cross += q.w * std::pow(cell_abs(w, q), p - 1.0) *
                             (cell_abs(wp, q) + cell_abs(wm, q));
            }
            S.push_back(step_le_tol("pairing", Y, a * cross, num_slack));
            double holder = a * std::pow(intp, (p - 1.0) / p) *
                            (std::pow(intp_plus, 1.0 / p) +
                             std::pow(intp_minus, 1.0 / p));
            S.push_back(step_le("holder", a * cross, holder));
            double gfac = C / std::pow(gamma, (4.0 - p) / 2.0);
            double gns3 =
                a * gfac *
                std::pow(Y * std::pow(l2, (p - 2.0) / 2.0), (p - 1.0) / p) *
                (std::pow(Yp * std::pow(l2p, (p - 2.0) / 2.0), 1.0 / p) +
                 std::pow(Ym * std::pow(l2m, (p - 2.0) / 2.0), 1.0 / p));
            S.push_back(step_le("gns", holder, gns3));
            double collapse = 2.0 * a * gfac * Y *
                              std::pow(l2, (p - 2.0) / 2.0);
            S.push_back(step_le("projector-bound", gns3, collapse));
            S.push_back(step_le("mass-below-one", collapse,
                                2.0 * a * gfac * Y));
            out.ratio = 2.0 * C * a * std::pow(gamma, (p - 4.0) / 2.0);
            break;
        }
        case ChainVariant::PGe4: {
            if (!(p >= 4.0))
                throw ConfigError("WrongRegime: variant requires p >= 4");
            if (!(energy > 0.0 && energy <= gamma / 2.0))
                throw ConfigError(
                    "WrongRegime: energy bound 0 < E <= mc^2/2 required");
            double Cg = thresholds.c_graph();
            S.push_back(step_le("energy-bound", energy, gamma / 2.0));
            S.push_back(step_le_tol("lp-mass", intp,
                                    gamma * p / (a * (p - 2.0)), num_slack));
            double xplus = std::pow(Cg * a, 1.0 / p) *
                           std::pow(gamma, (p - 2.0) / p) *
                           std::pow(p / (p - 2.0), (p - 1.0) / p);
            S.push_back(step_le_tol("positive-part", Yp,
                                    xplus * std::sqrt(Yp), num_slack));
            double norm_bound = std::sqrt(2.0) * std::pow(Cg * a, 1.0 / p) *
                                std::pow(gamma, (p - 2.0) / p) *
                                std::pow(p / (2.0 * p - 4.0), (p - 1.0) / p);
            S.push_back(step_le_tol("norm-split", std::sqrt(Y),
                                    std::sqrt(2.0 * Yp), num_slack));
            S.push_back(step_le("norm-bound", std::sqrt(Y), norm_bound));
            S.push_back(step_le_tol("self-pairing", Y,
                                    2.0 * Cg * a *
                                        std::pow(Y, (p - 2.0) / 2.0) * l2,
                                    num_slack));
            double La = std::pow(2.0, 1.0 - p / 2.0) *
                        std::pow(Cg * a, (4.0 - 2.0 * p) / p) *
                        std::pow(gamma, (-p * p + 6.0 * p - 8.0) / p) *
                        std::pow(p / (p - 2.0),
                                 (-p * p + 5.0 * p - 4.0) / p);
            S.push_back(step_le("mass-floor", La, l2));
            out.ratio = l2 / La;
            break;
        }
        case ChainVariant::H1Plain: {
            if (!(p > 2.0 && p < 4.0))
                throw ConfigError("WrongRegime: variant requires 2 < p < 4");
            double Sk = thresholds.s_2pm2_core();
            double mn = std::min(cc * cc, gamma * gamma);
            double int2p = region_lp(term, u, 2.0 * p - 2.0);
            S.push_back(step_le_tol("dirichlet", 0.5 * mn * h1,
                                    a * a * int2p, num_slack));
            S.push_back(step_le("gns", a * a * int2p,
                                a * a * Sk * std::pow(h1, (p - 2.0) / 2.0) *
                                    std::pow(l2, p / 2.0)));
            S.push_back(step_le_tol("combined",
                                    0.5 * mn * std::pow(l2, (4.0 - p) / 2.0),
                                    a * a * Sk * std::pow(l2, p / 2.0),
                                    num_slack));
            out.ratio = thresholds.appendix24_value(a);
            break;
        }
        case ChainVariant::H1Energy: {
            if (!(p > 2.0 && p < 6.0))
                throw ConfigError("WrongRegime: variant requires 2 < p < 6");
            if (!(energy > 0.0 && energy <= gamma / 2.0))
                throw ConfigError(
                    "WrongRegime: energy bound 0 < E <= mc^2/2 required");
            double Sk = thresholds.s_2pm2_core();
            double Si = thresholds.s_sup_core();
            double mn = std::min(cc * cc, gamma * gamma);
            double int2p = region_lp(term, u, 2.0 * p - 2.0);
            double sup = sup_region(op, term, u);
            S.push_back(step_le("energy-bound", energy, gamma / 2.0));
            S.push_back(step_le_tol("lp-mass", intp,
                                    p * gamma / (a * (p - 2.0)), num_slack));
            S.push_back(step_le_tol("dirichlet", 0.5 * mn * h1,
                                    a * a * int2p, num_slack));
            S.push_back(step_le("sup-split", a * a * int2p,
                                a * a * std::pow(sup, p - 2.0) * intp));
            double mx = std::max(m, 1.0 / gamma);
            S.push_back(step_le_tol(
                "h1-bound", std::pow(h1, (6.0 - p) / 4.0),
                mx * (2.0 * a * p / (p - 2.0)) * std::pow(Si, p - 2.0),
                num_slack));
            S.push_back(step_le_tol(
                "mass-bound", gamma * gamma * l2,
                a * a * Sk * std::pow(h1, (p - 2.0) / 2.0) *
                    std::pow(l2, p / 2.0),
                num_slack));
            out.ratio = thresholds.appendix46_value(a);
            break;
        }
    }
    out.consistent = true;
    for (const auto& st : S) out.consistent = out.consistent && st.holds;
    return out;
}

// ---------------------------------------------------------------------------
// unique continuation

bool numerical_unique_continuation(const AssembledOperator& op, const CVec& u,
                                   double tol) {
    const DofLayout& layout = op.layout();
    const MetricGraph& g = layout.graph();
    CVec w = AssembledOperator::gauge_forward(u, op.n_u1());
    std::set<std::string> zero_edges;
    double global_sup = 0.0;
    for (const auto& e : layout.edges()) {
        double sup = 0.0;
        for (int j = 0; j <= e.n; ++j)
            sup = std::max(sup, std::abs(w[layout.node_dof(e, j)]));
        for (int c = 0; c < e.n; ++c)
            sup = std::max(sup, std::abs(w[layout.cell_dof(e, c)]));
        global_sup = std::max(global_sup, sup);
        if (sup < tol) zero_edges.insert(e.id);
    }
    auto prop = g.zero_propagation(zero_edges);
    return prop.forces_all_zero && global_sup < 10.0 * tol;
}

// ---------------------------------------------------------------------------
// interior residual stencils

namespace {

/// Indicator of the nonlinearity region at coordinate x on an edge.
double chi_at(const MetricGraph& g, const Region& region, const GridEdge& e,
              double x) {
    bool halfline = g.is_half_line(e.id);
    if (!halfline) return 1.0;
    if (region.kind == Region::Kind::CoreUnionSegment &&
        e.id == region.halfline_id && x <= region.ell)
        return 1.0;
    return 0.0;
}

} // namespace

InteriorSamples interior_residual_standard(const AssembledOperator& op,
                                           const CVec& u, double omega,
                                           double a, double p,
                                           const Region& region) {
    using std::complex;
    const DofLayout& layout = op.layout();
    const MetricGraph& g = layout.graph();
    const double cc = op.params().c, gamma = op.params().gamma();
    const complex<double> ic(0.0, cc);
    InteriorSamples out;
    for (const auto& e : layout.edges()) {
        for (int j = 1; j < e.n; ++j) {
            complex<double> u1 = u[layout.node_dof(e, j)];
            complex<double> dl = u[layout.cell_dof(e, j - 1)];
            complex<double> dr = u[layout.cell_dof(e, j)];
            complex<double> du2 = (dr - dl) / e.he;
            complex<double> u2n = 0.5 * (dl + dr);
            double rho = std::norm(u1) + std::norm(u2n);
            double chi = chi_at(g, region, e, j * e.he);
            complex<double> row = -ic * du2 + (gamma - omega) * u1 -
                                  a * chi * std::pow(rho, (p - 2.0) / 2.0) * u1;
            out.at_nodes.push_back(std::abs(row));
        }
        for (int c = 0; c < e.n; ++c) {
            complex<double> l = u[layout.node_dof(e, c)];
            complex<double> r = u[layout.node_dof(e, c + 1)];
            complex<double> u2 = u[layout.cell_dof(e, c)];
            complex<double> du1 = (r - l) / e.he;
            complex<double> u1m = 0.5 * (l + r);
            double rho = std::norm(u1m) + std::norm(u2);
            double chi = chi_at(g, region, e, DofLayout::cell_mid(e, c));
            complex<double> row = -ic * du1 - (gamma + omega) * u2 -
                                  a * chi * std::pow(rho, (p - 2.0) / 2.0) * u2;
            out.at_cells.push_back(std::abs(row));
        }
    }
    return out;
}

InteriorSamples interior_residual_mirrored(const AssembledOperator& op,
                                           const CVec& u, double omega,
                                           double a, double p,
                                           const Region& region) {
    using std::complex;
    const DofLayout& layout = op.layout();
    const MetricGraph& g = layout.graph();
    const double cc = op.params().c, gamma = op.params().gamma();
    const complex<double> ic(0.0, cc);
    InteriorSamples out;
    // component swap: v1 = u2 (cell-sampled), v2 = -u1 (node-sampled); the
    // mirrored equation reads D v + omega v + a chi |v|^{p-2} v = 0 and its
    // rows are written directly against the swapped samples
    for (const auto& e : layout.edges()) {
        for (int j = 1; j < e.n; ++j) {
            // second mirrored equation at interior node j:
            // -ic v1' - gamma v2 + omega v2 + a chi |v|^{p-2} v2
            complex<double> v2 = -u[layout.node_dof(e, j)];
            complex<double> v1l = u[layout.cell_dof(e, j - 1)];
            complex<double> v1r = u[layout.cell_dof(e, j)];
            complex<double> dv1 = (v1r - v1l) / e.he;
            complex<double> v1n = 0.5 * (v1l + v1r);
            double rho = std::norm(v1n) + std::norm(v2);
            double chi = chi_at(g, region, e, j * e.he);
            complex<double> row = -ic * dv1 - gamma * v2 + omega * v2 +
                                  a * chi * std::pow(rho, (p - 2.0) / 2.0) * v2;
            out.at_nodes.push_back(std::abs(row));
        }
        for (int c = 0; c < e.n; ++c) {
            // first mirrored equation at the cell midpoint:
            // -ic v2' + gamma v1 + omega v1 + a chi |v|^{p-2} v1
            complex<double> v1 = u[layout.cell_dof(e, c)];
            complex<double> v2l = -u[layout.node_dof(e, c)];
            complex<double> v2r = -u[layout.node_dof(e, c + 1)];
            complex<double> dv2 = (v2r - v2l) / e.he;
            double rho = std::norm(v1) + std::norm(0.5 * (v2l + v2r));
            double chi = chi_at(g, region, e, DofLayout::cell_mid(e, c));
            complex<double> row = -ic * dv2 + gamma * v1 + omega * v1 +
                                  a * chi * std::pow(rho, (p - 2.0) / 2.0) * v1;
            out.at_cells.push_back(std::abs(row));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pendant transplant

CVec transplant_pendant(const AssembledOperator& op_src, const CVec& u,
                        const std::string& halfline_id, double ell,
                        const AssembledOperator& op_dst) {
    const DofLayout& src = op_src.layout();
    const DofLayout& dst = op_dst.layout();
    const GridEdge& hl_src = src.edge(halfline_id);
    const double he = hl_src.he;
    int k = static_cast<int>(std::llround(ell / he));
    if (std::abs(k * he - ell) > 1e-9 || k < 1 || k >= hl_src.n)
        throw ConfigError(
            "transplant requires ell to be an interior cell boundary of the half-line");

    const std::string pedge = MetricGraph::pendant_edge_name(halfline_id);
    CVec out = CVec::Zero(op_dst.dim());
    for (const auto& e : dst.edges()) {
        const GridEdge* se = nullptr;
        int off = 0;
        if (e.id == pedge) {
            se = &hl_src;
            off = 0;
            if (e.n != k || std::abs(e.he - he) > 1e-12)
                throw ConfigError("transplant grids misaligned on the pendant edge");
        } else if (e.id == halfline_id) {
            se = &hl_src;
            off = k;
            if (e.n != hl_src.n - k || std::abs(e.he - he) > 1e-12)
                throw ConfigError("transplant grids misaligned on the half-line");
        } else {
            se = &src.edge(e.id);
            if (e.n != se->n || std::abs(e.he - se->he) > 1e-12)
                throw ConfigError("transplant grids misaligned on edge " + e.id);
        }
        for (int j = 0; j <= e.n; ++j)
            out[dst.node_dof(e, j)] = u[src.node_dof(*se, j + off)];
        for (int c = 0; c < e.n; ++c)
            out[dst.cell_dof(e, c)] = u[src.cell_dof(*se, c + off)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<SweepCell> sweep(const MetricGraph& g, const DiracParams& base,
                             const Grid& grid,
                             const NonlinearitySpec& base_spec, SweepAxis axis,
                             const std::vector<double>& values,
                             const ContinuationSchedule& schedule, double shift,
                             unsigned seed) {
    std::vector<SweepCell> table;
    std::unique_ptr<AssembledOperator> shared;
    bool op_invariant = axis == SweepAxis::Coupling ||
                        axis == SweepAxis::Exponent ||
                        axis == SweepAxis::SegmentLength;
    if (op_invariant && !values.empty())
        shared = std::make_unique<AssembledOperator>(g, base, grid);
    for (double v : values) {
        SweepCell cell;
        cell.value = v;
        try {
            DiracParams params = base;
            NonlinearitySpec spec = base_spec;
            double sh = shift;
            switch (axis) {
                case SweepAxis::Coupling: spec.a = v; break;
                case SweepAxis::Exponent: spec.p = v; break;
                case SweepAxis::SegmentLength:
                    if (spec.region.kind != Region::Kind::CoreUnionSegment)
                        throw ConfigError(
                            "segment-length sweep requires a core+segment region");
                    spec.region.ell = v;
                    break;
                case SweepAxis::Mass: params = DiracParams(v, base.c); break;
                case SweepAxis::Speed: params = DiracParams(base.m, v); break;
                case SweepAxis::Shift: sh = v; break;
            }
            const AssembledOperator* op = shared.get();
            std::unique_ptr<AssembledOperator> local;
            if (!op) {
                local = std::make_unique<AssembledOperator>(g, params, grid);
                op = local.get();
            }
            cell.report = continuation_solve(*op, spec, schedule, sh, seed);
            cell.ok = cell.report.branch != Branch::Failed;
            if (!cell.ok) cell.error = "continuation failed";
        } catch (const std::exception& ex) {
            cell.ok = false;
            cell.error = ex.what();
        }
        table.push_back(std::move(cell));
    }
    return table;
}

} // namespace diracgraph
