#include "diracgraph/secular.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <map>

namespace diracgraph {

namespace {

/// cos(k x) and sin(k x)/k as entire functions of k2 = k^2 (trigonometric
/// for k2 > 0, hyperbolic for k2 < 0, series near zero).
void cos_sinc(double k2, double x, double& co, double& si) {
    const double t = k2 * x * x;
    if (std::abs(t) < 1e-8) {
        co = 1.0 - t / 2.0 + t * t / 24.0;
        si = x * (1.0 - t / 6.0 + t * t / 120.0);
    } else if (k2 > 0.0) {
        double k = std::sqrt(k2);
        co = std::cos(k * x);
        si = std::sin(k * x) / k;
    } else {
        double q = std::sqrt(-k2);
        co = std::cosh(q * x);
        si = std::sinh(q * x) / q;
    }
}

/// Secular matrix at lambda. Unknowns per bounded edge: (A_e, B_e) =
/// (u1(0), w2(0)) in the real gauge w2 = -i u2. Equations: per vertex,
/// deg-1 continuity equations for u1 plus one signed-sum equation for w2.
Mat secular_matrix(const MetricGraph& g, const DiracParams& p, double lambda) {
    const auto& es = g.bounded_edges();
    const int ne = static_cast<int>(es.size());
    const double gamma = p.gamma();
    const double alpha = (lambda + gamma) / p.c;
    const double beta = (lambda - gamma) / p.c;
    const double k2 = alpha * beta;

    // endpoint value rows: value[end][which] as a 2-vector acting on (A,B)
    // end 0: u1(0) = (1,0), w2(0) = (0,1)
    // end 1: transfer matrix over the edge length
    struct EndVals {
        double u1[2];
        double w2[2];
    };
    std::vector<EndVals> at0(ne), at1(ne);
    for (int i = 0; i < ne; ++i) {
        at0[i] = {{1.0, 0.0}, {0.0, 1.0}};
        double co, si;
        cos_sinc(k2, es[i].length, co, si);
        at1[i] = {{co, -alpha * si}, {beta * si, co}};
    }

    // incidences per vertex: (edge index, end)
    std::map<std::string, std::vector<std::pair<int, int>>> inc;
    for (int i = 0; i < ne; ++i) {
        inc[es[i].from].emplace_back(i, 0);
        inc[es[i].to].emplace_back(i, 1);
    }

    Mat F = Mat::Zero(2 * ne, 2 * ne);
    int row = 0;
    for (const auto& v : g.vertices()) {
        auto it = inc.find(v);
        if (it == inc.end()) continue;
        const auto& ends = it->second;
        // continuity: u1 at each incidence equals u1 at the first incidence
        for (size_t j = 1; j < ends.size(); ++j) {
            auto [e0, s0] = ends[0];
            auto [ej, sj] = ends[j];
            const auto& v0 = (s0 == 0 ? at0[e0] : at1[e0]).u1;
            const auto& vj = (sj == 0 ? at0[ej] : at1[ej]).u1;
            F(row, 2 * e0) += v0[0];
            F(row, 2 * e0 + 1) += v0[1];
            F(row, 2 * ej) -= vj[0];
            F(row, 2 * ej + 1) -= vj[1];
            ++row;
        }
        // signed sum of w2: + at x = 0, - at x = length
        for (auto [e, s] : ends) {
            const auto& w = (s == 0 ? at0[e] : at1[e]).w2;
            double sign = (s == 0) ? 1.0 : -1.0;
            F(row, 2 * e) += sign * w[0];
            F(row, 2 * e + 1) += sign * w[1];
        }
        ++row;
    }
    if (row != 2 * ne) throw NumericError("secular system is not square");
    return F;
}

double indicator(const MetricGraph& g, const DiracParams& p, double lambda) {
    Mat F = secular_matrix(g, p, lambda);
    Eigen::JacobiSVD<Mat> svd(F);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    // absolute smallest singular value, normalized only when the matrix is
    // large: at fully degenerate roots the whole matrix vanishes and a
    // smin/smax ratio would not dip
    return smin / std::max(1.0, smax);
}

} // namespace

double secular_indicator(const MetricGraph& g, const DiracParams& params,
                         double lambda) {
    return indicator(g, params, lambda);
}

std::vector<double> secular_eigenvalues(const MetricGraph& g,
                                        const DiracParams& params,
                                        double lo, double hi, int mesh,
                                        double accept_ratio) {
    if (!g.half_lines().empty())
        throw ConfigError("secular oracle requires a compact graph");
    if (!(hi > lo)) throw ConfigError("empty search interval");
    if (mesh < 3) throw ConfigError("mesh too coarse");

    std::vector<double> xs(mesh), fs(mesh);
    for (int i = 0; i < mesh; ++i) {
        xs[i] = lo + (hi - lo) * i / (mesh - 1);
        fs[i] = indicator(g, params, xs[i]);
    }

    std::vector<double> roots;
    for (int i = 1; i + 1 < mesh; ++i) {
        if (!(fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1])) continue;
        // ternary search on the bracketing interval
        double a = xs[i - 1], b = xs[i + 1];
        for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a));
             ++it) {
            double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
            if (indicator(g, params, m1) < indicator(g, params, m2))
                b = m2;
            else
                a = m1;
        }
        double x = 0.5 * (a + b);
        if (indicator(g, params, x) < accept_ratio) roots.push_back(x);
    }
    return roots;
}

} // namespace diracgraph
