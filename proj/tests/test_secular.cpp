#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diracgraph/secular.hpp"

using namespace diracgraph;

namespace {

MetricGraph interval(double len) {
    return MetricGraph({"a", "b"}, {{"e", "a", "b", len}}, {});
}

MetricGraph loop(double len) {
    return MetricGraph({"v"}, {{"loop", "v", "v", len}}, {});
}

MetricGraph triangle() {
    return MetricGraph({"a", "b", "c"},
                       {{"e1", "a", "b", 1.0},
                        {"e2", "b", "c", 1.0},
                        {"e3", "c", "a", 1.0}},
                       {});
}

MetricGraph star3() {
    return MetricGraph({"x", "l1", "l2", "l3"},
                       {{"e1", "x", "l1", 0.9},
                        {"e2", "x", "l2", 1.1},
                        {"e3", "x", "l3", 0.7}},
                       {});
}

bool close_to_some(double x, const std::vector<double>& ys, double tol) {
    for (double y : ys)
        if (std::abs(x - y) <= tol) return true;
    return false;
}

} // namespace

TEST_CASE("interval of length pi: closed-form dispersion") {
    auto roots = secular_eigenvalues(interval(M_PI), DiracParams(1, 1), -3.0, 3.0);
    std::vector<double> expect = {-std::sqrt(5.0), -std::sqrt(2.0), 1.0,
                                  std::sqrt(2.0), std::sqrt(5.0)};
    REQUIRE(roots.size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i)
        CHECK(roots[i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("cycle of length 2pi contains both gap-edge eigenvalues") {
    auto roots = secular_eigenvalues(loop(2.0 * M_PI), DiracParams(1, 1), -3.0, 3.0);
    CHECK(close_to_some(-1.0, roots, 1e-9));
    CHECK(close_to_some(1.0, roots, 1e-9));
    // the traveling-wave pairs +-sqrt(1+n^2)
    for (int n = 1; n <= 2; ++n) {
        CHECK(close_to_some(std::sqrt(1.0 + n * n), roots, 1e-9));
        CHECK(close_to_some(-std::sqrt(1.0 + n * n), roots, 1e-9));
    }
}

TEST_CASE("no roots inside the open gap on a tree core") {
    auto roots =
        secular_eigenvalues(interval(M_PI), DiracParams(1, 1), -0.99, 0.99);
    CHECK(roots.empty());
}

TEST_CASE("oracle agrees with the discrete solver") {
    const double h = 0.01;
    std::vector<MetricGraph> graphs;
    graphs.push_back(interval(M_PI));
    graphs.push_back(loop(2.0 * M_PI));
    graphs.push_back(triangle());
    graphs.push_back(star3());
    for (const auto& g : graphs) {
        DiracParams p(1, 1);
        auto roots = secular_eigenvalues(g, p, -3.0, 3.0, 8000);
        AssembledOperator op(g, p, Grid(h, 5.0));
        auto dense = op.eigenvalues_in(-3.0 + 1e-6, 3.0 - 1e-6);
        // every discrete eigenvalue well inside the window matches a root
        for (double lam : dense)
            if (std::abs(lam) <= 2.9) CHECK(close_to_some(lam, roots, 5e-3));
        // and every root is approximated by a discrete eigenvalue
        for (double r : roots)
            if (std::abs(r) <= 2.9) CHECK(close_to_some(r, dense, 5e-3));
    }
}

TEST_CASE("half-lines are rejected") {
    MetricGraph tad({"v"}, {{"loop", "v", "v", 2.0}}, {{"h1", "v"}});
    CHECK_THROWS_AS(secular_eigenvalues(tad, DiracParams(1, 1), -3, 3),
                    ConfigError);
}
