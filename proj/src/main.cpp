#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "diracgraph/report_io.hpp"
#include "diracgraph/secular.hpp"

namespace fs = std::filesystem;
using namespace diracgraph;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInvariant = 4;

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string graph_path;
    double m = 1.0, c = 1.0;
    double h = 0.05, L = 15.0;
    std::string out_dir;
    unsigned seed = 1;
};

struct SpecOpts {
    double a = 0.1, p = 3.0;
    int sign = +1;
    std::string region = "core";
    std::string halfline;
    double ell = 0.0;
};

struct ScheduleOpts {
    double r0 = 2.0, mu0 = 0.1;
    int stages = 12;
    bool geometric = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool graph_required = true) {
    cmd->set_help_flag("--help", "print help");  // frees -h / --h for the grid
    auto* g = cmd->add_option("--graph", o.graph_path, "graph document (JSON)");
    if (graph_required) g->required();
    cmd->add_option("--m", o.m, "particle mass m > 0");
    cmd->add_option("--c", o.c, "speed parameter c > 0");
    cmd->add_option("--h", o.h, "grid spacing");
    cmd->add_option("--L", o.L, "half-line truncation length");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "random seed");
}

void add_spec(CLI::App* cmd, SpecOpts& o) {
    cmd->add_option("--a", o.a, "nonlinearity coupling a >= 0");
    cmd->add_option("--p", o.p, "nonlinearity exponent p > 2");
    cmd->add_option("--sign", o.sign, "equation sign (+1 or -1)");
    cmd->add_option("--region", o.region, "nonlinearity support")
        ->check(CLI::IsMember({"core", "core+segment"}));
    cmd->add_option("--halfline", o.halfline,
                    "half-line id for region core+segment");
    cmd->add_option("--ell", o.ell, "segment length for region core+segment");
}

void add_schedule(CLI::App* cmd, ScheduleOpts& o) {
    cmd->add_option("--r0", o.r0, "first barrier exponent");
    cmd->add_option("--mu0", o.mu0, "first constraint weight");
    cmd->add_option("--stages", o.stages, "number of continuation stages");
    cmd->add_flag("--geometric", o.geometric,
                  "double the barrier exponent per stage instead of r0 + n");
}

NonlinearitySpec make_spec(const SpecOpts& o) {
    NonlinearitySpec spec;
    spec.a = o.a;
    spec.p = o.p;
    spec.sign = o.sign;
    if (o.region == "core+segment") {
        if (o.halfline.empty())
            throw ConfigError("region core+segment requires --halfline");
        spec.region = Region::core_plus_segment(o.halfline, o.ell);
    } else {
        spec.region = Region::core();
    }
    spec.validate();
    return spec;
}

ContinuationSchedule make_schedule(const ScheduleOpts& o) {
    if (!o.geometric)
        return ContinuationSchedule::standard(o.r0, o.mu0, o.stages);
    ContinuationSchedule s;
    for (int n = 0; n < o.stages; ++n) {
        s.r.push_back(o.r0 * std::pow(2.0, n));
        s.mu.push_back(o.mu0 * std::pow(2.0, -n));
    }
    s.validate();
    return s;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const CommonOpts& co) {
    MetricGraph g = load_graph(co.graph_path);
    DiracParams params(co.m, co.c);
    AssembledOperator op(g, params, Grid(co.h, co.L));
    const double gamma = params.gamma();
    const Vec& lam = op.eigenvalues();

    const bool compact = g.half_lines().empty();
    std::vector<double> oracle;
    if (compact)
        oracle = secular_eigenvalues(g, params, -3.0 * gamma, 3.0 * gamma);

    std::ostringstream table;
    table << "index,lambda,abs_lambda_minus_gap,classification";
    if (compact) table << ",oracle_distance";
    table << "\n";
    int interior = 0;
    for (int i = 0; i < lam.size(); ++i) {
        double d = std::abs(lam[i]) - gamma;
        std::string cls;
        if (d < -1e-3 * gamma) {
            cls = "gap-interior (unexpected)";
            ++interior;
        } else if (std::abs(d) <= 1e-6 * gamma) {
            cls = "gap-edge eigenvalue";
        } else {
            cls = "essential-spectrum approximant";
        }
        table << i << "," << format_float(lam[i]) << "," << format_float(d)
              << "," << cls;
        if (compact) {
            table << ",";
            if (std::abs(lam[i]) <= 3.0 * gamma) {  // oracle scan range
                double best = std::numeric_limits<double>::infinity();
                for (double mu : oracle)
                    best = std::min(best, std::abs(mu - lam[i]));
                table << format_float(best);
            }
        }
        table << "\n";
    }
    std::cout << table.str();
    if (!co.out_dir.empty())
        write_file(fs::path(co.out_dir) / "spectrum.csv", table.str());
    if (interior > 0)
        throw InvariantViolation(std::to_string(interior) +
                                 " eigenvalue(s) strictly inside the gap");
    return 0;
}

int cmd_solve(const CommonOpts& co, const SpecOpts& so, const ScheduleOpts& sc,
              double shift) {
    StoredReport sr;
    sr.graph = load_graph(co.graph_path);
    sr.params = DiracParams(co.m, co.c);
    sr.grid = Grid(co.h, co.L);
    sr.spec = make_spec(so);
    AssembledOperator op(sr.graph, sr.params, sr.grid);
    sr.report =
        continuation_solve(op, sr.spec, make_schedule(sc), shift, co.seed);

    const SolveReport& r = sr.report;
    std::cout << "branch " << branch_name(r.branch) << "  omega "
              << format_float(r.omega) << "  mass " << format_float(r.mass)
              << "  energy " << format_float(r.energy_level) << "  residual "
              << format_float(r.residual_norm) << "  stages "
              << r.omega_track.size() << "\n";
    if (r.branch == Branch::Failed) {
        std::cerr << "error: continuation failed\n";
        return kExitNumeric;
    }
    if (!co.out_dir.empty()) {
        write_file(fs::path(co.out_dir) / "report.json", report_to_json(sr));
        if (r.u.size() == op.dim())
            write_spinor_csv(op, r.u, fs::path(co.out_dir) / "spinor");
    }
    return 0;
}

int cmd_sweep(const CommonOpts& co, const SpecOpts& so, const ScheduleOpts& sc,
              double shift, const std::string& axis,
              const std::vector<double>& values) {
    MetricGraph g = load_graph(co.graph_path);
    DiracParams params(co.m, co.c);
    NonlinearitySpec spec = make_spec(so);
    SweepAxis ax;
    if (axis == "a") ax = SweepAxis::Coupling;
    else if (axis == "p") ax = SweepAxis::Exponent;
    else if (axis == "ell") ax = SweepAxis::SegmentLength;
    else if (axis == "m") ax = SweepAxis::Mass;
    else if (axis == "c") ax = SweepAxis::Speed;
    else if (axis == "shift") ax = SweepAxis::Shift;
    else throw ConfigError("unknown sweep axis '" + axis + "'");

    auto table = sweep(g, params, Grid(co.h, co.L), spec, ax, values,
                       make_schedule(sc), shift, co.seed);
    std::ostringstream js;
    js << "[\n";
    for (size_t i = 0; i < table.size(); ++i) {
        const auto& cell = table[i];
        js << "  {\"value\": " << format_float(cell.value) << ", \"ok\": "
           << (cell.ok ? "true" : "false") << ", \"error\": \"" << cell.error
           << "\", \"branch\": \"" << branch_name(cell.report.branch)
           << "\", \"omega\": " << format_float(cell.report.omega)
           << ", \"mass\": " << format_float(cell.report.mass)
           << ", \"energy_level\": " << format_float(cell.report.energy_level)
           << ", \"residual_norm\": "
           << format_float(cell.report.residual_norm) << "}"
           << (i + 1 < table.size() ? "," : "") << "\n";
        std::cout << axis << " " << format_float(cell.value) << "  "
                  << (cell.ok ? branch_name(cell.report.branch)
                              : "error: " + cell.error)
                  << (cell.ok ? "  omega " + format_float(cell.report.omega) +
                                    "  mass " + format_float(cell.report.mass)
                              : "")
                  << "\n";
    }
    js << "]\n";
    if (!co.out_dir.empty())
        write_file(fs::path(co.out_dir) / "sweep.json", js.str());
    return 0;
}

int cmd_gns(const CommonOpts& co, double p, const std::string& kind_name,
            bool whole_graph, int trials) {
    MetricGraph g = load_graph(co.graph_path);
    AssembledOperator op(g, DiracParams(co.m, co.c), Grid(co.h, co.L));
    GnsKind kind;
    if (kind_name == "yform") kind = GnsKind::YForm;
    else if (kind_name == "h1") kind = GnsKind::H1;
    else if (kind_name == "suph1") kind = GnsKind::SupH1;
    else throw ConfigError("unknown interpolation kind '" + kind_name + "'");
    Region core = Region::core();
    auto est = estimate_gns(op, whole_graph ? nullptr : &core, p, kind, trials,
                            co.seed);
    std::cout << "constant " << format_float(est.value) << "  spread "
              << format_float(est.spread) << "  trials " << est.trials
              << "  scope " << (whole_graph ? "graph" : "core") << "\n";
    if (!co.out_dir.empty()) {
        std::ostringstream js;
        js << "{\"kind\": \"" << kind_name << "\", \"p\": " << format_float(p)
           << ", \"whole_graph\": " << (whole_graph ? "true" : "false")
           << ", \"value\": " << format_float(est.value)
           << ", \"spread\": " << format_float(est.spread)
           << ", \"trials\": " << est.trials << "}\n";
        write_file(fs::path(co.out_dir) / "gns.json", js.str());
    }
    return 0;
}

int cmd_thresholds(const CommonOpts& co, double p, double a, bool estimate,
                   int trials, std::optional<double> C_core,
                   std::optional<double> C_graph, std::optional<double> S_2pm2,
                   std::optional<double> S_sup) {
    Thresholds t(DiracParams(co.m, co.c), p);
    if (estimate) {
        if (co.graph_path.empty())
            throw ConfigError("--estimate requires --graph");
        MetricGraph g = load_graph(co.graph_path);
        AssembledOperator op(g, DiracParams(co.m, co.c), Grid(co.h, co.L));
        Region core = Region::core();
        if (!C_core)
            C_core = estimate_gns(op, &core, p, GnsKind::YForm, trials,
                                  co.seed).value;
        if (!C_graph)
            C_graph = estimate_gns(op, nullptr, p, GnsKind::YForm, trials,
                                   co.seed).value;
        if (!S_2pm2)
            S_2pm2 = estimate_gns(op, &core, 2.0 * p - 2.0, GnsKind::H1,
                                  trials, co.seed).value;
        if (!S_sup)
            S_sup = estimate_gns(op, &core, p, GnsKind::SupH1, trials,
                                 co.seed).value;
    }
    if (C_core) t.set_c_core(*C_core);
    if (C_graph) t.set_c_graph(*C_graph);
    if (S_2pm2) t.set_s_2pm2_core(*S_2pm2);
    if (S_sup) t.set_s_sup_core(*S_sup);

    auto line = [&](const std::string& name, auto&& fn) {
        std::cout << name << " = ";
        try {
            std::cout << format_float(fn()) << "\n";
        } catch (const ConfigError&) {
            std::cout << "unavailable (missing constant)\n";
        }
    };
    line("a0", [&] { return t.a0(); });
    line("a_star0", [&] { return t.a_star0(); });
    line("a_tilde0", [&] { return t.a_tilde0(); });
    if (a > 0.0) {
        line("h1_plain_ratio", [&] { return t.appendix24_value(a); });
        line("h1_energy_ratio", [&] { return t.appendix46_value(a); });
    }
    return 0;
}

int cmd_check_graph(const CommonOpts& co) {
    MetricGraph g = load_graph(co.graph_path);
    auto core = g.compact_core();
    std::cout << "vertices " << g.vertices().size() << "  bounded_edges "
              << g.bounded_edges().size() << "  half_lines "
              << g.half_lines().size() << "  core_length "
              << format_float(core.total_length) << "\n";
    auto tc = g.core_is_tree_with_at_most_one_free_leaf();
    std::cout << "tree_one_free_leaf=" << (tc.satisfied ? "true" : "false");
    if (!tc.free_leaves.empty()) {
        std::cout << "  free_leaves:";
        for (const auto& v : tc.free_leaves) std::cout << " " << v;
    }
    std::cout << "\n";
    auto cyc = g.find_simple_cycle();
    std::cout << "simple_cycle=";
    if (cyc) {
        for (size_t i = 0; i < cyc->size(); ++i)
            std::cout << (i ? " " : "") << (*cyc)[i].edge_id;
    } else {
        std::cout << "none";
    }
    std::cout << "\n";
    auto hv = g.halfline_vertices();
    std::cout << "two_halfline_vertices="
              << (hv.size() >= 2 ? "true" : "false") << "\n";
    return 0;
}

int cmd_verify(const std::string& report_path) {
    std::ifstream in(report_path);
    if (!in) throw ConfigError("cannot open report " + report_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    StoredReport sr = report_from_json(text);
    if (report_to_json(sr) != text)
        throw InvariantViolation("report is not in canonical form");

    AssembledOperator op(sr.graph, sr.params, sr.grid);
    const SolveReport& r = sr.report;
    if (r.u.size() != op.dim())
        throw InvariantViolation("stored field dimension mismatch");
    NonlinearTerm term(op, sr.spec.region);
    double mass = op.norm_l2_sq(r.u);
    if (std::abs(mass - r.mass) > 1e-9 * std::max(1.0, r.mass))
        throw InvariantViolation("stored mass does not replay");
    double res = residual_norm(op, term, r.u, r.omega, sr.spec);
    if (std::abs(res - r.residual_norm) > 1e-12 * std::max(1.0, res))
        throw InvariantViolation("stored residual does not replay");
    const double gamma = sr.params.gamma();
    if (r.branch == Branch::Normalized) {
        if (std::abs(r.mass - 1.0) > 1e-8)
            throw InvariantViolation("Normalized report with mass away from 1");
        if (!(std::abs(r.omega) < gamma))
            throw InvariantViolation("Normalized report with omega outside the gap");
        if (!(r.residual_norm <= 1e-8))
            throw InvariantViolation("Normalized report with large residual");
    }
    std::cout << "verify: ok (branch " << branch_name(r.branch)
              << ", residual " << format_float(res) << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirac operators with Kirchhoff-type conditions on metric "
                 "graphs: spectra, normalized solutions, thresholds"};
    app.require_subcommand(1);

    CommonOpts co;
    SpecOpts so;
    ScheduleOpts sc;
    double shift = 0.0;

    auto* spectrum = app.add_subcommand("spectrum", "eigenvalue table");
    CommonOpts co_spectrum;
    add_common(spectrum, co_spectrum);

    auto* solve = app.add_subcommand("solve", "penalized continuation solve");
    add_common(solve, co);
    add_spec(solve, so);
    add_schedule(solve, sc);
    solve->add_option("--shift", shift, "spectral frame shift inside the gap");

    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep of solves");
    CommonOpts co_sweep;
    SpecOpts so_sweep;
    ScheduleOpts sc_sweep;
    double shift_sweep = 0.0;
    std::string axis = "a";
    std::vector<double> values;
    add_common(sweep_cmd, co_sweep);
    add_spec(sweep_cmd, so_sweep);
    add_schedule(sweep_cmd, sc_sweep);
    sweep_cmd->add_option("--shift", shift_sweep, "spectral frame shift");
    sweep_cmd->add_option("--axis", axis, "swept parameter")
        ->check(CLI::IsMember({"a", "p", "ell", "m", "c", "shift"}));
    sweep_cmd->add_option("--values", values, "swept values")
        ->required()
        ->delimiter(',');

    auto* gns = app.add_subcommand("gns", "interpolation constant estimate");
    CommonOpts co_gns;
    double gns_p = 3.0;
    std::string gns_kind = "yform";
    bool whole_graph = false;
    int gns_trials = 8;
    add_common(gns, co_gns);
    gns->add_option("--p", gns_p, "exponent");
    gns->add_option("--kind", gns_kind, "inequality kind")
        ->check(CLI::IsMember({"yform", "h1", "suph1"}));
    gns->add_flag("--whole-graph", whole_graph, "estimate over the whole graph");
    gns->add_option("--trials", gns_trials, "ascent restarts");

    auto* thr = app.add_subcommand("thresholds", "coupling thresholds");
    CommonOpts co_thr;
    double thr_p = 3.0, thr_a = 0.0;
    bool thr_estimate = false;
    int thr_trials = 8;
    std::optional<double> C_core, C_graph, S_2pm2, S_sup;
    add_common(thr, co_thr, /*graph_required=*/false);
    thr->add_option("--p", thr_p, "exponent");
    thr->add_option("--a", thr_a, "evaluate ratio chains at this coupling");
    thr->add_flag("--estimate", thr_estimate,
                  "estimate missing constants from the graph");
    thr->add_option("--trials", thr_trials, "ascent restarts");
    thr->add_option("--C-core", C_core, "core interpolation constant");
    thr->add_option("--C-graph", C_graph, "whole-graph interpolation constant");
    thr->add_option("--S-2pm2", S_2pm2, "H1 interpolation constant (2p-2)");
    thr->add_option("--S-sup", S_sup, "sup interpolation constant");

    auto* check = app.add_subcommand("check-graph", "graph-theoretic criteria");
    CommonOpts co_check;
    add_common(check, co_check);

    auto* verify = app.add_subcommand("verify", "replay a stored report");
    std::string report_path;
    verify->add_option("--report", report_path, "report.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(co_spectrum);
        if (solve->parsed()) return cmd_solve(co, so, sc, shift);
        if (sweep_cmd->parsed())
            return cmd_sweep(co_sweep, so_sweep, sc_sweep, shift_sweep, axis,
                             values);
        if (gns->parsed())
            return cmd_gns(co_gns, gns_p, gns_kind, whole_graph, gns_trials);
        if (thr->parsed())
            return cmd_thresholds(co_thr, thr_p, thr_a, thr_estimate,
                                  thr_trials, C_core, C_graph, S_2pm2, S_sup);
        if (check->parsed()) return cmd_check_graph(co_check);
        if (verify->parsed()) return cmd_verify(report_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
