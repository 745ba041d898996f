#include "diracgraph/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace diracgraph {

using nlohmann::json;

std::string format_float(double v) {
    if (v == 0.0) return "0";  // canonical: fold -0 into 0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

std::string quoted(const std::string& s) { return "\"" + escape(s) + "\""; }

std::string number_list(const std::vector<double>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_float(v[i]);
    }
    return out + "]";
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(what + ": invalid JSON: " + e.what());
    }
}

double require_number(const json& j, const std::string& key,
                      const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number())
        throw ConfigError(ctx + ": missing or non-numeric field '" + key + "'");
    return j[key].get<double>();
}

std::string require_string(const json& j, const std::string& key,
                           const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_string())
        throw ConfigError(ctx + ": missing or non-string field '" + key + "'");
    return j[key].get<std::string>();
}

std::vector<double> number_array(const json& j, const std::string& key,
                                 const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigError(ctx + ": missing or non-array field '" + key + "'");
    std::vector<double> out;
    for (const auto& x : j[key]) {
        if (!x.is_number())
            throw ConfigError(ctx + ": non-numeric entry in '" + key + "'");
        out.push_back(x.get<double>());
    }
    return out;
}

MetricGraph graph_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("graph document: not a JSON object");
    if (!j.contains("vertices") || !j["vertices"].is_array())
        throw ConfigError("graph document: missing or non-array field 'vertices'");
    if (!j.contains("edges") || !j["edges"].is_array())
        throw ConfigError("graph document: missing or non-array field 'edges'");
    std::vector<std::string> vertices;
    for (const auto& v : j["vertices"]) {
        if (!v.is_string())
            throw ConfigError("graph document: non-string entry in 'vertices'");
        vertices.push_back(v.get<std::string>());
    }
    std::vector<BoundedEdge> bounded;
    std::vector<HalfLine> half;
    for (const auto& e : j["edges"]) {
        if (!e.is_object())
            throw ConfigError("graph document: non-object entry in 'edges'");
        std::string id = require_string(e, "id", "graph document edge");
        std::string ctx = "graph document edge '" + id + "'";
        std::string from = require_string(e, "from", ctx);
        bool halfline = e.contains("halfline") && e["halfline"].is_boolean() &&
                        e["halfline"].get<bool>();
        if (halfline) {
            if (e.contains("to") || e.contains("length"))
                throw ConfigError(ctx +
                                  ": halfline edges must omit 'to' and 'length'");
            half.push_back({id, from});
        } else {
            std::string to = require_string(e, "to", ctx);
            double len = require_number(e, "length", ctx);
            bounded.push_back({id, from, to, len});
        }
    }
    return MetricGraph(std::move(vertices), std::move(bounded), std::move(half));
}

} // namespace

MetricGraph parse_graph_document(const std::string& text) {
    return graph_from_json(parse_json(text, "graph document"));
}

MetricGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open graph file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_graph_document(ss.str());
}

std::string graph_document(const MetricGraph& g) {
    std::ostringstream out;
    out << "{\n  \"vertices\": [";
    const auto& vs = g.vertices();
    for (size_t i = 0; i < vs.size(); ++i) {
        if (i) out << ", ";
        out << quoted(vs[i]);
    }
    out << "],\n  \"edges\": [\n";
    bool first = true;
    for (const auto& e : g.bounded_edges()) {
        if (!first) out << ",\n";
        first = false;
        out << "    {\"id\": " << quoted(e.id) << ", \"from\": "
            << quoted(e.from) << ", \"to\": " << quoted(e.to)
            << ", \"length\": " << format_float(e.length) << "}";
    }
    for (const auto& h : g.half_lines()) {
        if (!first) out << ",\n";
        first = false;
        out << "    {\"id\": " << quoted(h.id) << ", \"from\": "
            << quoted(h.anchor) << ", \"halfline\": true}";
    }
    out << "\n  ]\n}";
    return out.str();
}

Branch branch_from_name(const std::string& name) {
    for (Branch b : {Branch::Normalized, Branch::SubNormalized, Branch::Trivial,
                     Branch::Failed, Branch::Undecided})
        if (branch_name(b) == name) return b;
    throw ConfigError("unknown branch name '" + name + "'");
}

std::string report_to_json(const StoredReport& sr) {
    std::ostringstream out;
    // graph block re-indented two levels deep
    std::string gdoc = graph_document(sr.graph);
    std::string gind;
    for (char ch : gdoc) {
        gind += ch;
        if (ch == '\n') gind += "  ";
    }
    const SolveReport& r = sr.report;
    out << "{\n";
    out << "  \"format\": \"dirac-graph-report-v1\",\n";
    out << "  \"graph\": " << gind << ",\n";
    out << "  \"params\": {\"m\": " << format_float(sr.params.m)
        << ", \"c\": " << format_float(sr.params.c) << "},\n";
    out << "  \"grid\": {\"h\": " << format_float(sr.grid.h)
        << ", \"L\": " << format_float(sr.grid.L) << "},\n";
    out << "  \"nonlinearity\": {\"a\": " << format_float(sr.spec.a)
        << ", \"p\": " << format_float(sr.spec.p)
        << ", \"sign\": " << sr.spec.sign << ", \"region\": {";
    if (sr.spec.region.kind == Region::Kind::CoreOnly) {
        out << "\"kind\": \"core\"";
    } else {
        out << "\"kind\": \"core+segment\", \"halfline\": "
            << quoted(sr.spec.region.halfline_id)
            << ", \"ell\": " << format_float(sr.spec.region.ell);
    }
    out << "}},\n";
    out << "  \"shift\": " << format_float(r.shift) << ",\n";
    out << "  \"branch\": " << quoted(branch_name(r.branch)) << ",\n";
    out << "  \"omega\": " << format_float(r.omega) << ",\n";
    out << "  \"mass\": " << format_float(r.mass) << ",\n";
    out << "  \"energy_level\": " << format_float(r.energy_level) << ",\n";
    out << "  \"residual_norm\": " << format_float(r.residual_norm) << ",\n";
    out << "  \"omega_track\": " << number_list(r.omega_track) << ",\n";
    out << "  \"level_track\": " << number_list(r.level_track) << ",\n";
    out << "  \"mass_track\": " << number_list(r.mass_track) << ",\n";
    out << "  \"diagnostics\": {";
    bool first = true;
    for (const auto& kv : r.diagnostics) {  // std::map: sorted, canonical
        if (!first) out << ", ";
        first = false;
        out << quoted(kv.first) << ": " << format_float(kv.second);
    }
    out << "},\n";
    std::vector<double> ure(r.u.size()), uim(r.u.size());
    for (int i = 0; i < r.u.size(); ++i) {
        ure[i] = r.u[i].real();
        uim[i] = r.u[i].imag();
    }
    out << "  \"u_re\": " << number_list(ure) << ",\n";
    out << "  \"u_im\": " << number_list(uim) << "\n";
    out << "}\n";
    return out.str();
}

StoredReport report_from_json(const std::string& text) {
    json j = parse_json(text, "report");
    const std::string ctx = "report";
    if (!j.is_object()) throw ConfigError("report: not a JSON object");
    if (require_string(j, "format", ctx) != "dirac-graph-report-v1")
        throw ConfigError("report: unsupported 'format'");
    StoredReport sr;
    if (!j.contains("graph"))
        throw ConfigError("report: missing field 'graph'");
    sr.graph = graph_from_json(j["graph"]);
    if (!j.contains("params") || !j["params"].is_object())
        throw ConfigError("report: missing or non-object field 'params'");
    sr.params = DiracParams(require_number(j["params"], "m", "report params"),
                            require_number(j["params"], "c", "report params"));
    if (!j.contains("grid") || !j["grid"].is_object())
        throw ConfigError("report: missing or non-object field 'grid'");
    sr.grid = Grid(require_number(j["grid"], "h", "report grid"),
                   require_number(j["grid"], "L", "report grid"));
    if (!j.contains("nonlinearity") || !j["nonlinearity"].is_object())
        throw ConfigError("report: missing or non-object field 'nonlinearity'");
    const json& nj = j["nonlinearity"];
    sr.spec.a = require_number(nj, "a", "report nonlinearity");
    sr.spec.p = require_number(nj, "p", "report nonlinearity");
    sr.spec.sign =
        static_cast<int>(require_number(nj, "sign", "report nonlinearity"));
    if (!nj.contains("region") || !nj["region"].is_object())
        throw ConfigError("report: missing or non-object field 'region'");
    std::string kind = require_string(nj["region"], "kind", "report region");
    if (kind == "core") {
        sr.spec.region = Region::core();
    } else if (kind == "core+segment") {
        sr.spec.region = Region::core_plus_segment(
            require_string(nj["region"], "halfline", "report region"),
            require_number(nj["region"], "ell", "report region"));
    } else {
        throw ConfigError("report region: unknown kind '" + kind + "'");
    }
    sr.spec.validate();
    SolveReport& r = sr.report;
    r.shift = require_number(j, "shift", ctx);
    r.branch = branch_from_name(require_string(j, "branch", ctx));
    r.omega = require_number(j, "omega", ctx);
    r.mass = require_number(j, "mass", ctx);
    r.energy_level = require_number(j, "energy_level", ctx);
    r.residual_norm = require_number(j, "residual_norm", ctx);
    r.omega_track = number_array(j, "omega_track", ctx);
    r.level_track = number_array(j, "level_track", ctx);
    r.mass_track = number_array(j, "mass_track", ctx);
    if (!j.contains("diagnostics") || !j["diagnostics"].is_object())
        throw ConfigError("report: missing or non-object field 'diagnostics'");
    for (const auto& [key, val] : j["diagnostics"].items()) {
        if (!val.is_number())
            throw ConfigError("report diagnostics: non-numeric entry '" + key +
                              "'");
        r.diagnostics[key] = val.get<double>();
    }
    auto ure = number_array(j, "u_re", ctx);
    auto uim = number_array(j, "u_im", ctx);
    if (ure.size() != uim.size())
        throw ConfigError("report: u_re and u_im length mismatch");
    r.u.resize(static_cast<int>(ure.size()));
    for (size_t i = 0; i < ure.size(); ++i)
        r.u[static_cast<int>(i)] = std::complex<double>(ure[i], uim[i]);
    return sr;
}

void write_spinor_csv(const AssembledOperator& op, const CVec& u,
                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const DofLayout& layout = op.layout();
    for (const auto& e : layout.edges()) {
        std::ofstream out(dir / ("u_" + e.id + ".csv"));
        if (!out)
            throw ConfigError("cannot write spinor dump for edge " + e.id);
        out << "x,re_u1,im_u1,re_u2,im_u2\n";
        auto node_row = [&](int j) {
            std::complex<double> v = u[layout.node_dof(e, j)];
            out << format_float(j * e.he) << "," << format_float(v.real())
                << "," << format_float(v.imag()) << ",,\n";
        };
        for (int c = 0; c < e.n; ++c) {
            node_row(c);
            std::complex<double> v = u[layout.cell_dof(e, c)];
            out << format_float(DofLayout::cell_mid(e, c)) << ",,,"
                << format_float(v.real()) << "," << format_float(v.imag())
                << "\n";
        }
        node_row(e.n);
    }
}

} // namespace diracgraph
