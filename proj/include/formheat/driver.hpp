#pragma once

// Experiment driver: reads a run configuration, executes one pipeline
// (evolve, eigs, exponents, probe or scan), writes CSV artifacts and a JSON
// manifest. Requires the single-header nlohmann/json.

#include "formheat/assembly.hpp"
#include "formheat/config.hpp"
#include "formheat/errors.hpp"
#include "formheat/evolution.hpp"
#include "formheat/exponents.hpp"
#include "formheat/geometry.hpp"
#include "formheat/parallel.hpp"
#include "formheat/spectral.hpp"
#include "formheat/weights.hpp"

#include "json.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace formheat {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

/// Everything a pipeline needs, read from a Config.
struct RunSetup {
    fs::path base; ///< directory of the config file; relative paths resolve against it
    std::string pipeline;
    fs::path output;
    unsigned seed = 1;

    std::optional<Mesh> mesh;
    fs::path mesh_path;

    CoefficientSet coeff;
    std::optional<WeightSpec> weight;
    AssemblyOptions assembly;
    TimeSteppingConfig time;

    std::string initial_bulk = "1", initial_gd, initial_sigma;
    double forcing_bulk = 0.0, forcing_gd = 0.0, forcing_sigma = 0.0;

    int eig_count = 6;
    int range_samples = 1000;

    int exp_d = 2;
    std::optional<double> exp_gamma;
    std::string exp_case = "auto";
    SurfaceDiffusion exp_diffusion = SurfaceDiffusion::none;

    double probe_theta = 0.75, probe_p = 2.0;
    int probe_levels = 3, probe_samples = 20;

    int scan_l_max = 6;
    std::optional<std::array<double, 4>> scan_window;
};

namespace detail {

/// "x y, x y, ..." -> points.
inline std::vector<Vec2> parse_points(const Config& c, const std::string& key, const std::string& text) {
    std::vector<Vec2> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::istringstream pair(item);
        double x = 0, y = 0;
        std::string rest;
        if (!(pair >> x >> y) || (pair >> rest)) c.fail(key, "expected 'x y' pairs separated by commas");
        out.emplace_back(x, y);
    }
    if (out.empty()) c.fail(key, "expected at least one point");
    return out;
}

inline Mat2 parse_matrix(const Config& c, const std::string& key) {
    const auto v = c.numbers(key);
    if (v.size() == 1) return v[0] * Mat2::Identity();
    if (v.size() != 4) c.fail(key, "expected one number or four matrix entries");
    Mat2 m;
    m << v[0], v[1], v[2], v[3];
    return m;
}

/// "constant c", a bare number, or "dist_to_point x y [gamma]".
inline ScalarEnvelope parse_envelope(const Config& c, const std::string& key) {
    const auto text = c.get(key);
    if (!text) return ScalarEnvelope::constant(1.0);
    std::istringstream in(*text);
    std::string head;
    in >> head;
    if (head == "constant") {
        double v = 0;
        if (!(in >> v)) c.fail(key, "expected 'constant <value>'");
        return ScalarEnvelope::constant(v);
    }
    if (head == "dist_to_point") {
        double x = 0, y = 0, gamma = 1.0;
        if (!(in >> x >> y)) c.fail(key, "expected 'dist_to_point <x> <y> [gamma]'");
        in >> gamma;
        try {
            return ScalarEnvelope::weight(WeightSpec(Submanifold::point({x, y}), gamma));
        } catch (const InvariantError& e) {
            c.fail(key, e.what());
        }
    }
    const auto v = c.numbers(key);
    if (v.size() != 1) c.fail(key, "expected a number, 'constant <value>' or 'dist_to_point <x> <y> [gamma]'");
    return ScalarEnvelope::constant(v[0]);
}

} // namespace detail

/// Reads every recognized key (so that leftovers are reported as unknown) and
/// loads the mesh when one is configured.
inline RunSetup read_setup(const Config& c, const fs::path& base) {
    RunSetup s;
    s.base = base;
    s.pipeline = c.string("pipeline", "evolve");
    static const std::set<std::string> pipelines{"evolve", "eigs", "exponents", "probe", "scan"};
    if (!pipelines.count(s.pipeline)) c.fail("pipeline", "unrecognized pipeline '" + s.pipeline + "'");
    s.output = base / c.string("output", "formheat-out");
    s.seed = static_cast<unsigned>(c.integer("seed", 1));

    if (const auto m = c.get("mesh")) {
        s.mesh_path = base / *m;
        if (!fs::exists(s.mesh_path)) throw ConfigError("mesh: file not found");
        std::ifstream in(s.mesh_path);
        s.mesh = parse_mesh(in);
    } else if (s.pipeline != "exponents") {
        throw ConfigError("mesh: missing required key");
    }

    CoefficientSet& k = s.coeff;
    if (c.has("coeff.bulk")) {
        const Mat2 m = detail::parse_matrix(c, "coeff.bulk");
        k.bulk = [m](const Vec2&, int) { return m; };
    }
    std::map<int, Mat2> regions;
    for (const auto& key : c.keys_with_prefix("coeff.bulk.region.")) {
        const std::string id = key.substr(std::string("coeff.bulk.region.").size());
        if (id.empty() || id.find_first_not_of("0123456789") != std::string::npos)
            c.fail(key, "expected coeff.bulk.region.<integer>");
        regions[std::stoi(id)] = detail::parse_matrix(c, key);
    }
    if (!regions.empty()) {
        const auto fallback = k.bulk;
        k.bulk = [regions, fallback](const Vec2& x, int region) {
            const auto it = regions.find(region);
            return it == regions.end() ? fallback(x, region) : it->second;
        };
    }
    const auto points = c.get("coeff.weight.points");
    const auto polyline = c.get("coeff.weight.polyline");
    const double gamma = c.number("coeff.weight.gamma", 0.0);
    const double scale = c.number("coeff.weight.scale", 1.0);
    if (points && polyline) c.fail("coeff.weight.polyline", "give either coeff.weight.points or coeff.weight.polyline");
    if (points || polyline) {
        const std::string key = points ? "coeff.weight.points" : "coeff.weight.polyline";
        const auto pts = detail::parse_points(c, key, points ? *points : *polyline);
        try {
            s.weight = WeightSpec(points ? Submanifold::points(pts) : Submanifold::polyline(pts), gamma);
        } catch (const InvariantError& e) {
            c.fail("coeff.weight.gamma", e.what());
        }
        k.bulk_envelope = ScalarEnvelope::weight(*s.weight, scale);
    } else if (c.has("coeff.weight.gamma")) {
        c.fail("coeff.weight.gamma", "requires coeff.weight.points or coeff.weight.polyline");
    }
    const Mat2 gd = c.has("coeff.gd") ? detail::parse_matrix(c, "coeff.gd") : Mat2::Identity().eval();
    const Mat2 sigma = c.has("coeff.sigma") ? detail::parse_matrix(c, "coeff.sigma") : Mat2::Identity().eval();
    k.gd = [gd](const Vec2&) { return gd; };
    k.sigma = [sigma](const Vec2&) { return sigma; };
    k.gd_envelope = detail::parse_envelope(c, "coeff.gd_envelope");
    k.sigma_envelope = detail::parse_envelope(c, "coeff.sigma_envelope");
    k.c1 = c.number("coeff.c1", 0.0);
    k.c2 = c.number("coeff.c2", std::numeric_limits<double>::infinity());

    const double zb = c.number("zeta.bulk", 1.0), zg = c.number("zeta.gd", 1.0), zs = c.number("zeta.sigma", 1.0);
    k.zeta_bulk = [zb](const Vec2&, int) { return zb; };
    k.zeta_gd = [zg](const Vec2&) { return zg; };
    k.zeta_sigma = [zs](const Vec2&) { return zs; };
    k.zeta_lower = c.number("zeta.lower", 0.0);

    s.assembly.lumped = c.boolean("assembly.lumped", false);
    s.assembly.quad_order = static_cast<int>(c.integer("assembly.quad_order", 2));
    for (const auto& key : c.keys_with_prefix("endpoint.")) {
        const std::string id = key.substr(std::string("endpoint.").size());
        if (id.empty() || id.find_first_not_of("0123456789") != std::string::npos)
            c.fail(key, "expected endpoint.<vertex index>");
        const std::string v = c.require(key);
        if (v != "dirichlet" && v != "neumann") c.fail(key, "expected 'dirichlet' or 'neumann'");
        s.assembly.endpoints[std::stoi(id)] = v == "dirichlet" ? EndpointCondition::dirichlet : EndpointCondition::neumann;
    }

    TimeSteppingConfig& t = s.time;
    t.theta = c.number("time.theta", t.theta);
    t.dt = c.number("time.dt", t.dt);
    t.t_end = c.number("time.t_end", t.t_end);
    t.solver_tol = c.number("time.solver_tol", t.solver_tol);
    t.max_iterations = static_cast<int>(c.integer("time.max_iterations", t.max_iterations));
    t.snapshot_times = c.numbers("time.snapshots");
    t.monitor_mass = c.boolean("monitor.mass", true);
    t.monitor_energy = c.boolean("monitor.energy", true);
    t.monitor_supnorm = c.boolean("monitor.supnorm", true);
    t.monitor_positivity = c.boolean("monitor.positivity", true);

    auto initial = [&](const std::string& key, const std::string& fallback) {
        const std::string v = c.string(key, fallback);
        if (v != "random" && !v.empty() && c.has(key)) c.numbers(key);
        return v;
    };
    s.initial_bulk = initial("initial.bulk", "1");
    s.initial_gd = initial("initial.gd", "");
    s.initial_sigma = initial("initial.sigma", "");
    s.forcing_bulk = c.number("forcing.bulk", 0.0);
    s.forcing_gd = c.number("forcing.gd", 0.0);
    s.forcing_sigma = c.number("forcing.sigma", 0.0);

    s.eig_count = static_cast<int>(c.integer("eigs.count", 6));
    s.range_samples = static_cast<int>(c.integer("eigs.range_samples", 1000));

    s.exp_d = static_cast<int>(c.integer("exponents.d", 2));
    if (c.has("exponents.gamma")) s.exp_gamma = c.number("exponents.gamma", 0.0);
    s.exp_case = c.string("exponents.case", "auto");
    if (s.exp_case != "auto" && s.exp_case != "nondegenerate" && s.exp_case != "A" && s.exp_case != "B")
        c.fail("exponents.case", "expected auto, nondegenerate, A or B");
    const std::string diffusion = c.string("exponents.surface_diffusion", "none");
    if (diffusion == "none") s.exp_diffusion = SurfaceDiffusion::none;
    else if (diffusion == "uniform") s.exp_diffusion = SurfaceDiffusion::uniform;
    else if (diffusion == "near_critical") s.exp_diffusion = SurfaceDiffusion::near_critical;
    else c.fail("exponents.surface_diffusion", "expected none, uniform or near_critical");

    s.probe_theta = c.number("probe.theta", s.probe_theta);
    s.probe_p = c.number("probe.p", s.probe_p);
    s.probe_levels = static_cast<int>(c.integer("probe.levels", s.probe_levels));
    s.probe_samples = static_cast<int>(c.integer("probe.samples", s.probe_samples));
    if (s.probe_levels < 1) c.fail("probe.levels", "must be at least 1");

    s.scan_l_max = static_cast<int>(c.integer("scan.l_max", 6));
    if (c.has("scan.window")) {
        const auto w = c.numbers("scan.window");
        if (w.size() != 4 || !(w[2] > w[0]) || !(w[3] > w[1])) c.fail("scan.window", "expected 'x0 y0 x1 y1'");
        s.scan_window = std::array<double, 4>{w[0], w[1], w[2], w[3]};
    }

    const auto unknown = c.unused_keys();
    if (!unknown.empty()) c.fail(unknown.front(), "unknown key");
    return s;
}

namespace detail {

inline BlockField initial_field(const RunSetup& s, const Mesh& mesh, const DofMap& d) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    auto fill = [&](Eigen::VectorXd& v, const std::vector<int>& nodes, const std::string& source,
                    const Eigen::VectorXd* bulk_values) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (source.empty()) v[i] = (*bulk_values)[d.vertex_dof[nodes[i]]];
            else if (source == "random") v[i] = ud(rng);
            else v[i] = std::stod(source);
        }
    };
    BlockField b = BlockField::zeros(d);
    fill(b.bulk, d.bulk, s.initial_bulk, nullptr);
    fill(b.gd, d.gd, s.initial_gd, &b.bulk);
    fill(b.sigma, d.sigma, s.initial_sigma, &b.bulk);
    (void)mesh;
    return b;
}

inline std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("output: cannot write " + path.string());
    return out;
}

inline std::string format_time_label(int k) {
    std::ostringstream s;
    s << std::setw(3) << std::setfill('0') << k;
    return s.str();
}

inline WeightCase resolve_case(const RunSetup& s) {
    if (s.exp_case == "nondegenerate") return WeightCase::nondegenerate;
    if (s.exp_case == "A") return WeightCase::A;
    if (s.exp_case == "B") return WeightCase::B;
    if (!s.weight || !s.weight->degenerate()) return WeightCase::nondegenerate;
    if (!s.mesh) throw ConfigError("exponents.case: 'auto' needs a mesh to classify the weight");
    return classify_case(*s.weight, *s.mesh).kind;
}

} // namespace detail

struct RunResult {
    int exit_code = 0;
    nlohmann::json manifest;
    std::vector<std::string> outputs;
};

namespace detail {

inline nlohmann::json envelope_json(const EnvelopeReport& r) {
    return {{"c1_observed", r.c1_observed},
            {"c2_observed", r.c2_observed},
            {"zeta_min", r.zeta_min},
            {"zeta_max", r.zeta_max}};
}

inline nlohmann::json mesh_json(const RunSetup& s) {
    if (!s.mesh) return nullptr;
    const Mesh& m = *s.mesh;
    return {{"path", s.mesh_path.string()},
            {"vertices", m.num_vertices()},
            {"triangles", m.num_triangles()},
            {"boundary_edges", m.boundary_edges().size()},
            {"interface_edges", m.interface_edges().size()},
            {"max_diameter", m.max_diameter()},
            {"area", m.area()},
            {"nonobtuse", m.is_nonobtuse()}};
}

/// Executes the configured pipeline; fills `manifest` and returns written file names.
inline std::vector<std::string> execute(const RunSetup& s, nlohmann::json& manifest) {
    std::vector<std::string> outputs;
    auto write = [&](const std::string& name, const auto& writer) {
        std::ofstream out = open_output(s.output / name);
        writer(out);
        outputs.push_back(name);
    };

    if (s.pipeline == "exponents") {
        const double g = s.exp_gamma.value_or(s.weight ? s.weight->gamma() : 0.0);
        const EmbeddingReport r =
            embedding_exponents(s.exp_d, Rational::from_double(g), {detail::resolve_case(s), s.exp_diffusion});
        write("exponents.csv", [&](std::ostream& out) {
            write_exponent_csv_header(out);
            write_exponent_csv_row(out, r);
        });
        manifest["exponents"] = {{"r0", r.r0.str()}, {"case", to_string(r.scenario.kind)}};
        return outputs;
    }

    const Mesh& mesh = *s.mesh;
    if (s.weight && s.weight->degenerate()) {
        const CaseClassification cc = classify_case(*s.weight, mesh);
        manifest["classification"] = {{"case", to_string(cc.kind)},
                                      {"outside_theory", cc.outside_theory},
                                      {"separation", cc.separation}};
    }

    if (s.pipeline == "scan") {
        if (!s.weight) throw ConfigError("scan: requires coeff.weight.points or coeff.weight.polyline");
        Vec2 lo(0, 0), hi(1, 1);
        if (s.scan_window) {
            lo = Vec2((*s.scan_window)[0], (*s.scan_window)[1]);
            hi = Vec2((*s.scan_window)[2], (*s.scan_window)[3]);
        } else {
            lo = hi = mesh.vertex(0);
            for (const auto& v : mesh.vertices()) lo = lo.cwiseMin(v), hi = hi.cwiseMax(v);
        }
        const ScanResult r = muckenhoupt_lower_bound_scan(*s.weight, s.scan_l_max, lo, hi);
        write("scan.csv", [&](std::ostream& out) { write_scan_csv(out, r); });
        manifest["scan"] = {{"c_min", r.c_min}, {"window_warning", r.window_warning}};
        return outputs;
    }

    if (s.pipeline == "probe") {
        std::vector<DiscreteOperator> ops;
        Mesh level = mesh;
        for (int k = 0; k < s.probe_levels; ++k) {
            ops.push_back(build_pencil(level, s.coeff, s.assembly));
            if (k + 1 < s.probe_levels) level = refine_uniform(level);
        }
        std::vector<const DiscreteOperator*> ptrs;
        for (const auto& op : ops) ptrs.push_back(&op);
        const ProbeResult r = fractional_embedding_probe(ptrs, s.probe_theta, s.probe_p, s.probe_samples, s.seed);
        write("probe.csv", [&](std::ostream& out) { write_probe_csv(out, r); });
        manifest["probe"] = {{"bounded", r.bounded}, {"growth", r.growth}};
        manifest["envelope"] = envelope_json(ops.front().envelope);
        return outputs;
    }

    const DiscreteOperator op = build_pencil(mesh, s.coeff, s.assembly);
    manifest["envelope"] = envelope_json(op.envelope);
    manifest["dofs"] = {{"bulk", op.dofs.n_bulk()}, {"gd", op.dofs.n_gd()}, {"sigma", op.dofs.n_sigma()}};

    if (s.pipeline == "eigs") {
        if (op.symmetric) {
            const Eigenpairs e = generalized_eigs(op, std::min(s.eig_count, op.size()));
            write("eigenvalues.csv", [&](std::ostream& out) {
                out << "index,eigenvalue\n";
                out.precision(17);
                for (Eigen::Index j = 0; j < e.values.size(); ++j) out << j << ',' << e.values[j] << '\n';
            });
            manifest["eigs"] = {{"max_residual", e.max_residual}};
        }
        const NumericalRange nr = numerical_range_check(op, s.range_samples, s.seed);
        write("numerical_range.csv", [&](std::ostream& out) {
            out << "samples,min_real,max_ratio\n";
            out.precision(17);
            out << s.range_samples << ',' << nr.min_real << ',' << nr.max_ratio << '\n';
        });
        return outputs;
    }

    // evolve
    const BlockField u0 = detail::initial_field(s, mesh, op.dofs);
    const double fb = s.forcing_bulk, fg = s.forcing_gd, fs_ = s.forcing_sigma;
    const Forcing forcing = [&op, fb, fg, fs_](double) {
        BlockField f = BlockField::zeros(op.dofs);
        f.bulk.setConstant(fb);
        f.gd.setConstant(fg);
        f.sigma.setConstant(fs_);
        return f;
    };
    const EvolutionReport r = evolve(op, u0, forcing, s.time);
    write("monitors.csv", [&](std::ostream& out) { write_monitor_csv(out, r); });
    for (std::size_t k = 0; k < r.snapshots.size(); ++k)
        write("snapshot_" + format_time_label(static_cast<int>(k)) + ".csv",
              [&](std::ostream& out) { write_snapshot_csv(out, op, r.snapshots[k].u); });
    write("final.csv", [&](std::ostream& out) { write_snapshot_csv(out, op, r.u); });
    if (!op.sigma.empty()) {
        const Eigen::VectorXd jump = recover_interface_flux(op, r.u, forcing(s.time.t_end));
        write("interface_flux.csv", [&](std::ostream& out) {
            out << "node_index,x,y,jump\n";
            out.precision(17);
            for (std::size_t i = 0; i < op.sigma.size(); ++i) {
                const int v = op.sigma.nodes[i];
                out << v << ',' << op.coords[v].x() << ',' << op.coords[v].y() << ',' << jump[i] << '\n';
            }
        });
    }
    manifest["evolve"] = {{"steps", s.time.n_steps()},
                          {"final_mass", r.mass.back()},
                          {"final_energy", r.energy.back()}};
    return outputs;
}

inline nlohmann::json error_record(const std::string& message, const char* type) {
    return {{"status", "error"}, {"type", type}, {"message", message}};
}

} // namespace detail

/// Runs the pipeline of the config at `path`. Exit code 0 on success, 2 for
/// configuration and input errors, 1 for pipeline failures. On failure a
/// machine-readable record is printed to `err` and, when possible, written
/// to error.json in the output directory.
inline int run(const fs::path& path, std::ostream& err = std::cerr) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::optional<fs::path> output;
    auto fail = [&](int code, const std::string& message, const char* type) {
        const nlohmann::json record = detail::error_record(message, type);
        err << record.dump() << '\n';
        if (output) {
            std::error_code ec;
            fs::create_directories(*output, ec);
            std::ofstream out(*output / "error.json");
            if (out) out << record.dump(2) << '\n';
        }
        return code;
    };
    try {
        const Config config = Config::load(path.string());
        output = base / config.string("output", "formheat-out");
        const RunSetup setup = read_setup(config, base);
        fs::create_directories(setup.output);

        nlohmann::json manifest;
        manifest["formheat_version"] = kVersion;
        manifest["config_path"] = path.string();
        nlohmann::json echo = nlohmann::json::object();
        for (const auto& [k, e] : config.entries()) echo[k] = e.value;
        manifest["config"] = echo;
        manifest["pipeline"] = setup.pipeline;
        manifest["seed"] = setup.seed;
        manifest["threads"] = worker_count();
        manifest["mesh"] = detail::mesh_json(setup);

        auto outputs = detail::execute(setup, manifest);
        outputs.push_back("manifest.json");
        manifest["outputs"] = outputs;
        manifest["status"] = "ok";
        manifest["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream out = detail::open_output(setup.output / "manifest.json");
        out << manifest.dump(2) << '\n';
        return 0;
    } catch (const ParseError& e) {
        return fail(2, std::string("config: ") + e.what(), "ParseError");
    } catch (const ConfigError& e) {
        return fail(2, e.what(), "ConfigError");
    } catch (const OutsideTheoryError& e) {
        return fail(1, e.what(), "OutsideTheoryError");
    } catch (const UnsupportedScenarioError& e) {
        return fail(1, e.what(), "UnsupportedScenarioError");
    } catch (const EnvelopeError& e) {
        return fail(1, e.what(), "EnvelopeError");
    } catch (const SolverError& e) {
        return fail(1, e.what(), "SolverError");
    } catch (const AccuracyError& e) {
        return fail(1, e.what(), "AccuracyError");
    } catch (const GeometryError& e) {
        return fail(1, e.what(), "GeometryError");
    } catch (const InvariantError& e) {
        return fail(1, e.what(), "InvariantError");
    } catch (const std::exception& e) {
        return fail(1, e.what(), "Error");
    }
}

/// Dry-run checks without side effects. An empty list means the config is
/// well-formed.
inline std::vector<std::string> validate(const fs::path& path) {
    std::vector<std::string> diagnostics;
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    RunSetup s;
    try {
        s = read_setup(Config::load(path.string()), base);
    } catch (const ParseError& e) {
        return {std::string("config: ") + e.what()};
    } catch (const std::exception& e) {
        return {e.what()};
    }
    try {
        s.time.validate();
    } catch (const std::exception& e) {
        diagnostics.emplace_back(e.what());
    }
    if (!s.mesh) return diagnostics;
    const Mesh& mesh = *s.mesh;
    if (s.weight && s.weight->degenerate()) {
        const CaseClassification cc = classify_case(*s.weight, mesh);
        if (cc.outside_theory) diagnostics.emplace_back("outside theory hypothesis: case B requires γ < 1");
    }
    try {
        const SurfaceMesh gd = build_surface_mesh(mesh, SurfaceKind::dynamic);
        const SurfaceMesh sigma = build_surface_mesh(mesh, SurfaceKind::interface);
        make_dofmap(mesh, gd, sigma, s.assembly.endpoints);
        check_envelopes(mesh, gd, sigma, s.coeff, s.assembly.quad_order);
    } catch (const std::exception& e) {
        diagnostics.emplace_back(e.what());
    }
    return diagnostics;
}

} // namespace formheat
