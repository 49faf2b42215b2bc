#include "thinlayer/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <utility>

#include "thinlayer/config.hpp"
#include "thinlayer/errors.hpp"
#include "thinlayer/harness.hpp"

namespace thinlayer {

namespace {

const std::pair<const char*, const char*> kSubcommands[] = {
    {"mesh", "write micro and cell meshes"},
    {"check-transform", "audit the cell evolution"},
    {"run-micro", "solve the micro problem at the first eps"},
    {"run-macro", "solve the limit problem and its flux residuals"},
    {"converge", "eps sweep against the limit problem"},
    {"mms", "manufactured-solution order study"},
    {"unfold-check", "unfolding identities on random fields"},
};

bool takes_value(const std::string& a) {
    return a == "-c" || a == "--config" || a == "-s" || a == "--set" || a == "-o" || a == "--out";
}

/// First positional argument, skipping option values.
std::string first_positional(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (takes_value(a)) {
            ++i;
            continue;
        }
        if (!a.empty() && a[0] == '-') continue;
        return a;
    }
    return "";
}

std::string out_path(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
    return (std::filesystem::path(dir) / name).string();
}

void print_audit(const AssumptionReport& a, std::ostream& out) {
    out << "transform " << a.spec_name << ": identity band defect " << a.identity_band_defect
        << ", derivative mismatch " << a.derivative_mismatch << ", Piola defect " << a.piola_defect << "\n";
    for (const AssumptionRow& r : a.rows) {
        out << "  eps " << r.eps << ": disp " << r.displacement << " vel " << r.velocity << " |F| " << r.gradient
            << " J in [" << r.J_min << ", " << r.J_max << "]";
        for (const auto& f : r.flags) out << " FLAG:" << f;
        out << "\n";
    }
    for (const auto& f : a.flags) out << "  FLAG:" << f << "\n";
    if (!a.flagged()) out << "  no flags\n";
}

int cmd_mesh(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
    const ReferenceGeometry geom = make_geometry(cfg);
    out << "cell |Z*| = " << geom.channel_area << ", |N| = " << geom.wall_length << "\n";
    for (double eps : cfg.eps) {
        const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
        check_mesh(mic.mesh);
        std::ofstream f(out_path(dir, "mesh_eps_" + format_double(eps) + ".txt"));
        write_mesh(mic.mesh, f);
        if (!f) throw IoError("failed writing mesh");
        out << "eps " << eps << ": " << mic.mesh.num_dofs() << " vertices, " << mic.mesh.num_elements()
            << " triangles, " << mic.cell_dofs.size() << " cells\n";
    }
    std::ofstream f(out_path(dir, "cell_mesh.txt"));
    write_mesh(mesh_cell(geom, cfg.resolution), f);
    return 0;
}

int cmd_check_transform(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
    const ReferenceGeometry geom = make_geometry(cfg);
    const AssumptionReport a = check_assumptions(make_transform(cfg), geom, cfg.eps, cfg.audit_density);
    print_audit(a, out);
    ExperimentReport rep;
    for (const AssumptionRow& row : a.rows) {
        std::string flags;
        for (const auto* v : {&row.flags, &a.flags})
            for (const auto& s : *v) flags += (flags.empty() ? "" : ";") + s;
        rep.audit.push_back({row, a.identity_band_defect, a.derivative_mismatch, a.piola_defect, flags});
    }
    write_report(rep, dir, false);
    return 0;
}

int cmd_run_micro(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
    const ReferenceGeometry geom = make_geometry(cfg);
    const double eps = cfg.eps.front();
    const ProblemData data = make_problem(cfg, eps);
    validate_problem(data, geom, cfg.T, cfg.seed);
    const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
    SolveOptions opt;
    opt.tol = cfg.tol;
    MicroSolver solver(mic, geom, data, make_transform(cfg), opt);
    std::vector<MicroDiagnostics> diag;
    const auto states = solver.solve(cfg.dt, cfg.T, cfg.output_interval, &diag);
    write_trajectory(states, out_path(dir, "trajectory.csv"));
    write_diagnostics(diag, out_path(dir, "diagnostics.csv"));
    out << "micro eps " << eps << ", " << mic.mesh.num_dofs() << " dofs, " << states.size() << " snapshots\n";
    for (const auto& d : diag)
        if (d.t == diag.front().t || std::abs(d.t - cfg.T) < 1e-12)
            out << "  t " << d.t << " species " << d.species << ": mass " << d.mass << " |u|_L " << d.norm_L
                << " |u|_H " << d.norm_H << "\n";
    if (data.sources[0]) out << "  L2 error vs manufactured: " << mms_error(mic, states.back(), *data.sources[0]) << "\n";
    return 0;
}

int cmd_run_macro(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
    if (!cfg.source.empty()) throw ConfigError("source", "run-macro has no manufactured variant");
    const ReferenceGeometry geom = make_geometry(cfg);
    const ProblemData data = make_problem(cfg);
    validate_problem(data, geom, cfg.T, cfg.seed);
    const TransformSpec spec = make_transform(cfg);
    const MacroMesh mm = mesh_macro(geom, cfg.macro_nx, cfg.macro_ny, cfg.resolution);
    SolveOptions opt;
    opt.tol = cfg.tol;
    const MacroSolver solver(mm, geom, data, limit_transform(spec, geom), opt);
    const auto states = solver.solve(cfg.dt, cfg.T, cfg.output_interval);
    ExperimentReport rep;
    double worst = 0.0;
    for (const MacroState& s : states)
        for (int j = 0; j < data.num_species(); ++j)
            for (const FluxResidual& f : solver.flux_jump_residual(s, j)) {
                rep.flux.push_back({s.t, f.node, j, f.flux_plus, f.flux_minus, f.jump, f.r_jump, f.cell_plus,
                                    f.cell_minus, f.r_plus, f.r_minus});
                if (s.t == states.back().t) worst = std::max(worst, f.r_jump);
            }
    write_report(rep, dir, false);
    write_evolved_cells(mm.cell, solver.push_forward(states.back()), states.back().t,
                        out_path(dir, "evolved_cells.txt"));
    out << "macro: " << solver.num_unknowns() << " unknowns, " << states.size() << " snapshots\n";
    for (int j = 0; j < data.num_species(); ++j)
        out << "  species " << j << ": mass " << solver.total_mass(states.front(), j) << " -> "
            << solver.total_mass(states.back(), j) << "\n";
    out << "  coupling defect " << solver.coupling_defect(states.back()) << ", final max flux-jump residual "
        << worst << "\n";
    return 0;
}

int cmd_converge(const ExperimentConfig& cfg, const std::string& dir, bool plot, std::ostream& out) {
    ExperimentConfig c = cfg;
    c.dir = dir;
    const ExperimentReport rep = run_convergence_study(c, true);
    write_report(rep, dir, plot);
    out << "eps        err_bulk+    err_bulk-    err_layer    mass_drift   trace_C\n";
    for (const auto& r : rep.rows)
        out << r.eps << "  " << r.err_bulk_plus << "  " << r.err_bulk_minus << "  " << r.err_layer_2s << "  "
            << r.mass_drift << "  " << r.trace_C << "\n";
    for (const auto& r : rep.rates)
        out << "rate " << r.eps_coarse << " -> " << r.eps_fine << ": " << r.rate_bulk_plus << " "
            << r.rate_bulk_minus << " " << r.rate_layer_2s << (r.defined ? "" : " (undefined)") << "\n";
    for (const auto& a : rep.audit)
        if (!a.flags.empty()) out << "audit eps " << a.row.eps << ": " << a.flags << "\n";
    out << "wrote " << dir << "/convergence.csv\n";
    return 0;
}

int cmd_mms(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
    const MmsReport rep = run_mms_study(cfg);
    write_mms_report(rep, dir);
    for (const auto& r : rep.rows)
        out << r.kind << " " << r.param << ": error " << r.error << ", order " << r.order << "\n";
    out << "spatial order " << rep.spatial_order << ", temporal order " << rep.temporal_order << "\n";
    return 0;
}

int cmd_unfold_check(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
    const ReferenceGeometry geom = make_geometry(cfg);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double eps : cfg.eps) {
        const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
        const Unfolder unf(mic, mic.cell);
        Vector v = Vector::Zero(mic.mesh.num_dofs());
        for (int i : mic.channel_vertices) v[i] = U(rng);
        const UnfoldedField tv = unf.unfold(v);
        UnfoldedField phi = tv;
        for (double& x : phi.values) x = U(rng);
        const Vector uphi = unf.average(phi);
        const double norm_defect = std::abs(unf.unfolded_norm(tv) * std::sqrt(eps) / unf.layer_norm(v) - 1.0);
        const double adj = std::abs(unf.layer_inner(uphi, v) - eps * unf.unfolded_inner(phi, tv));
        out << "eps " << eps << ": norm identity defect " << norm_defect << ", adjointness defect " << adj
            << ", gradient defect " << unf.gradient_commutation_defect(v) << ", |U phi| / (sqrt(eps) |phi|) "
            << unf.layer_norm(uphi) / (std::sqrt(eps) * unf.unfolded_norm(phi)) << "\n";
        if (eps == cfg.eps.front()) write_unfolded(tv, out_path(dir, "unfolded.csv"));
    }
    return 0;
}

}  // namespace

int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    try {
        if (!inv.config_path.empty() && !std::filesystem::exists(inv.config_path))
            throw ConfigError("config", "file '" + inv.config_path + "' does not exist");
        const ExperimentConfig cfg = parse_config(inv.config_path, inv.overrides);
        const std::string dir = inv.out_dir.empty() ? cfg.dir : inv.out_dir;
        const bool plot = inv.plot || cfg.plot;
        const std::string& s = inv.subcommand;
        if (s == "mesh") return cmd_mesh(cfg, dir, out);
        if (s == "check-transform") return cmd_check_transform(cfg, dir, out);
        if (s == "run-micro") return cmd_run_micro(cfg, dir, out);
        if (s == "run-macro") return cmd_run_macro(cfg, dir, out);
        if (s == "converge") return cmd_converge(cfg, dir, plot, out);
        if (s == "mms") return cmd_mms(cfg, dir, out);
        if (s == "unfold-check") return cmd_unfold_check(cfg, dir, out);
        err << "unknown subcommand '" << s << "'\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "config error [" << e.key() << "]: " << e.reason() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Thin-layer homogenization workbench"};
    app.footer(config_help());
    app.require_subcommand(1);
    CliInvocation inv;
    app.add_option("-c,--config", inv.config_path, "TOML config file (defaults when omitted)");
    app.add_option("-s,--set", inv.overrides, "override, e.g. numerics.dt=0.005 (repeatable)");
    app.add_option("-o,--out", inv.out_dir, "output directory (default output.dir)");
    app.add_flag("--plot", inv.plot, "write SVG plots");
    for (const auto& [name, help] : kSubcommands) app.add_subcommand(name, help)->fallthrough();
    const std::string first = first_positional(argc, argv);
    bool known = first.empty();
    for (const auto& sc : kSubcommands) known |= first == sc.first;
    if (!known) {
        err << "unknown subcommand '" << first << "'\n" << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }
    inv.subcommand = app.get_subcommands().front()->get_name();
    return dispatch(inv, out, err);
}

}  // namespace thinlayer
