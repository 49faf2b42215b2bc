#include "thinlayer/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "thinlayer/assembly.hpp"
#include "thinlayer/errors.hpp"
#include "thinlayer/parallel.hpp"

namespace thinlayer {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct EpsResult {
    ConvergenceRow row;
    FinalRow final_row;
    std::vector<TraceRow> trace;
};

EpsResult run_eps(const ExperimentConfig& cfg, double eps, const ReferenceGeometry& geom, const TransformSpec& spec,
                  const ProblemData& data, const MacroMesh& mm, const std::vector<MacroState>& macro) {
    const auto t0 = Clock::now();
    const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
    SolveOptions opt;
    opt.tol = cfg.tol;
    MicroSolver solver(mic, geom, data, spec, opt);
    const TwoScaleComparator cmp(mic, mm);
    const int m = data.num_species();
    const double dt = cfg.dt;

    double ip = 0.0, im = 0.0, il = 0.0, ih = 0.0, sup_l = 0.0;
    double prev_p = 0.0, prev_m = 0.0, prev_l = 0.0, prev_h = 0.0;
    std::vector<double> mass0(m), mass1(m);
    TwoScaleErrors last;
    size_t idx = 0;
    solver.solve(dt, cfg.T, cfg.T, nullptr, [&](const MicroState& s) {
        double ep = 0.0, em = 0.0, el = 0.0, nl = 0.0, nh = 0.0;
        for (int j = 0; j < m; ++j) {
            const TwoScaleErrors e = cmp.errors(s, macro.at(idx), j);
            ep += e.bulk_plus * e.bulk_plus;
            em += e.bulk_minus * e.bulk_minus;
            el += e.layer * e.layer;
            const auto [l, h] = solver.scaled_norms(s, j);
            nl += l * l;
            nh += h * h;
            (idx == 0 ? mass0 : mass1)[j] = solver.total_mass(s, j);
        }
        if (idx > 0) {
            ip += 0.5 * dt * (ep + prev_p);
            im += 0.5 * dt * (em + prev_m);
            il += 0.5 * dt * (el + prev_l);
            ih += 0.5 * dt * (nh + prev_h);
        }
        prev_p = ep;
        prev_m = em;
        prev_l = el;
        prev_h = nh;
        sup_l = std::max(sup_l, std::sqrt(nl));
        last = {std::sqrt(ep), std::sqrt(em), std::sqrt(el)};
        ++idx;
    });
    if (idx == 1) mass1 = mass0;

    EpsResult r;
    r.row.eps = eps;
    r.row.err_bulk_plus = std::sqrt(ip);
    r.row.err_bulk_minus = std::sqrt(im);
    r.row.err_layer_2s = std::sqrt(il);
    for (int j = 0; j < m; ++j) {
        const double scale = std::abs(mass0[j]) > 0.0 ? std::abs(mass0[j]) : 1.0;
        r.row.mass_drift = std::max(r.row.mass_drift, std::abs(mass1[j] - mass0[j]) / scale);
    }
    r.row.norm_L_sup = sup_l;
    r.row.norm_H_l2 = std::sqrt(ih);
    r.final_row = {eps, last.bulk_plus, last.bulk_minus, last.layer};

    const auto C = verify_trace_inequality(mic, cfg.theta, trace_sample_fields(mic, cfg.seed));
    for (size_t i = 0; i < C.size(); ++i) {
        r.trace.push_back({eps, cfg.theta[i], C[i]});
        r.row.trace_C = std::max(r.row.trace_C, C[i]);
    }
    r.row.seconds = cfg.timings ? seconds_since(t0) : 0.0;
    return r;
}

bool on_grid(double t, double interval) {
    const double q = t / interval;
    return std::abs(q - std::round(q)) < 1e-9;
}

std::string join_flags(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::string out;
    for (const auto* v : {&a, &b})
        for (const std::string& f : *v) out += (out.empty() ? "" : ";") + f;
    return out;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot write '" + path + "'");
        out_ << header << '\n';
    }
    template <class... Ts>
    void row(const Ts&... v) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
        out_ << '\n';
    }
    ~CsvWriter() = default;
    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing '" + path_ + "'");
    }

private:
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }
    std::string path_;
    std::ofstream out_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, sep)) out.push_back(c);
    return out;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("malformed integer '" + s + "'");
    return v;
}

void write_svg(const std::vector<ConvergenceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    const double W = 480, Hh = 360, pad = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& r : rows) {
        xmin = std::min(xmin, std::log10(r.eps));
        xmax = std::max(xmax, std::log10(r.eps));
        for (double e : {r.err_bulk_plus, r.err_bulk_minus, r.err_layer_2s})
            if (e > 0.0) {
                ymin = std::min(ymin, std::log10(e));
                ymax = std::max(ymax, std::log10(e));
            }
    }
    if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymax > ymin)) { ymin -= 0.5; ymax += 0.5; }
    auto X = [&](double e) { return pad + (std::log10(e) - xmin) / (xmax - xmin) * (W - 2 * pad); };
    auto Y = [&](double e) { return Hh - pad - (std::log10(e) - ymin) / (ymax - ymin) * (Hh - 2 * pad); };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << Hh - pad << "\" x2=\"" << W - pad << "\" y2=\"" << Hh - pad
        << "\" stroke=\"black\"/>\n<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
        << Hh - pad << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << Hh - 10 << "\" text-anchor=\"middle\">log10 eps</text>\n";
    out << "<text x=\"15\" y=\"" << Hh / 2 << "\" transform=\"rotate(-90 15 " << Hh / 2
        << ")\" text-anchor=\"middle\">log10 error</text>\n";
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
    const char* names[] = {"bulk +", "bulk -", "layer"};
    for (int s = 0; s < 3; ++s) {
        std::string pts;
        for (const auto& r : rows) {
            const double e = s == 0 ? r.err_bulk_plus : s == 1 ? r.err_bulk_minus : r.err_layer_2s;
            if (e > 0.0) pts += format_double(X(r.eps)) + "," + format_double(Y(e)) + " ";
        }
        out << "<polyline fill=\"none\" stroke=\"" << colors[s] << "\" points=\"" << pts << "\"/>\n";
        out << "<text x=\"" << W - pad - 60 << "\" y=\"" << pad + 18 * s << "\" fill=\"" << colors[s] << "\">"
            << names[s] << "</text>\n";
    }
    out << "</svg>\n";
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("malformed number '" + s + "'");
    return v;
}

std::vector<RateRow> compute_rates(const std::vector<ConvergenceRow>& rows) {
    std::vector<RateRow> out;
    for (size_t i = 1; i < rows.size(); ++i) {
        const ConvergenceRow& a = rows[i - 1];
        const ConvergenceRow& b = rows[i];
        RateRow r;
        r.eps_coarse = a.eps;
        r.eps_fine = b.eps;
        const double span = std::log(a.eps / b.eps);
        auto rate = [&](double ea, double eb) {
            if (!(ea > 0.0) || !(eb > 0.0) || !std::isfinite(ea) || !std::isfinite(eb)) {
                r.defined = false;
                return kNaN;
            }
            return std::log(ea / eb) / span;
        };
        r.rate_bulk_plus = rate(a.err_bulk_plus, b.err_bulk_plus);
        r.rate_bulk_minus = rate(a.err_bulk_minus, b.err_bulk_minus);
        r.rate_layer_2s = rate(a.err_layer_2s, b.err_layer_2s);
        out.push_back(r);
    }
    return out;
}

ExperimentReport run_convergence_study(const ExperimentConfig& cfg, bool flush_partial) {
    if (!cfg.source.empty())
        throw ConfigError("source", "convergence studies run without a manufactured source");
    const ReferenceGeometry geom = make_geometry(cfg);
    const TransformSpec spec = make_transform(cfg);
    const ProblemData data = make_problem(cfg);
    validate_problem(data, geom, cfg.T, cfg.seed);

    ExperimentReport report;
    const AssumptionReport audit = check_assumptions(spec, geom, cfg.eps, cfg.audit_density);
    for (const AssumptionRow& row : audit.rows)
        report.audit.push_back({row, audit.identity_band_defect, audit.derivative_mismatch, audit.piola_defect,
                                join_flags(row.flags, audit.flags)});

    const auto t0 = Clock::now();
    const MacroMesh mm = mesh_macro(geom, cfg.macro_nx, cfg.macro_ny, cfg.resolution);
    SolveOptions opt;
    opt.tol = cfg.tol;
    const MacroSolver macro(mm, geom, data, limit_transform(spec, geom), opt);
    std::vector<MacroState> traj;
    macro.solve(cfg.dt, cfg.T, cfg.output_interval, [&](const MacroState& s) {
        traj.push_back(s);
        if (!on_grid(s.t, cfg.output_interval) && std::abs(s.t - cfg.T) > 1e-12) return;
        for (int j = 0; j < data.num_species(); ++j)
            for (const FluxResidual& f : macro.flux_jump_residual(s, j))
                report.flux.push_back({s.t, f.node, j, f.flux_plus, f.flux_minus, f.jump, f.r_jump, f.cell_plus,
                                       f.cell_minus, f.r_plus, f.r_minus});
    });
    report.macro_seconds = cfg.timings ? seconds_since(t0) : 0.0;

    std::vector<EpsResult> results(cfg.eps.size());
    try {
        if (worker_count() > 1 && cfg.eps.size() > 1) {
            std::vector<std::future<EpsResult>> jobs;
            for (double eps : cfg.eps)
                jobs.push_back(std::async(std::launch::async, run_eps, std::cref(cfg), eps, std::cref(geom),
                                          std::cref(spec), std::cref(data), std::cref(mm), std::cref(traj)));
            std::exception_ptr failure;
            for (size_t i = 0; i < jobs.size(); ++i) {
                try {
                    results[i] = jobs[i].get();
                    report.rows.push_back(results[i].row);
                } catch (...) {
                    if (!failure) failure = std::current_exception();
                }
            }
            if (failure) std::rethrow_exception(failure);
        } else {
            for (size_t i = 0; i < cfg.eps.size(); ++i) {
                results[i] = run_eps(cfg, cfg.eps[i], geom, spec, data, mm, traj);
                report.rows.push_back(results[i].row);
            }
        }
    } catch (...) {
        if (flush_partial) {
            report.rates = compute_rates(report.rows);
            write_report(report, cfg.dir, false);
        }
        throw;
    }
    for (const EpsResult& r : results) {
        report.final_rows.push_back(r.final_row);
        report.trace.insert(report.trace.end(), r.trace.begin(), r.trace.end());
    }
    report.rates = compute_rates(report.rows);
    return report;
}

double mms_error(const MicroMesh& mesh, const MicroState& state, const ManufacturedSource& src, int species) {
    const Mesh& m = mesh.mesh;
    const Vector& u = state.u.at(species);
    double total = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& t = m.triangles[e];
        const double area = m.signed_area(e);
        for (const auto& [l, w] : triangle_rule_degree5()) {
            const Vec2 x = l[0] * m.vertices[t[0]] + l[1] * m.vertices[t[1]] + l[2] * m.vertices[t[2]];
            const double uh = l[0] * u[t[0]] + l[1] * u[t[1]] + l[2] * u[t[2]];
            const double d = uh - src.exact(state.t, m.regions[e], x);
            total += w * area * d * d;
        }
    }
    return std::sqrt(total);
}

MmsReport run_mms_study(const ExperimentConfig& cfg_in) {
    if (cfg_in.source.empty()) throw ConfigError("source", "the mms study needs problem.source = \"mms_cosine\"");
    MmsReport rep;
    rep.eps = cfg_in.eps.front();
    const double eps = rep.eps;
    const ReferenceGeometry geom = make_geometry(cfg_in);
    SolveOptions opt;
    opt.tol = std::min(cfg_in.tol, 1e-12);

    // Spatial: short horizon, fine steps.
    {
        ExperimentConfig cfg = cfg_in;
        cfg.T = 0.1;
        const double dt = 1e-4;
        const TransformSpec spec = make_transform(cfg);
        const ProblemData data = make_problem(cfg, eps);
        double prev = kNaN, prev_h = kNaN;
        for (int level = 0; level < 3; ++level) {
            const int r = cfg.resolution << level;
            const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), r);
            MicroSolver solver(mic, geom, data, spec, opt);
            const auto states = solver.solve(dt, cfg.T, cfg.T);
            const double err = mms_error(mic, states.back(), *data.sources[0]);
            const double h = 2.0 * eps / r;
            const double order = std::isnan(prev) ? kNaN : std::log(prev / err) / std::log(prev_h / h);
            rep.rows.push_back({"spatial", h, err, order});
            if (!std::isnan(order)) rep.spatial_order = order;
            prev = err;
            prev_h = h;
        }
    }
    // Temporal: successive differences on a fixed mesh.
    {
        ExperimentConfig cfg = cfg_in;
        cfg.T = 1.0;
        const TransformSpec spec = make_transform(cfg);
        const ProblemData data = make_problem(cfg, eps);
        const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
        const SparseMatrix M = assemble_weighted_mass(mic.mesh, nullptr, RegionScale::uniform(1.0));
        std::vector<Vector> finals;
        const std::vector<int> steps{25, 50, 100};
        for (int n : steps) {
            MicroSolver solver(mic, geom, data, spec, opt);
            finals.push_back(solver.solve(1.0 / n, cfg.T, cfg.T).back().u[0]);
        }
        double prev = kNaN;
        for (size_t i = 1; i < finals.size(); ++i) {
            const Vector d = finals[i - 1] - finals[i];
            const double diff = std::sqrt(std::max(0.0, d.dot(M * d)));
            const double order = std::isnan(prev) ? kNaN : std::log2(prev / diff);
            rep.rows.push_back({"temporal", 1.0 / steps[i - 1], diff, order});
            if (!std::isnan(order)) rep.temporal_order = order;
            prev = diff;
        }
    }
    return rep;
}

void write_report(const ExperimentReport& rep, const std::string& dir, bool plot) {
    make_dir(dir);
    const std::filesystem::path d(dir);
    {
        CsvWriter w((d / "convergence.csv").string(),
                    "eps,err_bulk_plus,err_bulk_minus,err_layer_2s,mass_drift,norm_L_sup,norm_H_l2,trace_C,seconds");
        for (const auto& r : rep.rows)
            w.row(r.eps, r.err_bulk_plus, r.err_bulk_minus, r.err_layer_2s, r.mass_drift, r.norm_L_sup, r.norm_H_l2,
                  r.trace_C, r.seconds);
        w.close();
    }
    {
        CsvWriter w((d / "convergence_final.csv").string(), "eps,err_bulk_plus,err_bulk_minus,err_layer_2s");
        for (const auto& r : rep.final_rows) w.row(r.eps, r.err_bulk_plus, r.err_bulk_minus, r.err_layer_2s);
        w.close();
    }
    {
        CsvWriter w((d / "rates.csv").string(),
                    "eps_coarse,eps_fine,rate_bulk_plus,rate_bulk_minus,rate_layer_2s,defined");
        for (const auto& r : rep.rates)
            w.row(r.eps_coarse, r.eps_fine, r.rate_bulk_plus, r.rate_bulk_minus, r.rate_layer_2s,
                  std::string(r.defined ? "yes" : "undefined"));
        w.close();
    }
    {
        CsvWriter w((d / "fluxjump.csv").string(),
                    "t,node,species,flux_plus,flux_minus,jump,residual,cell_plus,cell_minus,r_plus,r_minus");
        for (const auto& r : rep.flux)
            w.row(r.t, r.node, r.species, r.flux_plus, r.flux_minus, r.jump, r.residual, r.cell_plus, r.cell_minus,
                  r.r_plus, r.r_minus);
        w.close();
    }
    {
        CsvWriter w((d / "audit.csv").string(),
                    "eps,displacement,velocity,gradient,J_min,J_max,dtJ_sup_pointwise,gradJ_scaled,shift1,shift2,"
                    "identity_band_defect,derivative_mismatch,piola_defect,flags");
        for (const auto& a : rep.audit) {
            const auto& r = a.row;
            w.row(r.eps, r.displacement, r.velocity, r.gradient, r.J_min, r.J_max, r.dtJ_sup, r.gradJ_scaled,
                  r.shift1, r.shift2, a.identity_band_defect, a.derivative_mismatch, a.piola_defect, a.flags);
        }
        w.close();
    }
    {
        CsvWriter w((d / "trace.csv").string(), "eps,theta,C");
        for (const auto& r : rep.trace) w.row(r.eps, r.theta, r.C);
        w.close();
    }
    if (plot) write_svg(rep.rows, (d / "convergence.svg").string());
}

ExperimentReport read_report(const std::string& dir) {
    const std::filesystem::path d(dir);
    ExperimentReport rep;
    auto need = [](const std::vector<std::string>& row, size_t n, const std::string& file) {
        if (row.size() != n) throw IoError(file + ": expected " + std::to_string(n) + " columns");
    };
    for (const auto& c : read_csv((d / "convergence.csv").string())) {
        need(c, 9, "convergence.csv");
        ConvergenceRow r;
        double* f[] = {&r.eps, &r.err_bulk_plus, &r.err_bulk_minus, &r.err_layer_2s, &r.mass_drift,
                       &r.norm_L_sup, &r.norm_H_l2, &r.trace_C, &r.seconds};
        for (size_t i = 0; i < 9; ++i) *f[i] = parse_double(c[i]);
        rep.rows.push_back(r);
    }
    for (const auto& c : read_csv((d / "convergence_final.csv").string())) {
        need(c, 4, "convergence_final.csv");
        rep.final_rows.push_back({parse_double(c[0]), parse_double(c[1]), parse_double(c[2]), parse_double(c[3])});
    }
    for (const auto& c : read_csv((d / "rates.csv").string())) {
        need(c, 6, "rates.csv");
        rep.rates.push_back({parse_double(c[0]), parse_double(c[1]), parse_double(c[2]), parse_double(c[3]),
                             parse_double(c[4]), c[5] == "yes"});
    }
    for (const auto& c : read_csv((d / "fluxjump.csv").string())) {
        need(c, 11, "fluxjump.csv");
        rep.flux.push_back({parse_double(c[0]), parse_int(c[1]), parse_int(c[2]), parse_double(c[3]),
                            parse_double(c[4]), parse_double(c[5]), parse_double(c[6]), parse_double(c[7]),
                            parse_double(c[8]), parse_double(c[9]), parse_double(c[10])});
    }
    for (const auto& c : read_csv((d / "audit.csv").string())) {
        need(c, 14, "audit.csv");
        AuditCsvRow a;
        AssumptionRow& r = a.row;
        double* f[] = {&r.eps, &r.displacement, &r.velocity, &r.gradient, &r.J_min, &r.J_max, &r.dtJ_sup,
                       &r.gradJ_scaled, &r.shift1, &r.shift2, &a.identity_band_defect, &a.derivative_mismatch,
                       &a.piola_defect};
        for (size_t i = 0; i < 13; ++i) *f[i] = parse_double(c[i]);
        a.flags = c[13];
        r.flags = split(a.flags, ';');
        rep.audit.push_back(a);
    }
    for (const auto& c : read_csv((d / "trace.csv").string())) {
        need(c, 3, "trace.csv");
        rep.trace.push_back({parse_double(c[0]), parse_double(c[1]), parse_double(c[2])});
    }
    return rep;
}

void write_mms_report(const MmsReport& rep, const std::string& dir) {
    make_dir(dir);
    CsvWriter w((std::filesystem::path(dir) / "mms.csv").string(), "kind,param,error,order");
    for (const auto& r : rep.rows) w.row(r.kind, r.param, r.error, r.order);
    w.close();
}

void write_trajectory(const std::vector<MicroState>& states, const std::string& path) {
    CsvWriter w(path, "t,dof_id,species,value");
    for (const MicroState& s : states)
        for (size_t j = 0; j < s.u.size(); ++j)
            for (Eigen::Index i = 0; i < s.u[j].size(); ++i)
                w.row(s.t, static_cast<int>(i), static_cast<int>(j), s.u[j][i]);
    w.close();
}

void write_diagnostics(const std::vector<MicroDiagnostics>& diag, const std::string& path) {
    CsvWriter w(path, "t,species,mass,norm_L,norm_H");
    for (const auto& d : diag) w.row(d.t, d.species, d.mass, d.norm_L, d.norm_H);
    w.close();
}

void write_unfolded(const UnfoldedField& field, const std::string& path) {
    CsvWriter w(path, "k,dof,value");
    for (int k = 0; k < field.num_cells; ++k)
        for (int d = 0; d < field.cell_dofs; ++d) w.row(k, d, field.at(k, d));
    w.close();
}

void write_evolved_cells(const Mesh& cell, const std::vector<EvolvedCell>& cells, double t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const EvolvedCell& c : cells) {
        out << "node " << c.node << " t " << format_double(t) << " area " << format_double(c.area) << "\n";
        for (size_t i = 0; i < c.vertices.size(); ++i)
            out << "v " << format_double(c.vertices[i].x()) << " " << format_double(c.vertices[i].y()) << " "
                << format_double(c.values[i]) << "\n";
        for (const auto& tri : cell.triangles) out << "t " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace thinlayer
