// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "thinlayer/config.hpp"
#include "thinlayer/errors.hpp"
#include "thinlayer/harness.hpp"

using namespace thinlayer;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& add(const std::string& name, T value) {
        if (!text_.empty()) text_ += ", ";
        std::ostringstream os;
        os.precision(3);
        os << name << " " << value;
        text_ += os.str();
        return *this;
    }
    const std::string& str() const { return text_; }

private:
    std::string text_;
};

double spread(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo - 1.0;
}

std::vector<double> all_eps() { return {0.5, 0.25, 0.125, 0.0625, 0.03125}; }

ExperimentConfig defaults(const std::vector<std::string>& overrides = {}) { return parse_config("", overrides); }

ProblemData scalar_problem(const std::string& init) {
    ProblemData d;
    d.species.push_back(simple_species(1.0, 1.0, 1.0));
    d.initial.push_back(make_initial_data(init));
    d.sources.push_back(std::nullopt);
    return d;
}

Outcome unfolding() {
    const ReferenceGeometry geom = make_geometry(defaults());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double norm_dev = 0.0, adj_dev = 0.0, grad_dev = 0.0, bound = 0.0;
    for (double eps : all_eps()) {
        const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), 4);
        const Unfolder unf(mic, mic.cell);
        for (int trial = 0; trial < 100; ++trial) {
            Vector v(mic.mesh.num_dofs());
            for (int i = 0; i < v.size(); ++i) v[i] = U(rng);
            const UnfoldedField tv = unf.unfold(v);
            UnfoldedField phi = tv;
            for (double& x : phi.values) x = U(rng);
            const Vector uphi = unf.average(phi);
            const double nv = unf.layer_norm(v), ntv = unf.unfolded_norm(tv), nphi = unf.unfolded_norm(phi);
            norm_dev = std::max(norm_dev, std::abs(ntv * std::sqrt(eps) / nv - 1.0));
            adj_dev = std::max(adj_dev, std::abs(unf.layer_inner(uphi, v) - eps * unf.unfolded_inner(phi, tv)) /
                                            (eps * nphi * ntv));
            grad_dev = std::max(grad_dev, unf.gradient_commutation_defect(v));
            bound = std::max(bound, unf.layer_norm(uphi) / (std::sqrt(eps) * nphi));
        }
    }
    Detail d;
    d.add("norm", norm_dev).add("adjoint", adj_dev).add("gradient", grad_dev).add("|U|/sqrt(eps)", bound);
    return {norm_dev <= 1e-10 && adj_dev <= 1e-12 && grad_dev <= 1e-13 && bound <= 1.0 + 1e-10, d.str()};
}

Outcome transform_audit() {
    const ExperimentConfig cfg = defaults();
    const ReferenceGeometry geom = make_geometry(cfg);
    const std::vector<double> eps{0.25, 0.125, 0.0625};
    const TransformSpec id = static_transform(cfg.T);
    const AssumptionReport ra = check_assumptions(id, geom, eps, cfg.audit_density);
    bool id_ok = ra.identity_band_defect == 0.0 && ra.derivative_mismatch <= 1e-6 && ra.piola_defect == 0.0 && !ra.flagged();
    for (const AssumptionRow& r : ra.rows)
        id_ok = id_ok && r.displacement == 0.0 && r.velocity == 0.0 && r.gradient == 1.0 && r.J_min == 1.0 &&
                r.J_max == 1.0 && r.dtJ_sup == 0.0 && r.gradJ_scaled == 0.0 && r.shift1 == 0.0 && r.shift2 == 0.0;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 z(0.5 + 0.25 * U(rng), U(rng));
        const JacobianData jd = jacobian_at(id, 0.125, 0.5 * cfg.T * (1.0 + U(rng)), i % 8, z);
        id_ok = id_ok && jd.F == Mat2::Identity() && jd.J == 1.0;
    }

    const AssumptionReport rp = check_assumptions(make_transform(cfg), geom, eps, cfg.audit_density);
    std::vector<double> disp, vel;
    for (const AssumptionRow& r : rp.rows) {
        disp.push_back(r.displacement);
        vel.push_back(r.velocity);
    }
    const double sd = spread(disp), sv = spread(vel);
    Detail d;
    d.add("identity exact", id_ok ? "yes" : "no").add("disp spread", sd).add("vel spread", sv);
    d.add("FD mismatch", rp.derivative_mismatch).add("Piola", rp.piola_defect);
    return {id_ok && sd < 0.05 && sv < 0.05 && rp.derivative_mismatch <= 1e-6 && rp.piola_defect <= 1e-4, d.str()};
}

Outcome conservation() {
    const ExperimentConfig cfg = defaults();
    const ReferenceGeometry geom = make_geometry(cfg);
    const ProblemData data = make_problem(cfg);
    double micro_drift = 0.0, macro_drift = 0.0;
    for (const TransformSpec& spec : {static_transform(cfg.T), make_transform(cfg)}) {
        for (double eps : {0.25, 0.125, 0.0625}) {
            const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
            MicroSolver solver(mic, geom, data, spec);
            const double m0 = solver.total_mass(solver.init(), 0);
            solver.solve(cfg.dt, cfg.T, cfg.T, nullptr, [&](const MicroState& s) {
                micro_drift = std::max(micro_drift, std::abs(solver.total_mass(s, 0) - m0) / std::abs(m0));
            });
        }
        const MacroMesh mm = mesh_macro(geom, cfg.macro_nx, cfg.macro_ny, cfg.resolution);
        const MacroSolver solver(mm, geom, data, limit_transform(spec, geom));
        const double m0 = solver.total_mass(solver.init(), 0);
        solver.solve(cfg.dt, cfg.T, cfg.T, [&](const MacroState& s) {
            macro_drift = std::max(macro_drift, std::abs(solver.total_mass(s, 0) - m0) / std::abs(m0));
        });
    }
    Detail d;
    d.add("micro drift", micro_drift).add("macro drift", macro_drift);
    return {micro_drift <= 1e-8 && macro_drift <= 1e-8, d.str()};
}

Outcome stationarity_symmetry() {
    const ExperimentConfig cfg = defaults();
    const ReferenceGeometry geom = make_geometry(cfg);
    const TransformSpec still = static_transform(cfg.T);
    const ProblemData ones = scalar_problem("constant(1)");
    const int steps = 10;
    double per_step = 0.0;
    for (double eps : {0.25, 0.125, 0.0625}) {
        const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
        MicroSolver solver(mic, geom, ones, still);
        MicroState s = solver.init();
        for (int n = 1; n <= steps; ++n) {
            s = solver.step(s, cfg.dt);
            per_step = std::max(per_step, (s.u[0].array() - 1.0).abs().maxCoeff() / n);
        }
    }
    const MacroMesh mm = mesh_macro(geom, cfg.macro_nx, cfg.macro_ny, cfg.resolution);
    {
        const MacroSolver solver(mm, geom, ones, limit_transform(still, geom));
        MacroState s = solver.init();
        for (int n = 1; n <= steps; ++n) {
            s = solver.step(s, cfg.dt);
            double dev = std::max((s.plus[0].array() - 1.0).abs().maxCoeff(), (s.minus[0].array() - 1.0).abs().maxCoeff());
            for (const Vector& c : s.cells[0]) dev = std::max(dev, (c.array() - 1.0).abs().maxCoeff());
            per_step = std::max(per_step, dev / n);
        }
    }
    double mirror = 0.0, jump = 0.0;
    const ProblemData bump = scalar_problem("gaussian_bump(0.4, 0.15)");
    for (const TransformSpec& spec : {still, make_transform(cfg)}) {
        const MacroSolver solver(mm, geom, bump, limit_transform(spec, geom));
        for (const MacroState& s : solver.solve(cfg.dt, cfg.T, cfg.output_interval)) {
            mirror = std::max(mirror, (s.plus[0] - s.minus[0]).cwiseAbs().maxCoeff());
            for (const FluxResidual& r : solver.flux_jump_residual(s, 0)) jump = std::max(jump, r.r_jump);
        }
    }
    Detail d;
    d.add("constant drift/step", per_step).add("mirror", mirror).add("jump residual", jump);
    return {per_step <= 1e-12 && mirror <= 1e-10 && jump <= 1e-8, d.str()};
}

Outcome verification_orders() {
    const MmsReport mms = run_mms_study(defaults({"transform.kind=\"static\"", "problem.source=\"mms_cosine\""}));

    const ExperimentConfig cfg = defaults({"problem.initial=\"constant(1)\"", "problem.f=\"linear_decay(1)\"",
                                           "problem.g=\"linear_decay(1)\"", "transform.kind=\"static\""});
    const ReferenceGeometry geom = make_geometry(cfg);
    const ProblemData data = make_problem(cfg);
    const double exact = std::exp(-cfg.T);
    double decay = 0.0;
    for (double eps : {0.25, 0.125}) {
        const MicroMesh mic = mesh_micro(geom, tile_layer(geom, eps), cfg.resolution);
        MicroSolver solver(mic, geom, data, make_transform(cfg));
        const MicroState s = solver.solve(cfg.dt, cfg.T, cfg.T).back();
        decay = std::max(decay, (s.u[0].array() - exact).abs().maxCoeff());
    }
    const MacroMesh mm = mesh_macro(geom, cfg.macro_nx, cfg.macro_ny, cfg.resolution);
    const MacroSolver macro(mm, geom, data, limit_transform(make_transform(cfg), geom));
    const MacroState s = macro.solve(cfg.dt, cfg.T, cfg.T).back();
    decay = std::max(decay, (s.plus[0].array() - exact).abs().maxCoeff());
    decay = std::max(decay, (s.minus[0].array() - exact).abs().maxCoeff());
    for (const Vector& c : s.cells[0]) decay = std::max(decay, (c.array() - exact).abs().maxCoeff());

    Detail d;
    d.add("spatial order", mms.spatial_order).add("temporal order", mms.temporal_order);
    d.add("decay error", decay).add("2dt", 2.0 * cfg.dt);
    return {std::abs(mms.spatial_order - 2.0) <= 0.3 && std::abs(mms.temporal_order - 1.0) <= 0.2 && decay <= 2.0 * cfg.dt,
            d.str()};
}

ExperimentReport g_sweep;

Outcome homogenization() {
    g_sweep = run_convergence_study(defaults({"numerics.eps=[0.25, 0.125, 0.0625]", "output.timings=false"}));
    const auto& rows = g_sweep.rows;
    double worst = 0.0;
    for (size_t i = 1; i < rows.size(); ++i) {
        worst = std::max(worst, rows[i].err_bulk_plus / rows[i - 1].err_bulk_plus);
        worst = std::max(worst, rows[i].err_bulk_minus / rows[i - 1].err_bulk_minus);
        worst = std::max(worst, rows[i].err_layer_2s / rows[i - 1].err_layer_2s);
    }
    Detail d;
    for (const auto& r : rows) d.add("eps", r.eps).add("bulk+", r.err_bulk_plus).add("bulk-", r.err_bulk_minus).add("layer", r.err_layer_2s);
    d.add("worst ratio", worst);
    return {rows.size() == 3 && worst <= 0.8, d.str()};
}

Outcome transmission() {
    // deep reservoirs and a narrow channel keep the trace drop quasi-stationary
    const double w = 0.25, H = 2.0, T = 2.0, dt = 0.01;
    const ReferenceGeometry geom = build_reference_geometry(straight_channel(w), H);
    const ProblemData data = scalar_problem("two_reservoir(1, 0)");
    const LimitTransform lt = limit_transform(static_transform(T), geom);
    double oracle_dev = 0.0;
    std::vector<double> residual;
    for (int level = 0; level < 3; ++level) {
        const int r = 4 << level, ny = 32 << level;
        const MacroMesh mm = mesh_macro(geom, 8, ny, r);
        const MacroSolver solver(mm, geom, data, lt);
        const MacroState s = solver.solve(dt, T, T).back();
        double worst = 0.0;
        for (const FluxResidual& f : solver.flux_jump_residual(s, 0)) {
            const double drop = s.plus[0][mm.interface.plus_vertex[f.node]] - s.minus[0][mm.interface.minus_vertex[f.node]];
            const double oracle = w * 1.0 * drop / 2.0;
            oracle_dev = std::max({oracle_dev, std::abs(f.cell_plus - oracle) / oracle, std::abs(-f.cell_minus - oracle) / oracle});
            worst = std::max(worst, f.r_jump);
        }
        residual.push_back(worst);
    }
    const double q1 = residual[1] / residual[0], q2 = residual[2] / residual[1];
    Detail d;
    d.add("flux vs oracle", oracle_dev).add("residual r=4", residual[0]).add("ratio 4->8", q1).add("ratio 8->16", q2);
    return {oracle_dev <= 0.05 && q1 <= 0.6 && q2 <= 0.6, d.str()};
}

Outcome uniformity() {
    std::vector<double> L, Hn;
    for (const auto& r : g_sweep.rows) {
        L.push_back(r.norm_L_sup);
        Hn.push_back(r.norm_H_l2);
    }
    double trace = 0.0;
    std::vector<double> thetas;
    for (const auto& t : g_sweep.trace)
        if (std::find(thetas.begin(), thetas.end(), t.theta) == thetas.end()) thetas.push_back(t.theta);
    for (double th : thetas) {
        std::vector<double> c;
        for (const auto& t : g_sweep.trace)
            if (t.theta == th) c.push_back(t.C);
        trace = std::max(trace, spread(c));
    }
    const bool have = L.size() == 3 && !thetas.empty();
    Detail d;
    d.add("sup|u|_L spread", have ? spread(L) : NAN).add("|u|_H spread", have ? spread(Hn) : NAN).add("C(theta) spread", trace);
    return {have && spread(L) < 0.25 && spread(Hn) < 0.25 && trace < 0.15, d.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const ExperimentConfig cfg = defaults({"numerics.T=0.2", "numerics.macro_nx=32", "numerics.macro_ny=16",
                                           "output.timings=false"});
    const fs::path root = fs::temp_directory_path() / "thinlayer_acceptance";
    fs::remove_all(root);
    const fs::path a = root / "a", b = root / "b", c = root / "c";
    write_report(run_convergence_study(cfg), a.string());
    write_report(run_convergence_study(cfg), b.string());
    write_report(read_report(a.string()), c.string());
    int files = 0;
    bool same = true, lossless = true;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        const std::string name = entry.path().filename().string();
        same = same && slurp(a / name) == slurp(b / name);
        lossless = lossless && slurp(a / name) == slurp(c / name);
    }
    const ExperimentReport back = read_report(a.string());
    const ExperimentReport fresh = run_convergence_study(cfg);
    for (size_t i = 0; i < fresh.rows.size() && lossless; ++i)
        lossless = back.rows[i].err_bulk_plus == fresh.rows[i].err_bulk_plus &&
                   back.rows[i].err_layer_2s == fresh.rows[i].err_layer_2s &&
                   back.rows[i].norm_H_l2 == fresh.rows[i].norm_H_l2;
    fs::remove_all(root);
    Detail d;
    d.add("csv files", files).add("bitwise identical", same ? "yes" : "no").add("round trip exact", lossless ? "yes" : "no");
    return {files >= 4 && same && lossless, d.str()};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit;  // seconds, 0 when unbounded
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "unfolding identities", 30, unfolding},
        {2, "transform audit", 30, transform_audit},
        {3, "mass conservation", 120, conservation},
        {4, "stationarity and symmetry", 0, stationarity_symmetry},
        {5, "verification orders", 180, verification_orders},
        {6, "homogenization convergence", 480, homogenization},
        {7, "effective transmission", 120, transmission},
        {8, "a priori uniformity", 0, uniformity},
        {9, "determinism and persistence", 0, determinism},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit <= 0.0 || secs <= c.limit;
        if (!in_time) o.detail += ", over time limit";
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("criterion %d %-28s %s  (%s; %.1f s", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        if (c.limit > 0.0) std::printf(" / %.0f s", c.limit);
        std::printf(")\n");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
