#include "thinlayer/micro_solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "thinlayer/assembly.hpp"
#include "thinlayer/errors.hpp"
#include "thinlayer/parallel.hpp"

namespace thinlayer {

struct MicroSolver::Level {
    double t = 0.0;
    std::vector<JacobianData> quad;  // [channel slot * 3 + q]
    std::vector<JacobianData> wall;  // [facet * 2 + g], wall facets only
    SparseMatrix mass;
    std::vector<double> jw;
};

namespace {

std::vector<double> values_at(const Mesh& mesh, const std::vector<Vector>& u, const QuadPoint& q) {
    std::vector<double> v(u.size());
    for (size_t j = 0; j < u.size(); ++j) v[j] = interpolate(mesh, u[j], q);
    return v;
}

std::vector<double> values_at(const Mesh& mesh, const std::vector<Vector>& u, const FacetPoint& p) {
    std::vector<double> v(u.size());
    for (size_t j = 0; j < u.size(); ++j) v[j] = interpolate(mesh, u[j], p);
    return v;
}

}  // namespace

MicroSolver::MicroSolver(const MicroMesh& mesh, const ReferenceGeometry& geom, const ProblemData& data,
                         const TransformSpec& spec, SolveOptions opt)
    : mesh_(mesh), geom_(geom), data_(data), spec_(spec), opt_(opt) {
    const Mesh& m = mesh_.mesh;
    const double eps = mesh_.eps;
    if (data_.num_species() < 1 || static_cast<int>(data_.initial.size()) != data_.num_species())
        throw DataMismatch("species and initial data counts differ");
    if (static_cast<int>(mesh_.cell_dofs.size()) != cells_per_unit(eps))
        throw DataMismatch("mesh cell count does not match eps");
    mass_bulk_ = assemble_weighted_mass(m, nullptr, RegionScale::bulk_only(1.0));
    for (const SpeciesData& s : data_.species) {
        op_bulk_.push_back(assemble_operator(
            m, [&s](const QuadPoint& q) { return q.region == Region::BulkPlus ? s.D_plus : s.D_minus; },
            [&s](const QuadPoint& q) { return q.region == Region::BulkPlus ? s.q_plus : s.q_minus; },
            RegionScale::bulk_only(1.0), RegionScale::bulk_only(1.0)));
    }
    norm_mass_ = assemble_weighted_mass(m, nullptr, {1.0, 1.0 / eps, 1.0});
    norm_grad_ = assemble_operator(m, [](const QuadPoint&) { return Mat2::Identity().eval(); }, nullptr,
                                   {1.0, eps, 1.0}, RegionScale::uniform(0.0));
    slot_.assign(m.num_elements(), -1);
    int n = 0;
    for (int e = 0; e < m.num_elements(); ++e)
        if (m.regions[e] == Region::Channel) slot_[e] = n++;
    cell_index_.assign(m.num_dofs(), -1);
    for (size_t k = 0; k < mesh_.cell_dofs.size(); ++k)
        for (int v : mesh_.cell_dofs[k]) cell_index_[v] = static_cast<int>(k);
}

MicroSolver::~MicroSolver() = default;

MicroSolver::Level MicroSolver::make_level(double t) const {
    const Mesh& m = mesh_.mesh;
    const double eps = mesh_.eps;
    Level lv;
    lv.t = t;
    auto jac = [&](int e, const Vec2& x) {
        const int k = m.cell_of[e];
        const JacobianData jd = jacobian_at(spec_, eps, t, k, Vec2(x.x() / eps - k, x.y() / eps));
        if (jd.J < spec_.det_floor)
            throw SingularJacobian("J=" + std::to_string(jd.J) + " at t=" + std::to_string(t));
        return jd;
    };
    for (int e = 0; e < m.num_elements(); ++e) {
        if (m.regions[e] != Region::Channel) continue;
        const auto& tri = m.triangles[e];
        for (int q = 0; q < 3; ++q) {
            const auto& l = triangle_rule()[q];
            const Vec2 x = l[0] * m.vertices[tri[0]] + l[1] * m.vertices[tri[1]] + l[2] * m.vertices[tri[2]];
            lv.quad.push_back(jac(e, x));
            lv.jw.push_back(lv.quad.back().J);
        }
    }
    lv.wall.resize(m.facets.size() * 2);
    for (size_t f = 0; f < m.facets.size(); ++f) {
        const Facet& fc = m.facets[f];
        if (fc.tag != BoundaryTag::Wall) continue;
        for (int g = 0; g < 2; ++g) {
            const double s = edge_rule()[g];
            lv.wall[f * 2 + g] = jac(fc.element, (1.0 - s) * m.vertices[fc.a] + s * m.vertices[fc.b]);
        }
    }
    return lv;
}

const MicroSolver::Level& MicroSolver::level(double t, double keep) {
    for (auto& lv : levels_)
        if (lv->t == t) return *lv;
    auto lv = std::make_unique<Level>(make_level(t));
    const Mesh& m = mesh_.mesh;
    const std::vector<int>& slot = slot_;
    const Level* raw = lv.get();
    const SparseMatrix chan = assemble_weighted_mass(
        m, [raw, &slot](const QuadPoint& q) { return raw->quad[slot[q.element] * 3 + q.index].J; },
        RegionScale::layer_only(1.0 / mesh_.eps));
    lv->mass = mass_bulk_ + chan;
    if (levels_.size() >= 2) {
        auto victim = std::find_if(levels_.begin(), levels_.end(), [keep](const auto& l) { return l->t != keep; });
        levels_.erase(victim);
    }
    levels_.push_back(std::move(lv));
    return *levels_.back();
}

SparseMatrix MicroSolver::channel_operator(int species, const Level& lv) const {
    const Mesh& m = mesh_.mesh;
    const double eps = mesh_.eps;
    const SpeciesData& s = data_.species[species];
    const std::vector<int>& slot = slot_;
    auto zk = [&](const QuadPoint& q) {
        const int k = m.cell_of[q.element];
        return std::pair<double, Vec2>(eps * k, Vec2(q.x.x() / eps - k, q.x.y() / eps));
    };
    return assemble_operator(
        m,
        [&](const QuadPoint& q) {
            const JacobianData& jd = lv.quad[slot[q.element] * 3 + q.index];
            const auto [xp, z] = zk(q);
            const TransformedCoefficients tc = transformed_coefficients(s.D_layer(lv.t, xp, z), Vec2::Zero(), jd);
            return Mat2(jd.J * tc.D);
        },
        [&](const QuadPoint& q) {
            const JacobianData& jd = lv.quad[slot[q.element] * 3 + q.index];
            const auto [xp, z] = zk(q);
            return Vec2(jd.J * (jd.F_inv * s.q_layer(lv.t, xp, z)) - jd.J * jd.b_tilde / eps);
        },
        RegionScale::layer_only(eps), RegionScale::layer_only(1.0));
}

Vector MicroSolver::loads(const MicroState& state, int species, const Level& lv) const {
    const Mesh& m = mesh_.mesh;
    const double eps = mesh_.eps;
    const SpeciesData& s = data_.species[species];
    const std::vector<int>& slot = slot_;
    Vector b = Vector::Zero(m.num_dofs());
    if (!s.f.is_zero)
        b += assemble_load(m, [&](const QuadPoint& q) { return s.f(values_at(m, state.u, q)); },
                           RegionScale::bulk_only(1.0));
    if (!s.g.is_zero)
        b += assemble_load(
            m,
            [&](const QuadPoint& q) { return lv.quad[slot[q.element] * 3 + q.index].J * s.g(values_at(m, state.u, q)); },
            RegionScale::layer_only(1.0 / eps));
    if (!s.h.is_zero)
        b -= assemble_boundary_load(m, BoundaryTag::Wall, [&](const FacetPoint& p) {
            const JacobianData& jd = lv.wall[p.facet * 2 + p.index];
            return jd.J * (jd.F_inv.transpose() * p.normal).norm() * s.h(values_at(m, state.u, p));
        });
    if (!data_.sources.empty() && data_.sources[species]) {
        const ManufacturedSource& src = *data_.sources[species];
        b += assemble_load(m, [&](const QuadPoint& q) { return src.source(lv.t, q.region, q.x); },
                           RegionScale::bulk_only(1.0));
        b += assemble_load(
            m,
            [&](const QuadPoint& q) {
                return lv.quad[slot[q.element] * 3 + q.index].J * src.source(lv.t, q.region, q.x);
            },
            RegionScale::layer_only(1.0 / eps));
    }
    return b;
}

MicroState MicroSolver::init() const {
    const Mesh& m = mesh_.mesh;
    const double eps = mesh_.eps;
    MicroState st;
    st.t = 0.0;
    for (const InitialData& u0 : data_.initial) {
        Vector u(m.num_dofs());
        for (int v = 0; v < m.num_dofs(); ++v) {
            const Vec2& x = m.vertices[v];
            if (x.y() >= eps - 1e-14)
                u[v] = u0.bulk_plus(Vec2(x.x(), x.y() - eps));
            else if (x.y() <= -eps + 1e-14)
                u[v] = u0.bulk_minus(Vec2(x.x(), x.y() + eps));
            else {
                const int k = cell_index_[v];
                if (k < 0) throw DataMismatch("layer vertex outside every cell");
                u[v] = u0.layer(x.x(), Vec2(x.x() / eps - k, x.y() / eps));
            }
            if (!std::isfinite(u[v])) throw DataMismatch("initial data not finite");
        }
        st.u.push_back(std::move(u));
    }
    const Level lv = make_level(0.0);
    st.jw = lv.jw;
    return st;
}

MicroState MicroSolver::step(const MicroState& state, double dt) { return step_to(state, state.t + dt); }

MicroState MicroSolver::step_to(const MicroState& state, double t1) {
    const double dt = t1 - state.t;
    if (!(dt > 0.0)) throw DataMismatch("time step must be positive");
    if (t1 > spec_.horizon * (1.0 + 1e-12) + 1e-14) throw TimeOutOfRange("step beyond the transform horizon");
    const Level& L0 = level(state.t);
    const Level& L1 = level(t1, state.t);
    const int m = data_.num_species();
    MicroState next;
    next.t = t1;
    next.u.resize(m);
    next.jw = L1.jw;
    std::vector<int> iters(m, 0);
    auto solve_species = [&](int j) {
        SparseSystem sys;
        sys.A = SparseMatrix(L1.mass / dt) + op_bulk_[j] + channel_operator(j, L1);
        sys.b = L0.mass * state.u[j] / dt + loads(state, j, L1);
        SolveStats stats;
        next.u[j] = solve_linear(sys, opt_, &state.u[j], &stats);
        iters[j] = stats.iterations;
    };
    if (m > 1 && worker_count() > 1) {
        std::vector<std::future<void>> jobs;
        for (int j = 0; j < m; ++j) jobs.push_back(std::async(std::launch::async, solve_species, j));
        for (auto& f : jobs) f.get();
    } else {
        for (int j = 0; j < m; ++j) solve_species(j);
    }
    last_iterations_ = *std::max_element(iters.begin(), iters.end());
    return next;
}

std::vector<MicroState> MicroSolver::solve(double dt, double T, double output_interval,
                                           std::vector<MicroDiagnostics>* diagnostics,
                                           const std::function<void(const MicroState&)>& on_step) {
    if (T < 0.0 || !(dt > 0.0)) throw DataMismatch("need T >= 0 and dt > 0");
    const long nsteps = std::lround(T / dt);
    if (std::abs(nsteps * dt - T) > 1e-9 * std::max(1.0, T)) throw DataMismatch("dt does not divide T");
    if (output_interval <= 0.0) output_interval = T > 0.0 ? T : dt;
    const long every = std::max(1L, std::lround(output_interval / dt));
    if (std::abs(every * dt - output_interval) > 1e-9 * std::max(1.0, output_interval))
        throw DataMismatch("dt does not divide the output interval");
    MicroState st = init();
    auto record = [&](MicroState& s) {
        if (!diagnostics) return;
        for (int j = 0; j < data_.num_species(); ++j) {
            const auto [nl, nh] = scaled_norms(s, j);
            diagnostics->push_back({s.t, j, total_mass(s, j), nl, nh});
        }
    };
    std::vector<MicroState> out{st};
    record(st);
    if (on_step) on_step(st);
    for (long n = 1; n <= nsteps; ++n) {
        st = step_to(st, n * dt);
        record(st);
        if (on_step) on_step(st);
        if (n % every == 0 || n == nsteps) out.push_back(st);
    }
    return out;
}

std::pair<double, double> MicroSolver::scaled_norms(const MicroState& state, int species) const {
    const Vector& u = state.u.at(species);
    const double l2 = u.dot(norm_mass_ * u);
    const double g2 = u.dot(norm_grad_ * u);
    return {std::sqrt(std::max(0.0, l2)), std::sqrt(std::max(0.0, l2 + g2))};
}

double MicroSolver::total_mass(const MicroState& state, int species) {
    const Level& lv = level(state.t);
    return Vector::Ones(state.u.at(species).size()).dot(lv.mass * state.u[species]);
}

std::vector<double> verify_trace_inequality(const MicroMesh& mesh, const std::vector<double>& thetas,
                                            const std::vector<Vector>& fields) {
    const Mesh& m = mesh.mesh;
    const double eps = mesh.eps;
    const SparseMatrix B = assemble_boundary_mass(m, BoundaryTag::Wall, nullptr);
    const SparseMatrix K = assemble_operator(m, [](const QuadPoint&) { return Mat2::Identity().eval(); }, nullptr,
                                             RegionScale::layer_only(1.0), RegionScale::uniform(0.0));
    const SparseMatrix M = assemble_weighted_mass(m, nullptr, RegionScale::layer_only(1.0));
    std::vector<double> C(thetas.size(), 0.0);
    for (const Vector& v : fields) {
        const double num = v.dot(B * v);
        const double grad = v.dot(K * v);
        const double mass = v.dot(M * v);
        if (mass <= 0.0 && grad <= 0.0) continue;
        for (size_t i = 0; i < thetas.size(); ++i) {
            const double th = thetas[i];
            C[i] = std::max(C[i], num / (th * eps * grad + mass / (th * eps)));
        }
    }
    return C;
}

std::vector<Vector> trace_sample_fields(const MicroMesh& mesh, std::uint64_t seed, int random_count) {
    const Mesh& m = mesh.mesh;
    const double eps = mesh.eps;
    const int nd = static_cast<int>(mesh.cell.vertices.size());
    std::vector<Vector> out;
    auto per_cell = [&](const std::function<double(int k, int d)>& f) {
        Vector v = Vector::Zero(m.num_dofs());
        for (size_t k = 0; k < mesh.cell_dofs.size(); ++k)
            for (int d = 0; d < nd; ++d) v[mesh.cell_dofs[k][d]] = f(static_cast<int>(k), d);
        return v;
    };
    out.push_back(per_cell([](int, int) { return 1.0; }));
    out.push_back(per_cell([&](int, int d) { return mesh.cell.vertices[d].x() - 0.5; }));
    out.push_back(per_cell([&](int, int d) { return mesh.cell.vertices[d].y(); }));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int r = 0; r < random_count; ++r) {
        std::vector<double> vals(nd);
        for (double& x : vals) x = U(rng);
        out.push_back(per_cell([&](int, int d) { return vals[d]; }));
    }
    for (int r = 0; r < random_count; ++r) {
        const double a1 = U(rng), a2 = U(rng), b1 = U(rng), b2 = U(rng), c = U(rng);
        out.push_back(per_cell([&](int k, int d) {
            const Vec2& z = mesh.cell.vertices[d];
            const double x1 = eps * (k + z.x());
            return (1.0 + 0.5 * a1 * std::cos(2.0 * M_PI * x1)) *
                   (c + a2 * std::cos(M_PI * z.y()) + b1 * std::sin(M_PI * z.x()) + b2 * z.x() * z.y());
        }));
    }
    return out;
}

}  // namespace thinlayer
