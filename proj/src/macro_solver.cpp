#include "thinlayer/macro_solver.hpp"

#include <cmath>

#include "thinlayer/assembly.hpp"
#include "thinlayer/errors.hpp"

namespace thinlayer {

namespace {

using Triplet = Eigen::Triplet<double>;

void add_block(std::vector<Triplet>& out, const SparseMatrix& A, double scale, int offset) {
    for (int r = 0; r < A.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(A, r); it; ++it)
            out.emplace_back(offset + r, offset + static_cast<int>(it.col()), scale * it.value());
}

}  // namespace

MacroMesh mesh_macro(const ReferenceGeometry& geom, int nx, int ny, int cell_resolution) {
    MacroMesh mm;
    mm.nx = nx;
    mm.ny = ny;
    mm.bulk_plus = mesh_rectangle(0.0, 1.0, 0.0, geom.half_height, nx, ny, Region::BulkPlus, BoundaryTag::InterfacePlus);
    mm.bulk_minus = mirror_mesh(mm.bulk_plus, Region::BulkMinus);
    mm.cell = mesh_cell(geom, cell_resolution);
    auto& q = mm.interface;
    const double h = 1.0 / nx;
    for (int i = 0; i <= nx; ++i) {
        q.nodes.push_back(mm.bulk_plus.vertices[i].x());
        q.weights.push_back(i == 0 || i == nx ? 0.5 * h : h);
        q.plus_vertex.push_back(i);
        q.minus_vertex.push_back(i);
    }
    return mm;
}

MacroSolver::MacroSolver(const MacroMesh& mesh, const ReferenceGeometry& geom, const ProblemData& data,
                         const LimitTransform& limit, SolveOptions opt)
    : mesh_(mesh), geom_(geom), data_(data), limit_(limit), opt_(opt) {
    if (data_.num_species() < 1 || static_cast<int>(data_.initial.size()) != data_.num_species())
        throw DataMismatch("species and initial data counts differ");
    if (mesh_.bulk_plus.num_dofs() != mesh_.bulk_minus.num_dofs())
        throw MeshMismatch("bulk meshes are not mirror images");
    n_plus_ = mesh_.bulk_plus.num_dofs();
    n_minus_ = mesh_.bulk_minus.num_dofs();
    const Mesh& c = mesh_.cell;
    cell_side_.assign(c.num_dofs(), 0);
    cell_interior_.assign(c.num_dofs(), -1);
    for (int d = 0; d < c.num_dofs(); ++d) {
        if (c.vertices[d].y() == 1.0)
            cell_side_[d] = 1;
        else if (c.vertices[d].y() == -1.0)
            cell_side_[d] = -1;
        else
            cell_interior_[d] = n_cell_interior_++;
    }
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());
    n_total_ = n_plus_ + n_minus_ + nodes * n_cell_interior_;
    for (int i = 0; i < nodes; ++i) {
        const Vec2 a = mesh_.bulk_plus.vertices[mesh_.interface.plus_vertex[i]];
        const Vec2 b = mesh_.bulk_minus.vertices[mesh_.interface.minus_vertex[i]];
        if (a.y() != 0.0 || b.y() != 0.0 || a.x() != mesh_.interface.nodes[i] || b.x() != a.x())
            throw MeshMismatch("interface node is not a bulk interface vertex");
    }
    bulk_mass_plus_ = assemble_weighted_mass(mesh_.bulk_plus, nullptr, RegionScale::uniform(1.0));
    bulk_mass_minus_ = assemble_weighted_mass(mesh_.bulk_minus, nullptr, RegionScale::uniform(1.0));
    for (const SpeciesData& s : data_.species) {
        bulk_op_plus_.push_back(assemble_operator(
            mesh_.bulk_plus, [&s](const QuadPoint&) { return s.D_plus; },
            [&s](const QuadPoint&) { return s.q_plus; }, RegionScale::uniform(1.0), RegionScale::uniform(1.0)));
        bulk_op_minus_.push_back(assemble_operator(
            mesh_.bulk_minus, [&s](const QuadPoint&) { return s.D_minus; },
            [&s](const QuadPoint&) { return s.q_minus; }, RegionScale::uniform(1.0), RegionScale::uniform(1.0)));
    }
}

int MacroSolver::cell_unknown(int node, int d) const {
    if (cell_side_[d] > 0) return mesh_.interface.plus_vertex[node];
    if (cell_side_[d] < 0) return n_plus_ + mesh_.interface.minus_vertex[node];
    return n_plus_ + n_minus_ + node * n_cell_interior_ + cell_interior_[d];
}

SparseMatrix MacroSolver::cell_mass(int node, double t) const {
    const double xp = mesh_.interface.nodes[node];
    return assemble_weighted_mass(
        mesh_.cell,
        [&](const QuadPoint& q) {
            const double J = limit_.at(t, xp, q.x).J;
            if (J < limit_.spec.det_floor) throw SingularJacobian("J0=" + std::to_string(J));
            return J;
        },
        RegionScale::uniform(1.0));
}

SparseMatrix MacroSolver::cell_operator(int species, int node, double t) const {
    const double xp = mesh_.interface.nodes[node];
    const SpeciesData& s = data_.species[species];
    return assemble_operator(
        mesh_.cell,
        [&](const QuadPoint& q) {
            const JacobianData jd = limit_.at(t, xp, q.x);
            const TransformedCoefficients tc = transformed_coefficients(s.D_layer(t, xp, q.x), Vec2::Zero(), jd);
            return Mat2(jd.J * tc.D);
        },
        [&](const QuadPoint& q) {
            const JacobianData jd = limit_.at(t, xp, q.x);
            return Vec2(jd.J * (jd.F_inv * s.q_layer(t, xp, q.x)) - jd.J * jd.b_tilde);
        },
        RegionScale::uniform(1.0), RegionScale::uniform(1.0));
}

SparseSystem MacroSolver::assemble(int species, const MacroState& prev, double t_new) const {
    const double dt = t_new - prev.t;
    if (!(dt > 0.0)) throw DataMismatch("time step must be positive");
    const SpeciesData& s = data_.species[species];
    const Mesh& c = mesh_.cell;
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());
    std::vector<Triplet> trip;
    add_block(trip, bulk_mass_plus_, 1.0 / dt, 0);
    add_block(trip, bulk_op_plus_[species], 1.0, 0);
    add_block(trip, bulk_mass_minus_, 1.0 / dt, n_plus_);
    add_block(trip, bulk_op_minus_[species], 1.0, n_plus_);

    Vector b = Vector::Zero(n_total_);
    b.head(n_plus_) = bulk_mass_plus_ * prev.plus[species] / dt;
    b.segment(n_plus_, n_minus_) = bulk_mass_minus_ * prev.minus[species] / dt;
    auto bulk_values = [&](const Mesh& m, const std::vector<Vector>& u, const QuadPoint& q) {
        std::vector<double> v(u.size());
        for (size_t j = 0; j < u.size(); ++j) v[j] = interpolate(m, u[j], q);
        return v;
    };
    if (!s.f.is_zero) {
        b.head(n_plus_) += assemble_load(
            mesh_.bulk_plus, [&](const QuadPoint& q) { return s.f(bulk_values(mesh_.bulk_plus, prev.plus, q)); },
            RegionScale::uniform(1.0));
        b.segment(n_plus_, n_minus_) += assemble_load(
            mesh_.bulk_minus, [&](const QuadPoint& q) { return s.f(bulk_values(mesh_.bulk_minus, prev.minus, q)); },
            RegionScale::uniform(1.0));
    }

    for (int i = 0; i < nodes; ++i) {
        const double w = mesh_.interface.weights[i];
        const double xp = mesh_.interface.nodes[i];
        const SparseMatrix Mn = cell_mass(i, t_new);
        const SparseMatrix Mo = cell_mass(i, prev.t);
        const SparseMatrix K = cell_operator(species, i, t_new);
        for (int r = 0; r < c.num_dofs(); ++r) {
            const int gr = cell_unknown(i, r);
            for (SparseMatrix::InnerIterator it(Mn, r); it; ++it)
                trip.emplace_back(gr, cell_unknown(i, static_cast<int>(it.col())), w * it.value() / dt);
            for (SparseMatrix::InnerIterator it(K, r); it; ++it)
                trip.emplace_back(gr, cell_unknown(i, static_cast<int>(it.col())), w * it.value());
        }
        Vector local = Mo * prev.cells[species][i] / dt;
        std::vector<Vector> cu(data_.num_species());
        for (int j = 0; j < data_.num_species(); ++j) cu[j] = prev.cells[j][i];
        if (!s.g.is_zero)
            local += assemble_load(
                c,
                [&](const QuadPoint& q) {
                    return limit_.at(t_new, xp, q.x).J * s.g(bulk_values(c, cu, q));
                },
                RegionScale::uniform(1.0));
        if (!s.h.is_zero)
            local -= assemble_boundary_load(c, BoundaryTag::Wall, [&](const FacetPoint& p) {
                const JacobianData jd = limit_.at(t_new, xp, p.x);
                std::vector<double> v(cu.size());
                for (size_t j = 0; j < cu.size(); ++j) v[j] = interpolate(c, cu[j], p);
                return jd.J * (jd.F_inv.transpose() * p.normal).norm() * s.h(v);
            });
        for (int r = 0; r < c.num_dofs(); ++r) b[cell_unknown(i, r)] += w * local[r];
    }
    SparseSystem sys;
    sys.A = SparseMatrix(n_total_, n_total_);
    sys.A.setFromTriplets(trip.begin(), trip.end());
    sys.b = std::move(b);
    return sys;
}

Vector MacroSolver::gather(const MacroState& state, int species) const {
    Vector x(n_total_);
    x.head(n_plus_) = state.plus[species];
    x.segment(n_plus_, n_minus_) = state.minus[species];
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());
    for (int i = 0; i < nodes; ++i)
        for (int d = 0; d < mesh_.cell.num_dofs(); ++d)
            if (cell_side_[d] == 0) x[cell_unknown(i, d)] = state.cells[species][i][d];
    return x;
}

void MacroSolver::scatter(const Vector& x, MacroState& state, int species) const {
    state.plus[species] = x.head(n_plus_);
    state.minus[species] = x.segment(n_plus_, n_minus_);
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());
    state.cells[species].assign(nodes, Vector(mesh_.cell.num_dofs()));
    for (int i = 0; i < nodes; ++i)
        for (int d = 0; d < mesh_.cell.num_dofs(); ++d) state.cells[species][i][d] = x[cell_unknown(i, d)];
}

MacroState MacroSolver::init() const {
    const int m = data_.num_species();
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());
    MacroState st;
    st.plus.resize(m);
    st.minus.resize(m);
    st.cells.resize(m);
    for (int j = 0; j < m; ++j) {
        const InitialData& u0 = data_.initial[j];
        Vector x(n_total_);
        for (int v = 0; v < n_plus_; ++v) x[v] = u0.bulk_plus(mesh_.bulk_plus.vertices[v]);
        for (int v = 0; v < n_minus_; ++v) x[n_plus_ + v] = u0.bulk_minus(mesh_.bulk_minus.vertices[v]);
        for (int i = 0; i < nodes; ++i)
            for (int d = 0; d < mesh_.cell.num_dofs(); ++d)
                if (cell_side_[d] == 0) x[cell_unknown(i, d)] = u0.layer(mesh_.interface.nodes[i], mesh_.cell.vertices[d]);
        if (!x.allFinite()) throw DataMismatch("initial data not finite");
        scatter(x, st, j);
    }
    return st;
}

MacroState MacroSolver::step(const MacroState& state, double dt) const {
    const double t1 = state.t + dt;
    if (t1 > limit_.spec.horizon * (1.0 + 1e-12) + 1e-14) throw TimeOutOfRange("step beyond the transform horizon");
    MacroState next = state;
    next.t = t1;
    for (int j = 0; j < data_.num_species(); ++j) {
        const SparseSystem sys = assemble(j, state, t1);
        const Vector guess = gather(state, j);
        scatter(solve_linear(sys, opt_, &guess), next, j);
    }
    return next;
}

std::vector<MacroState> MacroSolver::solve(double dt, double T, double output_interval,
                                           const std::function<void(const MacroState&)>& on_step) const {
    if (T < 0.0 || !(dt > 0.0)) throw DataMismatch("need T >= 0 and dt > 0");
    const long nsteps = std::lround(T / dt);
    if (std::abs(nsteps * dt - T) > 1e-9 * std::max(1.0, T)) throw DataMismatch("dt does not divide T");
    if (output_interval <= 0.0) output_interval = T > 0.0 ? T : dt;
    const long every = std::max(1L, std::lround(output_interval / dt));
    MacroState st = init();
    std::vector<MacroState> out{st};
    if (on_step) on_step(st);
    for (long n = 1; n <= nsteps; ++n) {
        MacroState next = step(st, n * dt - st.t);
        next.t = n * dt;
        st = std::move(next);
        if (on_step) on_step(st);
        if (n % every == 0 || n == nsteps) out.push_back(st);
    }
    return out;
}

double MacroSolver::total_mass(const MacroState& state, int species) const {
    double mass = Vector::Ones(n_plus_).dot(bulk_mass_plus_ * state.plus[species]) +
                  Vector::Ones(n_minus_).dot(bulk_mass_minus_ * state.minus[species]);
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());
    for (int i = 0; i < nodes; ++i)
        mass += mesh_.interface.weights[i] *
                Vector::Ones(mesh_.cell.num_dofs()).dot(cell_mass(i, state.t) * state.cells[species][i]);
    return mass;
}

double MacroSolver::coupling_defect(const MacroState& state) const {
    double worst = 0.0;
    for (int j = 0; j < data_.num_species(); ++j)
        for (size_t i = 0; i < mesh_.interface.nodes.size(); ++i)
            for (int d = 0; d < mesh_.cell.num_dofs(); ++d) {
                if (cell_side_[d] == 0) continue;
                const double bulk = cell_side_[d] > 0 ? state.plus[j][mesh_.interface.plus_vertex[i]]
                                                      : state.minus[j][mesh_.interface.minus_vertex[i]];
                worst = std::max(worst, std::abs(state.cells[j][i][d] - bulk));
            }
    return worst;
}

std::vector<FluxResidual> MacroSolver::flux_jump_residual(const MacroState& state, int species) const {
    const SpeciesData& s = data_.species[species];
    const Mesh& c = mesh_.cell;
    const double t = state.t;
    const int nodes = static_cast<int>(mesh_.interface.nodes.size());

    // Element-average gradients on the elements touching each interface vertex.
    auto bulk_flux = [&](const Mesh& m, const Vector& u, int vertex, const Mat2& D, const Vec2& q, const Vec2& n) {
        Vec2 acc = Vec2::Zero();
        int count = 0;
        for (int e = 0; e < m.num_elements(); ++e) {
            const auto& tri = m.triangles[e];
            if (tri[0] != vertex && tri[1] != vertex && tri[2] != vertex) continue;
            const auto g = basis_gradients(m, e);
            const Vec2 grad = u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2];
            acc += D * grad - u[vertex] * q;
            ++count;
        }
        return count ? acc.dot(n) / count : 0.0;
    };
    // Facet lists of the cell faces.
    std::vector<int> fplus, fminus;
    for (int f = 0; f < static_cast<int>(c.facets.size()); ++f) {
        if (c.facets[f].tag == BoundaryTag::InterfacePlus) fplus.push_back(f);
        if (c.facets[f].tag == BoundaryTag::InterfaceMinus) fminus.push_back(f);
    }
    auto cell_flux = [&](int node, const Vector& u, const std::vector<int>& fs, const Vec2& n) {
        const double xp = mesh_.interface.nodes[node];
        double total = 0.0;
        for (int f : fs) {
            const Facet& fc = c.facets[f];
            const auto g = basis_gradients(c, fc.element);
            const auto& tri = c.triangles[fc.element];
            const Vec2 grad = u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2];
            const double L = c.facet_length(f);
            for (int k = 0; k < 2; ++k) {
                const double sp = edge_rule()[k];
                const Vec2 z = (1.0 - sp) * c.vertices[fc.a] + sp * c.vertices[fc.b];
                const double uz = (1.0 - sp) * u[fc.a] + sp * u[fc.b];
                const JacobianData jd = limit_.at(t, xp, z);
                const TransformedCoefficients tc = transformed_coefficients(s.D_layer(t, xp, z), s.q_layer(t, xp, z), jd);
                total += 0.5 * L * (tc.D * grad - uz * tc.q).dot(n);
            }
        }
        return total;
    };
    const Vec2 np(0.0, 1.0), nm(0.0, -1.0);
    std::vector<FluxResidual> out;
    for (int i = 0; i < nodes; ++i) {
        FluxResidual r;
        r.node = i;
        r.x = mesh_.interface.nodes[i];
        r.flux_plus = bulk_flux(mesh_.bulk_plus, state.plus[species], mesh_.interface.plus_vertex[i], s.D_plus, s.q_plus, np);
        r.flux_minus =
            bulk_flux(mesh_.bulk_minus, state.minus[species], mesh_.interface.minus_vertex[i], s.D_minus, s.q_minus, nm);
        r.cell_plus = cell_flux(i, state.cells[species][i], fplus, np);
        r.cell_minus = cell_flux(i, state.cells[species][i], fminus, nm);
        r.r_plus = std::abs(r.flux_plus - r.cell_plus);
        r.r_minus = std::abs(r.flux_minus - r.cell_minus);
        r.r_jump = std::abs((r.flux_plus - r.flux_minus) - (r.cell_plus - r.cell_minus));
        r.jump = r.flux_plus + r.flux_minus;
        out.push_back(r);
    }
    return out;
}

std::vector<EvolvedCell> MacroSolver::push_forward(const MacroState& state) const {
    const Mesh& c = mesh_.cell;
    std::vector<EvolvedCell> out;
    for (size_t i = 0; i < mesh_.interface.nodes.size(); ++i) {
        const double xp = mesh_.interface.nodes[i];
        EvolvedCell ec;
        ec.node = static_cast<int>(i);
        for (const Vec2& z : c.vertices) ec.vertices.push_back(limit_.psi0(state.t, xp, z));
        for (int e = 0; e < c.num_elements(); ++e) {
            const auto& tri = c.triangles[e];
            const Vec2 a = ec.vertices[tri[1]] - ec.vertices[tri[0]];
            const Vec2 b = ec.vertices[tri[2]] - ec.vertices[tri[0]];
            const double area = 0.5 * (a.x() * b.y() - a.y() * b.x());
            if (!(area > 0.0))
                throw FoldedCell("mapped triangle " + std::to_string(e) + " at node " + std::to_string(i) +
                                 " has area " + std::to_string(area));
            ec.mesh_area += area;
        }
        for (const auto& sp : state.cells)
            for (int d = 0; d < c.num_dofs(); ++d) ec.values.push_back(sp[i][d]);
        ec.area = limit_.cell_volume(state.t, xp, geom_.channel);
        out.push_back(std::move(ec));
    }
    return out;
}

}  // namespace thinlayer
