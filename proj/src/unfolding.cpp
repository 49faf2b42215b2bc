#include "thinlayer/unfolding.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

#include "thinlayer/assembly.hpp"
#include "thinlayer/errors.hpp"

namespace thinlayer {

struct Unfolder::Factor {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

namespace {

using Triplet = Eigen::Triplet<double>;

bool same_mesh(const Mesh& a, const Mesh& b) {
    if (a.vertices.size() != b.vertices.size() || a.triangles != b.triangles) return false;
    for (size_t i = 0; i < a.vertices.size(); ++i)
        if ((a.vertices[i] - b.vertices[i]).cwiseAbs().maxCoeff() > 1e-14) return false;
    return true;
}

Vec2 element_gradient(const Mesh& m, int e, double u0, double u1, double u2) {
    const auto g = basis_gradients(m, e);
    return u0 * g[0] + u1 * g[1] + u2 * g[2];
}

}  // namespace

Unfolder::Unfolder(const MicroMesh& micro, const Mesh& cell_mesh) : micro_(micro), cell_(&cell_mesh) {
    const Mesh& m = micro.mesh;
    const int ncell = static_cast<int>(micro.cell_dofs.size());
    const int nd = cell_mesh.num_dofs();
    matched_ = same_mesh(micro.cell, cell_mesh);

    cell_elements_.assign(ncell, {});
    for (int e = 0; e < m.num_elements(); ++e)
        if (m.regions[e] == Region::Channel) cell_elements_[m.cell_of[e]].push_back(e);

    std::vector<Triplet> trip;
    if (matched_) {
        for (int k = 0; k < ncell; ++k)
            for (int d = 0; d < nd; ++d) trip.emplace_back(k * nd + d, micro.cell_dofs[k][d], 1.0);
    } else {
        const PointLocator loc(micro.cell);
        for (int d = 0; d < nd; ++d) {
            const Vec2& z = cell_mesh.vertices[d];
            if (std::abs(z.y()) > 1.0 + 1e-12) throw OutOfLayer("cell vertex outside the layer");
            const Location l = loc.locate(z);
            if (l.element < 0 || std::min({l.bary[0], l.bary[1], l.bary[2]}) < -0.5)
                throw OutOfLayer("cell vertex far outside the micro channel");
            const auto& tri = micro.cell.triangles[l.element];
            for (int k = 0; k < ncell; ++k)
                for (int s = 0; s < 3; ++s)
                    if (l.bary[s] != 0.0) trip.emplace_back(k * nd + d, micro.cell_dofs[k][tri[s]], l.bary[s]);
        }
    }
    P_ = SparseMatrix(ncell * nd, m.num_dofs());
    P_.setFromTriplets(trip.begin(), trip.end());

    cell_mass_ = assemble_weighted_mass(cell_mesh, nullptr, RegionScale::uniform(1.0));
    layer_mass_ = assemble_weighted_mass(m, nullptr, RegionScale::layer_only(1.0));
    layer_vertices_ = micro.channel_vertices;
    std::vector<int> pos(m.num_dofs(), -1);
    for (size_t i = 0; i < layer_vertices_.size(); ++i) pos[layer_vertices_[i]] = static_cast<int>(i);
    std::vector<Triplet> lt;
    for (int r = 0; r < layer_mass_.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(layer_mass_, r); it; ++it)
            if (pos[r] >= 0 && pos[it.col()] >= 0) lt.emplace_back(pos[r], pos[it.col()], it.value());
    Eigen::SparseMatrix<double> ML(layer_vertices_.size(), layer_vertices_.size());
    ML.setFromTriplets(lt.begin(), lt.end());
    factor_ = std::make_shared<Factor>();
    factor_->ldlt.compute(ML);
    if (factor_->ldlt.info() != Eigen::Success) throw LayoutMismatch("layer mass matrix is singular");
}

UnfoldedField Unfolder::unfold(const Vector& field) const {
    if (field.size() != micro_.mesh.num_dofs()) throw LayoutMismatch("field size differs from the micro mesh");
    UnfoldedField u;
    u.eps = micro_.eps;
    u.num_cells = static_cast<int>(micro_.cell_dofs.size());
    u.cell_dofs = cell_->num_dofs();
    const Vector v = P_ * field;
    u.values.assign(v.data(), v.data() + v.size());
    return u;
}

Vector Unfolder::average(const UnfoldedField& phi) const {
    const int nd = cell_->num_dofs();
    if (phi.cell_dofs != nd || phi.num_cells != static_cast<int>(micro_.cell_dofs.size()) ||
        static_cast<int>(phi.values.size()) != phi.num_cells * nd)
        throw LayoutMismatch("unfolded field layout differs from the cell mesh");
    const double eps = micro_.eps;
    Vector weighted(phi.values.size());
    for (int k = 0; k < phi.num_cells; ++k) {
        const Eigen::Map<const Vector> pk(phi.values.data() + static_cast<size_t>(k) * nd, nd);
        weighted.segment(static_cast<Eigen::Index>(k) * nd, nd) = cell_mass_ * pk;
    }
    const Vector rhs_full = eps * eps * (P_.transpose() * weighted);
    Vector rhs(layer_vertices_.size());
    for (size_t i = 0; i < layer_vertices_.size(); ++i) rhs[i] = rhs_full[layer_vertices_[i]];
    const Vector sol = factor_->ldlt.solve(rhs);
    Vector out = Vector::Zero(micro_.mesh.num_dofs());
    for (size_t i = 0; i < layer_vertices_.size(); ++i) out[layer_vertices_[i]] = sol[i];
    return out;
}

double Unfolder::unfolded_inner(const UnfoldedField& a, const UnfoldedField& b) const {
    if (a.values.size() != b.values.size() || a.cell_dofs != cell_->num_dofs()) throw LayoutMismatch("layouts differ");
    const int nd = a.cell_dofs;
    double total = 0.0;
    for (int k = 0; k < a.num_cells; ++k) {
        const Eigen::Map<const Vector> ak(a.values.data() + static_cast<size_t>(k) * nd, nd);
        const Eigen::Map<const Vector> bk(b.values.data() + static_cast<size_t>(k) * nd, nd);
        total += ak.dot(cell_mass_ * bk);
    }
    return micro_.eps * total;
}

double Unfolder::layer_inner(const Vector& a, const Vector& b) const { return a.dot(layer_mass_ * b); }

double Unfolder::unfolded_norm(const UnfoldedField& a) const { return std::sqrt(std::max(0.0, unfolded_inner(a, a))); }

double Unfolder::layer_norm(const Vector& a) const { return std::sqrt(std::max(0.0, layer_inner(a, a))); }

double Unfolder::gradient_commutation_defect(const Vector& field) const {
    const Mesh& m = micro_.mesh;
    const Mesh& c = *cell_;
    const double eps = micro_.eps;
    const UnfoldedField tv = unfold(field);
    double worst = 0.0;
    std::unique_ptr<PointLocator> loc;
    if (!matched_) loc = std::make_unique<PointLocator>(micro_.cell);
    for (int k = 0; k < tv.num_cells; ++k) {
        for (int e = 0; e < c.num_elements(); ++e) {
            const auto& tri = c.triangles[e];
            const Vec2 gz = element_gradient(c, e, tv.at(k, tri[0]), tv.at(k, tri[1]), tv.at(k, tri[2]));
            int me;
            if (matched_) {
                me = cell_elements_[k][e];
            } else {
                const Vec2 centroid = (c.vertices[tri[0]] + c.vertices[tri[1]] + c.vertices[tri[2]]) / 3.0;
                me = cell_elements_[k][loc->locate(centroid).element];
            }
            const auto& mt = m.triangles[me];
            const Vec2 gx = element_gradient(m, me, field[mt[0]], field[mt[1]], field[mt[2]]);
            worst = std::max(worst, (gz - eps * gx).norm());
        }
    }
    return worst;
}

UnfoldedField unfold(const MicroMesh& micro, const Vector& field, const Mesh& cell_mesh) {
    return Unfolder(micro, cell_mesh).unfold(field);
}

Vector average(const MicroMesh& micro, const UnfoldedField& phi, const Mesh& cell_mesh) {
    return Unfolder(micro, cell_mesh).average(phi);
}

double gradient_commutation_check(const MicroMesh& micro, const Vector& field, const Mesh& cell_mesh) {
    return Unfolder(micro, cell_mesh).gradient_commutation_defect(field);
}

TwoScaleComparator::TwoScaleComparator(const MicroMesh& micro, const MacroMesh& macro)
    : micro_(micro), macro_(macro), unfolder_(micro, macro.cell) {
    const Mesh& m = micro.mesh;
    const double eps = micro.eps;
    const PointLocator lp(macro.bulk_plus), lm(macro.bulk_minus);
    for (int e = 0; e < m.num_elements(); ++e) {
        const Region r = m.regions[e];
        if (r == Region::Channel) continue;
        const auto& tri = m.triangles[e];
        const double area = m.signed_area(e);
        for (const auto& [l, w] : triangle_rule_degree5()) {
            const Vec2 x = l[0] * m.vertices[tri[0]] + l[1] * m.vertices[tri[1]] + l[2] * m.vertices[tri[2]];
            Sample s{e, l, w * area, {}};
            if (r == Region::BulkPlus) {
                s.macro = lp.locate(Vec2(x.x(), x.y() - eps));
                plus_.push_back(s);
            } else {
                s.macro = lm.locate(Vec2(x.x(), x.y() + eps));
                minus_.push_back(s);
            }
        }
    }
    const auto& nodes = macro.interface.nodes;
    for (size_t k = 0; k < micro.cell_dofs.size(); ++k) {
        const double xk = eps * static_cast<double>(k);
        int best = 0;
        for (size_t i = 1; i < nodes.size(); ++i)
            if (std::abs(nodes[i] - xk) < std::abs(nodes[best] - xk)) best = static_cast<int>(i);
        node_of_cell_.push_back(best);
    }
}

TwoScaleErrors TwoScaleComparator::errors(const MicroState& micro, const MacroState& macro, int species) const {
    if (std::abs(micro.t - macro.t) > 1e-12) throw TimeMismatch("micro and macro states at different times");
    const Mesh& m = micro_.mesh;
    const Vector& u = micro.u.at(species);
    auto bulk = [&](const std::vector<Sample>& samples, const Mesh& mm, const Vector& U) {
        double total = 0.0;
        for (const Sample& s : samples) {
            const auto& t = m.triangles[s.micro_element];
            const double a = s.micro_bary[0] * u[t[0]] + s.micro_bary[1] * u[t[1]] + s.micro_bary[2] * u[t[2]];
            const auto& mt = mm.triangles[s.macro.element];
            const double b = s.macro.bary[0] * U[mt[0]] + s.macro.bary[1] * U[mt[1]] + s.macro.bary[2] * U[mt[2]];
            total += s.weight * (a - b) * (a - b);
        }
        return std::sqrt(total);
    };
    TwoScaleErrors err;
    err.bulk_plus = bulk(plus_, macro_.bulk_plus, macro.plus.at(species));
    err.bulk_minus = bulk(minus_, macro_.bulk_minus, macro.minus.at(species));
    UnfoldedField tv = unfolder_.unfold(u);
    for (int k = 0; k < tv.num_cells; ++k) {
        const Vector& cellv = macro.cells.at(species).at(node_of_cell_[k]);
        for (int d = 0; d < tv.cell_dofs; ++d) tv.at(k, d) -= cellv[d];
    }
    err.layer = unfolder_.unfolded_norm(tv);
    return err;
}

TwoScaleErrors two_scale_error(const MicroMesh& micro, const MicroState& micro_state, const MacroMesh& macro,
                               const MacroState& macro_state, int species) {
    return TwoScaleComparator(micro, macro).errors(micro_state, macro_state, species);
}

}  // namespace thinlayer
