#include "thinlayer/assembly.hpp"

#include <cmath>
#include <vector>

#include "thinlayer/errors.hpp"
#include "thinlayer/parallel.hpp"
#include "thinlayer/transform.hpp"

namespace thinlayer {

namespace {

using Triplet = Eigen::Triplet<double>;

QuadPoint make_point(const Mesh& mesh, int e, int q) {
    const auto& t = mesh.triangles[e];
    const auto& l = triangle_rule()[q];
    QuadPoint p;
    p.x = l[0] * mesh.vertices[t[0]] + l[1] * mesh.vertices[t[1]] + l[2] * mesh.vertices[t[2]];
    p.element = e;
    p.index = q;
    p.region = mesh.regions[e];
    p.bary = l;
    return p;
}

SparseMatrix build(int n, std::vector<std::vector<Triplet>>& parts) {
    size_t total = 0;
    for (auto& p : parts) total += p.size();
    std::vector<Triplet> all;
    all.reserve(total);
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    SparseMatrix A(n, n);
    A.setFromTriplets(all.begin(), all.end());
    return A;
}

template <class ElementKernel>
SparseMatrix assemble_elements(const Mesh& mesh, ElementKernel&& kernel) {
    const int ne = mesh.num_elements();
    std::vector<std::vector<Triplet>> parts(std::max(1, worker_count()));
    const int used = parallel_chunks(ne, [&](int chunk, int b, int e) {
        auto& out = parts[chunk];
        out.reserve(static_cast<size_t>(e - b) * 9);
        for (int el = b; el < e; ++el) kernel(el, out);
    });
    parts.resize(used);
    return build(mesh.num_dofs(), parts);
}

std::vector<int> tagged_facets(const Mesh& mesh, BoundaryTag tag) {
    std::vector<int> out;
    for (int f = 0; f < static_cast<int>(mesh.facets.size()); ++f)
        if (mesh.facets[f].tag == tag) out.push_back(f);
    if (out.empty()) throw UnknownTag("mesh has no facets tagged " + to_string(tag));
    return out;
}

FacetPoint make_facet_point(const Mesh& mesh, int f, int g) {
    const Facet& fc = mesh.facets[f];
    FacetPoint p;
    p.s = edge_rule()[g];
    p.x = (1.0 - p.s) * mesh.vertices[fc.a] + p.s * mesh.vertices[fc.b];
    p.normal = mesh.facet_normal(f);
    p.facet = f;
    p.index = g;
    p.element = fc.element;
    return p;
}

}  // namespace

const std::array<std::array<double, 3>, 3>& triangle_rule() {
    static const std::array<std::array<double, 3>, 3> r{{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};
    return r;
}

const std::vector<BaryWeight>& triangle_rule_degree5() {
    static const std::vector<BaryWeight> rule = [] {
        const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
        return std::vector<BaryWeight>{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225}, {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1},
                                       {{b1, b1, a1}, w1}, {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2},
                                       {{b2, b2, a2}, w2}};
    }();
    return rule;
}

const std::array<double, 2>& edge_rule() {
    static const std::array<double, 2> r{0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    return r;
}

std::array<Vec2, 3> basis_gradients(const Mesh& mesh, int e) {
    const auto& t = mesh.triangles[e];
    const Vec2& p0 = mesh.vertices[t[0]];
    const Vec2& p1 = mesh.vertices[t[1]];
    const Vec2& p2 = mesh.vertices[t[2]];
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    return {Vec2((p1.y() - p2.y()) / det, (p2.x() - p1.x()) / det),
            Vec2((p2.y() - p0.y()) / det, (p0.x() - p2.x()) / det),
            Vec2((p0.y() - p1.y()) / det, (p1.x() - p0.x()) / det)};
}

SparseMatrix assemble_weighted_mass(const Mesh& mesh, const ScalarField& weight, const RegionScale& scale) {
    return assemble_elements(mesh, [&](int e, std::vector<Triplet>& out) {
        const double s = scale[mesh.regions[e]];
        if (s == 0.0) return;
        const double w3 = mesh.signed_area(e) / 3.0;
        double loc[3][3] = {};
        for (int q = 0; q < 3; ++q) {
            const QuadPoint p = make_point(mesh, e, q);
            const double w = weight ? weight(p) : 1.0;
            if (!(w > 0.0) || !std::isfinite(w))
                throw NonpositiveWeight("mass weight " + std::to_string(w) + " at element " + std::to_string(e));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) loc[i][j] += w3 * w * p.bary[i] * p.bary[j];
        }
        const auto& t = mesh.triangles[e];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.emplace_back(t[i], t[j], s * loc[i][j]);
    });
}

SparseMatrix assemble_operator(const Mesh& mesh, const TensorField& diffusion, const VectorField& velocity,
                               const RegionScale& scale_diff, const RegionScale& scale_adv) {
    return assemble_elements(mesh, [&](int e, std::vector<Triplet>& out) {
        const double sd = diffusion ? scale_diff[mesh.regions[e]] : 0.0;
        const double sa = velocity ? scale_adv[mesh.regions[e]] : 0.0;
        if (sd == 0.0 && sa == 0.0) return;
        const double w3 = mesh.signed_area(e) / 3.0;
        const auto g = basis_gradients(mesh, e);
        double loc[3][3] = {};
        for (int q = 0; q < 3; ++q) {
            const QuadPoint p = make_point(mesh, e, q);
            if (sd != 0.0) {
                const Mat2 D = diffusion(p);
                require_spd(D, false, "diffusion tensor");
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) loc[i][j] += sd * w3 * g[i].dot(D * g[j]);
            }
            if (sa != 0.0) {
                const Vec2 v = velocity(p);
                for (int i = 0; i < 3; ++i) {
                    const double vg = v.dot(g[i]);
                    for (int j = 0; j < 3; ++j) loc[i][j] -= sa * w3 * p.bary[j] * vg;
                }
            }
        }
        const auto& t = mesh.triangles[e];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.emplace_back(t[i], t[j], loc[i][j]);
    });
}

Vector assemble_load(const Mesh& mesh, const ScalarField& density, const RegionScale& scale) {
    Vector b = Vector::Zero(mesh.num_dofs());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double s = scale[mesh.regions[e]];
        if (s == 0.0) continue;
        const double w3 = mesh.signed_area(e) / 3.0;
        const auto& t = mesh.triangles[e];
        for (int q = 0; q < 3; ++q) {
            const QuadPoint p = make_point(mesh, e, q);
            const double d = density(p);
            if (d == 0.0) continue;
            for (int i = 0; i < 3; ++i) b[t[i]] += s * w3 * d * p.bary[i];
        }
    }
    return b;
}

SparseMatrix assemble_boundary_mass(const Mesh& mesh, BoundaryTag tag, const FacetField& weight) {
    const std::vector<int> fs = tagged_facets(mesh, tag);
    std::vector<Triplet> trip;
    trip.reserve(fs.size() * 4);
    for (int f : fs) {
        const Facet& fc = mesh.facets[f];
        const double L = mesh.facet_length(f);
        double loc[2][2] = {};
        for (int g = 0; g < 2; ++g) {
            const FacetPoint p = make_facet_point(mesh, f, g);
            const double w = weight ? weight(p) : 1.0;
            const double phi[2] = {1.0 - p.s, p.s};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) loc[i][j] += 0.5 * L * w * phi[i] * phi[j];
        }
        const int id[2] = {fc.a, fc.b};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) trip.emplace_back(id[i], id[j], loc[i][j]);
    }
    SparseMatrix B(mesh.num_dofs(), mesh.num_dofs());
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

Vector assemble_boundary_load(const Mesh& mesh, BoundaryTag tag, const FacetField& density) {
    const std::vector<int> fs = tagged_facets(mesh, tag);
    Vector b = Vector::Zero(mesh.num_dofs());
    for (int f : fs) {
        const Facet& fc = mesh.facets[f];
        const double L = mesh.facet_length(f);
        for (int g = 0; g < 2; ++g) {
            const FacetPoint p = make_facet_point(mesh, f, g);
            const double d = density(p);
            b[fc.a] += 0.5 * L * d * (1.0 - p.s);
            b[fc.b] += 0.5 * L * d * p.s;
        }
    }
    return b;
}

}  // namespace thinlayer
