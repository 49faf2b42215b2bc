#pragma once

#include <array>
#include <functional>
#include <vector>

#include "thinlayer/mesh.hpp"
#include "thinlayer/types.hpp"

namespace thinlayer {

/// Triangle quadrature point (edge midpoints, weight area/3).
struct QuadPoint {
    Vec2 x;
    int element = 0;
    int index = 0;
    Region region = Region::BulkPlus;
    std::array<double, 3> bary{};
};

/// Edge quadrature point (2-point Gauss); s is the parameter from facet.a to facet.b.
struct FacetPoint {
    Vec2 x;
    Vec2 normal;
    int facet = 0;
    int index = 0;
    int element = 0;
    double s = 0.0;
};

using ScalarField = std::function<double(const QuadPoint&)>;
using TensorField = std::function<Mat2(const QuadPoint&)>;
using VectorField = std::function<Vec2(const QuadPoint&)>;
using FacetField = std::function<double(const FacetPoint&)>;

/// Barycentric coordinates of the three edge-midpoint quadrature points.
const std::array<std::array<double, 3>, 3>& triangle_rule();
/// Seven-point rule exact for degree 5; weights sum to 1.
struct BaryWeight {
    std::array<double, 3> bary;
    double weight;
};
const std::vector<BaryWeight>& triangle_rule_degree5();
/// Gauss abscissae on [0, 1] and their weights (sum 1).
const std::array<double, 2>& edge_rule();

/// Gradients of the three P1 basis functions of element e.
std::array<Vec2, 3> basis_gradients(const Mesh& mesh, int e);

/// sum_regions scale * int weight phi_i phi_j. Elements with zero scale are skipped.
SparseMatrix assemble_weighted_mass(const Mesh& mesh, const ScalarField& weight, const RegionScale& scale);

/// int s_d (D grad phi_j).grad phi_i - int s_a phi_j v.grad phi_i. A null velocity skips advection.
SparseMatrix assemble_operator(const Mesh& mesh, const TensorField& diffusion, const VectorField& velocity,
                               const RegionScale& scale_diff, const RegionScale& scale_adv);

/// sum_regions scale * int density phi_i.
Vector assemble_load(const Mesh& mesh, const ScalarField& density, const RegionScale& scale);

/// int_tag weight phi_i phi_j. Throws UnknownTag when the mesh has no such facet.
SparseMatrix assemble_boundary_mass(const Mesh& mesh, BoundaryTag tag, const FacetField& weight);

/// int_tag density phi_i.
Vector assemble_boundary_load(const Mesh& mesh, BoundaryTag tag, const FacetField& density);

/// Value at a quadrature point from nodal values.
inline double interpolate(const Mesh& mesh, const Vector& u, const QuadPoint& q) {
    const auto& t = mesh.triangles[q.element];
    return q.bary[0] * u[t[0]] + q.bary[1] * u[t[1]] + q.bary[2] * u[t[2]];
}

inline double interpolate(const Mesh& mesh, const Vector& u, const FacetPoint& p) {
    const Facet& f = mesh.facets[p.facet];
    return (1.0 - p.s) * u[f.a] + p.s * u[f.b];
}

}  // namespace thinlayer
