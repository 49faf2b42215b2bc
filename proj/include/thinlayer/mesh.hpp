#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "thinlayer/geometry.hpp"
#include "thinlayer/types.hpp"

namespace thinlayer {

/// Oriented edge: a -> b runs counterclockwise around its owner element.
struct Facet {
    int a = 0;
    int b = 0;
    BoundaryTag tag = BoundaryTag::Exterior;
    int element = -1;
};

/// P1 triangulation. Degrees of freedom are the vertices, in vertex order.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Region> regions;
    std::vector<int> cell_of;  // layer cell index of channel triangles, -1 elsewhere
    std::vector<Facet> facets;

    int num_dofs() const { return static_cast<int>(vertices.size()); }
    int num_elements() const { return static_cast<int>(triangles.size()); }
    double signed_area(int e) const;
    bool has_tag(BoundaryTag tag) const;
    /// Outward unit normal of a facet with respect to its owner.
    Vec2 facet_normal(int f) const;
    double facet_length(int f) const;
};

/// Rows z2 = -1 + 2j/r, columns evenly across the channel width; quad diagonals mirrored in z2.
Mesh mesh_cell(const ReferenceGeometry& geom, int r);

struct MicroMesh {
    Mesh mesh;
    double eps = 0.0;
    int resolution = 0;
    Mesh cell;
    std::vector<std::vector<int>> cell_dofs;  // [k][cell vertex] -> micro vertex
    std::vector<int> channel_vertices;        // sorted micro vertices touched by channel triangles
};

MicroMesh mesh_micro(const ReferenceGeometry& geom, const TilingIndex& tiling, int r);

/// Uniform rectangle [x0,x1]x[y0,y1] split into nx*ny quads; the bottom edge gets bottom_tag.
Mesh mesh_rectangle(double x0, double x1, double y0, double y1, int nx, int ny, Region region,
                    BoundaryTag bottom_tag = BoundaryTag::Exterior);

/// Reflection (x, y) -> (x, -y) with orientation restored.
Mesh mirror_mesh(const Mesh& m, Region region);

/// Validates positive areas and facet ownership; throws MeshFailure.
void check_mesh(const Mesh& m);

/// Plain-text listing: `v x y`, `t i j k region`, `f i j tag`.
void write_mesh(const Mesh& m, std::ostream& os);

/// Element containing a point, with barycentric coordinates.
struct Location {
    int element = -1;
    std::array<double, 3> bary{};
};

class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh, int buckets_per_side = 0);
    /// Element with the largest minimal barycentric coordinate among bucket candidates.
    Location locate(const Vec2& x) const;

private:
    const Mesh* mesh_;
    Vec2 lo_, hi_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
    std::array<double, 3> barycentric(int e, const Vec2& x) const;
};

}  // namespace thinlayer
