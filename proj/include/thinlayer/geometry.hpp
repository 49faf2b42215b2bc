#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "thinlayer/types.hpp"

namespace thinlayer {

/// Channel across the reference cell, described by its width around a vertical centerline.
struct ChannelSpec {
    std::function<double(double)> width;
    double center = 0.5;
    double boundary_margin = 0.05;

    double left(double z2) const { return center - 0.5 * width(z2); }
    double right(double z2) const { return center + 0.5 * width(z2); }
};

ChannelSpec straight_channel(double w, double center = 0.5, double margin = 0.05);

struct ReferenceGeometry {
    ChannelSpec channel;
    double half_height = 1.0;
    double channel_area = 0.0;  // |Z*|
    double wall_length = 0.0;   // |N|, both walls
    double face_plus = 0.0;     // |S*^+|
    double face_minus = 0.0;    // |S*^-|
    double width_lipschitz = 0.0;

    /// True when z lies in the closed channel up to tol.
    bool in_channel(const Vec2& z, double tol = 1e-12) const;
};

ReferenceGeometry build_reference_geometry(const ChannelSpec& channel, double H);

struct TilingIndex {
    double eps = 0.0;
    int num_cells = 0;
    std::vector<int> cells;

    Vec2 cell_to_global(int k, const Vec2& z) const { return {eps * (k + z.x()), eps * z.y()}; }
    /// Cell index of x (clamped to the last cell on the right edge) and its cell coordinate.
    std::pair<int, Vec2> global_to_cell(const Vec2& x) const;
};

TilingIndex tile_layer(const ReferenceGeometry& geom, double eps);

/// Checks that 1/eps is a positive integer; returns it.
int cells_per_unit(double eps);

enum class PointTag {
    BulkPlus,
    BulkMinus,
    Channel,
    Hole,
    InterfacePlus,
    InterfaceMinus,
    Wall,
    Exterior,
};

std::string to_string(PointTag tag);

PointTag classify_point(const ReferenceGeometry& geom, double eps, const Vec2& x);

}  // namespace thinlayer
