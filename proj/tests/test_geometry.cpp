#include <gtest/gtest.h>

#include <cmath>

#include "thinlayer/errors.hpp"
#include "thinlayer/geometry.hpp"

using namespace thinlayer;

namespace {

ChannelSpec width_fn(std::function<double(double)> w) {
    ChannelSpec c;
    c.width = std::move(w);
    return c;
}

}  // namespace

TEST(Geometry, StraightChannelMeasures) {
    const auto g = build_reference_geometry(straight_channel(0.5), 1.0);
    EXPECT_NEAR(g.channel_area, 1.0, 1e-12);
    EXPECT_NEAR(g.face_plus, 0.5, 1e-14);
    EXPECT_NEAR(g.face_minus, 0.5, 1e-14);
    EXPECT_NEAR(g.wall_length, 4.0, 1e-9);
}

TEST(Geometry, LinearWidthOddPartIntegratesToZero) {
    const auto g = build_reference_geometry(width_fn([](double z) { return 0.5 + 0.2 * z; }), 1.0);
    EXPECT_NEAR(g.channel_area, 1.0, 1e-12);
    // each wall is a segment with horizontal offset 0.2 over a rise of 2
    EXPECT_NEAR(g.wall_length, 2.0 * std::hypot(2.0, 0.2), 1e-8);
    EXPECT_NEAR(g.face_plus, 0.7, 1e-14);
    EXPECT_NEAR(g.face_minus, 0.3, 1e-14);
}

TEST(Geometry, CosineWidthMatchesMidpointRule) {
    auto w = [](double z) { return 0.4 + 0.2 * std::cos(M_PI * z); };
    const auto g = build_reference_geometry(width_fn(w), 1.0);
    const int n = 1000000;
    double area = 0.0;
    for (int i = 0; i < n; ++i) area += w(-1.0 + (i + 0.5) * 2.0 / n) * 2.0 / n;
    EXPECT_NEAR(g.channel_area, area, 1e-8);
    EXPECT_GE(g.wall_length, 4.0);
}

TEST(Geometry, ChannelTouchingSidesIsRejected) {
    EXPECT_THROW(build_reference_geometry(straight_channel(0.95), 1.0), ShapeViolation);
    EXPECT_THROW(build_reference_geometry(width_fn([](double z) { return 0.3 * z; }), 1.0), ShapeViolation);
}

TEST(Geometry, TilingCounts) {
    const auto g = build_reference_geometry(straight_channel(0.5), 1.0);
    const auto t = tile_layer(g, 0.25);
    EXPECT_EQ(t.num_cells, 4);
    EXPECT_EQ(t.cells.size(), 4u);
    EXPECT_NEAR(t.num_cells * 0.25 * 0.25 * g.channel_area, 0.25 * g.channel_area, 1e-15);
    const auto half = tile_layer(g, 0.5);
    EXPECT_NEAR(half.num_cells * 0.25 * g.channel_area, 0.5, 1e-14);
    EXPECT_THROW(tile_layer(g, 0.3), InvalidScale);
    EXPECT_THROW(tile_layer(g, 1.0), InvalidScale);
    EXPECT_EQ(cells_per_unit(0.0625), 16);
}

TEST(Geometry, TilingRoundTrip) {
    const auto g = build_reference_geometry(straight_channel(0.5), 1.0);
    const auto t = tile_layer(g, 0.125);
    for (int k = 0; k < t.num_cells; ++k) {
        const Vec2 z(0.37, -0.41);
        const auto [k2, z2] = t.global_to_cell(t.cell_to_global(k, z));
        EXPECT_EQ(k2, k);
        EXPECT_NEAR((z2 - z).norm(), 0.0, 1e-12);
    }
}

TEST(Geometry, ClassifyPoints) {
    const auto g = build_reference_geometry(straight_channel(0.5), 1.0);
    EXPECT_EQ(classify_point(g, 0.25, {0.5, 0.5}), PointTag::BulkPlus);
    EXPECT_EQ(classify_point(g, 0.25, {0.5, -0.5}), PointTag::BulkMinus);
    EXPECT_EQ(classify_point(g, 0.5, {0.125, 0.25}), PointTag::Wall);
    EXPECT_EQ(classify_point(g, 0.25, {0.0625, 0.1}), PointTag::Wall);
    EXPECT_EQ(classify_point(g, 0.25, {0.02, 0.0}), PointTag::Hole);
    EXPECT_EQ(classify_point(g, 0.25, {0.125, 0.0}), PointTag::Channel);
    EXPECT_EQ(classify_point(g, 0.25, {0.125, 0.25}), PointTag::InterfacePlus);
    EXPECT_EQ(classify_point(g, 0.25, {0.125, -0.25}), PointTag::InterfaceMinus);
    EXPECT_EQ(classify_point(g, 0.25, {0.5, 1.0}), PointTag::Exterior);
    EXPECT_THROW(classify_point(g, 0.25, {1.5, 0.0}), OutOfDomain);
}

TEST(Geometry, WallLengthIndependentOfEps) {
    const auto g = build_reference_geometry(width_fn([](double z) { return 0.4 + 0.2 * std::cos(M_PI * z); }), 1.0);
    for (double eps : {0.5, 0.25, 0.125}) {
        const auto t = tile_layer(g, eps);
        EXPECT_NEAR(t.num_cells * eps * g.wall_length, g.wall_length, 1e-10);
    }
}
