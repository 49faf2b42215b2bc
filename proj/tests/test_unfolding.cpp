#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>
#include <random>

#include "thinlayer/errors.hpp"
#include "thinlayer/unfolding.hpp"

using namespace thinlayer;

namespace {

ReferenceGeometry straight(double w = 0.5) { return build_reference_geometry(straight_channel(w), 1.0); }

Vector random_layer_field(const MicroMesh& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vector v = Vector::Zero(m.mesh.num_dofs());
    for (int i : m.channel_vertices) v[i] = U(rng);
    return v;
}

Vector layer_field(const MicroMesh& m, const std::function<double(const Vec2&)>& f) {
    Vector v = Vector::Zero(m.mesh.num_dofs());
    for (int i : m.channel_vertices) v[i] = f(m.mesh.vertices[i]);
    return v;
}

int cell_vertex_at(const Mesh& cell, const Vec2& z) {
    for (int d = 0; d < cell.num_dofs(); ++d)
        if ((cell.vertices[d] - z).norm() < 1e-12) return d;
    return -1;
}

}  // namespace

TEST(Unfolding, ConstantsAndCoordinates) {
    const auto g = straight();
    const MicroMesh m = mesh_micro(g, tile_layer(g, 0.25), 4);
    const Unfolder u(m, m.cell);
    EXPECT_TRUE(u.matched());
    const UnfoldedField c = u.unfold(layer_field(m, [](const Vec2&) { return 3.5; }));
    for (double v : c.values) EXPECT_EQ(v, 3.5);
    const UnfoldedField x = u.unfold(layer_field(m, [](const Vec2& p) { return p.x(); }));
    const int d = cell_vertex_at(m.cell, {0.5, 0.0});
    ASSERT_GE(d, 0);
    EXPECT_NEAR(x.at(2, d), 0.625, 1e-15);
}

TEST(Unfolding, NormIdentity) {
    const auto g = straight();
    std::mt19937_64 rng(1);
    for (double eps : {0.5, 0.25, 0.125}) {
        const MicroMesh m = mesh_micro(g, tile_layer(g, eps), 4);
        const Unfolder u(m, m.cell);
        for (int i = 0; i < 10; ++i) {
            const Vector v = random_layer_field(m, rng);
            EXPECT_NEAR(u.unfolded_norm(u.unfold(v)) / (u.layer_norm(v) / std::sqrt(eps)), 1.0, 1e-10);
        }
    }
}

TEST(Unfolding, AveragingIsAdjoint) {
    const auto g = build_reference_geometry(straight_channel(0.4), 1.0);
    const MicroMesh m = mesh_micro(g, tile_layer(g, 0.125), 4);
    const Unfolder u(m, m.cell);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Vector v = random_layer_field(m, rng);
        UnfoldedField phi = u.unfold(v);
        for (double& x : phi.values) x = U(rng);
        const double lhs = u.layer_inner(u.average(phi), v);
        const double rhs = 0.125 * u.unfolded_inner(phi, u.unfold(v));
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * u.layer_norm(v) * u.unfolded_norm(phi));
        EXPECT_LE(u.layer_norm(u.average(phi)), std::sqrt(0.125) * u.unfolded_norm(phi) * (1 + 1e-10));
    }
}

TEST(Unfolding, AveragingInvertsUnfolding) {
    const auto g = straight();
    const MicroMesh m = mesh_micro(g, tile_layer(g, 0.25), 4);
    const Unfolder u(m, m.cell);
    std::mt19937_64 rng(3);
    const Vector v = random_layer_field(m, rng);
    const Vector back = u.average(u.unfold(v));
    for (int i : m.channel_vertices) EXPECT_NEAR(back[i], v[i], 1e-12);
    const Vector zero = u.average(u.unfold(Vector::Zero(m.mesh.num_dofs())));
    EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
    UnfoldedField bad = u.unfold(v);
    bad.values.pop_back();
    EXPECT_THROW(u.average(bad), LayoutMismatch);
}

TEST(Unfolding, GradientCommutesOnMatchedMeshes) {
    const auto g = straight();
    std::mt19937_64 rng(4);
    for (double eps : {0.25, 0.125}) {
        const MicroMesh m = mesh_micro(g, tile_layer(g, eps), 4);
        EXPECT_LE(gradient_commutation_check(m, random_layer_field(m, rng), m.cell), 1e-13);
        const Unfolder u(m, m.cell);
        const UnfoldedField t = u.unfold(layer_field(m, [](const Vec2& p) { return p.y(); }));
        // grad_z of T(x_n) is (0, eps): check on one element per cell
        const auto& tri = m.cell.triangles[0];
        for (int k = 0; k < t.num_cells; ++k) {
            const Vec2 a = m.cell.vertices[tri[0]], b = m.cell.vertices[tri[1]], c = m.cell.vertices[tri[2]];
            Mat2 E;
            E << (b - a).transpose(), (c - a).transpose();
            const Vec2 grad = E.inverse() * Vec2(t.at(k, tri[1]) - t.at(k, tri[0]), t.at(k, tri[2]) - t.at(k, tri[0]));
            EXPECT_NEAR((grad - Vec2(0.0, eps)).norm(), 0.0, 1e-13);
        }
    }
}

TEST(Unfolding, MismatchedMeshDefectDecreases) {
    const auto g = straight();
    const double eps = 0.25;
    auto f = [eps](const Vec2& p) { return std::sin(2 * M_PI * p.x() / eps) * std::cos(M_PI * p.y() / eps); };
    std::vector<double> defects;
    for (int r : {4, 8, 16}) {
        const MicroMesh m = mesh_micro(g, tile_layer(g, eps), r);
        const Mesh cell = mesh_cell(g, r + 1);
        const Unfolder u(m, cell);
        EXPECT_FALSE(u.matched());
        defects.push_back(u.gradient_commutation_defect(layer_field(m, f)));
    }
    EXPECT_LT(defects[1], defects[0]);
    EXPECT_LT(defects[2], defects[1]);
}

TEST(Unfolding, CellMeshOutsideLayerIsRejected) {
    const auto g = straight();
    const MicroMesh m = mesh_micro(g, tile_layer(g, 0.25), 4);
    const Mesh wide = mesh_cell(straight(0.8), 4);
    EXPECT_THROW(Unfolder(m, wide), OutOfLayer);
}

TEST(TwoScale, ZeroAndConstantPairs) {
    const auto g = straight();
    const MicroMesh m = mesh_micro(g, tile_layer(g, 0.25), 4);
    const MacroMesh mm = mesh_macro(g, 16, 8, 4);
    for (double c : {0.0, 2.5}) {
        ProblemData data;
        data.species.push_back(simple_species(1, 1, 1));
        data.initial.push_back(make_initial_data("constant(" + std::to_string(c) + ")"));
        data.sources.push_back(std::nullopt);
        MicroSolver micro(m, g, data, static_transform(1.0));
        const MacroSolver macro(mm, g, data, limit_transform(static_transform(1.0), g));
        const TwoScaleErrors e = two_scale_error(m, micro.init(), mm, macro.init());
        EXPECT_LE(e.bulk_plus, 1e-12);
        EXPECT_LE(e.bulk_minus, 1e-12);
        EXPECT_LE(e.layer, 1e-12);
        MacroState late = macro.init();
        late.t = 0.1;
        EXPECT_THROW(two_scale_error(m, micro.init(), mm, late), TimeMismatch);
    }
}
