#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "thinlayer/assembly.hpp"
#include "thinlayer/errors.hpp"
#include "thinlayer/linear_solver.hpp"
#include "thinlayer/mesh.hpp"
#include "thinlayer/transform.hpp"

using namespace thinlayer;

namespace {

ReferenceGeometry straight() { return build_reference_geometry(straight_channel(0.5), 1.0); }

double region_area(const Mesh& m, Region r) {
    double a = 0.0;
    for (int e = 0; e < m.num_elements(); ++e)
        if (m.regions[e] == r) a += m.signed_area(e);
    return a;
}

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A); }

}  // namespace

TEST(Mesh, HalfScaleStraightChannel) {
    const auto g = straight();
    const MicroMesh mm = mesh_micro(g, tile_layer(g, 0.5), 2);
    check_mesh(mm.mesh);
    for (int e = 0; e < mm.mesh.num_elements(); ++e) EXPECT_GT(mm.mesh.signed_area(e), 0.0);
    EXPECT_NEAR(region_area(mm.mesh, Region::Channel), 0.5, 5e-3);
}

TEST(Mesh, InterfaceVerticesAreShared) {
    const auto g = straight();
    const MicroMesh mm = mesh_micro(g, tile_layer(g, 0.25), 4);
    const Mesh& m = mm.mesh;
    std::set<int> iface;
    for (const Facet& f : m.facets)
        if (f.tag == BoundaryTag::InterfacePlus) {
            iface.insert(f.a);
            iface.insert(f.b);
        }
    ASSERT_FALSE(iface.empty());
    for (int v : iface) {
        bool bulk = false, chan = false;
        for (int e = 0; e < m.num_elements(); ++e)
            for (int s = 0; s < 3; ++s)
                if (m.triangles[e][s] == v) {
                    bulk |= m.regions[e] == Region::BulkPlus;
                    chan |= m.regions[e] == Region::Channel;
                }
        EXPECT_TRUE(bulk && chan) << "vertex " << v;
    }
}

TEST(Mesh, ResolutionOneRejected) {
    const auto g = straight();
    EXPECT_THROW(mesh_micro(g, tile_layer(g, 0.25), 1), MeshFailure);
}

TEST(Mesh, AreaIdentity) {
    const auto g = straight();
    for (double eps : {0.5, 0.25, 0.125}) {
        const MicroMesh mm = mesh_micro(g, tile_layer(g, eps), 4);
        const double total = region_area(mm.mesh, Region::BulkPlus) + region_area(mm.mesh, Region::BulkMinus) +
                             region_area(mm.mesh, Region::Channel);
        EXPECT_NEAR(total, 2.0 - 2.0 * eps + eps * g.channel_area, 1e-12);
    }
}

TEST(Mesh, ExportFormat) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 1, 1, Region::BulkPlus);
    std::ostringstream os;
    write_mesh(m, os);
    std::istringstream is(os.str());
    std::string kind;
    int nv = 0, nt = 0, nf = 0;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        ls >> kind;
        nv += kind == "v";
        nt += kind == "t";
        nf += kind == "f";
    }
    EXPECT_EQ(nv, 4);
    EXPECT_EQ(nt, 2);
    EXPECT_EQ(nf, 4);
}

TEST(Mesh, MirrorAndLocate) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 4, 4, Region::BulkPlus, BoundaryTag::InterfacePlus);
    const Mesh r = mirror_mesh(m, Region::BulkMinus);
    check_mesh(r);
    EXPECT_TRUE(r.has_tag(BoundaryTag::InterfaceMinus));
    const PointLocator loc(r);
    const Location l = loc.locate({0.3, -0.7});
    ASSERT_GE(l.element, 0);
    Vec2 p = Vec2::Zero();
    for (int s = 0; s < 3; ++s) p += l.bary[s] * r.vertices[r.triangles[l.element][s]];
    EXPECT_NEAR((p - Vec2(0.3, -0.7)).norm(), 0.0, 1e-14);
}

TEST(Assembly, MassPartitionOfUnity) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 1, 1, Region::BulkPlus);
    const SparseMatrix M = assemble_weighted_mass(m, nullptr, RegionScale::uniform(1.0));
    EXPECT_NEAR(dense(M).sum(), 1.0, 1e-15);
}

TEST(Assembly, ScaledLayerMassMeasuresDomain) {
    const auto g = straight();
    for (double eps : {0.25, 0.125}) {
        const MicroMesh mm = mesh_micro(g, tile_layer(g, eps), 4);
        const SparseMatrix M = assemble_weighted_mass(mm.mesh, nullptr, {1.0, 1.0 / eps, 1.0});
        const Vector one = Vector::Ones(mm.mesh.num_dofs());
        EXPECT_NEAR(one.dot(M * one), 2.0 * (1.0 - eps) + g.channel_area, 1e-12);
    }
}

TEST(Assembly, IdentityJacobianWeightIsBitwiseUnit) {
    const auto g = straight();
    const MicroMesh mm = mesh_micro(g, tile_layer(g, 0.25), 4);
    const auto spec = static_transform(1.0);
    const SparseMatrix A = assemble_weighted_mass(mm.mesh, nullptr, RegionScale::uniform(1.0));
    const SparseMatrix B = assemble_weighted_mass(
        mm.mesh, [&](const QuadPoint& q) { return jacobian_data(spec, 0.25, 0.3, {q.x})[0].J; },
        RegionScale::layer_only(1.0));
    const SparseMatrix C = assemble_weighted_mass(mm.mesh, nullptr, RegionScale::layer_only(1.0));
    EXPECT_EQ(dense(B), dense(C));
    EXPECT_THROW(assemble_weighted_mass(mm.mesh, [](const QuadPoint&) { return -1.0; }, RegionScale::uniform(1.0)),
                 NonpositiveWeight);
    EXPECT_LT((dense(A) - dense(A).transpose()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Assembly, LinearFunctionsAreHarmonic) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 5, 5, Region::BulkPlus);
    const SparseMatrix K = assemble_operator(
        m, [](const QuadPoint&) { return Mat2::Identity().eval(); }, nullptr, RegionScale::uniform(1.0),
        RegionScale::uniform(1.0));
    Vector u(m.num_dofs());
    for (int i = 0; i < m.num_dofs(); ++i) u[i] = m.vertices[i].x();
    const Vector r = K * u;
    for (int i = 0; i < m.num_dofs(); ++i) {
        const Vec2& p = m.vertices[i];
        if (p.x() > 1e-12 && p.x() < 1 - 1e-12 && p.y() > 1e-12 && p.y() < 1 - 1e-12) EXPECT_NEAR(r[i], 0.0, 1e-13);
    }
    EXPECT_LT((dense(K) - dense(K).transpose()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Assembly, AdvectionColumnSumsVanish) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 4, 3, Region::BulkPlus);
    const SparseMatrix A = assemble_operator(
        m, [](const QuadPoint&) { return Mat2::Zero().eval(); }, [](const QuadPoint&) { return Vec2(1.0, 1.0); },
        RegionScale::uniform(1.0), RegionScale::uniform(1.0));
    const Eigen::RowVectorXd cols = dense(A).colwise().sum();
    EXPECT_LT(cols.cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GT(dense(A).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Assembly, TwoElementStiffnessOracle) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 1, 1, Region::BulkPlus);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<Mat2> D(2);
    for (auto& d : D) {
        Mat2 A;
        A << U(rng), U(rng), U(rng), U(rng);
        d = A * A.transpose() + 0.2 * Mat2::Identity();
    }
    const SparseMatrix K = assemble_operator(
        m, [&](const QuadPoint& q) { return D[q.element]; }, nullptr, RegionScale::uniform(1.0),
        RegionScale::uniform(1.0));
    Eigen::Matrix4d oracle = Eigen::Matrix4d::Zero();
    for (int e = 0; e < 2; ++e) {
        const auto& t = m.triangles[e];
        const Vec2 a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
        Eigen::Matrix3d P;
        P << 1, a.x(), a.y(), 1, b.x(), b.y(), 1, c.x(), c.y();
        const Eigen::Matrix3d C = P.inverse();  // columns: basis coefficients
        const double area = 0.5 * std::abs(P.determinant());
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const Vec2 gi(C(1, i), C(2, i)), gj(C(1, j), C(2, j));
                oracle(t[i], t[j]) += area * gi.dot(D[e] * gj);
            }
    }
    EXPECT_LT((dense(K) - oracle).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Assembly, WallMassMeasuresWalls) {
    const auto g = straight();
    const MicroMesh mm = mesh_micro(g, tile_layer(g, 0.25), 4);
    const SparseMatrix B = assemble_boundary_mass(mm.mesh, BoundaryTag::Wall, [](const FacetPoint&) { return 1.0; });
    const Vector one = Vector::Ones(mm.mesh.num_dofs());
    EXPECT_NEAR(one.dot(B * one), 4.0, 1e-12);
    const SparseMatrix Z = assemble_boundary_mass(mm.mesh, BoundaryTag::Wall, [](const FacetPoint&) { return 0.0; });
    EXPECT_EQ(dense(Z).cwiseAbs().maxCoeff(), 0.0);
    const Mesh rect = mesh_rectangle(0, 1, 0, 1, 2, 2, Region::BulkPlus);
    EXPECT_THROW(assemble_boundary_mass(rect, BoundaryTag::Wall, [](const FacetPoint&) { return 1.0; }), UnknownTag);
    EXPECT_THROW(boundary_tag_from_string("bogus"), UnknownTag);
}

TEST(LinearSolver, IdentityAndDenseOracle) {
    SparseSystem sys;
    sys.A.resize(4, 4);
    sys.A.setIdentity();
    sys.b = Vector::LinSpaced(4, 1.0, 4.0);
    EXPECT_LT((solve_linear(sys) - sys.b).norm(), 1e-14);

    Eigen::MatrixXd H(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) H(i, j) = 1.0 / (i + j + 1) + (i == j ? 1.0 : 0.0);
    SparseSystem s2;
    s2.A = H.sparseView();
    s2.b = Vector::Ones(5);
    const Vector oracle = H.partialPivLu().solve(s2.b);
    EXPECT_LT((solve_linear(s2) - oracle).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LinearSolver, SingularSystemFails) {
    SparseSystem sys;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
    A(0, 0) = 1.0;
    A(1, 1) = 1.0;
    sys.A = A.sparseView();
    sys.b = Vector::Ones(3);
    EXPECT_THROW(solve_linear(sys), NoConvergence);
}

TEST(LinearSolver, PoissonSecondOrder) {
    std::vector<double> errs;
    for (int n : {8, 16, 32}) {
        const Mesh m = mesh_rectangle(0, 1, 0, 1, n, n, Region::BulkPlus);
        auto exact = [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); };
        SparseSystem sys;
        sys.A = assemble_operator(
            m, [](const QuadPoint&) { return Mat2::Identity().eval(); }, nullptr, RegionScale::uniform(1.0),
            RegionScale::uniform(1.0));
        sys.b = assemble_load(m, [&](const QuadPoint& q) { return 2 * M_PI * M_PI * exact(q.x); },
                              RegionScale::uniform(1.0));
        for (int i = 0; i < m.num_dofs(); ++i) {
            const Vec2& p = m.vertices[i];
            if (p.x() < 1e-12 || p.x() > 1 - 1e-12 || p.y() < 1e-12 || p.y() > 1 - 1e-12)
                sys.constraints.emplace_back(i, 0.0);
        }
        const Vector u = solve_linear(sys);
        double err = 0.0;
        for (int e = 0; e < m.num_elements(); ++e) {
            const auto& t = m.triangles[e];
            for (const auto& [l, w] : triangle_rule_degree5()) {
                const Vec2 x = l[0] * m.vertices[t[0]] + l[1] * m.vertices[t[1]] + l[2] * m.vertices[t[2]];
                const double d = l[0] * u[t[0]] + l[1] * u[t[1]] + l[2] * u[t[2]] - exact(x);
                err += w * m.signed_area(e) * d * d;
            }
        }
        errs.push_back(std::sqrt(err));
    }
    for (size_t i = 1; i < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i - 1] / errs[i]), 2.0, 0.2);
}

TEST(LinearSolver, MassMatrixPositiveDefinite) {
    const Mesh m = mesh_rectangle(0, 1, 0, 1, 3, 3, Region::BulkPlus);
    const Eigen::MatrixXd M = dense(assemble_weighted_mass(m, nullptr, RegionScale::uniform(1.0)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}
