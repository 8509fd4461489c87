#include <gtest/gtest.h>

#include <filesystem>

#include "sdfsim/geometry/analytic.hpp"
#include "sdfsim/geometry/bvh.hpp"
#include "sdfsim/geometry/marching_cubes.hpp"
#include "sdfsim/geometry/mesh.hpp"

using namespace sdfsim;
using geo::AnalyticShape;

namespace {

geo::TriangleMesh unit_cube() { return geo::box_mesh(Vec3(0.5, 0.5, 0.5), 1); }

double chi_square_2bins(double observed_a, double expected_a, double observed_b, double expected_b) {
    auto term = [](double o, double e) { return (o - e) * (o - e) / e; };
    return term(observed_a, expected_a) + term(observed_b, expected_b);
}

}  // namespace

TEST(Bvh, UnitCubeAxisFace) {
    geo::DistanceOracle oracle(unit_cube());
    auto sd = oracle.signed_distance(Vec3(1, 0, 0));
    EXPECT_NEAR(sd.d, 0.5, 1e-12);
    EXPECT_LT((sd.closest - Vec3(0.5, 0, 0)).norm(), 1e-12);
    EXPECT_TRUE(sd.sign_reliable);
}

TEST(Bvh, UnitCubeInteriorCenter) {
    geo::DistanceOracle oracle(unit_cube());
    auto sd = oracle.signed_distance(Vec3(0, 0, 0));
    EXPECT_NEAR(sd.d, -0.5, 1e-12);
}

TEST(Bvh, MatchesExhaustiveScan) {
    // Irregular mesh: a subdivided icosphere squashed to break symmetry.
    auto mesh = geo::icosphere(0.5, 2);
    for (auto& v : mesh.vertices) {
        v.y() *= 0.6;
        v.z() *= 1.3;
    }
    mesh.compute_normals();
    geo::DistanceOracle oracle(mesh);
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        Vec3 y = rng.uniform_in_box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
        auto a = oracle.signed_distance(y);
        auto b = geo::signed_distance_scan(mesh, y);
        EXPECT_EQ(a.triangle, b.triangle);
        EXPECT_NEAR(a.d, b.d, 1e-9);
        EXPECT_LT((a.closest - b.closest).norm(), 1e-9);
    }
}

TEST(Bvh, ConvexSignConventions) {
    auto mesh = geo::icosphere(0.4, 2);
    geo::DistanceOracle oracle(mesh);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Vec3 outside = rng.unit_vector() * rng.uniform(0.45, 2.0);
        EXPECT_GT(oracle.signed_distance(outside).d, 0.0);
    }
    EXPECT_LT(oracle.signed_distance(mesh.centroid()).d, 0.0);
}

TEST(Bvh, SkipsDegenerateTriangles) {
    auto mesh = unit_cube();
    // Append a zero-area triangle; queries must ignore it.
    mesh.triangles.push_back({0, 0, 1});
    mesh.compute_normals();
    geo::DistanceOracle oracle(mesh);
    auto sd = oracle.signed_distance(Vec3(0.9, 0, 0));
    EXPECT_NEAR(sd.d, 0.4, 1e-12);
}

TEST(Bvh, EmptyMeshIsConstructionError) {
    geo::TriangleMesh empty;
    empty.compute_normals();
    EXPECT_THROW(geo::DistanceOracle{empty}, Error);
}

TEST(SampleSurface, FlatSquareCount) {
    auto mesh = geo::square_mesh(1.0);
    auto pts = geo::sample_surface_points(mesh, 10000.0, 0.0, 3);
    std::size_t on_surface = 0;
    for (const auto& p : pts)
        if (!p.noisy) ++on_surface;
    EXPECT_EQ(on_surface, 10000u);
}

TEST(SampleSurface, ZeroNoiseOnTriangles) {
    auto mesh = geo::icosphere(0.5, 1);
    auto pts = geo::sample_surface_points(mesh, 2000.0, 0.0, 4);
    geo::DistanceOracle oracle(mesh);
    for (const auto& p : pts) EXPECT_LT(std::abs(oracle.signed_distance(p.p).d), 1e-9);
}

TEST(SampleSurface, AreaProportionalAcrossTriangles) {
    // Two right triangles with areas 0.9 and 0.1.
    geo::TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1.8, 0, 0}, {0, 1, 0}, {-0.2, 0, 0}, {0, -1, 0}};
    mesh.triangles = {{0, 1, 2}, {0, 3, 4}};
    mesh.compute_normals();
    ASSERT_NEAR(mesh.triangle_area(0), 0.9, 1e-12);
    ASSERT_NEAR(mesh.triangle_area(1), 0.1, 1e-12);

    auto pts = geo::sample_surface_points(mesh, 10000.0, 0.0, 5);
    double in_big = 0, in_small = 0;
    for (const auto& p : pts) {
        if (p.noisy) continue;
        (p.p.x() >= 0 ? in_big : in_small) += 1.0;
    }
    double n = in_big + in_small;
    // Chi-square with 1 dof; critical value at 1% significance is 6.635.
    double stat = chi_square_2bins(in_big, 0.9 * n, in_small, 0.1 * n);
    EXPECT_LT(stat, 6.635);
}

TEST(SampleSurface, DeterministicPerSeed) {
    auto mesh = geo::icosphere(0.5, 1);
    auto a = geo::sample_surface_points(mesh, 500.0, 0.1, 9);
    auto b = geo::sample_surface_points(mesh, 500.0, 0.1, 9);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].p, b[i].p);
}

TEST(SampleSurface, ZeroAreaMeshEmpty) {
    geo::TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    mesh.triangles = {{0, 1, 2}};
    mesh.compute_normals();
    EXPECT_TRUE(geo::sample_surface_points(mesh, 100.0, 0.0, 1).empty());
}

TEST(Analytic, SphereValues) {
    auto s = AnalyticShape::sphere(0.5);
    EXPECT_NEAR(s.sdf(Vec3(0, 0, 0)).d, -0.5, 1e-15);
    auto q = s.sdf(Vec3(1, 0, 0));
    EXPECT_NEAR(q.d, 0.5, 1e-15);
    EXPECT_LT((q.grad - Vec3(1, 0, 0)).norm(), 1e-15);
}

TEST(Analytic, BoxCornerRegion) {
    auto b = AnalyticShape::box(Vec3(0.5, 0.5, 0.5));
    auto q = b.sdf(Vec3(0.7, 0.7, 0.7));
    EXPECT_NEAR(q.d, Vec3(0.2, 0.2, 0.2).norm(), 1e-12);
    EXPECT_NEAR(q.d, 0.34641016151, 1e-9);
}

TEST(Analytic, GradientsMatchFiniteDifferences) {
    std::vector<AnalyticShape> shapes = {
        AnalyticShape::sphere(0.5), AnalyticShape::box(Vec3(0.5, 0.35, 0.25)),
        AnalyticShape::torus(0.35, 0.15), AnalyticShape::half_space(Vec3(0, 0, 1), 0.0)};
    Rng rng(21);
    const double h = 1e-5;
    for (const auto& shape : shapes) {
        int checked = 0;
        while (checked < 200) {
            Vec3 y = rng.uniform_in_box(Vec3(-0.7, -0.7, -0.7), Vec3(0.7, 0.7, 0.7));
            auto q = shape.sdf(y);
            // Stay away from surfaces of non-differentiability (medial axis,
            // box face/edge seams) where one-sided behavior dominates.
            Vec3 fd;
            bool clean = true;
            for (int k = 0; k < 3; ++k) {
                Vec3 yp = y, ym = y;
                yp[k] += h;
                ym[k] -= h;
                double dp = shape.sdf(yp).d, dm = shape.sdf(ym).d;
                fd[k] = (dp - dm) / (2 * h);
            }
            if ((fd - q.grad).norm() > 0.5) {
                // Crossed a gradient discontinuity; resample.
                clean = false;
            }
            if (!clean) continue;
            ++checked;
            EXPECT_LT((fd - q.grad).cwiseAbs().maxCoeff(), 1e-6);
            if (std::abs(q.d) > 1e-3) EXPECT_NEAR(q.grad.norm(), 1.0, 1e-9);
        }
    }
}

TEST(Obj, RoundTrip) {
    namespace fs = std::filesystem;
    auto mesh = geo::icosphere(0.5, 1);
    fs::path path = fs::temp_directory_path() / "sdfsim_roundtrip.obj";
    geo::save_obj(mesh, path);
    auto back = geo::load_obj(path);
    ASSERT_EQ(back.vertices.size(), mesh.vertices.size());
    ASSERT_EQ(back.triangles.size(), mesh.triangles.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        EXPECT_LT((mesh.vertices[i] - back.vertices[i]).norm(), 1e-7);
    fs::remove(path);
}

TEST(Obj, FaceIndexVariants) {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "sdfsim_variants.obj";
    {
        std::ofstream f(path);
        f << "v 0 0 0\nv 1 0 0\nv 0 1 0\n";
        f << "f 1/2/3 2//1 3/4\n";  // all index syntaxes at once
    }
    auto mesh = geo::load_obj(path);
    EXPECT_EQ(mesh.triangles.size(), 1u);
    EXPECT_EQ(mesh.triangles[0], (std::array<int, 3>{0, 1, 2}));
    fs::remove(path);
}

TEST(Mesh, RescaleToHalf) {
    auto mesh = geo::icosphere(1.7, 1);
    double s = mesh.rescale_to(0.5);
    EXPECT_NEAR(mesh.max_abs_coord(), 0.5, 1e-12);
    EXPECT_NEAR(s, 0.5 / 1.7, 1e-12);
}

TEST(MarchingCubes, SphereLevelSet) {
    auto shape = AnalyticShape::sphere(0.5);
    int res = 64;
    auto iso = geo::extract_isosurface([&](const Vec3& y) { return shape.sdf(y).d; }, res);
    ASSERT_FALSE(iso.empty);
    double cell = 1.4 / res;
    for (const auto& v : iso.mesh.vertices) EXPECT_NEAR(v.norm(), 0.5, 2 * cell);
}

TEST(MarchingCubes, HalfSpacePlane) {
    auto shape = AnalyticShape::half_space(Vec3(0, 0, 1), 0.0);
    int res = 32;
    auto iso = geo::extract_isosurface([&](const Vec3& y) { return shape.sdf(y).d; }, res);
    ASSERT_FALSE(iso.empty);
    double cell = 1.4 / res;
    for (const auto& v : iso.mesh.vertices) EXPECT_LT(std::abs(v.z()), cell);
}

TEST(MarchingCubes, EmptyLevelSetFlagged) {
    auto iso = geo::extract_isosurface([](const Vec3&) { return 1.0; }, 16);
    EXPECT_TRUE(iso.empty);
    EXPECT_TRUE(iso.mesh.triangles.empty());
}
