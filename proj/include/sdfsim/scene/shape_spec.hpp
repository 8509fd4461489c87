#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "sdfsim/geometry/analytic.hpp"
#include "sdfsim/geometry/mesh.hpp"

namespace sdfsim::scene {

// Geometric identity of a body: enough to rebuild its mesh, analytic field
// and surface-node set. `id()` keys trained SDF assets on disk.
struct ShapeSpec {
    enum class Kind { Sphere, Box, Floor };

    Kind kind = Kind::Sphere;
    double radius = 0.25;
    Vec3 half_extents = Vec3(0.25, 0.25, 0.25);
    double floor_extent = 1.6;  // half-width of the node patch on z = 0
    int floor_grid = 7;

    static ShapeSpec sphere(double r) {
        ShapeSpec s;
        s.kind = Kind::Sphere;
        s.radius = r;
        return s;
    }
    static ShapeSpec box(const Vec3& he) {
        ShapeSpec s;
        s.kind = Kind::Box;
        s.half_extents = he;
        return s;
    }
    static ShapeSpec floor(double extent = 1.6, int grid = 7) {
        ShapeSpec s;
        s.kind = Kind::Floor;
        s.floor_extent = extent;
        s.floor_grid = grid;
        return s;
    }

    std::string id() const {
        char buf[96];
        switch (kind) {
            case Kind::Sphere:
                std::snprintf(buf, sizeof(buf), "sphere_r%.3f", radius);
                break;
            case Kind::Box:
                std::snprintf(buf, sizeof(buf), "box_%.3fx%.3fx%.3f", half_extents.x(),
                              half_extents.y(), half_extents.z());
                break;
            case Kind::Floor:
                std::snprintf(buf, sizeof(buf), "floor");
                break;
        }
        return buf;
    }

    geo::AnalyticShape analytic() const {
        switch (kind) {
            case Kind::Sphere: return geo::AnalyticShape::sphere(radius);
            case Kind::Box: return geo::AnalyticShape::box(half_extents);
            case Kind::Floor: return geo::AnalyticShape::half_space(Vec3(0, 0, 1), 0.0);
        }
        return geo::AnalyticShape::sphere(radius);
    }

    // Triangle mesh at simulation scale. `detail` controls resolution:
    // icosphere subdivisions for spheres, per-face grid segments for boxes.
    geo::TriangleMesh build_mesh(int detail) const {
        switch (kind) {
            case Kind::Sphere: return geo::icosphere(radius, detail);
            case Kind::Box: return geo::box_mesh(half_extents, detail);
            case Kind::Floor: throw Error("config", "the floor has no mesh; it is a half-space");
        }
        return {};
    }

    nlohmann::json to_json() const {
        switch (kind) {
            case Kind::Sphere: return {{"kind", "sphere"}, {"radius", radius}};
            case Kind::Box:
                return {{"kind", "box"},
                        {"half_extents", {half_extents.x(), half_extents.y(), half_extents.z()}}};
            case Kind::Floor:
                return {{"kind", "floor"}, {"extent", floor_extent}, {"grid", floor_grid}};
        }
        return {};
    }

    static ShapeSpec from_json(const nlohmann::json& j) {
        std::string kind = j.at("kind");
        if (kind == "sphere") return sphere(j.at("radius"));
        if (kind == "box") {
            auto he = j.at("half_extents");
            return box(Vec3(he[0], he[1], he[2]));
        }
        if (kind == "floor") return floor(j.value("extent", 1.6), j.value("grid", 7));
        throw Error("io", "unknown shape kind '" + kind + "'");
    }
};

}  // namespace sdfsim::scene
