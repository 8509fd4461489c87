#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sdfsim/core/rng.hpp"
#include "sdfsim/core/types.hpp"

namespace sdfsim::geo {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> normals;  // per-triangle outward unit normals; zero for degenerate triangles

    void compute_normals() {
        normals.resize(triangles.size());
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            const Vec3& a = vertices[triangles[t][0]];
            const Vec3& b = vertices[triangles[t][1]];
            const Vec3& c = vertices[triangles[t][2]];
            Vec3 n = (b - a).cross(c - a);
            double len = n.norm();
            normals[t] = len > 1e-14 ? Vec3(n / len) : Vec3::Zero();
        }
    }

    void validate() const {
        for (const auto& t : triangles)
            for (int i : t)
                require(i >= 0 && i < int(vertices.size()), "geometry", "triangle index out of range");
        require(normals.size() == triangles.size(), "geometry", "normals not computed");
    }

    double triangle_area(std::size_t t) const {
        const Vec3& a = vertices[triangles[t][0]];
        const Vec3& b = vertices[triangles[t][1]];
        const Vec3& c = vertices[triangles[t][2]];
        return 0.5 * (b - a).cross(c - a).norm();
    }

    double area() const {
        double s = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
        return s;
    }

    double max_abs_coord() const {
        double m = 0.0;
        for (const auto& v : vertices) m = std::max(m, v.cwiseAbs().maxCoeff());
        return m;
    }

    Vec3 centroid() const {
        Vec3 c = Vec3::Zero();
        for (const auto& v : vertices) c += v;
        return vertices.empty() ? c : Vec3(c / double(vertices.size()));
    }

    // Scales about the origin so that max |coordinate| becomes `target`.
    // Returns the factor applied.
    double rescale_to(double target = 0.5) {
        double m = max_abs_coord();
        require(m > 0.0, "geometry", "cannot rescale a mesh collapsed at the origin");
        double s = target / m;
        for (auto& v : vertices) v *= s;
        compute_normals();
        return s;
    }
};

// ---- Primitive meshes ------------------------------------------------------

inline TriangleMesh icosphere(double radius, int subdivisions) {
    TriangleMesh m;
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : m.vertices) v.normalize();
    m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
                   {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
                   {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 v = (m.vertices[a] + m.vertices[b]).normalized();
            m.vertices.push_back(v);
            int idx = int(m.vertices.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.triangles.size() * 4);
        for (const auto& tr : m.triangles) {
            int ab = mid(tr[0], tr[1]), bc = mid(tr[1], tr[2]), ca = mid(tr[2], tr[0]);
            next.push_back({tr[0], ab, ca});
            next.push_back({tr[1], bc, ab});
            next.push_back({tr[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.triangles = std::move(next);
    }
    for (auto& v : m.vertices) v *= radius;
    m.compute_normals();
    return m;
}

// Axis-aligned box centered at the origin, each face an m x m vertex grid.
inline TriangleMesh box_mesh(const Vec3& half_extents, int segments = 1) {
    TriangleMesh m;
    std::map<std::array<long long, 3>, int> dedup;
    auto vertex = [&](const Vec3& p) {
        std::array<long long, 3> key = {llround(p.x() * 1e9), llround(p.y() * 1e9), llround(p.z() * 1e9)};
        auto it = dedup.find(key);
        if (it != dedup.end()) return it->second;
        m.vertices.push_back(p);
        dedup[key] = int(m.vertices.size()) - 1;
        return int(m.vertices.size()) - 1;
    };
    const int n = segments;
    // axis = face normal direction, sign = +-1; (u, v) span the face.
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
            int ua = (axis + 1) % 3, va = (axis + 2) % 3;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    auto corner = [&](int di, int dj) {
                        Vec3 p;
                        p[axis] = sign * half_extents[axis];
                        p[ua] = (-1.0 + 2.0 * double(i + di) / n) * half_extents[ua];
                        p[va] = (-1.0 + 2.0 * double(j + dj) / n) * half_extents[va];
                        return vertex(p);
                    };
                    int v00 = corner(0, 0), v10 = corner(1, 0), v01 = corner(0, 1), v11 = corner(1, 1);
                    if (sign > 0) {
                        m.triangles.push_back({v00, v10, v11});
                        m.triangles.push_back({v00, v11, v01});
                    } else {
                        m.triangles.push_back({v00, v11, v10});
                        m.triangles.push_back({v00, v01, v11});
                    }
                }
            }
        }
    }
    m.compute_normals();
    return m;
}

// Flat square in the z=0 plane, normal +z, side length `side`.
inline TriangleMesh square_mesh(double side) {
    TriangleMesh m;
    double h = side / 2.0;
    m.vertices = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    m.compute_normals();
    return m;
}

// ---- Wavefront OBJ ---------------------------------------------------------

inline TriangleMesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "io", "cannot open mesh '" + path.string() + "'");
    TriangleMesh m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            double x, y, z;
            ss >> x >> y >> z;
            require(!ss.fail(), "io", "malformed vertex at " + path.string() + ":" + std::to_string(lineno));
            m.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // "f v", "f v/vt", "f v/vt/vn", "f v//vn" all start with the vertex index.
                int v = std::stoi(tok.substr(0, tok.find('/')));
                if (v < 0) v = int(m.vertices.size()) + v + 1;
                idx.push_back(v - 1);
            }
            require(idx.size() == 3, "io",
                    "non-triangular face at " + path.string() + ":" + std::to_string(lineno));
            m.triangles.push_back({idx[0], idx[1], idx[2]});
        }
        // vn/vt/usemtl etc. ignored; normals are recomputed from winding.
    }
    require(!m.vertices.empty() && !m.triangles.empty(), "io", "empty mesh in '" + path.string() + "'");
    m.compute_normals();
    m.validate();
    return m;
}

inline void save_obj(const TriangleMesh& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "io", "cannot open '" + path.string() + "' for writing");
    char buf[128];
    for (const auto& v : m.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& t : m.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    require(out.good(), "io", "short write to '" + path.string() + "'");
}

// ---- Surface sampling ------------------------------------------------------

struct SurfacePoint {
    Vec3 p;
    bool noisy = false;
};

// Area-proportional surface samples plus one Gaussian-offset copy of each.
// The on-surface count is round(density * area); deterministic per seed.
inline std::vector<SurfacePoint> sample_surface_points(const TriangleMesh& mesh, double density,
                                                       double noise_sigma, std::uint64_t seed) {
    require(density > 0.0, "config", "sampling density must be positive");
    double total = mesh.area();
    std::vector<SurfacePoint> out;
    if (total <= 0.0) return out;

    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        acc += mesh.triangle_area(t);
        cdf[t] = acc;
    }
    std::size_t count = std::size_t(std::llround(density * total));
    out.reserve(count * 2);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        double r = rng.uniform() * acc;
        std::size_t t = std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin();
        if (t >= cdf.size()) t = cdf.size() - 1;
        const Vec3& a = mesh.vertices[mesh.triangles[t][0]];
        const Vec3& b = mesh.vertices[mesh.triangles[t][1]];
        const Vec3& c = mesh.vertices[mesh.triangles[t][2]];
        double su = std::sqrt(rng.uniform());
        double v = rng.uniform();
        Vec3 p = a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v);
        out.push_back({p, false});
    }
    std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) out.push_back({out[i].p + rng.normal3(noise_sigma), true});
    return out;
}

}  // namespace sdfsim::geo
