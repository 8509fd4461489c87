#pragma once

#include <memory>
#include <variant>

#include "sdfsim/geometry/analytic.hpp"
#include "sdfsim/sdf/sdf_model.hpp"

namespace sdfsim::sdf {

// A queryable distance field in an object's reference frame at simulation
// scale: either a closed-form shape or a learned SDF. Learned models live in
// the rescaled training frame; queries map through `mesh_scale` so distances
// come back in simulation units.
class DistanceField {
public:
    DistanceField() : impl_(geo::AnalyticShape::sphere(0.5)) {}
    explicit DistanceField(geo::AnalyticShape shape) : impl_(std::move(shape)) {}
    explicit DistanceField(std::shared_ptr<const SdfModel> model) : impl_(std::move(model)) {
        require(std::get<1>(impl_) != nullptr, "config", "null SDF model");
    }

    bool is_learned() const { return impl_.index() == 1; }
    const geo::AnalyticShape* analytic() const { return std::get_if<geo::AnalyticShape>(&impl_); }
    const SdfModel* learned() const {
        auto* p = std::get_if<std::shared_ptr<const SdfModel>>(&impl_);
        return p ? p->get() : nullptr;
    }

    SdfQuery query(const Vec3& y) const {
        if (const auto* shape = analytic()) {
            auto r = shape->sdf(y);
            return make_query(y, r.d, r.grad);
        }
        return query_batch({y})[0];
    }

    std::vector<SdfQuery> query_batch(const std::vector<Vec3>& pts) const {
        std::vector<SdfQuery> out(pts.size());
        if (const auto* shape = analytic()) {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                auto r = shape->sdf(pts[i]);
                out[i] = make_query(pts[i], r.d, r.grad);
            }
            return out;
        }
        const SdfModel& m = *learned();
        const double s = m.mesh_scale;
        std::vector<Vec3> ref(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) ref[i] = pts[i] * s;
        std::vector<double> d;
        std::vector<Vec3> g;
        m.evaluate(ref, d, g);
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = make_query(pts[i], d[i] / s, g[i]);
        return out;
    }

    // Conservative bound on where the surface can be, for broad-phase tests.
    double bounding_radius() const {
        if (const auto* shape = analytic()) {
            switch (shape->kind) {
                case geo::AnalyticShape::Kind::Sphere: return shape->radius;
                case geo::AnalyticShape::Kind::Box: return shape->half_extents.norm();
                case geo::AnalyticShape::Kind::Torus: return shape->major_radius + shape->minor_radius;
                case geo::AnalyticShape::Kind::HalfSpace:
                    return std::numeric_limits<double>::infinity();
            }
        }
        // Learned fields cover the rescaled [-0.5, 0.5]^3 shape.
        return std::sqrt(3.0) * 0.5 / learned()->mesh_scale;
    }

private:
    std::variant<geo::AnalyticShape, std::shared_ptr<const SdfModel>> impl_;
};

}  // namespace sdfsim::sdf
