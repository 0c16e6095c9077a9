#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "railsim/scene.hpp"

namespace railsim {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
    double t_max = 1e9;
};

struct Hit {
    Vec3 point;
    double t = 0.0;
    Vec3 normal;  // unit, oriented toward the ray origin
    int instance_id = 0;
    SemanticClass cls = SemanticClass::Background;
    std::uint32_t triangle_index = 0;  // global flatten order of the scene
    std::uint32_t object_index = 0;    // index into the source scene's objects
};

// Binned-SAH bounding volume hierarchy over the scene's triangle soup.
// Read-only after construction; cast is safe from any number of threads.
class Accelerator {
  public:
    struct Node {
        Aabb box;
        std::uint32_t left = 0;   // internal: child node indices
        std::uint32_t right = 0;
        std::uint32_t first = 0;  // leaf: range into triangle_order()
        std::uint32_t count = 0;  // leaf iff count > 0
    };

    explicit Accelerator(const Scene& scene, double t_min = 1e-4);

    std::optional<Hit> cast(const Ray& ray) const;
    std::vector<std::optional<Hit>> cast_batch(const std::vector<Ray>& rays) const;

    std::size_t triangle_count() const { return tris_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::uint32_t>& triangle_order() const { return order_; }
    const Triangle& triangle(std::uint32_t global_index) const {
        return tris_[global_index];
    }
    double t_min() const { return t_min_; }

  private:
    struct TriMeta {
        std::uint32_t object_index;
        int instance_id;
        SemanticClass cls;
    };

    std::vector<Triangle> tris_;   // global flatten order
    std::vector<TriMeta> meta_;
    std::vector<std::uint32_t> order_;  // leaf ranges index into this
    std::vector<Node> nodes_;
    double t_min_;

    std::uint32_t build_node(std::vector<Aabb>& boxes, std::vector<Vec3>& centroids,
                             std::uint32_t first, std::uint32_t count);
};

}  // namespace railsim
