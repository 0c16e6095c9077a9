#include "railsim/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace railsim {

namespace {

constexpr std::uint32_t kLeafLimit = 4;
constexpr int kBins = 16;

double surface_area(const Aabb& b) {
    if (!b.valid()) return 0.0;
    const double dx = b.hi.x - b.lo.x;
    const double dy = b.hi.y - b.lo.y;
    const double dz = b.hi.z - b.lo.z;
    return 2.0 * (dx * dy + dy * dz + dz * dx);
}

double axis_of(const Vec3& v, int axis) {
    return axis == 0 ? v.x : (axis == 1 ? v.y : v.z);
}

// slab test; returns entry distance or nothing
inline bool hit_box(const Aabb& box, const Vec3& o, const Vec3& inv_d,
                    double t_max, double& t_entry) {
    double t0 = (box.lo.x - o.x) * inv_d.x;
    double t1 = (box.hi.x - o.x) * inv_d.x;
    if (t0 > t1) std::swap(t0, t1);
    double near = t0, far = t1;

    t0 = (box.lo.y - o.y) * inv_d.y;
    t1 = (box.hi.y - o.y) * inv_d.y;
    if (t0 > t1) std::swap(t0, t1);
    near = std::max(near, t0);
    far = std::min(far, t1);

    t0 = (box.lo.z - o.z) * inv_d.z;
    t1 = (box.hi.z - o.z) * inv_d.z;
    if (t0 > t1) std::swap(t0, t1);
    near = std::max(near, t0);
    far = std::min(far, t1);

    if (near > far || far < 0.0 || near > t_max) return false;
    t_entry = near;
    return true;
}

// Moller-Trumbore, two-sided
inline bool hit_triangle(const Triangle& tri, const Vec3& o, const Vec3& d,
                         double t_min, double t_max, double& t_out) {
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 p = cross(d, e2);
    const double det = dot(e1, p);
    if (std::abs(det) < 1e-12) return false;
    const double inv_det = 1.0 / det;
    const Vec3 s = o - tri.a;
    const double u = dot(s, p) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 q = cross(s, e1);
    const double v = dot(d, q) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = dot(e2, q) * inv_det;
    if (t <= t_min || t > t_max) return false;
    t_out = t;
    return true;
}

}  // namespace

Accelerator::Accelerator(const Scene& scene, double t_min) : t_min_(t_min) {
    if (t_min <= 0.0) throw std::invalid_argument("t_min must be positive");
    for (std::uint32_t oi = 0; oi < scene.objects.size(); ++oi) {
        const SceneObject& obj = scene.objects[oi];
        for (const Triangle& t : obj.triangles) {
            if (!t.a.finite() || !t.b.finite() || !t.c.finite())
                throw std::invalid_argument("non-finite scene triangle");
            tris_.push_back(t);
            meta_.push_back(TriMeta{oi, obj.instance_id, obj.cls});
        }
    }
    const std::uint32_t n = (std::uint32_t)tris_.size();
    order_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) order_[i] = i;
    if (n == 0) return;

    std::vector<Aabb> boxes(n);
    std::vector<Vec3> centroids(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        boxes[i].expand(tris_[i].a);
        boxes[i].expand(tris_[i].b);
        boxes[i].expand(tris_[i].c);
        centroids[i] = (tris_[i].a + tris_[i].b + tris_[i].c) / 3.0;
    }
    nodes_.reserve(2 * n);
    build_node(boxes, centroids, 0, n);
}

std::uint32_t Accelerator::build_node(std::vector<Aabb>& boxes,
                                      std::vector<Vec3>& centroids,
                                      std::uint32_t first, std::uint32_t count) {
    const std::uint32_t index = (std::uint32_t)nodes_.size();
    nodes_.push_back(Node{});
    Node node;
    Aabb cbox;
    for (std::uint32_t i = first; i < first + count; ++i) {
        node.box.expand(boxes[order_[i]]);
        cbox.expand(centroids[order_[i]]);
    }

    bool split_done = false;
    if (count > kLeafLimit) {
        // binned SAH on the widest centroid axis
        const Vec3 ext = cbox.hi - cbox.lo;
        int axis = 0;
        if (ext.y > ext.x) axis = 1;
        if (ext.z > axis_of(ext, axis)) axis = 2;
        const double lo = axis_of(cbox.lo, axis);
        const double width = axis_of(ext, axis);
        if (width > 1e-12) {
            struct Bin {
                Aabb box;
                std::uint32_t count = 0;
            };
            Bin bins[kBins];
            auto bin_of = [&](std::uint32_t tri) {
                const double c = axis_of(centroids[tri], axis);
                int b = (int)((c - lo) / width * kBins);
                return std::clamp(b, 0, kBins - 1);
            };
            for (std::uint32_t i = first; i < first + count; ++i) {
                Bin& b = bins[bin_of(order_[i])];
                b.box.expand(boxes[order_[i]]);
                ++b.count;
            }
            double best_cost = std::numeric_limits<double>::infinity();
            int best_split = -1;
            for (int s = 1; s < kBins; ++s) {
                Aabb lbox, rbox;
                std::uint32_t lcount = 0, rcount = 0;
                for (int b = 0; b < s; ++b) {
                    if (bins[b].count) lbox.expand(bins[b].box);
                    lcount += bins[b].count;
                }
                for (int b = s; b < kBins; ++b) {
                    if (bins[b].count) rbox.expand(bins[b].box);
                    rcount += bins[b].count;
                }
                if (lcount == 0 || rcount == 0) continue;
                const double cost = surface_area(lbox) * lcount +
                                    surface_area(rbox) * rcount;
                if (cost < best_cost) {
                    best_cost = cost;
                    best_split = s;
                }
            }
            if (best_split >= 0) {
                auto mid_it = std::partition(
                    order_.begin() + first, order_.begin() + first + count,
                    [&](std::uint32_t tri) { return bin_of(tri) < best_split; });
                const std::uint32_t lcount =
                    (std::uint32_t)(mid_it - (order_.begin() + first));
                if (lcount > 0 && lcount < count) {
                    // keep both halves deterministic regardless of partition's
                    // internal order
                    std::sort(order_.begin() + first, mid_it);
                    std::sort(mid_it, order_.begin() + first + count);
                    node.left = build_node(boxes, centroids, first, lcount);
                    node.right =
                        build_node(boxes, centroids, first + lcount,
                                   count - lcount);
                    node.count = 0;
                    split_done = true;
                }
            }
        }
    }
    if (!split_done) {
        node.first = first;
        node.count = count;
        std::sort(order_.begin() + first, order_.begin() + first + count);
    }
    nodes_[index] = node;
    return index;
}

std::optional<Hit> Accelerator::cast(const Ray& ray) const {
    if (std::abs(ray.direction.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("ray direction must be unit length");
    if (!(ray.t_max > 0.0))
        throw std::invalid_argument("ray t_max must be positive");
    if (nodes_.empty()) return std::nullopt;

    const Vec3 inv_d{1.0 / ray.direction.x, 1.0 / ray.direction.y,
                     1.0 / ray.direction.z};

    double best_t = ray.t_max;
    std::uint32_t best_tri = 0;
    bool found = false;

    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        double t_entry;
        if (!hit_box(node.box, ray.origin, inv_d, best_t, t_entry)) continue;
        if (node.count > 0) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                const std::uint32_t tri = order_[i];
                double t;
                if (hit_triangle(tris_[tri], ray.origin, ray.direction, t_min_,
                                 best_t, t)) {
                    // strict ordering with index tiebreak keeps results
                    // independent of traversal order
                    if (t < best_t || (t == best_t && (!found || tri < best_tri))) {
                        best_t = t;
                        best_tri = tri;
                        found = true;
                    }
                }
            }
        } else {
            double tl = 0.0, tr = 0.0;
            const bool hl =
                hit_box(nodes_[node.left].box, ray.origin, inv_d, best_t, tl);
            const bool hr =
                hit_box(nodes_[node.right].box, ray.origin, inv_d, best_t, tr);
            if (hl && hr) {
                const std::uint32_t near = tl <= tr ? node.left : node.right;
                const std::uint32_t far = tl <= tr ? node.right : node.left;
                stack[top++] = far;
                stack[top++] = near;
            } else if (hl) {
                stack[top++] = node.left;
            } else if (hr) {
                stack[top++] = node.right;
            }
        }
    }
    if (!found) return std::nullopt;

    const Triangle& tri = tris_[best_tri];
    Hit hit;
    hit.t = best_t;
    hit.point = ray.origin + ray.direction * best_t;
    Vec3 n = cross(tri.b - tri.a, tri.c - tri.a).normalized();
    if (dot(n, ray.direction) > 0.0) n = n * -1.0;
    hit.normal = n;
    hit.triangle_index = best_tri;
    hit.object_index = meta_[best_tri].object_index;
    hit.instance_id = meta_[best_tri].instance_id;
    hit.cls = meta_[best_tri].cls;
    return hit;
}

std::vector<std::optional<Hit>> Accelerator::cast_batch(
    const std::vector<Ray>& rays) const {
    std::vector<std::optional<Hit>> out(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) out[i] = cast(rays[i]);
    return out;
}

}  // namespace railsim
