#include "railsim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "railsim/rng.hpp"

namespace railsim {

namespace {

Vec3 ned_point_to_enu(const Vec3& p) { return Vec3{p.y, p.x, -p.z}; }

Vec3 tangent_enu(const std::vector<Vec3>& pts, std::size_t i) {
    const std::size_t n = pts.size();
    const std::size_t lo = i > 0 ? i - 1 : 0;
    const std::size_t hi = i + 1 < n ? i + 1 : n - 1;
    Vec3 t = pts[hi] - pts[lo];
    t.z = 0.0;
    const double len = t.norm();
    if (len < 1e-12) throw std::runtime_error("degenerate track tangent");
    return t / len;
}

// Right-hand side of travel, horizontal, in ENU.
Vec3 right_enu(const Vec3& t) { return Vec3{t.y, -t.x, 0.0}; }

void add_tri(std::vector<Triangle>& tris, const Vec3& a, const Vec3& b,
             const Vec3& c) {
    tris.push_back(Triangle{a, b, c});
}

void add_quad(std::vector<Triangle>& tris, const Vec3& a, const Vec3& b,
              const Vec3& c, const Vec3& d) {
    add_tri(tris, a, b, c);
    add_tri(tris, a, c, d);
}

// Axis-aligned-in-local-frame box spanned by orthonormal axes (u, v, w).
void add_box(std::vector<Triangle>& tris, const Vec3& center, const Vec3& u,
             const Vec3& v, const Vec3& w, double hu, double hv, double hw) {
    Vec3 corner[8];
    for (int i = 0; i < 8; ++i) {
        const double su = (i & 1) ? hu : -hu;
        const double sv = (i & 2) ? hv : -hv;
        const double sw = (i & 4) ? hw : -hw;
        corner[i] = center + u * su + v * sv + w * sw;
    }
    add_quad(tris, corner[0], corner[1], corner[3], corner[2]);  // -w
    add_quad(tris, corner[4], corner[6], corner[7], corner[5]);  // +w
    add_quad(tris, corner[0], corner[4], corner[5], corner[1]);  // -v
    add_quad(tris, corner[2], corner[3], corner[7], corner[6]);  // +v
    add_quad(tris, corner[0], corner[2], corner[6], corner[4]);  // -u
    add_quad(tris, corner[1], corner[5], corner[7], corner[3]);  // +u
}

// unit icosahedron with one subdivision: 80 faces
std::vector<Triangle> icosphere() {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& p : v) p = p.normalized();
    const int f[20][3] = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    std::vector<Triangle> out;
    for (const auto& face : f) {
        const Vec3 a = v[face[0]], b = v[face[1]], c = v[face[2]];
        const Vec3 ab = ((a + b) * 0.5).normalized();
        const Vec3 bc = ((b + c) * 0.5).normalized();
        const Vec3 ca = ((c + a) * 0.5).normalized();
        add_tri(out, a, ab, ca);
        add_tri(out, b, bc, ab);
        add_tri(out, c, ca, bc);
        add_tri(out, ab, bc, ca);
    }
    return out;
}

void add_cone(std::vector<Triangle>& tris, const Vec3& base, double radius,
              double height, int segments = 10) {
    const Vec3 apex = base + Vec3{0, 0, height};
    for (int i = 0; i < segments; ++i) {
        const double a0 = 2.0 * M_PI * i / segments;
        const double a1 = 2.0 * M_PI * (i + 1) / segments;
        const Vec3 p0 = base + Vec3{radius * std::cos(a0), radius * std::sin(a0), 0};
        const Vec3 p1 = base + Vec3{radius * std::cos(a1), radius * std::sin(a1), 0};
        add_tri(tris, p0, p1, apex);
        add_tri(tris, p1, p0, base);
    }
}

void add_cylinder(std::vector<Triangle>& tris, const Vec3& base, double radius,
                  double height, int segments = 8) {
    for (int i = 0; i < segments; ++i) {
        const double a0 = 2.0 * M_PI * i / segments;
        const double a1 = 2.0 * M_PI * (i + 1) / segments;
        const Vec3 r0{radius * std::cos(a0), radius * std::sin(a0), 0};
        const Vec3 r1{radius * std::cos(a1), radius * std::sin(a1), 0};
        const Vec3 up{0, 0, height};
        add_quad(tris, base + r0, base + r1, base + r1 + up, base + r0 + up);
        add_tri(tris, base + r1, base + r0, base);
        add_tri(tris, base + r0 + up, base + r1 + up, base + up);
    }
}

Vec3 transform_placed(const Vec3& p, const Placement& pl) {
    const double c = std::cos(pl.yaw), s = std::sin(pl.yaw);
    const Vec3 scaled = p * pl.scale;
    return Vec3{pl.position.x + c * scaled.x - s * scaled.y,
                pl.position.y + s * scaled.x + c * scaled.y,
                pl.position.z + scaled.z};
}

// piecewise-linear interpolation of track points at arc length s (index units)
Vec3 track_point_at(const std::vector<Vec3>& pts, double ds, double s) {
    const double u = std::clamp(s / ds, 0.0, (double)(pts.size() - 1));
    const std::size_t i = std::min((std::size_t)u, pts.size() - 2);
    const double f = u - (double)i;
    return pts[i] + (pts[i + 1] - pts[i]) * f;
}

struct TrackEnu {
    std::vector<Vec3> pts;  // ENU
    double ds = 1.0;
    double length = 0.0;
};

TrackEnu to_enu(const Track& track) {
    TrackEnu out;
    out.pts.reserve(track.points.size());
    for (const Vec3& p : track.points) out.pts.push_back(ned_point_to_enu(p));
    if (out.pts.size() > 1) out.ds = (out.pts[1] - out.pts[0]).norm();
    out.length = out.ds * (double)(out.pts.size() - 1);
    return out;
}

}  // namespace

const char* semantic_class_name(SemanticClass c) {
    switch (c) {
        case SemanticClass::Terrain: return "Terrain";
        case SemanticClass::Trackbed: return "Trackbed";
        case SemanticClass::RailTrack: return "RailTrack";
        case SemanticClass::Pole: return "Pole";
        case SemanticClass::Catenary: return "Catenary";
        case SemanticClass::Tree: return "Tree";
        case SemanticClass::Rock: return "Rock";
        case SemanticClass::Building: return "Building";
        case SemanticClass::Fence: return "Fence";
        case SemanticClass::Tunnel: return "Tunnel";
        case SemanticClass::Bridge: return "Bridge";
        case SemanticClass::Platform: return "Platform";
        case SemanticClass::Background: return "Background";
    }
    throw std::invalid_argument("unknown semantic class");
}

SemanticClass semantic_class_from_name(const std::string& name) {
    for (int i = 0; i < kSemanticClassCount; ++i) {
        const SemanticClass c = (SemanticClass)i;
        if (name == semantic_class_name(c)) return c;
    }
    throw std::invalid_argument("unknown semantic class: " + name);
}

Material material_for(SemanticClass c) {
    const double deg = M_PI / 180.0;
    switch (c) {
        case SemanticClass::Terrain: return {0.55, 0.05, 90 * deg, 0.9};
        case SemanticClass::Trackbed: return {0.45, 0.05, 90 * deg, 0.9};
        case SemanticClass::RailTrack: return {0.20, 0.60, 30 * deg, 0.15};
        case SemanticClass::Pole: return {0.25, 0.50, 40 * deg, 0.3};
        case SemanticClass::Catenary: return {0.25, 0.50, 40 * deg, 0.3};
        case SemanticClass::Tree: return {0.50, 0.05, 85 * deg, 0.8};
        case SemanticClass::Rock: return {0.50, 0.10, 85 * deg, 0.7};
        case SemanticClass::Building: return {0.60, 0.15, 75 * deg, 0.6};
        case SemanticClass::Fence: return {0.30, 0.40, 45 * deg, 0.4};
        case SemanticClass::Tunnel: return {0.45, 0.10, 80 * deg, 0.8};
        case SemanticClass::Bridge: return {0.40, 0.25, 60 * deg, 0.5};
        case SemanticClass::Platform: return {0.55, 0.10, 85 * deg, 0.7};
        case SemanticClass::Background: return {0.0, 0.0, 90 * deg, 1.0};
    }
    throw std::invalid_argument("unknown semantic class");
}

void Aabb::expand(const Vec3& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
}

void Aabb::expand(const Aabb& other) {
    expand(other.lo);
    expand(other.hi);
}

bool Aabb::contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
}

void SceneObject::refresh_bounds() {
    bounds = Aabb{};
    for (const Triangle& t : triangles) {
        bounds.expand(t.a);
        bounds.expand(t.b);
        bounds.expand(t.c);
    }
}

std::vector<Placement> generate_spawn_points(const Railroad& railroad,
                                             const HeightMap& heightmap,
                                             const SpawnParams& params) {
    if (params.band_inner <= 0.0 || params.band_outer <= params.band_inner)
        throw std::invalid_argument("spawn band must satisfy 0 < inner < outer");
    const TrackLocator locator(railroad);
    const TrackEnu main = to_enu(railroad.main);
    const double length_km = main.length / 1000.0;

    struct ClassSpec {
        SemanticClass cls;
        const SpawnClassParams* p;
    };
    const ClassSpec specs[] = {
        {SemanticClass::Tree, &params.tree},
        {SemanticClass::Rock, &params.rock},
        {SemanticClass::Building, &params.building},
        {SemanticClass::Fence, &params.fence},
    };

    Rng rng(hash_combine(params.seed, 0x7370776eu));
    std::vector<Placement> accepted;
    for (const ClassSpec& spec : specs) {
        const int target = (int)std::round(spec.p->density_per_km * length_km);
        for (int k = 0; k < target; ++k) {
            for (int attempt = 0; attempt < params.max_attempts_per_object;
                 ++attempt) {
                const double s = rng.uniform(0.0, main.length);
                const double lateral = rng.uniform(params.band_inner,
                                                   params.band_outer);
                const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
                const double yaw = rng.uniform(0.0, 2.0 * M_PI);
                const double scale = rng.uniform(0.7, 1.4);
                const int size_class = (int)rng.uniform_int(0, 2);

                const std::size_t idx =
                    std::min((std::size_t)(s / main.ds), main.pts.size() - 1);
                const Vec3 base = track_point_at(main.pts, main.ds, s);
                const Vec3 r = right_enu(tangent_enu(main.pts, idx));
                const double e = base.x + side * lateral * r.x;
                const double n = base.y + side * lateral * r.y;

                const double radius = spec.p->footprint_radius * scale;
                const TrackLocator::Result near = locator.nearest(e, n);
                if (near.distance < std::max(spec.p->track_clearance,
                                             params.band_inner) ||
                    near.distance > params.band_outer)
                    continue;

                bool clear = true;
                for (const Placement& other : accepted) {
                    const double de = other.position.x - e;
                    const double dn = other.position.y - n;
                    if (std::hypot(de, dn) < radius + other.footprint_radius) {
                        clear = false;
                        break;
                    }
                }
                if (!clear) continue;

                Placement pl;
                pl.cls = spec.cls;
                pl.size_class = size_class;
                pl.position = Vec3{e, n, sample_height(heightmap, e, n)};
                pl.yaw = yaw;
                pl.scale = scale;
                pl.footprint_radius = radius;
                accepted.push_back(pl);
                break;
            }
        }
    }
    return accepted;
}

std::vector<SceneObject> build_track_geometry(const Railroad& railroad,
                                              const TrackGeomParams& params,
                                              int first_id) {
    std::vector<SceneObject> out;
    int next_id = first_id;
    auto emit = [&](SemanticClass cls, std::vector<Triangle>&& tris) {
        SceneObject obj;
        obj.instance_id = next_id++;
        obj.cls = cls;
        obj.material = material_for(cls);
        obj.triangles = std::move(tris);
        obj.refresh_bounds();
        out.push_back(std::move(obj));
    };

    for (std::size_t ti = 0; ti < railroad.track_count(); ++ti) {
        const Track& track = railroad.track(ti);
        if (track.points.size() < 2) continue;
        const TrackEnu enu = to_enu(track);
        const std::size_t n = enu.pts.size();

        // rails: one prism ribbon per side
        for (int side = -1; side <= 1; side += 2) {
            std::vector<Triangle> tris;
            const double off = side * params.gauge / 2.0;
            const double hw = params.rail_width / 2.0;
            std::vector<Vec3> lo_in(n), lo_out(n), hi_in(n), hi_out(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 r = right_enu(tangent_enu(enu.pts, i));
                const Vec3 base = enu.pts[i] + r * off;
                lo_in[i] = base - r * hw;
                lo_out[i] = base + r * hw;
                hi_in[i] = lo_in[i] + Vec3{0, 0, params.rail_height};
                hi_out[i] = lo_out[i] + Vec3{0, 0, params.rail_height};
            }
            for (std::size_t i = 0; i + 1 < n; ++i) {
                add_quad(tris, hi_in[i], hi_out[i], hi_out[i + 1], hi_in[i + 1]);
                add_quad(tris, lo_in[i], hi_in[i], hi_in[i + 1], lo_in[i + 1]);
                add_quad(tris, lo_out[i + 1], hi_out[i + 1], hi_out[i], lo_out[i]);
            }
            emit(SemanticClass::RailTrack, std::move(tris));
        }

        // sleepers + ballast share a Trackbed object
        {
            std::vector<Triangle> tris;
            for (double s = params.sleeper_pitch / 2.0; s < enu.length;
                 s += params.sleeper_pitch) {
                const Vec3 p = track_point_at(enu.pts, enu.ds, s);
                const std::size_t idx =
                    std::min((std::size_t)(s / enu.ds), n - 1);
                const Vec3 t = tangent_enu(enu.pts, idx);
                const Vec3 r = right_enu(t);
                const Vec3 center = p - Vec3{0, 0, params.sleeper_height / 2.0};
                add_box(tris, center, t, r, Vec3{0, 0, 1},
                        params.sleeper_depth / 2.0, params.sleeper_width / 2.0,
                        params.sleeper_height / 2.0);
            }
            const double top_z = -params.sleeper_height;
            const double bot_z = top_z - params.ballast_height;
            const double hw = params.ballast_width / 2.0;
            std::vector<Vec3> tl(n), tr(n), bl(n), br(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 r = right_enu(tangent_enu(enu.pts, i));
                tl[i] = enu.pts[i] - r * hw + Vec3{0, 0, top_z};
                tr[i] = enu.pts[i] + r * hw + Vec3{0, 0, top_z};
                bl[i] = enu.pts[i] - r * (hw + 0.5) + Vec3{0, 0, bot_z};
                br[i] = enu.pts[i] + r * (hw + 0.5) + Vec3{0, 0, bot_z};
            }
            for (std::size_t i = 0; i + 1 < n; ++i) {
                add_quad(tris, tl[i], tr[i], tr[i + 1], tl[i + 1]);
                add_quad(tris, bl[i], tl[i], tl[i + 1], bl[i + 1]);
                add_quad(tris, tr[i], br[i], br[i + 1], tr[i + 1]);
            }
            emit(SemanticClass::Trackbed, std::move(tris));
        }

        // catenary masts with arms
        for (double s = params.pole_interval / 2.0; s < enu.length;
             s += params.pole_interval) {
            const Vec3 p = track_point_at(enu.pts, enu.ds, s);
            const std::size_t idx = std::min((std::size_t)(s / enu.ds), n - 1);
            const Vec3 t = tangent_enu(enu.pts, idx);
            const Vec3 r = right_enu(t);
            const Vec3 base = p + r * params.pole_offset;

            std::vector<Triangle> mast;
            add_cylinder(mast, base, params.pole_radius, params.pole_height);
            emit(SemanticClass::Pole, std::move(mast));

            std::vector<Triangle> arm;
            const Vec3 arm_center = p + r * (params.pole_offset / 2.0) +
                                    Vec3{0, 0, params.pole_height - 0.3};
            add_box(arm, arm_center, r, t, Vec3{0, 0, 1},
                    params.pole_offset / 2.0, 0.05, 0.05);
            emit(SemanticClass::Catenary, std::move(arm));
        }

        // overlay structures per block
        for (const Block& b : track.blocks) {
            if (b.start_index >= n || b.end_index >= n) continue;
            if (b.type == BlockType::Tunnel) {
                std::vector<Triangle> tris;
                const int arch_segments = 8;
                const std::size_t stride = 2;
                std::vector<Vec3> prev_ring;
                for (std::size_t i = b.start_index; i <= b.end_index;
                     i += stride) {
                    const Vec3 r = right_enu(tangent_enu(enu.pts, i));
                    std::vector<Vec3> ring;
                    for (int k = 0; k <= arch_segments; ++k) {
                        const double a = M_PI * k / arch_segments;
                        ring.push_back(enu.pts[i] +
                                       r * (params.tunnel_radius * std::cos(a)) +
                                       Vec3{0, 0, params.tunnel_radius *
                                                      std::sin(a)});
                    }
                    if (!prev_ring.empty()) {
                        for (int k = 0; k < arch_segments; ++k)
                            add_quad(tris, prev_ring[k], prev_ring[k + 1],
                                     ring[k + 1], ring[k]);
                    }
                    prev_ring = std::move(ring);
                }
                emit(SemanticClass::Tunnel, std::move(tris));
            } else if (b.type == BlockType::Bridge) {
                std::vector<Triangle> tris;
                const double hw = params.bridge_deck_width / 2.0;
                std::vector<Vec3> tl, tr, bl, br;
                for (std::size_t i = b.start_index; i <= b.end_index; ++i) {
                    const Vec3 r = right_enu(tangent_enu(enu.pts, i));
                    const Vec3 top = enu.pts[i] - Vec3{0, 0, 0.45};
                    const Vec3 bot = top - Vec3{0, 0, params.bridge_deck_depth};
                    tl.push_back(top - r * hw);
                    tr.push_back(top + r * hw);
                    bl.push_back(bot - r * hw);
                    br.push_back(bot + r * hw);
                }
                for (std::size_t i = 0; i + 1 < tl.size(); ++i) {
                    add_quad(tris, tl[i], tr[i], tr[i + 1], tl[i + 1]);
                    add_quad(tris, br[i], bl[i], bl[i + 1], br[i + 1]);
                    add_quad(tris, bl[i], tl[i], tl[i + 1], bl[i + 1]);
                    add_quad(tris, tr[i], br[i], br[i + 1], tr[i + 1]);
                }
                emit(SemanticClass::Bridge, std::move(tris));
            } else if (b.type == BlockType::Station) {
                std::vector<Triangle> tris;
                for (std::size_t i = b.start_index; i + 1 <= b.end_index;
                     i += 4) {
                    const std::size_t j = std::min(i + 4, b.end_index);
                    const Vec3 r = right_enu(tangent_enu(enu.pts, i));
                    const Vec3 t = tangent_enu(enu.pts, i);
                    const Vec3 mid = (enu.pts[i] + enu.pts[j]) * 0.5 +
                                     r * (params.platform_offset +
                                          params.platform_width / 2.0) +
                                     Vec3{0, 0, params.platform_height / 2.0};
                    add_box(tris, mid, t, r, Vec3{0, 0, 1},
                            (enu.pts[j] - enu.pts[i]).norm() / 2.0,
                            params.platform_width / 2.0,
                            params.platform_height / 2.0);
                }
                emit(SemanticClass::Platform, std::move(tris));
            }
        }
    }
    return out;
}

std::vector<SceneObject> instantiate_objects(
    const std::vector<Placement>& placements, std::uint64_t seed,
    int first_id) {
    std::vector<SceneObject> out;
    out.reserve(placements.size());
    for (std::size_t i = 0; i < placements.size(); ++i) {
        const Placement& pl = placements[i];
        Rng rng(hash_combine(hash_combine(seed, 0x6d657368u), i));
        const int variant = (int)rng.uniform_int(0, 2);

        std::vector<Triangle> local;
        switch (pl.cls) {
            case SemanticClass::Tree: {
                const double trunk_h = 1.2 + 0.3 * variant;
                add_cylinder(local, Vec3{0, 0, 0}, 0.18, trunk_h);
                if (variant == 0) {
                    add_cone(local, Vec3{0, 0, trunk_h}, 1.4, 2.8);
                } else if (variant == 1) {
                    add_cone(local, Vec3{0, 0, trunk_h}, 1.5, 1.8);
                    add_cone(local, Vec3{0, 0, trunk_h + 1.1}, 1.1, 1.6);
                } else {
                    for (const Triangle& t : icosphere()) {
                        const Vec3 c{0, 0, trunk_h + 1.3};
                        add_tri(local,
                                c + Vec3{t.a.x * 1.2, t.a.y * 1.2, t.a.z * 1.5},
                                c + Vec3{t.b.x * 1.2, t.b.y * 1.2, t.b.z * 1.5},
                                c + Vec3{t.c.x * 1.2, t.c.y * 1.2, t.c.z * 1.5});
                    }
                }
                break;
            }
            case SemanticClass::Rock: {
                const double deform = 0.15 + 0.1 * variant;
                std::size_t vid = 0;
                for (const Triangle& t : icosphere()) {
                    auto bump = [&](const Vec3& p) {
                        const std::uint64_t h = hash_combine(
                            hash_combine(seed, (std::uint64_t)(variant + 11)),
                            (std::uint64_t)std::llround(p.x * 512) * 31 +
                                (std::uint64_t)std::llround(p.y * 512) * 7 +
                                (std::uint64_t)std::llround(p.z * 512));
                        const double f =
                            1.0 + deform * (2.0 * u64_to_unit_double(mix64(h)) - 1.0);
                        return Vec3{p.x * f, p.y * 0.85 * f,
                                    (p.z * 0.6 + 0.45) * f};
                    };
                    add_tri(local, bump(t.a), bump(t.b), bump(t.c));
                    ++vid;
                }
                (void)vid;
                break;
            }
            case SemanticClass::Building: {
                const double hx = variant == 0 ? 4.0 : (variant == 1 ? 3.0 : 5.5);
                const double hy = variant == 1 ? 3.0 : 2.5;
                const double wall_h = 3.0 + 0.5 * variant;
                add_box(local, Vec3{0, 0, wall_h / 2.0}, Vec3{1, 0, 0},
                        Vec3{0, 1, 0}, Vec3{0, 0, 1}, hx, hy, wall_h / 2.0);
                // gabled roof: ridge along x
                const Vec3 r0{-hx, -hy, wall_h}, r1{hx, -hy, wall_h};
                const Vec3 r2{hx, hy, wall_h}, r3{-hx, hy, wall_h};
                const Vec3 g0{-hx, 0, wall_h + 1.2}, g1{hx, 0, wall_h + 1.2};
                add_quad(local, r0, r1, g1, g0);
                add_quad(local, g0, g1, r2, r3);
                add_tri(local, r1, r2, g1);
                add_tri(local, r3, r0, g0);
                break;
            }
            case SemanticClass::Fence: {
                const int posts = 5 + 2 * variant;
                const double spacing = 1.2;
                const double x0 = -spacing * (posts - 1) / 2.0;
                for (int k = 0; k < posts; ++k)
                    add_box(local, Vec3{x0 + k * spacing, 0, 0.55},
                            Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1},
                            0.05, 0.05, 0.55);
                for (double z : {0.45, 0.95})
                    add_box(local, Vec3{0, 0, z}, Vec3{1, 0, 0}, Vec3{0, 1, 0},
                            Vec3{0, 0, 1}, spacing * (posts - 1) / 2.0, 0.03,
                            0.05);
                break;
            }
            default:
                throw std::invalid_argument(
                    "placement class has no procedural mesh");
        }

        SceneObject obj;
        obj.instance_id = first_id + (int)i;
        obj.cls = pl.cls;
        obj.material = material_for(pl.cls);
        obj.triangles.reserve(local.size());
        for (const Triangle& t : local)
            obj.triangles.push_back(Triangle{transform_placed(t.a, pl),
                                             transform_placed(t.b, pl),
                                             transform_placed(t.c, pl)});
        obj.refresh_bounds();
        out.push_back(std::move(obj));
    }
    return out;
}

std::vector<SceneObject> build_terrain_geometry(const HeightMap& map, int step,
                                                int chunk_cells, int first_id) {
    if (step < 1 || chunk_cells < 1)
        throw std::invalid_argument("step and chunk size must be positive");
    std::vector<SceneObject> out;
    int next_id = first_id;

    const int vr = (map.rows - 1) / step;  // sampled cells per axis
    const int vc = (map.cols - 1) / step;
    auto vertex = [&](int r, int c) {
        const int rr = std::min(r * step, map.rows - 1);
        const int cc = std::min(c * step, map.cols - 1);
        return Vec3{map.origin_e + cc * map.spacing,
                    map.origin_n + rr * map.spacing, map.at(rr, cc)};
    };

    for (int cr = 0; cr < vr; cr += chunk_cells) {
        for (int cc = 0; cc < vc; cc += chunk_cells) {
            SceneObject obj;
            obj.instance_id = next_id++;
            obj.cls = SemanticClass::Terrain;
            obj.material = material_for(SemanticClass::Terrain);
            const int er = std::min(cr + chunk_cells, vr);
            const int ec = std::min(cc + chunk_cells, vc);
            for (int r = cr; r < er; ++r) {
                for (int c = cc; c < ec; ++c) {
                    const Vec3 v00 = vertex(r, c);
                    const Vec3 v01 = vertex(r, c + 1);
                    const Vec3 v10 = vertex(r + 1, c);
                    const Vec3 v11 = vertex(r + 1, c + 1);
                    add_tri(obj.triangles, v00, v01, v11);
                    add_tri(obj.triangles, v00, v11, v10);
                }
            }
            obj.refresh_bounds();
            out.push_back(std::move(obj));
        }
    }
    return out;
}

std::size_t Scene::triangle_count() const {
    std::size_t n = 0;
    for (const SceneObject& o : objects) n += o.triangles.size();
    return n;
}

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write((const char*)&v, sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v;
    in.read((char*)&v, sizeof(T));
    if (!in) throw std::runtime_error("scene file truncated");
    return v;
}

static_assert(sizeof(Triangle) == 9 * sizeof(double),
              "triangle serialization assumes a packed layout");

constexpr std::uint32_t kSceneMagic = 0x4e435352;  // "RSCN" little-endian
constexpr std::uint32_t kSceneVersion = 1;

}  // namespace

void write_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    put(out, kSceneMagic);
    put(out, kSceneVersion);
    put(out, (std::uint32_t)scene.objects.size());
    for (const SceneObject& o : scene.objects) {
        put(out, (std::int32_t)o.instance_id);
        put(out, (std::uint16_t)o.cls);
        put(out, (std::uint16_t)0);
        put(out, o.material.rho_d);
        put(out, o.material.rho_s);
        put(out, o.material.theta_max);
        put(out, o.material.roughness);
        put(out, (std::uint32_t)o.triangles.size());
        out.write((const char*)o.triangles.data(),
                  (std::streamsize)(o.triangles.size() * sizeof(Triangle)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Scene read_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    if (get<std::uint32_t>(in) != kSceneMagic)
        throw std::runtime_error("not a scene file: " + path);
    if (get<std::uint32_t>(in) != kSceneVersion)
        throw std::runtime_error("unsupported scene version");
    const std::uint32_t count = get<std::uint32_t>(in);
    Scene scene;
    scene.objects.resize(count);
    for (SceneObject& o : scene.objects) {
        o.instance_id = get<std::int32_t>(in);
        o.cls = (SemanticClass)get<std::uint16_t>(in);
        (void)get<std::uint16_t>(in);
        o.material.rho_d = get<double>(in);
        o.material.rho_s = get<double>(in);
        o.material.theta_max = get<double>(in);
        o.material.roughness = get<double>(in);
        const std::uint32_t tris = get<std::uint32_t>(in);
        o.triangles.resize(tris);
        in.read((char*)o.triangles.data(),
                (std::streamsize)(tris * sizeof(Triangle)));
        if (!in) throw std::runtime_error("scene file truncated");
        o.refresh_bounds();
    }
    return scene;
}

void export_obj(const Scene& scene, const std::string& obj_path,
                const std::string& sidecar_path) {
    std::ofstream out(obj_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + obj_path);
    nlohmann::json sidecar = nlohmann::json::array();
    std::size_t vbase = 1;
    char buf[160];
    for (const SceneObject& o : scene.objects) {
        const std::string name = std::string(semantic_class_name(o.cls)) + "_" +
                                 std::to_string(o.instance_id);
        out << "o " << name << "\n";
        for (const Triangle& t : o.triangles) {
            for (const Vec3* v : {&t.a, &t.b, &t.c}) {
                std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", v->x,
                              v->y, v->z);
                out << buf;
            }
        }
        for (std::size_t i = 0; i < o.triangles.size(); ++i) {
            out << "f " << vbase + 3 * i << " " << vbase + 3 * i + 1 << " "
                << vbase + 3 * i + 2 << "\n";
        }
        vbase += 3 * o.triangles.size();

        nlohmann::json entry;
        entry["name"] = name;
        entry["class"] = semantic_class_name(o.cls);
        entry["instance"] = o.instance_id;
        entry["material"] = {{"rho_d", o.material.rho_d},
                             {"rho_s", o.material.rho_s},
                             {"theta_max", o.material.theta_max},
                             {"roughness", o.material.roughness}};
        sidecar.push_back(entry);
    }
    if (!out) throw std::runtime_error("write failed: " + obj_path);

    std::ofstream meta(sidecar_path, std::ios::binary);
    if (!meta) throw std::runtime_error("cannot open for writing: " + sidecar_path);
    meta << sidecar.dump(2) << "\n";
}

}  // namespace railsim
