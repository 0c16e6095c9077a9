#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railsim/geom.hpp"
#include "railsim/multitrack.hpp"
#include "railsim/terrain.hpp"

namespace railsim {

// Stable ids: serialized in labels and scene files, never reorder.
enum class SemanticClass : std::uint16_t {
    Terrain = 0,
    Trackbed = 1,
    RailTrack = 2,
    Pole = 3,
    Catenary = 4,
    Tree = 5,
    Rock = 6,
    Building = 7,
    Fence = 8,
    Tunnel = 9,
    Bridge = 10,
    Platform = 11,
    Background = 12,
};
constexpr int kSemanticClassCount = 13;

const char* semantic_class_name(SemanticClass c);
SemanticClass semantic_class_from_name(const std::string& name);

struct Material {
    double rho_d = 0.5;      // diffuse coefficient
    double rho_s = 0.0;      // reflective coefficient
    double theta_max = 1.5707963267948966;  // rad, incidence cutoff
    double roughness = 0.5;
};

// Documented default table; invariants rho_d + rho_s <= 1, 0 < theta_max <= pi/2.
Material material_for(SemanticClass c);

struct Triangle {
    Vec3 a, b, c;  // ENU world
};

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p);
    void expand(const Aabb& other);
    bool contains(const Vec3& p) const;
    bool valid() const { return lo.x <= hi.x; }
};

struct SceneObject {
    int instance_id = 0;
    SemanticClass cls = SemanticClass::Background;
    Material material;
    std::vector<Triangle> triangles;
    Aabb bounds;

    void refresh_bounds();
};

struct Placement {
    SemanticClass cls = SemanticClass::Tree;
    int size_class = 0;          // mesh variant family selector
    Vec3 position;               // ENU, z snapped to terrain
    double yaw = 0.0;            // rad about ENU up
    double scale = 1.0;
    double footprint_radius = 1.0;  // m, scaled
};

struct SpawnClassParams {
    double density_per_km = 0.0;   // target objects per km of main track
    double footprint_radius = 1.0; // m, before scale
    double track_clearance = 6.0;  // m, centerline keep-out
};

struct SpawnParams {
    std::uint64_t seed = 0;
    double band_inner = 10.0;  // m from nearest track
    double band_outer = 80.0;
    int max_attempts_per_object = 60;
    SpawnClassParams tree{40.0, 2.0, 6.0};
    SpawnClassParams rock{15.0, 1.2, 5.0};
    SpawnClassParams building{4.0, 8.0, 14.0};
    SpawnClassParams fence{6.0, 4.0, 5.0};
};

struct TrackGeomParams {
    double gauge = 1.435;        // m, rail centerline separation
    double sleeper_pitch = 0.6;  // m
    double pole_interval = 50.0; // m
    double rail_width = 0.07;
    double rail_height = 0.17;
    double sleeper_width = 2.5;
    double sleeper_depth = 0.24;
    double sleeper_height = 0.12;
    double ballast_width = 4.0;
    double ballast_height = 0.3;
    double pole_offset = 3.0;
    double pole_height = 6.0;
    double pole_radius = 0.15;
    double tunnel_radius = 4.0;
    double tunnel_thickness = 0.3;
    double bridge_deck_width = 5.0;
    double bridge_deck_depth = 1.2;
    double platform_offset = 2.6;
    double platform_width = 3.0;
    double platform_height = 0.8;
};

// Rejection-sampled placements in the [band_inner, band_outer] annulus around
// the tracks: footprints pairwise disjoint and clear of every centerline,
// heights snapped to the terrain. Deterministic under seed.
std::vector<Placement> generate_spawn_points(const Railroad& railroad,
                                             const HeightMap& heightmap,
                                             const SpawnParams& params);

// Rails, sleepers, ballast, catenary masts, tunnel shells, bridge decks and
// station platforms for every track. Instance ids start at first_id.
std::vector<SceneObject> build_track_geometry(const Railroad& railroad,
                                              const TrackGeomParams& params,
                                              int first_id = 0);

// One of >= 3 procedural mesh variants per class, transformed by
// position/yaw/scale; ids start at first_id and increase by one.
std::vector<SceneObject> instantiate_objects(const std::vector<Placement>& placements,
                                             std::uint64_t seed,
                                             int first_id = 0);

// Ground mesh chunks (class Terrain) from the height map, sampled every
// `step` vertices and chunked for localized bounds.
std::vector<SceneObject> build_terrain_geometry(const HeightMap& map, int step,
                                                int chunk_cells, int first_id = 0);

struct Scene {
    std::vector<SceneObject> objects;

    std::size_t triangle_count() const;
};

// Binary container (triangle soup + object table); read(write(x)) == x.
void write_scene(const Scene& scene, const std::string& path);
Scene read_scene(const std::string& path);

// Debug export: OBJ groups per object plus a JSON sidecar mapping group
// names to class/instance/material.
void export_obj(const Scene& scene, const std::string& obj_path,
                const std::string& sidecar_path);

}  // namespace railsim
