#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railsim/io.hpp"
#include "railsim/metrics.hpp"
#include "railsim/multitrack.hpp"
#include "railsim/route.hpp"
#include "railsim/scene.hpp"
#include "railsim/sensors.hpp"
#include "railsim/terrain.hpp"
#include "railsim/timeline.hpp"

namespace railsim {

// Everything a run needs, loadable from one JSON file. Sub-seeds for the
// independent random streams are derived from the master seed, so one
// (seed, config) pair pins the whole pipeline.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    RouteParams route;
    TrainParams train;
    AuxParams aux;                 // aux.seed is derived from `seed`
    TerrainParams terrain;         // terrain.seed is derived from `seed`
    double terrain_margin = 120.0;   // m beyond the track bounding box
    double keep_radius = 500.0;      // m, height-map tile retention
    SpawnParams spawn;             // spawn.seed is derived from `seed`
    TrackGeomParams track_geom;
    LidarConfig lidar;
    CameraConfig camera;
    ImuConfig imu;
    AmbientConfig ambient;
    int terrain_mesh_step = 4;       // height-map cells per ground vertex
    int terrain_chunk_cells = 64;    // ground-mesh chunk edge, vertices
    std::size_t max_lidar_frames = 0;  // 0 = run the full trajectory

    void reseed();  // re-derives the sub-seeds from `seed`
};

// Strict parse of the scenario JSON; relative sensor-config paths resolve
// against the scenario file's directory. Throws ConfigError.
ScenarioConfig load_scenario(const std::string& path, bool strict = true);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

// --- per-command output layout inside `out` ---
//   route:    route_points.txt, trajectory.txt, route_manifest.json
//   world:    railroad.json, heightmap.png(+_meta.json), world.rscn,
//             world_manifest.json
//   simulate: dataset/... (KITTI-like tree), dataset/manifest.json
// Each manifest is written last via a temp file + rename, so its presence
// marks a complete output.

struct RouteSummary {
    double route_length = 0.0;       // m
    std::size_t trajectory_samples = 0;
};

struct WorldSummary {
    std::size_t tracks = 0;
    std::size_t objects = 0;
    std::size_t triangles = 0;
    std::size_t tiles_total = 0;
    std::size_t tiles_kept = 0;
    std::uint64_t scene_hash = 0;  // FNV-1a of the scene container bytes
};

struct SimulateOptions {
    int threads = 0;            // <= 0: RAILSIM_THREADS env, then 1
    bool force = false;
    std::size_t resume_from = 0;   // first lidar/camera frame to (re)write
    int stream_port = -1;       // -1 off, 0 ephemeral, else fixed
    bool wait_for_client = false;
    double wait_timeout_s = 10.0;
};

struct SimulateSummary {
    std::size_t lidar_frames = 0;
    std::size_t camera_frames = 0;
    std::size_t imu_samples = 0;
    std::size_t timeline_events = 0;
    int stream_port = -1;       // bound port when streaming was enabled
    std::size_t stream_clients = 0;
};

RouteSummary cmd_route(const ScenarioConfig& cfg, const std::string& out,
                       bool force);
WorldSummary cmd_world(const ScenarioConfig& cfg, const std::string& out,
                       bool force);
// Needs cmd_route and cmd_world outputs in `out`.
SimulateSummary cmd_simulate(const ScenarioConfig& cfg, const std::string& out,
                             const SimulateOptions& options);

// Scan-to-scan ICP odometry against the dataset's pose ground truth; writes
// the per-step report next to the dataset and returns the summary.
struct ValidateOptions {
    std::size_t max_pairs = 25;   // consecutive frame pairs to register
    std::size_t subsample = 0;    // target points per cloud; 0 = auto (~400)
    std::string report_path;      // default <dataset>/validate_report.txt
};
OdometryReport cmd_validate(const std::string& dataset_dir,
                            const ValidateOptions& options = {});

// Frame-by-frame point-cloud RMSE between two datasets.
struct CompareReport {
    std::vector<double> rmse;  // one per common frame
    double mean = 0.0;
    double max = 0.0;
};
CompareReport cmd_compare(const std::string& dataset_a,
                          const std::string& dataset_b,
                          const std::string& report_path = "");

// Renders one camera frame (all enabled modalities) from a world built by
// cmd_world; writes preview_depth.png / preview_seg.png / preview_rgb.png.
void cmd_preview(const ScenarioConfig& cfg, const std::string& out,
                 const Pose& camera_pose_enu, bool force);

// Replays an existing dataset's point-cloud frames over TCP with the exact
// on-disk payload bytes; returns the number of frames published.
struct StreamOptions {
    int port = 0;
    bool wait_for_client = true;
    double wait_timeout_s = 10.0;
};
std::size_t cmd_stream(const std::string& dataset_dir,
                       const StreamOptions& options);

// FNV-1a over every regular file under `root` (sorted relative paths mixed
// with contents), for whole-tree determinism checks.
std::uint64_t hash_tree(const std::string& root);
std::uint64_t hash_file(const std::string& path);

int default_thread_count();  // RAILSIM_THREADS env, clamped to >= 1

}  // namespace railsim
