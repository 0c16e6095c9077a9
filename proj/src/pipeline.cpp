#include "railsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "config_fields.hpp"
#include "railsim/raycast.hpp"
#include "railsim/rng.hpp"

namespace railsim {

namespace fs = std::filesystem;
using detail::Fields;
using detail::load_object;
using nlohmann::json;

namespace {

// independent random streams, all pinned by the master seed
std::uint64_t lidar_noise_seed(const ScenarioConfig& cfg) {
    return hash_combine(cfg.seed, 0xD3D3);
}
std::uint64_t imu_noise_seed(const ScenarioConfig& cfg) {
    return hash_combine(cfg.seed, 0xE4E4);
}
std::uint64_t object_mesh_seed(const ScenarioConfig& cfg) {
    return hash_combine(cfg.seed, 0xF5F5);
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write: " + tmp);
        out << content;
    }
    fs::rename(tmp, path);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void require_fresh(const std::string& marker, bool force, const char* what) {
    if (!force && fs::exists(marker))
        throw ConfigError(std::string(what) + " output already exists at " +
                          marker + " (pass --force to overwrite)");
}

// --- scenario <-> json ---

json vec3_json(const Vec3& v) { return json{v.x, v.y, v.z}; }

json pose_json(const Pose& p) {
    double yaw, pitch, roll;
    p.orientation.to_euler_zyx(yaw, pitch, roll);
    return json{{"position", vec3_json(p.position)},
                {"yaw_pitch_roll", {yaw, pitch, roll}}};
}

json lidar_json(const LidarConfig& c) {
    return json{{"n_beams", c.n_beams},
                {"vertical_fov", c.vertical_fov},
                {"horizontal_fov", c.horizontal_fov},
                {"horizontal_resolution", c.horizontal_resolution},
                {"range", c.range},
                {"frame_period", c.frame_period},
                {"range_sigma", c.range_sigma},
                {"mount", pose_json(c.mount)}};
}

json camera_json(const CameraConfig& c) {
    return json{{"width", c.width},
                {"height", c.height},
                {"horizontal_fov", c.horizontal_fov},
                {"depth_max", c.depth_max},
                {"frame_period", c.frame_period},
                {"mount", pose_json(c.mount)},
                {"mode_depth", c.mode_depth},
                {"mode_segmentation", c.mode_segmentation},
                {"mode_shaded", c.mode_shaded}};
}

json axis_noise_json(const ImuAxisNoise& n) {
    return json{{"noise_density", n.noise_density},
                {"bias_instability", n.bias_instability},
                {"random_walk", n.random_walk}};
}

json imu_json(const ImuConfig& c) {
    double yaw, pitch, roll;
    c.mount.to_euler_zyx(yaw, pitch, roll);
    return json{{"misalignment", c.mis},
                {"bias_accel", vec3_json(c.bias_accel)},
                {"bias_gyro", vec3_json(c.bias_gyro)},
                {"bias_mag", vec3_json(c.bias_mag)},
                {"accel_noise", axis_noise_json(c.accel_noise)},
                {"gyro_noise", axis_noise_json(c.gyro_noise)},
                {"mag_noise", axis_noise_json(c.mag_noise)},
                {"quant_accel", c.quant_accel},
                {"quant_gyro", c.quant_gyro},
                {"quant_mag", c.quant_mag},
                {"mount_yaw_pitch_roll", {yaw, pitch, roll}},
                {"rate", c.rate},
                {"mag_field_ned", vec3_json(c.mag_field_ned)},
                {"gm_time_constant", c.gm_time_constant},
                {"gravity", c.gravity},
                {"specific_force", c.specific_force}};
}

json ambient_json(const AmbientConfig& c) {
    const char* slot = c.slot == SunSlot::Morning   ? "morning"
                       : c.slot == SunSlot::Evening ? "evening"
                                                    : "night";
    return json{{"sun_slot", slot}, {"fog_density", c.fog_density}};
}

json train_json(const TrainParams& p) {
    return json{{"bogie_spacing", p.bogie_spacing},
                {"a_max", p.a_max},
                {"d_max", p.d_max},
                {"a_lat_max", p.a_lat_max},
                {"line_speed", p.line_speed},
                {"sample_period", p.sample_period},
                {"station_cap", p.station_cap},
                {"tunnel_cap", p.tunnel_cap},
                {"bridge_cap", p.bridge_cap},
                {"initial_speed", p.initial_speed}};
}

json route_json(const RouteParams& p) {
    return json{{"n_blocks", p.n_blocks},
                {"block_length_min", p.block_length_min},
                {"block_length_max", p.block_length_max},
                {"min_curve_radius", p.min_curve_radius},
                {"max_curve_radius", p.max_curve_radius},
                {"p_curve", p.p_curve},
                {"p_bridge", p.p_bridge},
                {"p_tunnel", p.p_tunnel},
                {"p_station", p.p_station},
                {"ds", p.ds}};
}

json multitrack_json(const AuxParams& p) {
    return json{{"max_parallel", p.max_parallel},
                {"p_spawn", p.p_spawn},
                {"p_end", p.p_end},
                {"inter_track_distance", p.inter_track_distance},
                {"dead_end_length", p.dead_end_length},
                {"join_radius", p.join_radius},
                {"duplicate_main", p.duplicate_main}};
}

json terrain_json(const ScenarioConfig& cfg) {
    const TerrainParams& p = cfg.terrain;
    return json{{"d_near", p.d_near},
                {"d_far", p.d_far},
                {"amplitude", p.amplitude},
                {"octaves", p.octaves},
                {"base_wavelength", p.base_wavelength},
                {"valley_depth", p.valley_depth},
                {"valley_width", p.valley_width},
                {"station_dnear_multiplier", p.station_dnear_multiplier},
                {"margin", cfg.terrain_margin},
                {"keep_radius", cfg.keep_radius}};
}

json spawn_class_json(const SpawnClassParams& p) {
    return json{{"density_per_km", p.density_per_km},
                {"footprint_radius", p.footprint_radius},
                {"track_clearance", p.track_clearance}};
}

json spawn_json(const SpawnParams& p) {
    return json{{"band_inner", p.band_inner},
                {"band_outer", p.band_outer},
                {"max_attempts_per_object", p.max_attempts_per_object},
                {"tree", spawn_class_json(p.tree)},
                {"rock", spawn_class_json(p.rock)},
                {"building", spawn_class_json(p.building)},
                {"fence", spawn_class_json(p.fence)}};
}

json scenario_json(const ScenarioConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"route", route_json(cfg.route)},
                {"train", train_json(cfg.train)},
                {"multitrack", multitrack_json(cfg.aux)},
                {"terrain", terrain_json(cfg)},
                {"spawn", spawn_json(cfg.spawn)},
                {"lidar", lidar_json(cfg.lidar)},
                {"camera", camera_json(cfg.camera)},
                {"imu", imu_json(cfg.imu)},
                {"ambient", ambient_json(cfg.ambient)},
                {"simulate",
                 {{"terrain_mesh_step", cfg.terrain_mesh_step},
                  {"terrain_chunk_cells", cfg.terrain_chunk_cells},
                  {"max_lidar_frames", cfg.max_lidar_frames}}}};
}

RouteParams route_params_from_json(const json& j, bool strict) {
    Fields f(j, "scenario.route");
    RouteParams p;
    p.n_blocks = f.get<int>("n_blocks", p.n_blocks);
    p.block_length_min = f.get<double>("block_length_min", p.block_length_min);
    p.block_length_max = f.get<double>("block_length_max", p.block_length_max);
    p.min_curve_radius = f.get<double>("min_curve_radius", p.min_curve_radius);
    p.max_curve_radius = f.get<double>("max_curve_radius", p.max_curve_radius);
    p.p_curve = f.get<double>("p_curve", p.p_curve);
    p.p_bridge = f.get<double>("p_bridge", p.p_bridge);
    p.p_tunnel = f.get<double>("p_tunnel", p.p_tunnel);
    p.p_station = f.get<double>("p_station", p.p_station);
    p.ds = f.get<double>("ds", p.ds);
    f.finish(strict);
    return p;
}

AuxParams aux_params_from_json(const json& j, bool strict) {
    Fields f(j, "scenario.multitrack");
    AuxParams p;
    p.max_parallel = f.get<int>("max_parallel", p.max_parallel);
    p.p_spawn = f.get<double>("p_spawn", p.p_spawn);
    p.p_end = f.get<double>("p_end", p.p_end);
    p.inter_track_distance =
        f.get<double>("inter_track_distance", p.inter_track_distance);
    p.dead_end_length = f.get<double>("dead_end_length", p.dead_end_length);
    p.join_radius = f.get<double>("join_radius", p.join_radius);
    p.duplicate_main = f.get<bool>("duplicate_main", p.duplicate_main);
    f.finish(strict);
    return p;
}

void terrain_from_json(const json& j, bool strict, ScenarioConfig& cfg) {
    Fields f(j, "scenario.terrain");
    TerrainParams& p = cfg.terrain;
    p.d_near = f.get<double>("d_near", p.d_near);
    p.d_far = f.get<double>("d_far", p.d_far);
    p.amplitude = f.get<double>("amplitude", p.amplitude);
    p.octaves = f.get<int>("octaves", p.octaves);
    p.base_wavelength = f.get<double>("base_wavelength", p.base_wavelength);
    p.valley_depth = f.get<double>("valley_depth", p.valley_depth);
    p.valley_width = f.get<double>("valley_width", p.valley_width);
    p.station_dnear_multiplier =
        f.get<double>("station_dnear_multiplier", p.station_dnear_multiplier);
    cfg.terrain_margin = f.get<double>("margin", cfg.terrain_margin);
    cfg.keep_radius = f.get<double>("keep_radius", cfg.keep_radius);
    f.finish(strict);
}

SpawnClassParams spawn_class_from_json(const json& j, bool strict,
                                       const std::string& where,
                                       const SpawnClassParams& def) {
    Fields f(j, where);
    SpawnClassParams p = def;
    p.density_per_km = f.get<double>("density_per_km", p.density_per_km);
    p.footprint_radius = f.get<double>("footprint_radius", p.footprint_radius);
    p.track_clearance = f.get<double>("track_clearance", p.track_clearance);
    f.finish(strict);
    return p;
}

SpawnParams spawn_from_json(const json& j, bool strict) {
    Fields f(j, "scenario.spawn");
    SpawnParams p;
    p.band_inner = f.get<double>("band_inner", p.band_inner);
    p.band_outer = f.get<double>("band_outer", p.band_outer);
    p.max_attempts_per_object =
        f.get<int>("max_attempts_per_object", p.max_attempts_per_object);
    const struct {
        const char* key;
        SpawnClassParams* target;
    } classes[] = {{"tree", &p.tree},
                   {"rock", &p.rock},
                   {"building", &p.building},
                   {"fence", &p.fence}};
    for (const auto& c : classes) {
        if (f.has(c.key))
            *c.target = spawn_class_from_json(
                f.raw(c.key), strict, std::string("scenario.spawn.") + c.key,
                *c.target);
        else
            f.get<json>(c.key, json::object());
    }
    f.finish(strict);
    return p;
}

// inline object or a "<name>_config" path (relative to the scenario file)
template <typename T>
T sensor_section(Fields& f, const fs::path& base, const char* inline_key,
                 const char* path_key, bool strict,
                 T (*from_json)(const json&, bool, const std::string&),
                 T (*from_file)(const std::string&, bool)) {
    if (f.has(inline_key) && f.has(path_key))
        throw ConfigError(std::string("scenario: give either ") + inline_key +
                          " or " + path_key + ", not both");
    if (f.has(inline_key))
        return from_json(f.raw(inline_key), strict,
                         std::string("scenario.") + inline_key);
    f.get<json>(inline_key, json::object());
    if (f.has(path_key)) {
        fs::path p = f.get<std::string>(path_key, "");
        if (p.is_relative()) p = base / p;
        return from_file(p.string(), strict);
    }
    f.get<std::string>(path_key, "");
    return T{};
}

}  // namespace

void ScenarioConfig::reseed() {
    aux.seed = hash_combine(seed, 0xA0A0);
    terrain.seed = hash_combine(seed, 0xB1B1);
    spawn.seed = hash_combine(seed, 0xC2C2);
}

ScenarioConfig load_scenario(const std::string& path, bool strict) {
    Fields f(load_object(path), "scenario");
    const fs::path base = fs::path(path).parent_path();
    ScenarioConfig cfg;
    cfg.seed = f.get<std::uint64_t>("seed", cfg.seed);
    if (f.has("route"))
        cfg.route = route_params_from_json(f.raw("route"), strict);
    else
        f.get<json>("route", json::object());
    if (f.has("train"))
        cfg.train = detail::train_params_from_json(f.raw("train"), strict,
                                                   "scenario.train");
    else
        f.get<json>("train", json::object());
    if (f.has("multitrack"))
        cfg.aux = aux_params_from_json(f.raw("multitrack"), strict);
    else
        f.get<json>("multitrack", json::object());
    if (f.has("terrain"))
        terrain_from_json(f.raw("terrain"), strict, cfg);
    else
        f.get<json>("terrain", json::object());
    if (f.has("spawn"))
        cfg.spawn = spawn_from_json(f.raw("spawn"), strict);
    else
        f.get<json>("spawn", json::object());

    cfg.lidar = sensor_section<LidarConfig>(
        f, base, "lidar", "lidar_config", strict,
        &detail::lidar_config_from_json, &load_lidar_config_file);
    cfg.camera = sensor_section<CameraConfig>(
        f, base, "camera", "camera_config", strict,
        &detail::camera_config_from_json, &load_camera_config_file);
    cfg.imu = sensor_section<ImuConfig>(f, base, "imu", "imu_config", strict,
                                        &detail::imu_config_from_json,
                                        &load_imu_config_file);
    cfg.ambient = sensor_section<AmbientConfig>(
        f, base, "ambient", "ambient_config", strict,
        &detail::ambient_config_from_json, &load_ambient_config_file);

    if (f.has("simulate")) {
        Fields sf(f.raw("simulate"), "scenario.simulate");
        cfg.terrain_mesh_step =
            sf.get<int>("terrain_mesh_step", cfg.terrain_mesh_step);
        cfg.terrain_chunk_cells =
            sf.get<int>("terrain_chunk_cells", cfg.terrain_chunk_cells);
        cfg.max_lidar_frames = sf.get<std::uint64_t>(
            "max_lidar_frames", (std::uint64_t)cfg.max_lidar_frames);
        sf.finish(strict);
    } else {
        f.get<json>("simulate", json::object());
    }
    f.finish(strict);

    if (cfg.terrain_mesh_step < 1)
        throw ConfigError("scenario.simulate.terrain_mesh_step: must be >= 1");
    if (cfg.terrain_chunk_cells < 2)
        throw ConfigError("scenario.simulate.terrain_chunk_cells: must be >= 2");
    cfg.reseed();
    return cfg;
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    write_atomic(path, scenario_json(cfg).dump(2) + "\n");
}

// --- commands ---

RouteSummary cmd_route(const ScenarioConfig& cfg, const std::string& out,
                       bool force) {
    fs::create_directories(out);
    const std::string manifest = out + "/route_manifest.json";
    require_fresh(manifest, force, "route");

    const Route route = generate_route(cfg.seed, cfg.route);
    const VelocityProfile profile = velocity_profile(route, cfg.train);
    const std::vector<TrajectorySample> traj =
        generate_trajectory(route, profile, cfg.train);

    write_route_points(route, out + "/route_points.txt");
    write_trajectory(traj, out + "/trajectory.txt");

    RouteSummary sum;
    sum.route_length = route.total_length;
    sum.trajectory_samples = traj.size();
    write_atomic(manifest, json{{"command", "route"},
                                {"route_length", route.total_length},
                                {"trajectory_samples", traj.size()},
                                {"scenario", scenario_json(cfg)}}
                                   .dump(2) +
                               "\n");
    return sum;
}

namespace {

Railroad build_railroad(const ScenarioConfig& cfg, const Route& route) {
    Railroad rr = make_railroad(route, cfg.aux.inter_track_distance);
    if (cfg.aux.duplicate_main)
        rr.others.push_back(
            duplicate_main(route, cfg.aux.inter_track_distance));
    return generate_auxiliaries(rr, cfg.aux);
}

Scene build_scene(const ScenarioConfig& cfg, const Railroad& rr,
                  const HeightMap& map, std::size_t* n_placements) {
    Scene scene;
    scene.objects = build_track_geometry(rr, cfg.track_geom, 1);
    int next_id = (int)scene.objects.size() + 1;

    const std::vector<Placement> placements =
        generate_spawn_points(rr, map, cfg.spawn);
    if (n_placements) *n_placements = placements.size();
    std::vector<SceneObject> props =
        instantiate_objects(placements, object_mesh_seed(cfg), next_id);
    next_id += (int)props.size();
    for (SceneObject& o : props) scene.objects.push_back(std::move(o));

    std::vector<SceneObject> ground = build_terrain_geometry(
        map, cfg.terrain_mesh_step, cfg.terrain_chunk_cells, next_id);
    for (SceneObject& o : ground) scene.objects.push_back(std::move(o));
    return scene;
}

}  // namespace

WorldSummary cmd_world(const ScenarioConfig& cfg, const std::string& out,
                       bool force) {
    fs::create_directories(out);
    const std::string manifest = out + "/world_manifest.json";
    require_fresh(manifest, force, "world");

    const Route route = generate_route(cfg.seed, cfg.route);
    const Railroad rr = build_railroad(cfg, route);
    write_railroad(rr, out + "/railroad.json");

    HeightMap map = build_height_map(rr, cfg.terrain, cfg.terrain_margin);
    apply_valley(map, rr, cfg.terrain);
    write_height_png(map, out + "/heightmap.png",
                     out + "/heightmap_meta.json");

    const std::vector<SubMap> tiles = partition(map, rr, cfg.keep_radius);
    std::size_t kept = 0;
    for (const SubMap& t : tiles) kept += t.keep ? 1 : 0;

    std::size_t n_placements = 0;
    const Scene scene = build_scene(cfg, rr, map, &n_placements);
    write_scene(scene, out + "/world.rscn");

    WorldSummary sum;
    sum.tracks = rr.track_count();
    sum.objects = scene.objects.size();
    sum.triangles = scene.triangle_count();
    sum.tiles_total = tiles.size();
    sum.tiles_kept = kept;
    sum.scene_hash = hash_file(out + "/world.rscn");
    write_atomic(manifest, json{{"command", "world"},
                                {"tracks", sum.tracks},
                                {"objects", sum.objects},
                                {"placements", n_placements},
                                {"triangles", sum.triangles},
                                {"tiles_total", sum.tiles_total},
                                {"tiles_kept", sum.tiles_kept},
                                {"scene_hash", sum.scene_hash},
                                {"scenario", scenario_json(cfg)}}
                                   .dump(2) +
                               "\n");
    return sum;
}

namespace {

struct FrameJob {
    bool lidar = false;
    std::size_t frame = 0;
    AcquisitionEvent ev;
};

void run_jobs(const std::vector<FrameJob>& jobs, int threads,
              const std::function<void(const FrameJob&)>& work) {
    if (threads <= 1) {
        for (const FrameJob& j : jobs) work(j);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_m;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                work(jobs[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_m);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

std::string calib_text(const ScenarioConfig& cfg) {
    char buf[64];
    std::ostringstream out;
    const double fx =
        (cfg.camera.width / 2.0) / std::tan(cfg.camera.horizontal_fov / 2.0);
    const double values[12] = {fx,
                               0,
                               cfg.camera.width / 2.0,
                               0,
                               0,
                               fx,
                               cfg.camera.height / 2.0,
                               0,
                               0,
                               0,
                               1,
                               0};
    out << "P0:";
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out << buf;
    }
    out << "\nTr:";
    const Pose& m = cfg.lidar.mount;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            std::snprintf(buf, sizeof(buf), " %.17g", m.orientation.at(r, c));
            out << buf;
        }
        const double t[3] = {m.position.x, m.position.y, m.position.z};
        std::snprintf(buf, sizeof(buf), " %.17g", t[r]);
        out << buf;
    }
    out << "\n";
    return out.str();
}

std::uint64_t event_ns(const AcquisitionEvent& ev) {
    return (std::uint64_t)std::llround(ev.timestamp * 1e9);
}

// largest power-of-ten counts-per-meter that still fits 16-bit pixels
double depth_scale_for(double depth_max) {
    for (double scale : {1000.0, 100.0, 10.0, 1.0}) {
        try {
            check_depth_encodable(depth_max, scale);
            return scale;
        } catch (const ConfigError&) {
        }
    }
    throw ConfigError("camera.depth_max too large for 16-bit depth images");
}

}  // namespace

SimulateSummary cmd_simulate(const ScenarioConfig& cfg, const std::string& out,
                             const SimulateOptions& options) {
    const std::string scene_path = out + "/world.rscn";
    const std::string traj_path = out + "/trajectory.txt";
    if (!fs::exists(scene_path) || !fs::exists(traj_path))
        throw std::runtime_error(
            "missing world.rscn/trajectory.txt under " + out +
            " (run the route and world commands first)");

    DatasetLayout layout{out + "/dataset"};
    if (options.resume_from == 0)
        require_fresh(layout.manifest_file(), options.force, "simulate");
    layout.create_dirs();

    const double depth_scale = depth_scale_for(cfg.camera.depth_max);
    const Scene scene = read_scene(scene_path);
    const std::vector<TrajectorySample> traj = read_trajectory(traj_path);
    if (traj.size() < 2) throw std::runtime_error("trajectory is empty");
    const Accelerator accel(scene);

    const double t_s = cfg.train.sample_period;
    const std::vector<SensorSchedule> schedules{
        {"camera", cfg.camera.frame_period, 0},
        {"imu", 1.0 / cfg.imu.rate, 0},
        {"lidar", cfg.lidar.frame_period, 0}};
    std::vector<std::int64_t> multiples;
    try {
        multiples = validate_schedules(t_s, schedules);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const std::int64_t k_lidar = multiples[2];

    std::size_t n_samples = traj.size();
    if (cfg.max_lidar_frames > 0)
        n_samples = std::min<std::size_t>(
            n_samples, (std::size_t)k_lidar * cfg.max_lidar_frames);
    const std::vector<AcquisitionEvent> events =
        build_timeline(n_samples, t_s, schedules);

    std::vector<AcquisitionEvent> imu_events;
    std::vector<FrameJob> jobs;
    std::size_t n_lidar = 0, n_camera = 0;
    for (const AcquisitionEvent& ev : events) {
        if (ev.sensor_id == "imu") {
            imu_events.push_back(ev);
        } else if (ev.sensor_id == "lidar") {
            jobs.push_back({true, n_lidar++, ev});
        } else {
            jobs.push_back({false, n_camera++, ev});
        }
    }

    // IMU drift is a sequential state, so its samples run on one thread
    ImuNoiseState imu_state(imu_noise_seed(cfg));
    std::vector<ImuSample> imu_samples;
    imu_samples.reserve(imu_events.size());
    for (const AcquisitionEvent& ev : imu_events) {
        const TrajectorySample& s = traj[ev.sample_index];
        const Rotation r = Rotation::from_euler_zyx(s.yaw, s.pitch, s.roll);
        imu_samples.push_back(imu_sample(s.front.acceleration,
                                         r * s.angular_velocity, r, cfg.imu,
                                         imu_state));
    }
    write_imu_text(imu_samples, layout.imu_file());

    const bool streaming = options.stream_port >= 0;
    std::vector<Pose> poses(n_lidar);
    std::vector<std::vector<std::uint8_t>> bin_payloads(streaming ? n_lidar
                                                                  : 0);
    std::vector<std::vector<std::uint8_t>> depth_payloads, seg_payloads,
        rgb_payloads;
    if (streaming) {
        depth_payloads.resize(n_camera);
        seg_payloads.resize(n_camera);
        rgb_payloads.resize(n_camera);
    }
    const std::uint64_t lidar_seed = lidar_noise_seed(cfg);
    std::mutex seg_sidecar_m;  // the shared palette sidecar path

    const int threads =
        options.threads > 0 ? options.threads : default_thread_count();
    run_jobs(jobs, threads, [&](const FrameJob& job) {
        if (job.lidar) {
            const Pose pose = pose_at(traj, job.ev, cfg.lidar.mount);
            const PointCloud cloud = lidar_scan(pose, job.ev.timestamp,
                                                cfg.lidar, accel, lidar_seed,
                                                job.frame);
            poses[job.frame] = pose;
            if (job.frame >= options.resume_from) {
                write_pointcloud_bin(cloud, layout.velodyne_path(job.frame));
                write_labels(cloud, layout.label_path(job.frame));
            }
            if (streaming)
                bin_payloads[job.frame] = pointcloud_bin_bytes(cloud);
            return;
        }
        const Pose pose = pose_at(traj, job.ev, cfg.camera.mount);
        const CameraFrame frame = render_camera(pose, job.ev.timestamp,
                                                cfg.camera, accel, cfg.ambient);
        if (job.frame >= options.resume_from) {
            if (cfg.camera.mode_depth)
                write_depth_png(frame.depth, layout.depth_path(job.frame),
                                depth_scale);
            if (cfg.camera.mode_segmentation) {
                std::lock_guard<std::mutex> lock(seg_sidecar_m);
                write_seg_png(frame.seg, layout.seg_path(job.frame),
                              layout.seg_palette_path());
            }
            if (cfg.camera.mode_shaded)
                write_rgb_png(frame.rgb, layout.rgb_path(job.frame));
        }
        if (streaming) {
            if (cfg.camera.mode_depth)
                depth_payloads[job.frame] =
                    read_file_bytes(layout.depth_path(job.frame));
            if (cfg.camera.mode_segmentation)
                seg_payloads[job.frame] =
                    read_file_bytes(layout.seg_path(job.frame));
            if (cfg.camera.mode_shaded)
                rgb_payloads[job.frame] =
                    read_file_bytes(layout.rgb_path(job.frame));
        }
    });

    write_poses(poses, layout.poses_file());
    {
        std::ofstream calib(layout.calib_file(), std::ios::binary);
        if (!calib)
            throw std::runtime_error("cannot write: " + layout.calib_file());
        calib << calib_text(cfg);
    }

    SimulateSummary sum;
    sum.lidar_frames = n_lidar;
    sum.camera_frames = n_camera;
    sum.imu_samples = imu_samples.size();
    sum.timeline_events = events.size();

    if (streaming) {
        StreamServer server;
        sum.stream_port = server.start(options.stream_port);
        if (options.wait_for_client) {
            const auto deadline =
                std::chrono::steady_clock::now() +
                std::chrono::duration<double>(options.wait_timeout_s);
            while (server.client_count() == 0 &&
                   std::chrono::steady_clock::now() < deadline)
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        std::size_t li = 0, ci = 0;
        for (const AcquisitionEvent& ev : events) {
            if (ev.sensor_id == "imu") continue;
            if (ev.sensor_id == "lidar") {
                server.publish({MessageType::PointCloud, event_ns(ev),
                                std::move(bin_payloads[li])});
                ++li;
            } else {
                if (cfg.camera.mode_depth)
                    server.publish({MessageType::DepthImage, event_ns(ev),
                                    std::move(depth_payloads[ci])});
                if (cfg.camera.mode_segmentation)
                    server.publish({MessageType::SegImage, event_ns(ev),
                                    std::move(seg_payloads[ci])});
                if (cfg.camera.mode_shaded)
                    server.publish({MessageType::RgbImage, event_ns(ev),
                                    std::move(rgb_payloads[ci])});
                ++ci;
            }
        }
        server.publish({MessageType::Imu, 0,
                        read_file_bytes(layout.imu_file())});
        server.publish({MessageType::Pose, 0,
                        read_file_bytes(layout.poses_file())});
        server.flush(options.wait_timeout_s);
        sum.stream_clients = server.client_count();
        server.stop();
    }

    write_atomic(layout.manifest_file(),
                 json{{"command", "simulate"},
                      {"depth_scale", depth_scale},
                      {"lidar_frames", sum.lidar_frames},
                      {"camera_frames", sum.camera_frames},
                      {"imu_samples", sum.imu_samples},
                      {"timeline_events", sum.timeline_events},
                      {"scenario", scenario_json(cfg)}}
                         .dump(2) +
                     "\n");
    return sum;
}

namespace {

std::vector<Vec3> load_cloud_positions(const std::string& path,
                                       std::size_t target) {
    const std::vector<BinPoint> pts = read_pointcloud_bin(path);
    std::size_t stride = 1;
    if (target > 0 && pts.size() > target) stride = pts.size() / target;
    std::vector<Vec3> out;
    out.reserve(pts.size() / stride + 1);
    for (std::size_t i = 0; i < pts.size(); i += stride)
        out.push_back(Vec3{pts[i].x, pts[i].y, pts[i].z});
    return out;
}

std::size_t count_frames(const std::string& dir) {
    std::size_t n = 0;
    while (fs::exists(dir + "/" + frame_name(n) + ".bin")) ++n;
    return n;
}

}  // namespace

OdometryReport cmd_validate(const std::string& dataset_dir,
                            const ValidateOptions& options) {
    DatasetLayout layout{dataset_dir};
    const std::vector<Pose> poses = read_poses(layout.poses_file());
    const std::size_t frames = count_frames(layout.velodyne_dir());
    if (frames < 2 || poses.size() < 2)
        throw std::runtime_error("need at least two frames with poses in " +
                                 dataset_dir);
    const std::size_t pairs =
        std::min({options.max_pairs, frames - 1, poses.size() - 1});
    const std::size_t target = options.subsample > 0 ? options.subsample : 400;

    const std::vector<RigidTransform> truth_all = relative_transforms(poses);
    std::vector<RigidTransform> truth(truth_all.begin(),
                                      truth_all.begin() + pairs);

    std::vector<RigidTransform> est;
    std::vector<Vec3> prev =
        load_cloud_positions(layout.velodyne_path(0), target);
    for (std::size_t k = 0; k < pairs; ++k) {
        std::vector<Vec3> next =
            load_cloud_positions(layout.velodyne_path(k + 1), target);
        // aligning frame k+1 onto frame k estimates the relative motion
        est.push_back(icp_align(next, prev).transform);
        prev = std::move(next);
    }

    const OdometryReport report = odometry_report(est, truth);
    const std::string path = options.report_path.empty()
                                 ? dataset_dir + "/validate_report.txt"
                                 : options.report_path;
    write_odometry_report(report, path);
    return report;
}

CompareReport cmd_compare(const std::string& dataset_a,
                          const std::string& dataset_b,
                          const std::string& report_path) {
    DatasetLayout la{dataset_a}, lb{dataset_b};
    const std::size_t frames =
        std::min(count_frames(la.velodyne_dir()), count_frames(lb.velodyne_dir()));
    if (frames == 0)
        throw std::runtime_error("no common frames between " + dataset_a +
                                 " and " + dataset_b);
    CompareReport rep;
    for (std::size_t k = 0; k < frames; ++k) {
        const std::vector<Vec3> a =
            load_cloud_positions(la.velodyne_path(k), 0);
        const std::vector<Vec3> b =
            load_cloud_positions(lb.velodyne_path(k), 0);
        rep.rmse.push_back(pc_rmse_symmetric(a, b));
    }
    for (double v : rep.rmse) {
        rep.mean += v;
        rep.max = std::max(rep.max, v);
    }
    rep.mean /= (double)rep.rmse.size();
    if (!report_path.empty()) {
        std::ostringstream out;
        char buf[32];
        out << "frame rmse\n";
        for (std::size_t k = 0; k < rep.rmse.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", rep.rmse[k]);
            out << k << " " << buf << "\n";
        }
        write_atomic(report_path, out.str());
    }
    return rep;
}

void cmd_preview(const ScenarioConfig& cfg, const std::string& out,
                 const Pose& camera_pose_enu, bool force) {
    const std::string scene_path = out + "/world.rscn";
    if (!fs::exists(scene_path))
        throw std::runtime_error("missing world.rscn under " + out +
                                 " (run the world command first)");
    const std::string depth_path = out + "/preview_depth.png";
    require_fresh(depth_path, force, "preview");

    const double depth_scale = depth_scale_for(cfg.camera.depth_max);
    const Scene scene = read_scene(scene_path);
    const Accelerator accel(scene);
    const CameraFrame frame =
        render_camera(camera_pose_enu, 0.0, cfg.camera, accel, cfg.ambient);
    if (cfg.camera.mode_depth)
        write_depth_png(frame.depth, depth_path, depth_scale);
    if (cfg.camera.mode_segmentation)
        write_seg_png(frame.seg, out + "/preview_seg.png",
                      out + "/preview_palette.json");
    if (cfg.camera.mode_shaded)
        write_rgb_png(frame.rgb, out + "/preview_rgb.png");
}

std::size_t cmd_stream(const std::string& dataset_dir,
                       const StreamOptions& options) {
    DatasetLayout layout{dataset_dir};
    const std::size_t frames = count_frames(layout.velodyne_dir());
    if (frames == 0)
        throw std::runtime_error("no point-cloud frames in " + dataset_dir);

    StreamServer server;
    const int port = server.start(options.port);
    std::cout << "streaming " << frames << " frames on 127.0.0.1:" << port
              << "\n";
    if (options.wait_for_client) {
        const auto deadline =
            std::chrono::steady_clock::now() +
            std::chrono::duration<double>(options.wait_timeout_s);
        while (server.client_count() == 0 &&
               std::chrono::steady_clock::now() < deadline)
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    for (std::size_t k = 0; k < frames; ++k)
        server.publish({MessageType::PointCloud, (std::uint64_t)k,
                        read_file_bytes(layout.velodyne_path(k))});
    server.flush(options.wait_timeout_s);
    server.stop();
    return frames;
}

std::uint64_t hash_file(const std::string& path) {
    std::uint64_t h = 1469598103934665603ull;
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t hash_tree(const std::string& root) {
    std::vector<std::string> rel;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            rel.push_back(fs::relative(entry.path(), root).generic_string());
    std::sort(rel.begin(), rel.end());
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint8_t b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (const std::string& r : rel) {
        for (char c : r) mix((std::uint8_t)c);
        mix(0);
        for (std::uint8_t b : read_file_bytes(root + "/" + r)) mix(b);
        mix(0xff);
    }
    return h;
}

int default_thread_count() {
    if (const char* env = std::getenv("RAILSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? (int)hw : 1;
}

}  // namespace railsim
