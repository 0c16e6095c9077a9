#include "doctest.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "railsim/pipeline.hpp"

using namespace railsim;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = "/tmp/railsim_cli_tests";

std::string fresh_dir(const std::string& name) {
    const std::string d = kRoot + "/" + name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

// small but fully featured scenario: finishes in well under a second per run
ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.seed = 7;
    cfg.route.n_blocks = 3;
    cfg.route.block_length_min = 120.0;
    cfg.route.block_length_max = 200.0;
    cfg.route.p_station = 0.0;
    cfg.route.p_tunnel = 0.0;
    cfg.route.p_bridge = 0.0;
    cfg.train.line_speed = 20.0;
    cfg.aux.duplicate_main = true;
    cfg.aux.p_spawn = 0.5;
    cfg.terrain_margin = 40.0;
    cfg.terrain.d_far = 30.0;
    cfg.keep_radius = 200.0;
    cfg.spawn.tree.density_per_km = 10.0;
    cfg.spawn.rock.density_per_km = 5.0;
    cfg.spawn.building.density_per_km = 1.0;
    cfg.spawn.fence.density_per_km = 2.0;
    cfg.lidar.n_beams = 4;
    cfg.lidar.horizontal_resolution = 2.0 * M_PI / 180.0;
    cfg.lidar.range = 60.0;
    cfg.camera.width = 64;
    cfg.camera.height = 48;
    cfg.camera.depth_max = 60.0;  // fits the default millimeter depth scale
    cfg.max_lidar_frames = 4;
    cfg.reseed();
    return cfg;
}

void build_stage(const ScenarioConfig& cfg, const std::string& out) {
    cmd_route(cfg, out, false);
    cmd_world(cfg, out, false);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RAILSIM_CLI_BIN) + " " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

int connect_retry(int port, double timeout_s) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_s);
    for (;;) {
        const int fd = socket(AF_INET, SOCK_STREAM, 0);
        REQUIRE(fd >= 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons((std::uint16_t)port);
        if (connect(fd, (sockaddr*)&addr, sizeof(addr)) == 0) return fd;
        close(fd);
        if (std::chrono::steady_clock::now() >= deadline) return -1;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

std::vector<StreamMessage> drain_stream(int fd) {
    StreamDecoder decoder;
    std::uint8_t buf[65536];
    for (;;) {
        const ssize_t n = recv(fd, buf, sizeof(buf), 0);
        if (n <= 0) break;
        decoder.feed(buf, (std::size_t)n);
    }
    close(fd);
    return decoder.take();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("scenario files load with defaults, overrides and strict checking") {
    const std::string dir = fresh_dir("scenario");
    write_text(dir + "/empty.json", "{}\n");
    const ScenarioConfig def = load_scenario(dir + "/empty.json");
    CHECK(def.seed == 1);
    CHECK(def.route.n_blocks == 12);
    CHECK(def.lidar.n_beams == 16);
    // sub-seeds are pinned by the master seed
    CHECK(def.terrain.seed != def.spawn.seed);

    write_text(dir + "/s.json",
               "{\"seed\": 42, \"route\": {\"n_blocks\": 5},"
               " \"lidar\": {\"range\": 80.0},"
               " \"terrain\": {\"margin\": 50.0}}\n");
    const ScenarioConfig cfg = load_scenario(dir + "/s.json");
    CHECK(cfg.seed == 42);
    CHECK(cfg.route.n_blocks == 5);
    CHECK(cfg.lidar.range == 80.0);
    CHECK(cfg.terrain_margin == 50.0);

    write_text(dir + "/bad.json", "{\"rote\": {}}\n");
    try {
        load_scenario(dir + "/bad.json");
        FAIL("expected rejection");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("rote") != std::string::npos);
    }
    write_text(dir + "/bad2.json", "{\"route\": {\"n_block\": 3}}\n");
    CHECK_THROWS_AS(load_scenario(dir + "/bad2.json"), ConfigError);

    // sensor sections accept a sibling file path instead of an inline object
    save_lidar_config(small_config().lidar, dir + "/lidar.json");
    write_text(dir + "/ref.json", "{\"lidar_config\": \"lidar.json\"}\n");
    CHECK(load_scenario(dir + "/ref.json").lidar.n_beams == 4);
    write_text(dir + "/both.json",
               "{\"lidar\": {}, \"lidar_config\": \"lidar.json\"}\n");
    CHECK_THROWS_AS(load_scenario(dir + "/both.json"), ConfigError);

    // save -> load round trip preserves the effective parameters
    ScenarioConfig c1 = small_config();
    save_scenario(c1, dir + "/saved.json");
    const ScenarioConfig c2 = load_scenario(dir + "/saved.json");
    CHECK(c2.seed == c1.seed);
    CHECK(c2.route.n_blocks == c1.route.n_blocks);
    CHECK(c2.lidar.horizontal_resolution == c1.lidar.horizontal_resolution);
    CHECK(c2.camera.width == c1.camera.width);
    CHECK(c2.max_lidar_frames == c1.max_lidar_frames);
    CHECK(c2.aux.duplicate_main == c1.aux.duplicate_main);
}

TEST_CASE("route outputs are reproducible, parseable and overwrite-guarded") {
    const ScenarioConfig cfg = small_config();
    const std::string a = fresh_dir("route_a");
    const std::string b = fresh_dir("route_b");
    const RouteSummary sa = cmd_route(cfg, a, false);
    const RouteSummary sb = cmd_route(cfg, b, false);
    CHECK(sa.route_length == sb.route_length);
    CHECK(hash_tree(a) == hash_tree(b));

    const auto points = read_route_points(a + "/route_points.txt");
    const auto traj = read_trajectory(a + "/trajectory.txt");
    CHECK(points.size() > 100);
    CHECK(traj.size() == sa.trajectory_samples);

    CHECK_THROWS_AS(cmd_route(cfg, a, false), ConfigError);
    CHECK_NOTHROW(cmd_route(cfg, a, true));
}

TEST_CASE("world builds are deterministic and tile counts match a recount") {
    const ScenarioConfig cfg = small_config();
    const std::string a = fresh_dir("world_a");
    const std::string b = fresh_dir("world_b");
    const WorldSummary sa = cmd_world(cfg, a, false);
    const WorldSummary sb = cmd_world(cfg, b, false);
    CHECK(sa.scene_hash == sb.scene_hash);
    CHECK(sa.triangles == sb.triangles);
    CHECK(sa.tracks >= 2);  // main + duplicate at least

    // recount the retained tiles from the persisted artifacts
    const HeightMap map =
        read_height_png(a + "/heightmap.png", a + "/heightmap_meta.json");
    const Railroad rr = read_railroad(a + "/railroad.json");
    const std::vector<SubMap> tiles = partition(map, rr, cfg.keep_radius);
    std::size_t kept = 0;
    for (const SubMap& t : tiles) kept += t.keep ? 1 : 0;
    CHECK(tiles.size() == sa.tiles_total);
    CHECK(kept == sa.tiles_kept);

    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(a + "/world_manifest.json"));
    CHECK(manifest.at("tiles_kept").get<std::size_t>() == sa.tiles_kept);
    CHECK(manifest.at("scenario").at("seed").get<std::uint64_t>() == cfg.seed);
}

TEST_CASE("zero object densities produce a track-only world") {
    ScenarioConfig cfg = small_config();
    cfg.spawn.tree.density_per_km = 0.0;
    cfg.spawn.rock.density_per_km = 0.0;
    cfg.spawn.building.density_per_km = 0.0;
    cfg.spawn.fence.density_per_km = 0.0;
    const std::string dir = fresh_dir("world_empty");
    cmd_world(cfg, dir, false);

    const Scene scene = read_scene(dir + "/world.rscn");
    for (const SceneObject& o : scene.objects) {
        CHECK(o.cls != SemanticClass::Tree);
        CHECK(o.cls != SemanticClass::Rock);
        CHECK(o.cls != SemanticClass::Building);
        CHECK(o.cls != SemanticClass::Fence);
    }
}

TEST_CASE("simulate emits one file set per timeline event") {
    const ScenarioConfig cfg = small_config();
    const std::string dir = fresh_dir("sim");
    build_stage(cfg, dir);
    SimulateOptions opt;
    const SimulateSummary sum = cmd_simulate(cfg, dir, opt);

    // expected counts straight from the timeline
    const auto traj = read_trajectory(dir + "/trajectory.txt");
    const std::size_t n_samples =
        std::min<std::size_t>(traj.size(), 10 * cfg.max_lidar_frames);
    const auto events = build_timeline(
        n_samples, cfg.train.sample_period,
        {{"camera", cfg.camera.frame_period, 0},
         {"imu", 1.0 / cfg.imu.rate, 0},
         {"lidar", cfg.lidar.frame_period, 0}});
    std::size_t lidar = 0, camera = 0, imu = 0;
    for (const auto& ev : events)
        (ev.sensor_id == "lidar" ? lidar
         : ev.sensor_id == "imu" ? imu
                                 : camera)++;
    CHECK(sum.lidar_frames == lidar);
    CHECK(sum.camera_frames == camera);
    CHECK(sum.imu_samples == imu);
    CHECK(sum.timeline_events == events.size());

    DatasetLayout layout{dir + "/dataset"};
    for (std::size_t f = 0; f < lidar; ++f) {
        CHECK(fs::exists(layout.velodyne_path(f)));
        CHECK(fs::exists(layout.label_path(f)));
    }
    for (std::size_t f = 0; f < camera; ++f) {
        CHECK(fs::exists(layout.depth_path(f)));
        CHECK(fs::exists(layout.seg_path(f)));
        CHECK(fs::exists(layout.rgb_path(f)));
    }
    CHECK(!fs::exists(layout.velodyne_path(lidar)));
    CHECK(read_poses(layout.poses_file()).size() == lidar);
    CHECK(read_imu_text(layout.imu_file()).size() == imu);
    CHECK(fs::exists(layout.manifest_file()));
}

TEST_CASE("simulate runs are byte-identical across repeats and thread counts") {
    const ScenarioConfig cfg = small_config();
    const std::string a = fresh_dir("sim_det_a");
    const std::string b = fresh_dir("sim_det_b");
    build_stage(cfg, a);
    build_stage(cfg, b);
    SimulateOptions one;
    one.threads = 1;
    SimulateOptions four;
    four.threads = 4;
    cmd_simulate(cfg, a, one);
    cmd_simulate(cfg, b, four);
    CHECK(hash_tree(a + "/dataset") == hash_tree(b + "/dataset"));
}

TEST_CASE("resume rewrites only the suffix and lands on identical bytes") {
    const ScenarioConfig cfg = small_config();
    const std::string dir = fresh_dir("sim_resume");
    build_stage(cfg, dir);
    SimulateOptions opt;
    cmd_simulate(cfg, dir, opt);
    const std::uint64_t h = hash_tree(dir + "/dataset");

    DatasetLayout layout{dir + "/dataset"};
    fs::remove(layout.velodyne_path(2));
    fs::remove(layout.depth_path(3));
    SimulateOptions resume;
    resume.resume_from = 2;
    cmd_simulate(cfg, dir, resume);
    CHECK(hash_tree(dir + "/dataset") == h);

    // without --force a complete dataset refuses to be clobbered
    SimulateOptions again;
    CHECK_THROWS_AS(cmd_simulate(cfg, dir, again), ConfigError);
}

TEST_CASE("streamed payloads equal the on-disk bytes") {
    const ScenarioConfig cfg = small_config();
    const std::string dir = fresh_dir("sim_stream");
    build_stage(cfg, dir);

    const int port = 46101;
    std::vector<StreamMessage> received;
    std::thread client([&] {
        const int fd = connect_retry(port, 15.0);
        REQUIRE(fd >= 0);
        received = drain_stream(fd);
    });
    SimulateOptions opt;
    opt.stream_port = port;
    opt.wait_for_client = true;
    const SimulateSummary sum = cmd_simulate(cfg, dir, opt);
    client.join();

    CHECK(sum.stream_port == port);
    CHECK(sum.stream_clients == 1);
    REQUIRE(received.size() ==
            sum.lidar_frames + 3 * sum.camera_frames + 2);

    DatasetLayout layout{dir + "/dataset"};
    std::size_t li = 0, di = 0, si = 0, ri = 0;
    for (const StreamMessage& msg : received) {
        std::string path;
        switch (msg.type) {
            case MessageType::PointCloud:
                path = layout.velodyne_path(li++);
                break;
            case MessageType::DepthImage: path = layout.depth_path(di++); break;
            case MessageType::SegImage: path = layout.seg_path(si++); break;
            case MessageType::RgbImage: path = layout.rgb_path(ri++); break;
            case MessageType::Imu: path = layout.imu_file(); break;
            case MessageType::Pose: path = layout.poses_file(); break;
        }
        const std::string disk = slurp(path);
        REQUIRE(msg.payload.size() == disk.size());
        CHECK(std::equal(msg.payload.begin(), msg.payload.end(),
                         (const std::uint8_t*)disk.data()));
    }
    CHECK(li == sum.lidar_frames);
    CHECK(di == sum.camera_frames);
}

TEST_CASE("dataset replay streams the exact point-cloud files") {
    const ScenarioConfig cfg = small_config();
    const std::string dir = fresh_dir("replay");
    build_stage(cfg, dir);
    SimulateOptions opt;
    cmd_simulate(cfg, dir, opt);

    const int port = 46102;
    std::vector<StreamMessage> received;
    std::thread client([&] {
        const int fd = connect_retry(port, 15.0);
        REQUIRE(fd >= 0);
        received = drain_stream(fd);
    });
    StreamOptions sopt;
    sopt.port = port;
    const std::size_t n = cmd_stream(dir + "/dataset", sopt);
    client.join();

    DatasetLayout layout{dir + "/dataset"};
    REQUIRE(received.size() == n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::string disk = slurp(layout.velodyne_path(k));
        CHECK(received[k].payload.size() == disk.size());
        CHECK(std::equal(received[k].payload.begin(),
                         received[k].payload.end(),
                         (const std::uint8_t*)disk.data()));
    }
}

TEST_CASE("validate writes a stable report; identical datasets compare to 0") {
    const ScenarioConfig cfg = small_config();
    const std::string dir = fresh_dir("validate");
    build_stage(cfg, dir);
    SimulateOptions opt;
    cmd_simulate(cfg, dir, opt);

    ValidateOptions vopt;
    vopt.max_pairs = 3;
    const OdometryReport rep = cmd_validate(dir + "/dataset", vopt);
    CHECK(rep.tex_steps.size() == 3);
    std::ifstream in(dir + "/dataset/validate_report.txt");
    std::string header;
    std::getline(in, header);
    CHECK(header == "step tex tey eod");

    const CompareReport cmp =
        cmd_compare(dir + "/dataset", dir + "/dataset",
                    dir + "/compare_report.txt");
    CHECK(cmp.mean == 0.0);
    CHECK(cmp.max == 0.0);
    CHECK(fs::exists(dir + "/compare_report.txt"));
}

TEST_CASE("validate recovers a known inter-frame transform") {
    // synthetic two-frame dataset: frame 1 is frame 0 moved by a known
    // rigid transform, and the pose file carries exactly that motion
    const std::string dir = fresh_dir("validate_known");
    DatasetLayout layout{dir + "/dataset"};
    layout.create_dirs();

    PointCloud c0;
    for (int i = 0; i <= 14; ++i)
        for (int j = 0; j <= 14; ++j) {
            const double a = i * 0.5, b = j * 0.5;
            for (const Vec3 p : {Vec3{10.0, a - 3.5, b},
                                 Vec3{a + 2.0, b - 3.5, 0.0},
                                 Vec3{a + 2.0, 4.0, b}}) {
                LidarPoint q;
                q.x = p.x;
                q.y = p.y;
                q.z = p.z;
                c0.points.push_back(q);
            }
        }

    RigidTransform truth;
    truth.r = Rotation::from_euler_zyx(2.0 * M_PI / 180.0, 0.0, 0.0);
    truth.t = Vec3{0.5, 0.2, 0.0};
    // points move opposite to the sensor: p0 = T_rel(p1)
    const RigidTransform inv = truth.inverse();
    PointCloud c1;
    for (const LidarPoint& q : c0.points) {
        const Vec3 moved = inv.apply(Vec3{q.x, q.y, q.z});
        LidarPoint m;
        m.x = moved.x;
        m.y = moved.y;
        m.z = moved.z;
        c1.points.push_back(m);
    }
    write_pointcloud_bin(c0, layout.velodyne_path(0));
    write_pointcloud_bin(c1, layout.velodyne_path(1));

    std::vector<Pose> poses(2);
    poses[1].position = truth.t;
    poses[1].orientation = truth.r;
    write_poses(poses, layout.poses_file());

    ValidateOptions vopt;
    vopt.subsample = 10000;  // keep every point
    const OdometryReport rep = cmd_validate(dir + "/dataset", vopt);
    CHECK(rep.tex.max < 0.01);
    CHECK(rep.tey.max < 0.01);
}

TEST_CASE("preview renders consistent modalities and survives bad poses") {
    const ScenarioConfig cfg = small_config();
    const std::string dir = fresh_dir("preview");
    build_stage(cfg, dir);

    const auto traj = read_trajectory(dir + "/trajectory.txt");
    AcquisitionEvent ev;
    ev.sample_index = std::min<std::size_t>(100, traj.size() - 1);
    const Pose pose = pose_at(traj, ev, cfg.camera.mount);

    cmd_preview(cfg, dir, pose, false);
    const std::uint64_t h_depth = hash_file(dir + "/preview_depth.png");
    const std::uint64_t h_rgb = hash_file(dir + "/preview_rgb.png");
    CHECK_THROWS_AS(cmd_preview(cfg, dir, pose, false), ConfigError);
    cmd_preview(cfg, dir, pose, true);  // identical pose, identical images
    CHECK(hash_file(dir + "/preview_depth.png") == h_depth);
    CHECK(hash_file(dir + "/preview_rgb.png") == h_rgb);

    // the modalities share hit geometry: background iff depth at the cap
    const DepthImage depth = read_depth_png(dir + "/preview_depth.png");
    const SegImage seg = read_seg_png(dir + "/preview_seg.png");
    REQUIRE(depth.depth.size() == seg.classes.size());
    for (std::size_t i = 0; i < seg.classes.size(); ++i) {
        const bool background =
            seg.classes[i] == (std::uint16_t)SemanticClass::Background;
        const bool at_cap =
            depth.depth[i] >= (float)cfg.camera.depth_max - 1e-3f;
        if (background) CHECK(at_cap);
    }

    // a pose far outside the world still renders (all background)
    Pose far_away;
    far_away.position = Vec3{50000.0, 50000.0, 100.0};
    cmd_preview(cfg, dir, far_away, true);
    const SegImage far_seg = read_seg_png(dir + "/preview_seg.png");
    std::size_t bg = 0;
    for (std::uint16_t c : far_seg.classes)
        bg += c == (std::uint16_t)SemanticClass::Background ? 1 : 0;
    CHECK(bg == far_seg.classes.size());
}

TEST_CASE("the binary maps config and runtime failures to distinct codes") {
    const std::string dir = fresh_dir("exit_codes");
    write_text(dir + "/bad.json", "{\"sedd\": 1}\n");
    CHECK(run_cli("route --config " + dir + "/bad.json --out " + dir) == 2);
    CHECK(run_cli("simulate --out " + dir + "/nothere") == 3);

    // seed flag overrides the config file's seed
    write_text(dir + "/s.json",
               "{\"seed\": 7, \"route\": {\"n_blocks\": 3, \"p_station\": 0.0,"
               " \"p_tunnel\": 0.0, \"p_bridge\": 0.0,"
               " \"block_length_min\": 120.0, \"block_length_max\": 200.0}}\n");
    CHECK(run_cli("route --config " + dir + "/s.json --out " + dir + "/r7") ==
          0);
    CHECK(run_cli("route --config " + dir + "/s.json --seed 9 --out " + dir +
                  "/r9") == 0);
    CHECK(run_cli("route --config " + dir + "/s.json --seed 9 --out " + dir +
                  "/r9b") == 0);
    CHECK(hash_tree(dir + "/r9") == hash_tree(dir + "/r9b"));
    CHECK(hash_tree(dir + "/r7") != hash_tree(dir + "/r9"));
    // refusing an overwrite is a usage (config) error
    CHECK(run_cli("route --config " + dir + "/s.json --out " + dir + "/r7") ==
          2);
}

TEST_SUITE_END();
