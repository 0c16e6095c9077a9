#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "railsim/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;   // bad configuration or usage
constexpr int kExitRuntime = 3;  // I/O or runtime failure

struct Common {
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool force = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config_or_seed = true) {
    (void)needs_config_or_seed;
    cmd->add_option("--config", c.config, "scenario JSON file");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "master seed (overrides the config)")
        ->each([&c](const std::string&) { c.seed_set = true; });
    cmd->add_option("--threads", c.threads,
                    "worker threads (default: RAILSIM_THREADS env)");
    cmd->add_flag("--force", c.force, "overwrite existing outputs");
}

railsim::ScenarioConfig effective_config(const Common& c) {
    railsim::ScenarioConfig cfg;
    if (!c.config.empty()) cfg = railsim::load_scenario(c.config);
    if (c.seed_set) {
        cfg.seed = c.seed;
        cfg.reseed();
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"procedural railway scenario generator and sensor simulator"};
    app.require_subcommand(1);

    Common c;

    auto* route = app.add_subcommand(
        "route", "generate the route and the train trajectory");
    add_common(route, c);

    auto* world = app.add_subcommand(
        "world", "build tracks, terrain and scene geometry");
    add_common(world, c);

    auto* simulate = app.add_subcommand(
        "simulate", "run the sensor timeline and export the dataset");
    add_common(simulate, c);
    int stream_port = -1;
    std::size_t resume_from = 0;
    bool wait_client = false;
    simulate->add_option("--stream-port", stream_port,
                         "also stream frames over TCP (0 = ephemeral port)");
    simulate->add_option("--resume-from", resume_from,
                         "first frame index to (re)write");
    simulate->add_flag("--wait-client", wait_client,
                       "wait for a stream client before publishing");

    auto* validate = app.add_subcommand(
        "validate", "scan-to-scan odometry metrics against ground truth");
    add_common(validate, c);
    std::string dataset, other_dataset, report_path;
    std::size_t max_pairs = 25;
    validate->add_option("--dataset", dataset, "dataset directory")
        ->required();
    validate->add_option("--against", other_dataset,
                         "second dataset: frame-by-frame RMSE instead");
    validate->add_option("--report", report_path, "report file path");
    validate->add_option("--max-pairs", max_pairs,
                         "consecutive frame pairs to register");

    auto* preview = app.add_subcommand(
        "preview", "render one camera frame from a built world");
    add_common(preview, c);
    std::vector<double> pose_values;
    std::size_t preview_frame = 0;
    preview->add_option("--pose", pose_values,
                        "camera pose: e n u yaw pitch roll (ENU world)")
        ->expected(6);
    preview->add_option("--frame", preview_frame,
                        "trajectory sample to place the camera at");

    auto* stream = app.add_subcommand(
        "stream", "replay an existing dataset's point clouds over TCP");
    add_common(stream, c);
    int port = 0;
    double wait_timeout = 10.0;
    stream->add_option("--dataset", dataset, "dataset directory")->required();
    stream->add_option("--port", port, "TCP port (0 = ephemeral)");
    stream->add_option("--wait-timeout", wait_timeout,
                       "seconds to wait for the first client");

    CLI11_PARSE(app, argc, argv);

    try {
        if (route->parsed()) {
            const auto sum = railsim::cmd_route(effective_config(c), c.out,
                                                c.force);
            std::cout << "route: " << sum.route_length << " m, "
                      << sum.trajectory_samples << " trajectory samples\n";
        } else if (world->parsed()) {
            const auto sum = railsim::cmd_world(effective_config(c), c.out,
                                                c.force);
            std::cout << "world: " << sum.tracks << " tracks, " << sum.objects
                      << " objects, " << sum.triangles << " triangles, "
                      << sum.tiles_kept << "/" << sum.tiles_total
                      << " tiles kept, scene hash " << std::hex
                      << sum.scene_hash << std::dec << "\n";
        } else if (simulate->parsed()) {
            railsim::SimulateOptions opt;
            opt.threads = c.threads;
            opt.force = c.force;
            opt.resume_from = resume_from;
            opt.stream_port = stream_port;
            opt.wait_for_client = wait_client;
            const auto sum =
                railsim::cmd_simulate(effective_config(c), c.out, opt);
            std::cout << "simulate: " << sum.lidar_frames << " lidar frames, "
                      << sum.camera_frames << " camera frames, "
                      << sum.imu_samples << " imu samples\n";
            if (sum.stream_port >= 0)
                std::cout << "streamed on port " << sum.stream_port << " to "
                          << sum.stream_clients << " client(s)\n";
        } else if (validate->parsed()) {
            if (!other_dataset.empty()) {
                const auto rep = railsim::cmd_compare(dataset, other_dataset,
                                                      report_path);
                std::cout << "compare: " << rep.rmse.size()
                          << " frames, mean rmse " << rep.mean << " m, max "
                          << rep.max << " m\n";
            } else {
                railsim::ValidateOptions opt;
                opt.max_pairs = max_pairs;
                opt.report_path = report_path;
                const auto rep = railsim::cmd_validate(dataset, opt);
                std::cout << railsim::format_odometry_report(rep);
            }
        } else if (preview->parsed()) {
            const railsim::ScenarioConfig cfg = effective_config(c);
            railsim::Pose pose;
            if (!pose_values.empty()) {
                pose.position = railsim::Vec3{pose_values[0], pose_values[1],
                                              pose_values[2]};
                pose.orientation = railsim::Rotation::from_euler_zyx(
                    pose_values[3], pose_values[4], pose_values[5]);
            } else {
                const auto traj =
                    railsim::read_trajectory(c.out + "/trajectory.txt");
                if (preview_frame >= traj.size())
                    throw railsim::ConfigError(
                        "--frame is past the end of the trajectory");
                railsim::AcquisitionEvent ev;
                ev.sample_index = preview_frame;
                pose = railsim::pose_at(traj, ev, cfg.camera.mount);
            }
            railsim::cmd_preview(cfg, c.out, pose, c.force);
            std::cout << "preview written under " << c.out << "\n";
        } else if (stream->parsed()) {
            railsim::StreamOptions opt;
            opt.port = port;
            opt.wait_timeout_s = wait_timeout;
            const std::size_t n = railsim::cmd_stream(dataset, opt);
            std::cout << "streamed " << n << " frames\n";
        }
    } catch (const railsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
