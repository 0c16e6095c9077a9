#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railsim/geom.hpp"
#include "railsim/spline.hpp"

namespace railsim {

enum class BlockType { Straight, Curve, Station, Tunnel, Bridge };

const char* block_type_name(BlockType t);
BlockType block_type_from_name(const std::string& name);

struct Block {
    BlockType type = BlockType::Straight;
    std::size_t start_index = 0;  // inclusive
    std::size_t end_index = 0;    // inclusive
    double s_start = 0.0;         // arc length, m
    double s_end = 0.0;
    double radius = 0.0;          // curves only; 0 otherwise
    int turn_dir = 0;             // curves: +1 right, -1 left
};

// Main track: evenly spaced NED centerline points plus one smoothing spline
// per axis, parameterized by arc length.
struct Route {
    std::vector<Vec3> points;  // NED, spacing = ds
    std::vector<Block> blocks;
    double ds = 1.0;
    double total_length = 0.0;
    SmoothingSpline spline_n, spline_e, spline_d;

    Vec3 position_at(double s) const;
    Vec3 derivative_at(double s) const;         // d position / d s
    Vec3 second_derivative_at(double s) const;  // d^2 position / d s^2
    const Block& block_at_s(double s) const;
};

struct RouteParams {
    int n_blocks = 12;
    double block_length_min = 150.0;  // m
    double block_length_max = 400.0;  // m
    double min_curve_radius = 300.0;  // m
    double max_curve_radius = 1500.0; // m
    double p_curve = 0.35;
    double p_bridge = 0.08;
    double p_tunnel = 0.08;
    double p_station = 0.10;
    double ds = 1.0;  // point spacing, m
};

struct TrainParams {
    double bogie_spacing = 15.0;   // L, m
    double a_max = 0.8;            // m/s^2
    double d_max = 1.0;            // m/s^2
    double a_lat_max = 1.0;        // m/s^2
    double line_speed = 40.0;      // m/s
    double sample_period = 0.01;   // T_S, s
    double station_cap = 8.0;      // m/s
    double tunnel_cap = 30.0;      // m/s
    double bridge_cap = 30.0;      // m/s
    double initial_speed = 0.0;    // m/s
};

struct VelocityProfile {
    std::vector<double> v_max;  // one entry per route block, m/s
};

struct BogieState {
    Vec3 position;      // NED, m
    Vec3 velocity;      // NED, m/s
    Vec3 acceleration;  // NED, m/s^2
};

struct TrajectorySample {
    double t = 0.0;  // s
    BogieState front;
    BogieState rear;
    double yaw = 0.0;    // rad, ZYX intrinsic in NED
    double pitch = 0.0;
    double roll = 0.0;
    Vec3 angular_velocity;  // body frame, rad/s
    double speed = 0.0;     // scalar along-track speed, m/s
    double arc_position = 0.0;  // rear bogie arc length, m
};

// Deterministic pseudo-random route: tangent-continuous straights and
// circular arcs; bridge/tunnel/station overlays drawn on straight blocks.
// Throws std::invalid_argument for infeasible parameters.
Route generate_route(std::uint64_t seed, const RouteParams& params);

// Straight -> line speed; curve radius R -> min(line speed, sqrt(a_lat_max R));
// overlays capped by their configured limits.
VelocityProfile velocity_profile(const Route& route, const TrainParams& params);

// Trapezoidal speed plan with look-ahead braking, sampled every T_S.
// Throws std::invalid_argument if the route is shorter than the bogie
// spacing or the profile is infeasible from the initial speed.
std::vector<TrajectorySample> generate_trajectory(const Route& route,
                                                  const VelocityProfile& profile,
                                                  const TrainParams& train);

// State of a point on the vehicle axis: offset 0 = front bogie,
// offset -L = rear bogie; offsets outside [-L, 0] extrapolate linearly.
std::vector<TrajectorySample> point_trajectory(
    const std::vector<TrajectorySample>& samples, double offset,
    double bogie_spacing);

// Plain delimited text, one record per sample. write/parse round-trip.
void write_trajectory(const std::vector<TrajectorySample>& samples,
                      const std::string& path);
std::vector<TrajectorySample> read_trajectory(const std::string& path);

// Route input file: one NED point per line ("n e d").
void write_route_points(const Route& route, const std::string& path);
std::vector<Vec3> read_route_points(const std::string& path);

// Rebuild a Route (single straight-block decomposition unless block data is
// provided elsewhere) from evenly spaced NED points, refitting the splines.
Route route_from_points(const std::vector<Vec3>& points, double ds);

}  // namespace railsim
