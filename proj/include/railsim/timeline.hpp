#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railsim/geom.hpp"
#include "railsim/route.hpp"

namespace railsim {

struct SensorSchedule {
    std::string sensor_id;
    double period = 0.0;        // s
    std::int64_t offset = 0;    // phase, in trajectory samples
};

struct AcquisitionEvent {
    std::string sensor_id;
    std::size_t sample_index = 0;
    double timestamp = 0.0;  // = sample_index * T_S
};

// Exact rational reconstruction of a positive decimal-intent value
// (continued fractions, denominator <= 1e9), so multiple checks suffer no
// binary floating-point drift: 0.1 s is exactly 10 x 0.01 s.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
};
Rational to_rational(double x);

// The integer k = period / t_s, or throws std::invalid_argument naming the
// sensor when the period is not an exact positive multiple of t_s.
std::int64_t schedule_multiple(double t_s, const SensorSchedule& schedule);

// Validates every schedule; returns the per-sensor multiples in input order.
std::vector<std::int64_t> validate_schedules(
    double t_s, const std::vector<SensorSchedule>& schedules);

// One event per sensor firing: sample indices offset, offset+k, offset+2k, ...
// strictly below n_samples, sorted by (timestamp, sensor id). Timestamps lie
// exactly on the t_s grid; no interpolation ever happens downstream.
std::vector<AcquisitionEvent> build_timeline(
    std::size_t n_samples, double t_s,
    const std::vector<SensorSchedule>& schedules);

// Attitude of the vehicle body (x forward, y left, z up) in the ENU world,
// from the trajectory's NED yaw/pitch/roll.
Rotation body_to_enu(double yaw, double pitch, double roll);

// ENU world pose of the vehicle at a trajectory sample: front-bogie position,
// attitude from the stored angles.
Pose vehicle_pose_enu(const TrajectorySample& sample);

// The stored sample verbatim, with the sensor mount composed on top.
// Throws std::out_of_range when the event index is past the trajectory.
Pose pose_at(const std::vector<TrajectorySample>& trajectory,
             const AcquisitionEvent& event, const Pose& mount);

}  // namespace railsim
