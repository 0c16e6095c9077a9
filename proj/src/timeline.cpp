#include "railsim/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace railsim {

Rational to_rational(double x) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::invalid_argument("to_rational: value must be positive finite");
    constexpr std::int64_t kMaxDen = 1000000000;
    // continued-fraction convergents p/q -> x
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double fa = std::floor(r);
        if (fa > 9e17) break;
        const std::int64_t a = (std::int64_t)fa;
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > kMaxDen || q2 < 0 || p2 < 0) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        const double approx = (double)p1 / (double)q1;
        if (std::abs(approx - x) <= 1e-12 * x) return {p1, q1};
        const double frac = r - fa;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    if (q1 > 0 && std::abs((double)p1 / (double)q1 - x) <= 1e-9 * x)
        return {p1, q1};
    throw std::invalid_argument(
        "to_rational: no small rational reconstruction for the value");
}

std::int64_t schedule_multiple(double t_s, const SensorSchedule& schedule) {
    if (!(t_s > 0.0)) throw std::invalid_argument("sample period must be > 0");
    if (!(schedule.period > 0.0))
        throw std::invalid_argument("sensor '" + schedule.sensor_id +
                                    "': period must be > 0");
    if (schedule.offset < 0)
        throw std::invalid_argument("sensor '" + schedule.sensor_id +
                                    "': offset must be >= 0");
    const Rational p = to_rational(schedule.period);
    const Rational ts = to_rational(t_s);
    // period / t_s = (p.num * ts.den) / (p.den * ts.num), exact in 128 bits
    const __int128 num = (__int128)p.num * ts.den;
    const __int128 den = (__int128)p.den * ts.num;
    if (num % den != 0)
        throw std::invalid_argument(
            "sensor '" + schedule.sensor_id +
            "': period is not an integer multiple of the sample period");
    const __int128 k = num / den;
    if (k < 1 || k > (__int128)9e17)
        throw std::invalid_argument("sensor '" + schedule.sensor_id +
                                    "': multiple out of range");
    return (std::int64_t)k;
}

std::vector<std::int64_t> validate_schedules(
    double t_s, const std::vector<SensorSchedule>& schedules) {
    std::vector<std::int64_t> out;
    out.reserve(schedules.size());
    for (const SensorSchedule& s : schedules)
        out.push_back(schedule_multiple(t_s, s));
    return out;
}

std::vector<AcquisitionEvent> build_timeline(
    std::size_t n_samples, double t_s,
    const std::vector<SensorSchedule>& schedules) {
    const std::vector<std::int64_t> ks = validate_schedules(t_s, schedules);
    std::vector<AcquisitionEvent> events;
    for (std::size_t si = 0; si < schedules.size(); ++si) {
        for (std::size_t i = (std::size_t)schedules[si].offset; i < n_samples;
             i += (std::size_t)ks[si]) {
            AcquisitionEvent e;
            e.sensor_id = schedules[si].sensor_id;
            e.sample_index = i;
            e.timestamp = (double)i * t_s;
            events.push_back(e);
        }
    }
    std::sort(events.begin(), events.end(),
              [](const AcquisitionEvent& a, const AcquisitionEvent& b) {
                  if (a.sample_index != b.sample_index)
                      return a.sample_index < b.sample_index;
                  return a.sensor_id < b.sensor_id;
              });
    return events;
}

Rotation body_to_enu(double yaw, double pitch, double roll) {
    const Rotation r = Rotation::from_euler_zyx(yaw, pitch, roll);  // body->NED
    // NED body axes (x fwd, y right, z down) -> ENU body axes (x fwd, y left,
    // z up), both attached to the same rigid body
    const Vec3 f = ned_to_enu(r * Vec3{1, 0, 0});
    const Vec3 l = ned_to_enu(r * Vec3{0, -1, 0});
    const Vec3 u = ned_to_enu(r * Vec3{0, 0, -1});
    return Rotation({f.x, l.x, u.x, f.y, l.y, u.y, f.z, l.z, u.z});
}

Pose vehicle_pose_enu(const TrajectorySample& sample) {
    Pose p;
    p.position = ned_to_enu(sample.front.position);
    p.orientation = body_to_enu(sample.yaw, sample.pitch, sample.roll);
    p.frame = FrameTag::ENU;
    return p;
}

Pose pose_at(const std::vector<TrajectorySample>& trajectory,
             const AcquisitionEvent& event, const Pose& mount) {
    if (event.sample_index >= trajectory.size())
        throw std::out_of_range("acquisition event past the trajectory end");
    return vehicle_pose_enu(trajectory[event.sample_index]).compose(mount);
}

}  // namespace railsim
