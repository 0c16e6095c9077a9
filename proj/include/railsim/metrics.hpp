#pragma once

#include <optional>
#include <string>
#include <vector>

#include "railsim/geom.hpp"
#include "railsim/sensors.hpp"

namespace railsim {

struct RigidTransform {
    Rotation r;
    Vec3 t;

    Vec3 apply(const Vec3& p) const { return r * p + t; }
    RigidTransform compose(const RigidTransform& o) const {
        return {r * o.r, r * o.t + t};
    }
    RigidTransform inverse() const {
        const Rotation ri = r.inverse();
        return {ri, -(ri * t)};
    }
};

// keep points whose horizontal angle atan2(y, x) lies in [lo, hi]
struct AzimuthCrop {
    double lo = -M_PI / 2;
    double hi = M_PI / 2;
};

std::vector<Vec3> cloud_positions(const PointCloud& cloud);
std::vector<Vec3> crop_azimuth(const std::vector<Vec3>& points,
                               const AzimuthCrop& crop);

// Root mean square of nearest-neighbor distances from every (cropped) point
// of `a` to the (cropped) cloud `b`. Throws std::invalid_argument when either
// side is empty after cropping.
double pc_rmse(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
               const std::optional<AzimuthCrop>& crop = std::nullopt);
// max of both directions
double pc_rmse_symmetric(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                         const std::optional<AzimuthCrop>& crop = std::nullopt);

struct IcpResult {
    RigidTransform transform;       // maps src into dst
    std::vector<double> residuals;  // RMS correspondence distance per iteration
    int iterations = 0;
};

// Point-to-point ICP: nearest-neighbor correspondences, closed-form rigid fit
// (orthogonal Procrustes via SVD), iterated until the residual improves by
// less than 1e-6 or 50 iterations. Throws std::invalid_argument on degenerate
// (fewer than 3 points or collinear) input.
IcpResult icp_align(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                    const RigidTransform& init = RigidTransform{});

struct ErrorStats {
    double mean = 0.0;
    double stddev = 0.0;
    double max = 0.0;
};

struct OdometryReport {
    ErrorStats tex, tey;  // per-step |x| / |y| translation error, m
    ErrorStats eod;       // cumulative planar error / distance traveled, %
    std::vector<double> tex_steps, tey_steps, eod_steps;
};

// per-step relative transforms between consecutive poses
std::vector<RigidTransform> relative_transforms(const std::vector<Pose>& poses);

// Compares per-step estimated transforms against ground truth. Throws
// std::invalid_argument when the sequences differ in length or are empty.
OdometryReport odometry_report(const std::vector<RigidTransform>& estimated,
                               const std::vector<RigidTransform>& truth);

// delimited per-step dump plus a human-readable summary table
void write_odometry_report(const OdometryReport& report,
                           const std::string& path);
std::string format_odometry_report(const OdometryReport& report);

}  // namespace railsim
