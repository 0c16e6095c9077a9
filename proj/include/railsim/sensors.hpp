#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "railsim/geom.hpp"
#include "railsim/raycast.hpp"

namespace railsim {

// Sensor frame convention: x forward, y left, z up.

struct LidarConfig {
    int n_beams = 16;
    double vertical_fov = 30.0 * M_PI / 180.0;
    double horizontal_fov = 2.0 * M_PI;
    double horizontal_resolution = 0.2 * M_PI / 180.0;
    double range = 100.0;
    double frame_period = 0.1;      // s
    double range_sigma = 0.0;       // m, additive Gaussian on measured range
    Pose mount;                     // sensor pose on the vehicle body

    void validate() const;
};

struct ScanDirection {
    int beam = 0;
    int azimuth = 0;
    Vec3 direction;  // unit, sensor frame
};

// Azimuth-major firing order; count = n_beams * floor(hFoV / hRes); beam
// elevations evenly spaced across the vertical FoV.
std::vector<ScanDirection> scan_pattern(const LidarConfig& config);

struct LidarPoint {
    double x = 0.0, y = 0.0, z = 0.0;  // m, sensor frame
    int intensity = 0;                  // [0, 255]
    SemanticClass cls = SemanticClass::Background;
    int instance_id = 0;
    int beam = 0;
    int azimuth = 0;
};

struct PointCloud {
    double timestamp = 0.0;
    Pose sensor_pose;  // world (ENU), frozen for the whole scan
    std::vector<LidarPoint> points;
};

// One cast per pattern direction from a frozen pose; misses are omitted.
// Range noise is a counter-based stream of (seed, frame_index, ray index),
// so the result is independent of evaluation order.
PointCloud lidar_scan(const Pose& sensor_pose, double timestamp,
                      const LidarConfig& config, const Accelerator& accel,
                      std::uint64_t seed, std::uint64_t frame_index);

// Lambertian diffuse term plus a Beckmann retro-reflective lobe, both with
// inverse-square falloff normalized at d_ref = 1 m. Returns 0 beyond the
// material's incidence cutoff. `raw` is the unclamped physical value;
// `intensity` maps the diffuse part into [0,100] and the retro part into
// the remaining [0,155], each saturating independently.
double backscatter_raw(double d, double cos_theta, const Material& material);
int backscatter_intensity(double d, double cos_theta, const Material& material);

struct CameraConfig {
    int width = 640;
    int height = 360;
    double horizontal_fov = 90.0 * M_PI / 180.0;
    double depth_max = 100.0;  // m
    double frame_period = 0.1;  // s
    Pose mount;
    bool mode_depth = true;
    bool mode_segmentation = true;
    bool mode_shaded = true;

    void validate() const;
};

struct DepthImage {
    int width = 0, height = 0;
    double timestamp = 0.0;
    std::vector<float> depth;  // m, row-major, clamped to depth_max
};

struct SegImage {
    int width = 0, height = 0;
    double timestamp = 0.0;
    std::vector<std::uint16_t> classes;  // SemanticClass ids, row-major
};

struct RgbImage {
    int width = 0, height = 0;
    double timestamp = 0.0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

enum class SunSlot { Morning, Evening, Night };

struct AmbientConfig {
    SunSlot slot = SunSlot::Morning;
    double fog_density = 0.0;  // 1/m

    void validate() const;
};

// Slot-derived lighting: unit direction toward the sun (ENU), direct and
// ambient intensities, and the sky fill color.
Vec3 sun_direction(SunSlot slot);
double sun_intensity(SunSlot slot);
double ambient_intensity(SunSlot slot);
std::array<std::uint8_t, 3> sky_color(SunSlot slot);
std::array<std::uint8_t, 3> class_color(SemanticClass c);

// Pinhole render through pixel centers; one cast per pixel.
DepthImage render_depth(const Pose& camera_pose, double timestamp,
                        const CameraConfig& config, const Accelerator& accel);
SegImage render_segmentation(const Pose& camera_pose, double timestamp,
                             const CameraConfig& config, const Accelerator& accel);
// Class palette shaded by ambient + sun Lambert term with one occlusion cast
// toward the sun per hit pixel, then blended toward the fog color with
// weight 1 - exp(-density * distance).
RgbImage render_shaded(const Pose& camera_pose, double timestamp,
                       const CameraConfig& config, const Accelerator& accel,
                       const AmbientConfig& ambient);

// All enabled modalities from a single primary cast per pixel; identical
// pixel-for-pixel to the individual renders.
struct CameraFrame {
    DepthImage depth;
    SegImage seg;
    RgbImage rgb;
};
CameraFrame render_camera(const Pose& camera_pose, double timestamp,
                          const CameraConfig& config, const Accelerator& accel,
                          const AmbientConfig& ambient);

struct ImuAxisNoise {
    double noise_density = 0.0;     // unit/sqrt(Hz), white
    double bias_instability = 0.0;  // unit, Gauss-Markov stationary sigma
    double random_walk = 0.0;       // unit*sqrt(s) accumulated per step
};

struct ImuConfig {
    std::array<double, 9> mis = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    Vec3 bias_accel, bias_gyro, bias_mag;  // calibrated epsilon
    ImuAxisNoise accel_noise, gyro_noise, mag_noise;
    double quant_accel = 0.0;  // m/s^2 per count, 0 disables
    double quant_gyro = 0.0;   // rad/s per count
    double quant_mag = 0.0;    // uT per count
    Rotation mount;            // IMU frame w.r.t. vehicle body
    double rate = 100.0;       // Hz
    Vec3 mag_field_ned{21.0, 1.5, 43.0};  // uT
    double gm_time_constant = 100.0;      // s, bias-instability correlation
    double gravity = 9.80665;             // m/s^2
    // false: accelerometer reads C(theta)(a + g) (g points down in NED);
    // true: conventional specific force C(theta)(a - g).
    bool specific_force = false;

    void validate() const;
};

struct ImuSample {
    double t = 0.0;
    Vec3 accel;  // m/s^2
    Vec3 gyro;   // rad/s
    Vec3 mag;    // uT
};

// Sequential noise state: per-axis Gauss-Markov and random-walk accumulators
// for each of the three sensors, driven by a counter-based stream so a given
// (seed, sample index) prefix always reproduces the same trajectory.
class ImuNoiseState {
  public:
    explicit ImuNoiseState(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t sample_index() const { return k_; }

  private:
    friend ImuSample imu_sample(const Vec3&, const Vec3&, const Rotation&,
                                const ImuConfig&, ImuNoiseState&);
    std::uint64_t seed_;
    std::uint64_t k_ = 0;
    std::array<double, 9> gm_{};  // accel xyz, gyro xyz, mag xyz
    std::array<double, 9> rw_{};
};

// One reading: quantize(Mis * C_ned_to_imu * (a + g) + bias + drift) for the
// accelerometer, the same without +g for the gyroscope, and the rotated world
// field for the magnetometer. `a_ned` and `omega_ned` are truth values in NED
// coordinates; `body_to_ned` is the vehicle attitude. Advances the state.
ImuSample imu_sample(const Vec3& a_ned, const Vec3& omega_ned,
                     const Rotation& body_to_ned, const ImuConfig& config,
                     ImuNoiseState& state);

// Per-sensor JSON config files carrying exactly the struct fields.
void save_lidar_config(const LidarConfig& c, const std::string& path);
LidarConfig load_lidar_config(const std::string& path);
void save_camera_config(const CameraConfig& c, const std::string& path);
CameraConfig load_camera_config(const std::string& path);
void save_imu_config(const ImuConfig& c, const std::string& path);
ImuConfig load_imu_config(const std::string& path);
void save_ambient_config(const AmbientConfig& c, const std::string& path);
AmbientConfig load_ambient_config(const std::string& path);

}  // namespace railsim
