#include "railsim/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "railsim/rng.hpp"

namespace railsim {

namespace {

using nlohmann::json;

json pose_to_json(const Pose& p) {
    double yaw, pitch, roll;
    p.orientation.to_euler_zyx(yaw, pitch, roll);
    return json{{"position", {p.position.x, p.position.y, p.position.z}},
                {"yaw_pitch_roll", {yaw, pitch, roll}}};
}

Pose pose_from_json(const json& j) {
    Pose p;
    const auto& pos = j.at("position");
    p.position = Vec3{pos.at(0), pos.at(1), pos.at(2)};
    const auto& ypr = j.at("yaw_pitch_roll");
    p.orientation = Rotation::from_euler_zyx(ypr.at(0), ypr.at(1), ypr.at(2));
    return p;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return json::parse(in);
}

void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    out << j.dump(2) << "\n";
}

double quantize(double x, double step) {
    return step > 0.0 ? std::round(x / step) * step : x;
}

Vec3 quantize(const Vec3& v, double step) {
    return {quantize(v.x, step), quantize(v.y, step), quantize(v.z, step)};
}

Vec3 mat9_apply(const std::array<double, 9>& m, const Vec3& v) {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

double mat9_det(const std::array<double, 9>& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

int azimuth_steps(const LidarConfig& c) {
    // floor with a tolerance so exact ratios don't lose a column to rounding
    return (int)std::floor(c.horizontal_fov / c.horizontal_resolution + 1e-9);
}

constexpr std::array<std::uint8_t, 3> kFogColor{200, 200, 210};

}  // namespace

void LidarConfig::validate() const {
    if (n_beams < 1) throw std::invalid_argument("lidar: n_beams must be >= 1");
    if (!(horizontal_resolution > 0.0))
        throw std::invalid_argument("lidar: horizontal resolution must be > 0");
    if (!(horizontal_fov > 0.0) || !(vertical_fov >= 0.0))
        throw std::invalid_argument("lidar: field of view must be positive");
    if (!(range > 0.0)) throw std::invalid_argument("lidar: range must be > 0");
    if (!(frame_period > 0.0))
        throw std::invalid_argument("lidar: frame period must be > 0");
    if (range_sigma < 0.0)
        throw std::invalid_argument("lidar: range sigma must be >= 0");
}

std::vector<ScanDirection> scan_pattern(const LidarConfig& config) {
    config.validate();
    const int n_az = azimuth_steps(config);
    std::vector<ScanDirection> out;
    out.reserve((std::size_t)n_az * config.n_beams);
    for (int a = 0; a < n_az; ++a) {
        // centered: a single column points straight down the x axis
        const double az = -config.horizontal_fov / 2.0 +
                          (a + 0.5) * config.horizontal_resolution;
        for (int b = 0; b < config.n_beams; ++b) {
            const double el =
                config.n_beams == 1
                    ? 0.0
                    : -config.vertical_fov / 2.0 +
                          b * config.vertical_fov / (config.n_beams - 1);
            ScanDirection d;
            d.beam = b;
            d.azimuth = a;
            // +azimuth turns left (toward +y) from forward x
            d.direction = Vec3{std::cos(el) * std::cos(az),
                               std::cos(el) * std::sin(az), std::sin(el)};
            out.push_back(d);
        }
    }
    return out;
}

double backscatter_raw(double d, double cos_theta, const Material& material) {
    if (!(d > 0.0)) throw std::invalid_argument("backscatter: d must be > 0");
    if (cos_theta < 0.0 || cos_theta > 1.0)
        throw std::invalid_argument("backscatter: cos(theta) must be in [0,1]");
    const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
    if (theta > material.theta_max) return 0.0;
    const double inv_d2 = 1.0 / (d * d);  // d_ref = 1 m
    const double diffuse = material.rho_d * cos_theta * inv_d2;
    double retro = 0.0;
    if (material.rho_s > 0.0 && cos_theta > 1e-6) {
        const double m2 = material.roughness * material.roughness;
        const double tan2 = (1.0 - cos_theta * cos_theta) /
                            (cos_theta * cos_theta);
        retro = material.rho_s * std::exp(-tan2 / m2) /
                (std::pow(cos_theta, 5) * m2) * inv_d2;
    }
    return diffuse + retro;
}

int backscatter_intensity(double d, double cos_theta, const Material& material) {
    const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
    if (theta > material.theta_max) return 0;
    const double inv_d2 = 1.0 / (d * d);
    const double diffuse = material.rho_d * cos_theta * inv_d2;
    double retro = 0.0;
    if (material.rho_s > 0.0 && cos_theta > 1e-6) {
        const double m2 = material.roughness * material.roughness;
        const double tan2 = (1.0 - cos_theta * cos_theta) /
                            (cos_theta * cos_theta);
        retro = material.rho_s * std::exp(-tan2 / m2) /
                (std::pow(cos_theta, 5) * m2) * inv_d2;
    }
    // diffuse targets saturate at 100, retro-reflective returns use 101..255
    const double v = 100.0 * std::min(1.0, diffuse) +
                     155.0 * std::min(1.0, retro);
    return (int)std::lround(v);
}

PointCloud lidar_scan(const Pose& sensor_pose, double timestamp,
                      const LidarConfig& config, const Accelerator& accel,
                      std::uint64_t seed, std::uint64_t frame_index) {
    config.validate();
    const std::vector<ScanDirection> pattern = scan_pattern(config);
    const CounterNoise noise(seed, frame_index);

    PointCloud cloud;
    cloud.timestamp = timestamp;
    cloud.sensor_pose = sensor_pose;
    cloud.points.reserve(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        Ray ray;
        ray.origin = sensor_pose.position;
        ray.direction = sensor_pose.orientation * pattern[i].direction;
        ray.t_max = config.range;
        const auto hit = accel.cast(ray);
        if (!hit) continue;

        double d = hit->t;
        if (config.range_sigma > 0.0) {
            d += config.range_sigma * noise.normal(i);
            d = std::clamp(d, accel.t_min(),
                           config.range + 6.0 * config.range_sigma);
        }
        const double cos_theta =
            std::clamp(-dot(hit->normal, ray.direction), 0.0, 1.0);

        LidarPoint p;
        p.x = pattern[i].direction.x * d;
        p.y = pattern[i].direction.y * d;
        p.z = pattern[i].direction.z * d;
        p.intensity = backscatter_intensity(std::max(hit->t, 1e-6), cos_theta,
                                            material_for(hit->cls));
        p.cls = hit->cls;
        p.instance_id = hit->instance_id;
        p.beam = pattern[i].beam;
        p.azimuth = pattern[i].azimuth;
        cloud.points.push_back(p);
    }
    return cloud;
}

void CameraConfig::validate() const {
    if (width < 1 || height < 1)
        throw std::invalid_argument("camera: image size must be positive");
    if (!(horizontal_fov > 0.0) || horizontal_fov >= M_PI)
        throw std::invalid_argument("camera: horizontal FoV must be in (0, pi)");
    if (!(depth_max > 0.0))
        throw std::invalid_argument("camera: depth_max must be > 0");
    if (!(frame_period > 0.0))
        throw std::invalid_argument("camera: frame period must be > 0");
}

void AmbientConfig::validate() const {
    if (fog_density < 0.0)
        throw std::invalid_argument("ambient: fog density must be >= 0");
}

Vec3 sun_direction(SunSlot slot) {
    switch (slot) {
        case SunSlot::Morning: {  // low sun in the east
            const double el = 15.0 * M_PI / 180.0;
            return Vec3{std::cos(el), 0.0, std::sin(el)};
        }
        case SunSlot::Evening: {  // low sun in the west
            const double el = 10.0 * M_PI / 180.0;
            return Vec3{-std::cos(el), 0.0, std::sin(el)};
        }
        case SunSlot::Night:
            return Vec3{0.0, 0.0, 1.0};  // unused, intensity is 0
    }
    return Vec3{0.0, 0.0, 1.0};
}

double sun_intensity(SunSlot slot) {
    switch (slot) {
        case SunSlot::Morning: return 0.9;
        case SunSlot::Evening: return 0.7;
        case SunSlot::Night: return 0.0;
    }
    return 0.0;
}

double ambient_intensity(SunSlot slot) {
    switch (slot) {
        case SunSlot::Morning: return 0.45;
        case SunSlot::Evening: return 0.35;
        case SunSlot::Night: return 0.08;
    }
    return 0.0;
}

std::array<std::uint8_t, 3> sky_color(SunSlot slot) {
    switch (slot) {
        case SunSlot::Morning: return {168, 204, 235};
        case SunSlot::Evening: return {205, 160, 118};
        case SunSlot::Night: return {14, 15, 32};
    }
    return {0, 0, 0};
}

std::array<std::uint8_t, 3> class_color(SemanticClass c) {
    static constexpr std::array<std::uint8_t, 3> kPalette[kSemanticClassCount] = {
        {110, 125, 90},   // Terrain
        {120, 110, 100},  // Trackbed
        {160, 160, 165},  // RailTrack
        {90, 90, 95},     // Pole
        {70, 70, 75},     // Catenary
        {60, 120, 60},    // Tree
        {130, 125, 120},  // Rock
        {180, 150, 130},  // Building
        {150, 120, 80},   // Fence
        {75, 70, 70},     // Tunnel
        {140, 140, 145},  // Bridge
        {170, 165, 150},  // Platform
        {0, 0, 0},        // Background
    };
    return kPalette[(int)c];
}

namespace {

// pixel-center ray in the camera frame (x forward, y left, z up)
Vec3 pixel_direction(const CameraConfig& c, int px, int py) {
    const double fx = (c.width / 2.0) / std::tan(c.horizontal_fov / 2.0);
    const double u = (px + 0.5 - c.width / 2.0) / fx;
    const double v = (py + 0.5 - c.height / 2.0) / fx;
    return Vec3{1.0, -u, -v}.normalized();
}

}  // namespace

DepthImage render_depth(const Pose& camera_pose, double timestamp,
                        const CameraConfig& config, const Accelerator& accel) {
    config.validate();
    DepthImage img;
    img.width = config.width;
    img.height = config.height;
    img.timestamp = timestamp;
    img.depth.resize((std::size_t)config.width * config.height,
                     (float)config.depth_max);
    for (int py = 0; py < config.height; ++py)
        for (int px = 0; px < config.width; ++px) {
            Ray ray;
            ray.origin = camera_pose.position;
            ray.direction = camera_pose.orientation * pixel_direction(config, px, py);
            ray.t_max = config.depth_max;
            const auto hit = accel.cast(ray);
            if (hit)
                img.depth[(std::size_t)py * config.width + px] =
                    (float)std::min(hit->t, config.depth_max);
        }
    return img;
}

SegImage render_segmentation(const Pose& camera_pose, double timestamp,
                             const CameraConfig& config,
                             const Accelerator& accel) {
    config.validate();
    SegImage img;
    img.width = config.width;
    img.height = config.height;
    img.timestamp = timestamp;
    img.classes.resize((std::size_t)config.width * config.height,
                       (std::uint16_t)SemanticClass::Background);
    for (int py = 0; py < config.height; ++py)
        for (int px = 0; px < config.width; ++px) {
            Ray ray;
            ray.origin = camera_pose.position;
            ray.direction = camera_pose.orientation * pixel_direction(config, px, py);
            ray.t_max = config.depth_max;
            const auto hit = accel.cast(ray);
            if (hit)
                img.classes[(std::size_t)py * config.width + px] =
                    (std::uint16_t)hit->cls;
        }
    return img;
}

RgbImage render_shaded(const Pose& camera_pose, double timestamp,
                       const CameraConfig& config, const Accelerator& accel,
                       const AmbientConfig& ambient) {
    config.validate();
    ambient.validate();
    const Vec3 sun = sun_direction(ambient.slot);
    const double sun_i = sun_intensity(ambient.slot);
    const double amb = ambient_intensity(ambient.slot);
    const auto sky = sky_color(ambient.slot);

    RgbImage img;
    img.width = config.width;
    img.height = config.height;
    img.timestamp = timestamp;
    img.rgb.resize((std::size_t)config.width * config.height * 3);
    for (int py = 0; py < config.height; ++py)
        for (int px = 0; px < config.width; ++px) {
            Ray ray;
            ray.origin = camera_pose.position;
            ray.direction = camera_pose.orientation * pixel_direction(config, px, py);
            ray.t_max = config.depth_max;
            const auto hit = accel.cast(ray);

            double r, g, b, dist;
            if (hit) {
                double direct = sun_i * std::max(0.0, dot(hit->normal, sun));
                if (direct > 0.0) {
                    // single occlusion cast toward the sun
                    Ray shadow;
                    shadow.origin = hit->point + hit->normal * 1e-3;
                    shadow.direction = sun;
                    shadow.t_max = 500.0;
                    if (accel.cast(shadow)) direct = 0.0;
                }
                const double lum = std::clamp(amb + direct, 0.0, 1.0);
                const auto base = class_color(hit->cls);
                r = base[0] * lum;
                g = base[1] * lum;
                b = base[2] * lum;
                dist = hit->t;
            } else {
                r = sky[0];
                g = sky[1];
                b = sky[2];
                dist = config.depth_max;
            }
            const double w = 1.0 - std::exp(-ambient.fog_density * dist);
            r = r * (1.0 - w) + kFogColor[0] * w;
            g = g * (1.0 - w) + kFogColor[1] * w;
            b = b * (1.0 - w) + kFogColor[2] * w;
            const std::size_t at = ((std::size_t)py * config.width + px) * 3;
            img.rgb[at + 0] = (std::uint8_t)std::lround(std::clamp(r, 0.0, 255.0));
            img.rgb[at + 1] = (std::uint8_t)std::lround(std::clamp(g, 0.0, 255.0));
            img.rgb[at + 2] = (std::uint8_t)std::lround(std::clamp(b, 0.0, 255.0));
        }
    return img;
}

CameraFrame render_camera(const Pose& camera_pose, double timestamp,
                          const CameraConfig& config, const Accelerator& accel,
                          const AmbientConfig& ambient) {
    config.validate();
    ambient.validate();
    const Vec3 sun = sun_direction(ambient.slot);
    const double sun_i = sun_intensity(ambient.slot);
    const double amb = ambient_intensity(ambient.slot);
    const auto sky = sky_color(ambient.slot);

    CameraFrame f;
    const std::size_t n = (std::size_t)config.width * config.height;
    if (config.mode_depth) {
        f.depth.width = config.width;
        f.depth.height = config.height;
        f.depth.timestamp = timestamp;
        f.depth.depth.resize(n, (float)config.depth_max);
    }
    if (config.mode_segmentation) {
        f.seg.width = config.width;
        f.seg.height = config.height;
        f.seg.timestamp = timestamp;
        f.seg.classes.resize(n, (std::uint16_t)SemanticClass::Background);
    }
    if (config.mode_shaded) {
        f.rgb.width = config.width;
        f.rgb.height = config.height;
        f.rgb.timestamp = timestamp;
        f.rgb.rgb.resize(n * 3);
    }
    if (!config.mode_depth && !config.mode_segmentation && !config.mode_shaded)
        return f;

    for (int py = 0; py < config.height; ++py)
        for (int px = 0; px < config.width; ++px) {
            Ray ray;
            ray.origin = camera_pose.position;
            ray.direction =
                camera_pose.orientation * pixel_direction(config, px, py);
            ray.t_max = config.depth_max;
            const auto hit = accel.cast(ray);
            const std::size_t at = (std::size_t)py * config.width + px;

            if (config.mode_depth && hit)
                f.depth.depth[at] = (float)std::min(hit->t, config.depth_max);
            if (config.mode_segmentation && hit)
                f.seg.classes[at] = (std::uint16_t)hit->cls;
            if (config.mode_shaded) {
                double r, g, b, dist;
                if (hit) {
                    double direct = sun_i * std::max(0.0, dot(hit->normal, sun));
                    if (direct > 0.0) {
                        Ray shadow;
                        shadow.origin = hit->point + hit->normal * 1e-3;
                        shadow.direction = sun;
                        shadow.t_max = 500.0;
                        if (accel.cast(shadow)) direct = 0.0;
                    }
                    const double lum = std::clamp(amb + direct, 0.0, 1.0);
                    const auto base = class_color(hit->cls);
                    r = base[0] * lum;
                    g = base[1] * lum;
                    b = base[2] * lum;
                    dist = hit->t;
                } else {
                    r = sky[0];
                    g = sky[1];
                    b = sky[2];
                    dist = config.depth_max;
                }
                const double w = 1.0 - std::exp(-ambient.fog_density * dist);
                r = r * (1.0 - w) + kFogColor[0] * w;
                g = g * (1.0 - w) + kFogColor[1] * w;
                b = b * (1.0 - w) + kFogColor[2] * w;
                f.rgb.rgb[at * 3 + 0] =
                    (std::uint8_t)std::lround(std::clamp(r, 0.0, 255.0));
                f.rgb.rgb[at * 3 + 1] =
                    (std::uint8_t)std::lround(std::clamp(g, 0.0, 255.0));
                f.rgb.rgb[at * 3 + 2] =
                    (std::uint8_t)std::lround(std::clamp(b, 0.0, 255.0));
            }
        }
    return f;
}

void ImuConfig::validate() const {
    if (std::abs(mat9_det(mis)) < 1e-12)
        throw std::invalid_argument("imu: misalignment matrix must be invertible");
    if (quant_accel < 0.0 || quant_gyro < 0.0 || quant_mag < 0.0)
        throw std::invalid_argument("imu: quantization steps must be >= 0");
    if (!(rate > 0.0)) throw std::invalid_argument("imu: rate must be > 0");
    if (!(gm_time_constant > 0.0))
        throw std::invalid_argument("imu: GM time constant must be > 0");
}

namespace {

// advance one sensor's 3 axes and return the total drift delta
Vec3 advance_noise(const ImuAxisNoise& n, double dt, double rate, double alpha,
                   const CounterNoise& stream, std::uint64_t base,
                   double* gm, double* rw) {
    Vec3 delta;
    if (n.noise_density == 0.0 && n.bias_instability == 0.0 &&
        n.random_walk == 0.0)
        return delta;  // counters are positional, skipping draws is safe
    double* out[3] = {&delta.x, &delta.y, &delta.z};
    const double gm_drive = n.bias_instability * std::sqrt(1.0 - alpha * alpha);
    const double white_sigma = n.noise_density * std::sqrt(rate);
    const double rw_step = n.random_walk * std::sqrt(dt);
    for (int i = 0; i < 3; ++i) {
        gm[i] = gm[i] * alpha + gm_drive * stream.normal(base + 3 * i + 0);
        rw[i] += rw_step * stream.normal(base + 3 * i + 1);
        const double white = white_sigma * stream.normal(base + 3 * i + 2);
        *out[i] = gm[i] + white + rw[i];
    }
    return delta;
}

}  // namespace

ImuSample imu_sample(const Vec3& a_ned, const Vec3& omega_ned,
                     const Rotation& body_to_ned, const ImuConfig& config,
                     ImuNoiseState& state) {
    config.validate();
    const double dt = 1.0 / config.rate;
    const double alpha = std::exp(-dt / config.gm_time_constant);

    // NED -> IMU: undo the vehicle attitude, then the mount orientation
    const Rotation c_ned_imu =
        config.mount.transposed() * body_to_ned.transposed();

    const CounterNoise stream(state.seed_, state.k_);
    const Vec3 d_accel = advance_noise(config.accel_noise, dt, config.rate,
                                       alpha, stream, 0,
                                       &state.gm_[0], &state.rw_[0]);
    const Vec3 d_gyro = advance_noise(config.gyro_noise, dt, config.rate,
                                      alpha, stream, 9,
                                      &state.gm_[3], &state.rw_[3]);
    const Vec3 d_mag = advance_noise(config.mag_noise, dt, config.rate,
                                     alpha, stream, 18,
                                     &state.gm_[6], &state.rw_[6]);

    const Vec3 g_ned{0.0, 0.0, config.gravity};  // down is +z in NED
    const Vec3 accel_in = config.specific_force ? a_ned - g_ned : a_ned + g_ned;

    ImuSample s;
    s.t = (double)state.k_ * dt;
    s.accel = quantize(mat9_apply(config.mis, c_ned_imu * accel_in) +
                           config.bias_accel + d_accel,
                       config.quant_accel);
    s.gyro = quantize(mat9_apply(config.mis, c_ned_imu * omega_ned) +
                          config.bias_gyro + d_gyro,
                      config.quant_gyro);
    s.mag = quantize(mat9_apply(config.mis, c_ned_imu * config.mag_field_ned) +
                         config.bias_mag + d_mag,
                     config.quant_mag);
    ++state.k_;
    return s;
}

void save_lidar_config(const LidarConfig& c, const std::string& path) {
    save_json_file(json{{"n_beams", c.n_beams},
                        {"vertical_fov", c.vertical_fov},
                        {"horizontal_fov", c.horizontal_fov},
                        {"horizontal_resolution", c.horizontal_resolution},
                        {"range", c.range},
                        {"frame_period", c.frame_period},
                        {"range_sigma", c.range_sigma},
                        {"mount", pose_to_json(c.mount)}},
                   path);
}

LidarConfig load_lidar_config(const std::string& path) {
    const json j = load_json_file(path);
    LidarConfig c;
    c.n_beams = j.at("n_beams");
    c.vertical_fov = j.at("vertical_fov");
    c.horizontal_fov = j.at("horizontal_fov");
    c.horizontal_resolution = j.at("horizontal_resolution");
    c.range = j.at("range");
    c.frame_period = j.at("frame_period");
    c.range_sigma = j.at("range_sigma");
    c.mount = pose_from_json(j.at("mount"));
    c.validate();
    return c;
}

void save_camera_config(const CameraConfig& c, const std::string& path) {
    save_json_file(json{{"width", c.width},
                        {"height", c.height},
                        {"horizontal_fov", c.horizontal_fov},
                        {"depth_max", c.depth_max},
                        {"frame_period", c.frame_period},
                        {"mount", pose_to_json(c.mount)},
                        {"mode_depth", c.mode_depth},
                        {"mode_segmentation", c.mode_segmentation},
                        {"mode_shaded", c.mode_shaded}},
                   path);
}

CameraConfig load_camera_config(const std::string& path) {
    const json j = load_json_file(path);
    CameraConfig c;
    c.width = j.at("width");
    c.height = j.at("height");
    c.horizontal_fov = j.at("horizontal_fov");
    c.depth_max = j.at("depth_max");
    c.frame_period = j.at("frame_period");
    c.mount = pose_from_json(j.at("mount"));
    c.mode_depth = j.at("mode_depth");
    c.mode_segmentation = j.at("mode_segmentation");
    c.mode_shaded = j.at("mode_shaded");
    c.validate();
    return c;
}

namespace {

json axis_noise_to_json(const ImuAxisNoise& n) {
    return json{{"noise_density", n.noise_density},
                {"bias_instability", n.bias_instability},
                {"random_walk", n.random_walk}};
}

ImuAxisNoise axis_noise_from_json(const json& j) {
    ImuAxisNoise n;
    n.noise_density = j.at("noise_density");
    n.bias_instability = j.at("bias_instability");
    n.random_walk = j.at("random_walk");
    return n;
}

json vec3_to_json(const Vec3& v) { return json{v.x, v.y, v.z}; }
Vec3 vec3_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace

void save_imu_config(const ImuConfig& c, const std::string& path) {
    double yaw, pitch, roll;
    c.mount.to_euler_zyx(yaw, pitch, roll);
    save_json_file(json{{"misalignment", c.mis},
                        {"bias_accel", vec3_to_json(c.bias_accel)},
                        {"bias_gyro", vec3_to_json(c.bias_gyro)},
                        {"bias_mag", vec3_to_json(c.bias_mag)},
                        {"accel_noise", axis_noise_to_json(c.accel_noise)},
                        {"gyro_noise", axis_noise_to_json(c.gyro_noise)},
                        {"mag_noise", axis_noise_to_json(c.mag_noise)},
                        {"quant_accel", c.quant_accel},
                        {"quant_gyro", c.quant_gyro},
                        {"quant_mag", c.quant_mag},
                        {"mount_yaw_pitch_roll", {yaw, pitch, roll}},
                        {"rate", c.rate},
                        {"mag_field_ned", vec3_to_json(c.mag_field_ned)},
                        {"gm_time_constant", c.gm_time_constant},
                        {"gravity", c.gravity},
                        {"specific_force", c.specific_force}},
                   path);
}

ImuConfig load_imu_config(const std::string& path) {
    const json j = load_json_file(path);
    ImuConfig c;
    const auto& m = j.at("misalignment");
    for (int i = 0; i < 9; ++i) c.mis[(std::size_t)i] = m.at(i);
    c.bias_accel = vec3_from_json(j.at("bias_accel"));
    c.bias_gyro = vec3_from_json(j.at("bias_gyro"));
    c.bias_mag = vec3_from_json(j.at("bias_mag"));
    c.accel_noise = axis_noise_from_json(j.at("accel_noise"));
    c.gyro_noise = axis_noise_from_json(j.at("gyro_noise"));
    c.mag_noise = axis_noise_from_json(j.at("mag_noise"));
    c.quant_accel = j.at("quant_accel");
    c.quant_gyro = j.at("quant_gyro");
    c.quant_mag = j.at("quant_mag");
    const auto& ypr = j.at("mount_yaw_pitch_roll");
    c.mount = Rotation::from_euler_zyx(ypr.at(0), ypr.at(1), ypr.at(2));
    c.rate = j.at("rate");
    c.mag_field_ned = vec3_from_json(j.at("mag_field_ned"));
    c.gm_time_constant = j.at("gm_time_constant");
    c.gravity = j.at("gravity");
    c.specific_force = j.at("specific_force");
    c.validate();
    return c;
}

void save_ambient_config(const AmbientConfig& c, const std::string& path) {
    const char* slot = c.slot == SunSlot::Morning   ? "morning"
                       : c.slot == SunSlot::Evening ? "evening"
                                                    : "night";
    save_json_file(json{{"sun_slot", slot}, {"fog_density", c.fog_density}},
                   path);
}

AmbientConfig load_ambient_config(const std::string& path) {
    const json j = load_json_file(path);
    AmbientConfig c;
    const std::string slot = j.at("sun_slot");
    if (slot == "morning") c.slot = SunSlot::Morning;
    else if (slot == "evening") c.slot = SunSlot::Evening;
    else if (slot == "night") c.slot = SunSlot::Night;
    else throw std::runtime_error("unknown sun slot: " + slot);
    c.fog_density = j.at("fog_density");
    c.validate();
    return c;
}

}  // namespace railsim
