#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "railsim/route.hpp"
#include "railsim/sensors.hpp"

namespace railsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// KITTI-like dataset tree rooted at `root`; frame indices zero-padded to six
// digits and shared across modalities for co-timed frames.
struct DatasetLayout {
    std::string root;

    std::string velodyne_dir() const { return root + "/velodyne"; }
    std::string labels_dir() const { return root + "/labels"; }
    std::string depth_dir() const { return root + "/depth"; }
    std::string seg_dir() const { return root + "/seg"; }
    std::string rgb_dir() const { return root + "/rgb"; }
    std::string imu_file() const { return root + "/imu.txt"; }
    std::string poses_file() const { return root + "/poses.txt"; }
    std::string calib_file() const { return root + "/calib.txt"; }
    std::string manifest_file() const { return root + "/manifest.json"; }

    std::string velodyne_path(std::size_t frame) const;
    std::string label_path(std::size_t frame) const;
    std::string depth_path(std::size_t frame) const;
    std::string seg_path(std::size_t frame) const;
    std::string seg_palette_path() const { return seg_dir() + "/palette.json"; }
    std::string rgb_path(std::size_t frame) const;

    void create_dirs() const;
};

std::string frame_name(std::size_t frame);  // "000000"

// Packed little-endian float32 [x, y, z, intensity/255] per point.
std::vector<std::uint8_t> pointcloud_bin_bytes(const PointCloud& cloud);
// One little-endian u32 per point: low 16 bits class, high 16 instance.
std::vector<std::uint8_t> labels_bytes(const PointCloud& cloud);

struct BinPoint {
    float x, y, z, intensity;  // intensity normalized to [0, 1]
};
struct LabelWord {
    std::uint16_t cls;
    std::uint16_t instance;
};

void write_pointcloud_bin(const PointCloud& cloud, const std::string& path);
std::vector<BinPoint> read_pointcloud_bin(const std::string& path);
void write_labels(const PointCloud& cloud, const std::string& path);
std::vector<LabelWord> read_labels(const std::string& path);

// KITTI odometry convention: one line of 12 numbers per pose, the top 3x4 of
// the homogeneous sensor-to-world transform, row-major. Full double
// precision, so the round trip is bit-exact.
void write_poses(const std::vector<Pose>& poses, const std::string& path);
std::vector<Pose> read_poses(const std::string& path);

// Depth as 16-bit grayscale PNG in millimeters by default (scale counts per
// meter); values beyond 65535 counts are clamped.
void check_depth_encodable(double depth_max, double scale = 1000.0);
void write_depth_png(const DepthImage& img, const std::string& path,
                     double scale = 1000.0);
DepthImage read_depth_png(const std::string& path, double scale = 1000.0);

// Segmentation as 8-bit indexed PNG (palette = class colors) plus a JSON
// sidecar mapping index -> class name.
void write_seg_png(const SegImage& img, const std::string& path,
                   const std::string& sidecar_path);
SegImage read_seg_png(const std::string& path);

void write_rgb_png(const RgbImage& img, const std::string& path);
RgbImage read_rgb_png(const std::string& path);

// Delimited text: header line, then t ax ay az gx gy gz mx my mz per row,
// full precision. Read validates monotone timestamps.
void write_imu_text(const std::vector<ImuSample>& samples,
                    const std::string& path);
std::vector<ImuSample> read_imu_text(const std::string& path);

// --- framed TCP stream ---

enum class MessageType : std::uint8_t {
    PointCloud = 1,
    DepthImage = 2,
    SegImage = 3,
    RgbImage = 4,
    Imu = 5,
    Pose = 6,
};

struct StreamMessage {
    MessageType type = MessageType::PointCloud;
    std::uint64_t timestamp_ns = 0;
    std::vector<std::uint8_t> payload;  // identical to the on-disk bytes
};

// Wire format, all little-endian: magic "RSIM", version u8, type u8,
// timestamp u64 (ns), payload length u32, payload bytes.
std::vector<std::uint8_t> encode_message(const StreamMessage& msg);

// Incremental decoder tolerant of arbitrary chunking. A magic or version
// mismatch throws and poisons the decoder: framing cannot be re-synchronized.
class StreamDecoder {
  public:
    // appends decoded messages; returns how many completed during this call
    std::size_t feed(const std::uint8_t* data, std::size_t size);
    std::size_t feed(const std::vector<std::uint8_t>& data);
    std::vector<StreamMessage> take();

  private:
    std::vector<std::uint8_t> buffer_;
    std::vector<StreamMessage> out_;
    bool poisoned_ = false;
};

// TCP fan-out server. publish() never blocks on the network: each client has
// a bounded backlog and is disconnected when it falls behind.
class StreamServer {
  public:
    explicit StreamServer(std::size_t max_backlog = 64);
    ~StreamServer();

    // binds 127.0.0.1:port (0 = ephemeral) and returns the bound port
    int start(int port);
    void publish(const StreamMessage& msg);
    std::size_t client_count() const;
    // waits until every live client's backlog drains (or the timeout expires);
    // returns whether all backlogs emptied
    bool flush(double timeout_s);
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// --- config files (strict mode rejects unknown fields and names the path;
//     lenient mode warns on stderr; missing fields fall back to defaults,
//     ill-typed or invalid values are rejected with the field path) ---

TrainParams load_train_params(const std::string& path, bool strict = true);
void save_train_params(const TrainParams& p, const std::string& path);
LidarConfig load_lidar_config_file(const std::string& path, bool strict = true);
CameraConfig load_camera_config_file(const std::string& path,
                                     bool strict = true);
ImuConfig load_imu_config_file(const std::string& path, bool strict = true);
AmbientConfig load_ambient_config_file(const std::string& path,
                                       bool strict = true);

}  // namespace railsim
