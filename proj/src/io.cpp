#include "railsim/io.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "config_fields.hpp"
#include "railsim/png.hpp"

namespace railsim {

namespace {

using nlohmann::json;

void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back((std::uint8_t)(x & 0xff));
    v.push_back((std::uint8_t)(x >> 8));
}

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back((std::uint8_t)(x >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& v, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) v.push_back((std::uint8_t)(x >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& v, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(v, u);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t)p[0] | ((std::uint32_t)p[1] << 8) |
           ((std::uint32_t)p[2] << 16) | ((std::uint32_t)p[3] << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | p[i];
    return x;
}

float get_f32(const std::uint8_t* p) {
    const std::uint32_t u = get_u32(p);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

void write_bytes(const std::vector<std::uint8_t>& bytes,
                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out.write((const char*)bytes.data(), (std::streamsize)bytes.size());
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot read: " + path);
    const std::streamsize n = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes((std::size_t)n);
    in.read((char*)bytes.data(), n);
    if (!in) throw std::runtime_error("read failed: " + path);
    return bytes;
}

constexpr std::uint8_t kMagic[4] = {'R', 'S', 'I', 'M'};
constexpr std::uint8_t kStreamVersion = 1;
constexpr std::size_t kHeaderSize = 18;

}  // namespace

std::string frame_name(std::size_t frame) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", frame);
    return buf;
}

std::string DatasetLayout::velodyne_path(std::size_t frame) const {
    return velodyne_dir() + "/" + frame_name(frame) + ".bin";
}
std::string DatasetLayout::label_path(std::size_t frame) const {
    return labels_dir() + "/" + frame_name(frame) + ".label";
}
std::string DatasetLayout::depth_path(std::size_t frame) const {
    return depth_dir() + "/" + frame_name(frame) + ".png";
}
std::string DatasetLayout::seg_path(std::size_t frame) const {
    return seg_dir() + "/" + frame_name(frame) + ".png";
}
std::string DatasetLayout::rgb_path(std::size_t frame) const {
    return rgb_dir() + "/" + frame_name(frame) + ".png";
}

void DatasetLayout::create_dirs() const {
    for (const std::string& d :
         {velodyne_dir(), labels_dir(), depth_dir(), seg_dir(), rgb_dir()})
        std::filesystem::create_directories(d);
}

std::vector<std::uint8_t> pointcloud_bin_bytes(const PointCloud& cloud) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(cloud.points.size() * 16);
    for (const LidarPoint& p : cloud.points) {
        put_f32(bytes, (float)p.x);
        put_f32(bytes, (float)p.y);
        put_f32(bytes, (float)p.z);
        put_f32(bytes, (float)(p.intensity / 255.0));
    }
    return bytes;
}

std::vector<std::uint8_t> labels_bytes(const PointCloud& cloud) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(cloud.points.size() * 4);
    for (const LidarPoint& p : cloud.points) {
        put_u16(bytes, (std::uint16_t)p.cls);
        put_u16(bytes, (std::uint16_t)p.instance_id);
    }
    return bytes;
}

void write_pointcloud_bin(const PointCloud& cloud, const std::string& path) {
    write_bytes(pointcloud_bin_bytes(cloud), path);
}

std::vector<BinPoint> read_pointcloud_bin(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_bytes(path);
    if (bytes.size() % 16 != 0)
        throw std::runtime_error("truncated point file: " + path);
    std::vector<BinPoint> out(bytes.size() / 16);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * 16;
        out[i] = {get_f32(p), get_f32(p + 4), get_f32(p + 8), get_f32(p + 12)};
    }
    return out;
}

void write_labels(const PointCloud& cloud, const std::string& path) {
    write_bytes(labels_bytes(cloud), path);
}

std::vector<LabelWord> read_labels(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_bytes(path);
    if (bytes.size() % 4 != 0)
        throw std::runtime_error("truncated label file: " + path);
    std::vector<LabelWord> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * 4;
        const std::uint32_t w = get_u32(p);
        out[i] = {(std::uint16_t)(w & 0xffff), (std::uint16_t)(w >> 16)};
    }
    return out;
}

void write_poses(const std::vector<Pose>& poses, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    char buf[32];
    for (const Pose& pose : poses) {
        bool first = true;
        for (int r = 0; r < 3; ++r) {
            const double row[4] = {pose.orientation.at(r, 0),
                                   pose.orientation.at(r, 1),
                                   pose.orientation.at(r, 2),
                                   r == 0   ? pose.position.x
                                   : r == 1 ? pose.position.y
                                            : pose.position.z};
            for (double v : row) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                out << (first ? "" : " ") << buf;
                first = false;
            }
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Pose> read_poses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read: " + path);
    std::vector<Pose> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double m[12];
        for (double& v : m)
            if (!(ss >> v))
                throw std::runtime_error("malformed pose line in " + path);
        Pose p;
        p.orientation = Rotation(
            {m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]});
        p.position = Vec3{m[3], m[7], m[11]};
        out.push_back(p);
    }
    return out;
}

void check_depth_encodable(double depth_max, double scale) {
    if (!(scale > 0.0)) throw ConfigError("depth scale must be > 0");
    if (depth_max * scale > 65535.0)
        throw ConfigError(
            "depth_max * scale exceeds the 16-bit range; record a smaller "
            "scale in the manifest");
}

void write_depth_png(const DepthImage& img, const std::string& path,
                     double scale) {
    if (!(scale > 0.0)) throw ConfigError("depth scale must be > 0");
    Image png;
    png.format = Image::Format::Gray16;
    png.width = img.width;
    png.height = img.height;
    png.gray.resize((std::size_t)img.width * img.height);
    for (std::size_t i = 0; i < png.gray.size(); ++i) {
        const double counts = std::lround((double)img.depth[i] * scale);
        png.gray[i] = (std::uint16_t)std::min(counts, 65535.0);
    }
    write_png(png, path);
}

DepthImage read_depth_png(const std::string& path, double scale) {
    const Image png = read_png(path);
    if (png.format != Image::Format::Gray16)
        throw std::runtime_error("not a 16-bit depth image: " + path);
    DepthImage img;
    img.width = png.width;
    img.height = png.height;
    img.depth.resize(png.gray.size());
    for (std::size_t i = 0; i < png.gray.size(); ++i)
        img.depth[i] = (float)(png.gray[i] / scale);
    return img;
}

void write_seg_png(const SegImage& img, const std::string& path,
                   const std::string& sidecar_path) {
    Image png;
    png.format = Image::Format::Indexed8;
    png.width = img.width;
    png.height = img.height;
    png.pixels.resize((std::size_t)img.width * img.height);
    json mapping = json::object();
    for (int c = 0; c < kSemanticClassCount; ++c) {
        png.palette.push_back(class_color((SemanticClass)c));
        mapping[std::to_string(c)] = semantic_class_name((SemanticClass)c);
    }
    for (std::size_t i = 0; i < png.pixels.size(); ++i) {
        if (img.classes[i] >= kSemanticClassCount)
            throw std::runtime_error("segmentation index out of palette range");
        png.pixels[i] = (std::uint8_t)img.classes[i];
    }
    write_png(png, path);
    std::ofstream side(sidecar_path);
    if (!side) throw std::runtime_error("cannot write: " + sidecar_path);
    side << mapping.dump(2) << "\n";
}

SegImage read_seg_png(const std::string& path) {
    const Image png = read_png(path);
    if (png.format != Image::Format::Indexed8)
        throw std::runtime_error("not an indexed segmentation image: " + path);
    SegImage img;
    img.width = png.width;
    img.height = png.height;
    img.classes.assign(png.pixels.begin(), png.pixels.end());
    return img;
}

void write_rgb_png(const RgbImage& img, const std::string& path) {
    Image png;
    png.format = Image::Format::Rgb8;
    png.width = img.width;
    png.height = img.height;
    png.pixels = img.rgb;
    write_png(png, path);
}

RgbImage read_rgb_png(const std::string& path) {
    const Image png = read_png(path);
    if (png.format != Image::Format::Rgb8)
        throw std::runtime_error("not an RGB image: " + path);
    RgbImage img;
    img.width = png.width;
    img.height = png.height;
    img.rgb = png.pixels;
    return img;
}

void write_imu_text(const std::vector<ImuSample>& samples,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "t ax ay az gx gy gz mx my mz\n";
    char buf[32];
    for (const ImuSample& s : samples) {
        const double row[10] = {s.t,      s.accel.x, s.accel.y, s.accel.z,
                                s.gyro.x, s.gyro.y,  s.gyro.z,  s.mag.x,
                                s.mag.y,  s.mag.z};
        for (int i = 0; i < 10; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            out << (i ? " " : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ImuSample> read_imu_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read: " + path);
    std::string header;
    std::getline(in, header);
    std::vector<ImuSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double v[10];
        for (double& x : v)
            if (!(ss >> x))
                throw std::runtime_error("malformed IMU row in " + path);
        ImuSample s;
        s.t = v[0];
        s.accel = Vec3{v[1], v[2], v[3]};
        s.gyro = Vec3{v[4], v[5], v[6]};
        s.mag = Vec3{v[7], v[8], v[9]};
        if (!out.empty() && s.t <= out.back().t)
            throw std::runtime_error("non-monotone IMU timestamps in " + path);
        out.push_back(s);
    }
    return out;
}

std::vector<std::uint8_t> encode_message(const StreamMessage& msg) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(kHeaderSize + msg.payload.size());
    bytes.insert(bytes.end(), kMagic, kMagic + 4);
    bytes.push_back(kStreamVersion);
    bytes.push_back((std::uint8_t)msg.type);
    put_u64(bytes, msg.timestamp_ns);
    put_u32(bytes, (std::uint32_t)msg.payload.size());
    bytes.insert(bytes.end(), msg.payload.begin(), msg.payload.end());
    return bytes;
}

std::size_t StreamDecoder::feed(const std::uint8_t* data, std::size_t size) {
    if (poisoned_)
        throw std::runtime_error("stream decoder poisoned by a framing error");
    buffer_.insert(buffer_.end(), data, data + size);
    std::size_t consumed = 0, produced = 0;
    while (buffer_.size() - consumed >= kHeaderSize) {
        const std::uint8_t* h = buffer_.data() + consumed;
        if (std::memcmp(h, kMagic, 4) != 0) {
            poisoned_ = true;
            throw std::runtime_error("bad stream magic; cannot resynchronize");
        }
        if (h[4] != kStreamVersion) {
            poisoned_ = true;
            throw std::runtime_error("unsupported stream version");
        }
        const std::uint32_t len = get_u32(h + 14);
        if (len > (1u << 30)) {
            poisoned_ = true;
            throw std::runtime_error("implausible stream payload length");
        }
        if (buffer_.size() - consumed < kHeaderSize + len) break;
        StreamMessage msg;
        msg.type = (MessageType)h[5];
        msg.timestamp_ns = get_u64(h + 6);
        msg.payload.assign(h + kHeaderSize, h + kHeaderSize + len);
        out_.push_back(std::move(msg));
        consumed += kHeaderSize + len;
        ++produced;
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + (std::ptrdiff_t)consumed);
    return produced;
}

std::size_t StreamDecoder::feed(const std::vector<std::uint8_t>& data) {
    return feed(data.data(), data.size());
}

std::vector<StreamMessage> StreamDecoder::take() {
    std::vector<StreamMessage> out;
    out.swap(out_);
    return out;
}

// --- server ---

struct StreamServer::Impl {
    struct Client {
        int fd = -1;
        std::deque<std::vector<std::uint8_t>> queue;
        std::mutex m;
        std::condition_variable cv;
        bool dead = false;
        std::thread sender;
    };

    std::size_t max_backlog;
    int listen_fd = -1;
    std::atomic<bool> running{false};
    std::thread acceptor;
    std::vector<std::unique_ptr<Client>> clients;
    mutable std::mutex clients_m;

    void sender_loop(Client* c) {
        for (;;) {
            std::vector<std::uint8_t> bytes;
            {
                std::unique_lock<std::mutex> lock(c->m);
                c->cv.wait(lock, [&] { return c->dead || !c->queue.empty(); });
                if (c->dead) break;
                bytes = std::move(c->queue.front());
                c->queue.pop_front();
            }
            std::size_t sent = 0;
            while (sent < bytes.size()) {
                const ssize_t n =
                    send(c->fd, bytes.data() + sent, bytes.size() - sent,
                         MSG_NOSIGNAL);
                if (n > 0) {
                    sent += (std::size_t)n;
                    continue;
                }
                if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
                    // send timeout expired; give up only if asked to die
                    std::lock_guard<std::mutex> lock(c->m);
                    if (c->dead) return;
                    continue;
                }
                std::lock_guard<std::mutex> lock(c->m);
                c->dead = true;
                return;
            }
        }
    }

    void accept_loop() {
        while (running.load()) {
            pollfd pfd{listen_fd, POLLIN, 0};
            const int r = poll(&pfd, 1, 100);
            if (r <= 0) continue;
            const int fd = accept(listen_fd, nullptr, nullptr);
            if (fd < 0) continue;
            timeval tv{0, 200000};  // bounded send so a stuck peer can't pin us
            setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
            auto client = std::make_unique<Client>();
            client->fd = fd;
            Client* raw = client.get();
            client->sender = std::thread([this, raw] { sender_loop(raw); });
            std::lock_guard<std::mutex> lock(clients_m);
            clients.push_back(std::move(client));
        }
    }
};

StreamServer::StreamServer(std::size_t max_backlog) : impl_(new Impl) {
    impl_->max_backlog = max_backlog;
}

StreamServer::~StreamServer() { stop(); }

int StreamServer::start(int port) {
    impl_->listen_fd = socket(AF_INET, SOCK_STREAM, 0);
    if (impl_->listen_fd < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    setsockopt(impl_->listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons((std::uint16_t)port);
    if (bind(impl_->listen_fd, (sockaddr*)&addr, sizeof(addr)) != 0) {
        close(impl_->listen_fd);
        impl_->listen_fd = -1;
        throw std::runtime_error("cannot bind stream port");
    }
    if (listen(impl_->listen_fd, 8) != 0) {
        close(impl_->listen_fd);
        impl_->listen_fd = -1;
        throw std::runtime_error("listen() failed");
    }
    socklen_t len = sizeof(addr);
    getsockname(impl_->listen_fd, (sockaddr*)&addr, &len);
    impl_->running = true;
    impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
    return ntohs(addr.sin_port);
}

void StreamServer::publish(const StreamMessage& msg) {
    const std::vector<std::uint8_t> bytes = encode_message(msg);
    std::lock_guard<std::mutex> lock(impl_->clients_m);
    for (auto& c : impl_->clients) {
        std::lock_guard<std::mutex> cl(c->m);
        if (c->dead) continue;
        if (c->queue.size() >= impl_->max_backlog) {
            c->dead = true;  // fell behind: drop rather than block generation
            c->cv.notify_all();
            continue;
        }
        c->queue.push_back(bytes);
        c->cv.notify_all();
    }
}

bool StreamServer::flush(double timeout_s) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_s);
    for (;;) {
        bool drained = true;
        {
            std::lock_guard<std::mutex> lock(impl_->clients_m);
            for (const auto& c : impl_->clients) {
                std::lock_guard<std::mutex> cl(c->m);
                if (!c->dead && !c->queue.empty()) drained = false;
            }
        }
        if (drained) return true;
        if (std::chrono::steady_clock::now() >= deadline) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

std::size_t StreamServer::client_count() const {
    std::lock_guard<std::mutex> lock(impl_->clients_m);
    std::size_t n = 0;
    for (const auto& c : impl_->clients) {
        std::lock_guard<std::mutex> cl(c->m);
        if (!c->dead) ++n;
    }
    return n;
}

void StreamServer::stop() {
    if (!impl_->running.exchange(false)) return;
    if (impl_->acceptor.joinable()) impl_->acceptor.join();
    if (impl_->listen_fd >= 0) {
        close(impl_->listen_fd);
        impl_->listen_fd = -1;
    }
    std::lock_guard<std::mutex> lock(impl_->clients_m);
    for (auto& c : impl_->clients) {
        {
            std::lock_guard<std::mutex> cl(c->m);
            c->dead = true;
            c->cv.notify_all();
        }
        if (c->sender.joinable()) c->sender.join();
        if (c->fd >= 0) close(c->fd);
    }
    impl_->clients.clear();
}

// --- config files ---

namespace {

using detail::Fields;
using detail::load_object;

Pose pose_field(Fields& f, const char* key, bool strict) {
    if (!f.has(key)) {
        f.get<json>(key, json::object());
        return Pose{};
    }
    Fields pf(f.raw(key), std::string("mount"));
    Pose p;
    const auto pos = pf.get<std::vector<double>>("position", {0, 0, 0});
    const auto ypr = pf.get<std::vector<double>>("yaw_pitch_roll", {0, 0, 0});
    if (pos.size() != 3 || ypr.size() != 3)
        throw ConfigError("mount: position/yaw_pitch_roll need 3 components");
    p.position = Vec3{pos[0], pos[1], pos[2]};
    p.orientation = Rotation::from_euler_zyx(ypr[0], ypr[1], ypr[2]);
    pf.finish(strict);
    return p;
}

ImuAxisNoise noise_field(Fields& f, const char* key, bool strict) {
    if (!f.has(key)) {
        f.get<json>(key, json::object());
        return ImuAxisNoise{};
    }
    Fields nf(f.raw(key), key);
    ImuAxisNoise n;
    n.noise_density = nf.get<double>("noise_density", 0.0);
    n.bias_instability = nf.get<double>("bias_instability", 0.0);
    n.random_walk = nf.get<double>("random_walk", 0.0);
    nf.finish(strict);
    return n;
}

Vec3 vec3_field(Fields& f, const char* key, const Vec3& def) {
    if (!f.has(key)) {
        f.get<json>(key, json::array());
        return def;
    }
    const auto v = f.get<std::vector<double>>(key, {});
    if (v.size() != 3) throw ConfigError(std::string(key) + ": need 3 numbers");
    return Vec3{v[0], v[1], v[2]};
}

}  // namespace

namespace detail {

TrainParams train_params_from_json(const nlohmann::json& j, bool strict,
                                   const std::string& where) {
    Fields f(j, where);
    TrainParams p;
    p.bogie_spacing = f.get<double>("bogie_spacing", p.bogie_spacing);
    p.a_max = f.get<double>("a_max", p.a_max);
    p.d_max = f.get<double>("d_max", p.d_max);
    p.a_lat_max = f.get<double>("a_lat_max", p.a_lat_max);
    p.line_speed = f.get<double>("line_speed", p.line_speed);
    p.sample_period = f.get<double>("sample_period", p.sample_period);
    p.station_cap = f.get<double>("station_cap", p.station_cap);
    p.tunnel_cap = f.get<double>("tunnel_cap", p.tunnel_cap);
    p.bridge_cap = f.get<double>("bridge_cap", p.bridge_cap);
    p.initial_speed = f.get<double>("initial_speed", p.initial_speed);
    f.finish(strict);
    for (const auto& [name, v] :
         {std::pair<const char*, double>{"bogie_spacing", p.bogie_spacing},
          {"a_max", p.a_max},
          {"d_max", p.d_max},
          {"a_lat_max", p.a_lat_max},
          {"line_speed", p.line_speed},
          {"sample_period", p.sample_period}})
        if (!(v > 0.0))
            throw ConfigError(where + "." + name + ": must be > 0");
    if (p.initial_speed < 0.0)
        throw ConfigError(where + ".initial_speed: must be >= 0");
    return p;
}

}  // namespace detail

TrainParams load_train_params(const std::string& path, bool strict) {
    return detail::train_params_from_json(load_object(path), strict, "train");
}

void save_train_params(const TrainParams& p, const std::string& path) {
    const json j{{"bogie_spacing", p.bogie_spacing},
                 {"a_max", p.a_max},
                 {"d_max", p.d_max},
                 {"a_lat_max", p.a_lat_max},
                 {"line_speed", p.line_speed},
                 {"sample_period", p.sample_period},
                 {"station_cap", p.station_cap},
                 {"tunnel_cap", p.tunnel_cap},
                 {"bridge_cap", p.bridge_cap},
                 {"initial_speed", p.initial_speed}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << "\n";
}

namespace detail {

LidarConfig lidar_config_from_json(const nlohmann::json& j, bool strict,
                                   const std::string& where) {
    Fields f(j, where);
    LidarConfig c;
    c.n_beams = f.get<int>("n_beams", c.n_beams);
    c.vertical_fov = f.get<double>("vertical_fov", c.vertical_fov);
    c.horizontal_fov = f.get<double>("horizontal_fov", c.horizontal_fov);
    c.horizontal_resolution =
        f.get<double>("horizontal_resolution", c.horizontal_resolution);
    c.range = f.get<double>("range", c.range);
    c.frame_period = f.get<double>("frame_period", c.frame_period);
    c.range_sigma = f.get<double>("range_sigma", c.range_sigma);
    c.mount = pose_field(f, "mount", strict);
    f.finish(strict);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

CameraConfig camera_config_from_json(const nlohmann::json& j, bool strict,
                                     const std::string& where) {
    Fields f(j, where);
    CameraConfig c;
    c.width = f.get<int>("width", c.width);
    c.height = f.get<int>("height", c.height);
    c.horizontal_fov = f.get<double>("horizontal_fov", c.horizontal_fov);
    c.depth_max = f.get<double>("depth_max", c.depth_max);
    c.frame_period = f.get<double>("frame_period", c.frame_period);
    c.mount = pose_field(f, "mount", strict);
    c.mode_depth = f.get<bool>("mode_depth", c.mode_depth);
    c.mode_segmentation = f.get<bool>("mode_segmentation", c.mode_segmentation);
    c.mode_shaded = f.get<bool>("mode_shaded", c.mode_shaded);
    f.finish(strict);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

ImuConfig imu_config_from_json(const nlohmann::json& j, bool strict,
                               const std::string& where) {
    Fields f(j, where);
    ImuConfig c;
    if (f.has("misalignment")) {
        const auto m = f.get<std::vector<double>>("misalignment", {});
        if (m.size() != 9)
            throw ConfigError(where +
                              ".misalignment: need 9 numbers (row-major)");
        std::copy(m.begin(), m.end(), c.mis.begin());
    } else {
        f.get<json>("misalignment", json::array());
    }
    c.bias_accel = vec3_field(f, "bias_accel", c.bias_accel);
    c.bias_gyro = vec3_field(f, "bias_gyro", c.bias_gyro);
    c.bias_mag = vec3_field(f, "bias_mag", c.bias_mag);
    c.accel_noise = noise_field(f, "accel_noise", strict);
    c.gyro_noise = noise_field(f, "gyro_noise", strict);
    c.mag_noise = noise_field(f, "mag_noise", strict);
    c.quant_accel = f.get<double>("quant_accel", c.quant_accel);
    c.quant_gyro = f.get<double>("quant_gyro", c.quant_gyro);
    c.quant_mag = f.get<double>("quant_mag", c.quant_mag);
    if (f.has("mount_yaw_pitch_roll")) {
        const auto ypr = f.get<std::vector<double>>("mount_yaw_pitch_roll", {});
        if (ypr.size() != 3)
            throw ConfigError(where + ".mount_yaw_pitch_roll: need 3 numbers");
        c.mount = Rotation::from_euler_zyx(ypr[0], ypr[1], ypr[2]);
    } else {
        f.get<json>("mount_yaw_pitch_roll", json::array());
    }
    c.rate = f.get<double>("rate", c.rate);
    c.mag_field_ned = vec3_field(f, "mag_field_ned", c.mag_field_ned);
    c.gm_time_constant = f.get<double>("gm_time_constant", c.gm_time_constant);
    c.gravity = f.get<double>("gravity", c.gravity);
    c.specific_force = f.get<bool>("specific_force", c.specific_force);
    f.finish(strict);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

AmbientConfig ambient_config_from_json(const nlohmann::json& j, bool strict,
                                       const std::string& where) {
    Fields f(j, where);
    AmbientConfig c;
    const std::string slot = f.get<std::string>("sun_slot", "morning");
    if (slot == "morning") c.slot = SunSlot::Morning;
    else if (slot == "evening") c.slot = SunSlot::Evening;
    else if (slot == "night") c.slot = SunSlot::Night;
    else throw ConfigError(where + ".sun_slot: unknown slot '" + slot + "'");
    c.fog_density = f.get<double>("fog_density", c.fog_density);
    f.finish(strict);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

}  // namespace detail

LidarConfig load_lidar_config_file(const std::string& path, bool strict) {
    return detail::lidar_config_from_json(load_object(path), strict, "lidar");
}

CameraConfig load_camera_config_file(const std::string& path, bool strict) {
    return detail::camera_config_from_json(load_object(path), strict, "camera");
}

ImuConfig load_imu_config_file(const std::string& path, bool strict) {
    return detail::imu_config_from_json(load_object(path), strict, "imu");
}

AmbientConfig load_ambient_config_file(const std::string& path, bool strict) {
    return detail::ambient_config_from_json(load_object(path), strict,
                                            "ambient");
}

}  // namespace railsim
