#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace railsim {

// Local Cartesian reference frames used throughout the pipeline. Route input
// is NED (x north, y east, z down); the world scene and all sensors live in
// ENU (x east, y north, z up).
enum class FrameTag { NED, ENU, BODY, SENSOR };

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double squared_norm() const { return x * x + y * y + z * z; }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
    Vec3 normalized() const {
        const double n = norm();
        if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
        return *this / n;
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// (n, e, d) -> (e, n, -u). The permutation is its own inverse, so the same
// component mapping serves both directions; both names are kept for clarity
// at call sites.
inline Vec3 ned_to_enu(const Vec3& v) { return {v.y, v.x, -v.z}; }
inline Vec3 enu_to_ned(const Vec3& v) { return {v.y, v.x, -v.z}; }

// 3x3 rotation matrix, row-major.
class Rotation {
  public:
    Rotation() {
        m_ = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    }
    explicit Rotation(const std::array<double, 9>& m) : m_(m) {}

    static Rotation identity() { return Rotation(); }

    // Intrinsic Z-Y-X (yaw, pitch, roll): body -> parent frame.
    static Rotation from_euler_zyx(double yaw, double pitch, double roll) {
        const double cy = std::cos(yaw), sy = std::sin(yaw);
        const double cp = std::cos(pitch), sp = std::sin(pitch);
        const double cr = std::cos(roll), sr = std::sin(roll);
        return Rotation({cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
                         sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
                         -sp,     cp * sr,                cp * cr});
    }

    static Rotation about_axis(const Vec3& axis, double angle) {
        const Vec3 u = axis.normalized();
        const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
        return Rotation({t * u.x * u.x + c,      t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y,
                         t * u.x * u.y + s * u.z, t * u.y * u.y + c,      t * u.y * u.z - s * u.x,
                         t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, t * u.z * u.z + c});
    }

    double at(int r, int c) const { return m_[r * 3 + c]; }
    double& at(int r, int c) { return m_[r * 3 + c]; }

    Vec3 apply(const Vec3& v) const {
        return {m_[0] * v.x + m_[1] * v.y + m_[2] * v.z,
                m_[3] * v.x + m_[4] * v.y + m_[5] * v.z,
                m_[6] * v.x + m_[7] * v.y + m_[8] * v.z};
    }
    Vec3 operator*(const Vec3& v) const { return apply(v); }

    Rotation operator*(const Rotation& o) const {
        std::array<double, 9> r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += at(i, k) * o.at(k, j);
                r[i * 3 + j] = s;
            }
        return Rotation(r);
    }

    Rotation transposed() const {
        return Rotation({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]});
    }
    Rotation inverse() const { return transposed(); }

    double determinant() const {
        return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) -
               m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
               m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
    }

    // det == 1 and orthonormal columns, both within tol.
    bool is_orthonormal(double tol = 1e-9) const {
        if (std::abs(determinant() - 1.0) > tol) return false;
        const Rotation rtr = transposed() * (*this);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double want = (i == j) ? 1.0 : 0.0;
                if (std::abs(rtr.at(i, j) - want) > tol) return false;
            }
        return true;
    }

    // Recover Z-Y-X angles: yaw in (-pi, pi], pitch in [-pi/2, pi/2].
    void to_euler_zyx(double& yaw, double& pitch, double& roll) const {
        pitch = std::asin(std::clamp(-at(2, 0), -1.0, 1.0));
        yaw = std::atan2(at(1, 0), at(0, 0));
        roll = std::atan2(at(2, 1), at(2, 2));
    }

  private:
    std::array<double, 9> m_;  // row-major
};

struct Pose {
    Vec3 position;
    Rotation orientation;
    FrameTag frame = FrameTag::ENU;

    // this * local: interprets `local` as a pose expressed in this pose's
    // body frame and returns it in this pose's parent frame.
    Pose compose(const Pose& local) const {
        Pose out;
        out.position = position + orientation * local.position;
        out.orientation = orientation * local.orientation;
        out.frame = frame;
        return out;
    }

    Pose inverse() const {
        Pose out;
        out.orientation = orientation.inverse();
        out.position = -(out.orientation * position);
        out.frame = frame;
        return out;
    }

    Vec3 to_world(const Vec3& local) const { return position + orientation * local; }
    Vec3 to_local(const Vec3& world) const {
        return orientation.inverse() * (world - position);
    }
};

}  // namespace railsim
