#include "railsim/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "railsim/rng.hpp"

namespace railsim {

namespace {

// uniform hash grid over a point set for nearest-neighbor queries
class GridNN {
  public:
    explicit GridNN(const std::vector<Vec3>& pts) : pts_(pts) {
        if (pts.empty()) throw std::invalid_argument("empty point set");
        lo_ = hi_ = pts[0];
        for (const Vec3& p : pts) {
            lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y),
                   std::min(lo_.z, p.z)};
            hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y),
                   std::max(hi_.z, p.z)};
        }
        const double diag = (hi_ - lo_).norm();
        cell_ = std::max(1e-3, diag / (std::cbrt((double)pts.size()) + 1.0));
        for (std::uint32_t i = 0; i < pts.size(); ++i)
            cells_[key(coord(pts[i]))].push_back(i);
    }

    double nearest(const Vec3& q) const {
        const std::array<std::int64_t, 3> c = coord(q);
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t r = 0;; ++r) {
            // all unexplored cells are at least (r-1) cells away from q
            if (best <= (double)(r - 1) * cell_) break;
            if (r > 4096) return linear(q);  // pathological separation
            visit_ring(c, r, q, best);
        }
        return best;
    }

  private:
    std::array<std::int64_t, 3> coord(const Vec3& p) const {
        return {(std::int64_t)std::floor((p.x - lo_.x) / cell_),
                (std::int64_t)std::floor((p.y - lo_.y) / cell_),
                (std::int64_t)std::floor((p.z - lo_.z) / cell_)};
    }

    static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
        return hash_combine(hash_combine((std::uint64_t)c[0],
                                         (std::uint64_t)c[1]),
                            (std::uint64_t)c[2]);
    }

    void probe(const std::array<std::int64_t, 3>& c, const Vec3& q,
               double& best) const {
        const auto it = cells_.find(key(c));
        if (it == cells_.end()) return;
        for (std::uint32_t i : it->second)
            best = std::min(best, (pts_[i] - q).norm());
    }

    void visit_ring(const std::array<std::int64_t, 3>& c, std::int64_t r,
                    const Vec3& q, double& best) const {
        if (r == 0) {
            probe(c, q, best);
            return;
        }
        for (std::int64_t dx = -r; dx <= r; ++dx)
            for (std::int64_t dy = -r; dy <= r; ++dy)
                for (std::int64_t dz = -r; dz <= r; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) !=
                        r)
                        continue;
                    probe({c[0] + dx, c[1] + dy, c[2] + dz}, q, best);
                }
    }

    double linear(const Vec3& q) const {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& p : pts_) best = std::min(best, (p - q).norm());
        return best;
    }

    const std::vector<Vec3>& pts_;
    Vec3 lo_, hi_;
    double cell_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

ErrorStats stats_of(const std::vector<double>& v) {
    ErrorStats s;
    if (v.empty()) return s;
    for (double x : v) {
        s.mean += x;
        s.max = std::max(s.max, x);
    }
    s.mean /= (double)v.size();
    for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(s.stddev / (double)v.size());
    return s;
}

}  // namespace

std::vector<Vec3> cloud_positions(const PointCloud& cloud) {
    std::vector<Vec3> out;
    out.reserve(cloud.points.size());
    for (const LidarPoint& p : cloud.points) out.push_back({p.x, p.y, p.z});
    return out;
}

std::vector<Vec3> crop_azimuth(const std::vector<Vec3>& points,
                               const AzimuthCrop& crop) {
    std::vector<Vec3> out;
    for (const Vec3& p : points) {
        const double az = std::atan2(p.y, p.x);
        if (az >= crop.lo && az <= crop.hi) out.push_back(p);
    }
    return out;
}

double pc_rmse(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
               const std::optional<AzimuthCrop>& crop) {
    const std::vector<Vec3> ca = crop ? crop_azimuth(a, *crop) : a;
    const std::vector<Vec3> cb = crop ? crop_azimuth(b, *crop) : b;
    if (ca.empty() || cb.empty())
        throw std::invalid_argument("point cloud empty after cropping");
    const GridNN nn(cb);
    double sum = 0.0;
    for (const Vec3& p : ca) {
        const double d = nn.nearest(p);
        sum += d * d;
    }
    return std::sqrt(sum / (double)ca.size());
}

double pc_rmse_symmetric(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                         const std::optional<AzimuthCrop>& crop) {
    return std::max(pc_rmse(a, b, crop), pc_rmse(b, a, crop));
}

namespace {

void check_nondegenerate(const std::vector<Vec3>& pts, const char* name) {
    if (pts.size() < 3)
        throw std::invalid_argument(std::string(name) +
                                    ": need at least 3 points");
    Vec3 mean;
    for (const Vec3& p : pts) mean += p;
    mean = mean / (double)pts.size();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) {
        const Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
        cov += d * d.transpose();
    }
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
    // collinear (or coincident) sets have at most one significant direction
    if (svd.singularValues()(1) < 1e-9)
        throw std::invalid_argument(std::string(name) +
                                    ": degenerate (collinear) point set");
}

}  // namespace

IcpResult icp_align(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                    const RigidTransform& init) {
    check_nondegenerate(src, "icp source");
    check_nondegenerate(dst, "icp target");
    RigidTransform t = init;
    IcpResult result;
    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 50; ++iter) {
        // correspondences under the current transform
        std::vector<Vec3> moved(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) moved[i] = t.apply(src[i]);

        std::vector<std::uint32_t> corr(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t bi = 0;
            for (std::uint32_t j = 0; j < dst.size(); ++j) {
                const double d = (dst[j] - moved[i]).squared_norm();
                if (d < best) {
                    best = d;
                    bi = j;
                }
            }
            corr[i] = bi;
        }

        // closed-form rigid fit of the original src onto the matched dst
        Vec3 cs, cd;
        for (std::size_t i = 0; i < src.size(); ++i) {
            cs += src[i];
            cd += dst[corr[i]];
        }
        cs = cs / (double)src.size();
        cd = cd / (double)src.size();
        Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
        for (std::size_t i = 0; i < src.size(); ++i) {
            const Vec3 a = src[i] - cs;
            const Vec3 b = dst[corr[i]] - cd;
            h += Eigen::Vector3d(a.x, a.y, a.z) *
                 Eigen::Vector3d(b.x, b.y, b.z).transpose();
        }
        const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
            h, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d rot = svd.matrixV() * svd.matrixU().transpose();
        if (rot.determinant() < 0.0) {
            Eigen::Matrix3d v = svd.matrixV();
            v.col(2) *= -1.0;
            rot = v * svd.matrixU().transpose();
        }
        Rotation r;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) r.at(a, b) = rot(a, b);
        const Vec3 trans = cd - r * cs;
        t = RigidTransform{r, trans};

        // residual of the refreshed transform over the same correspondences
        double sum = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i)
            sum += (t.apply(src[i]) - dst[corr[i]]).squared_norm();
        const double res = std::sqrt(sum / (double)src.size());
        result.residuals.push_back(res);
        result.iterations = iter + 1;
        if (prev - res < 1e-6) break;
        prev = res;
    }
    result.transform = t;
    return result;
}

std::vector<RigidTransform> relative_transforms(
    const std::vector<Pose>& poses) {
    std::vector<RigidTransform> out;
    for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
        const Pose rel = poses[i].inverse().compose(poses[i + 1]);
        out.push_back({rel.orientation, rel.position});
    }
    return out;
}

OdometryReport odometry_report(const std::vector<RigidTransform>& estimated,
                               const std::vector<RigidTransform>& truth) {
    if (estimated.size() != truth.size())
        throw std::invalid_argument("estimated/truth step counts differ");
    if (estimated.empty())
        throw std::invalid_argument("empty transform sequences");

    OdometryReport rep;
    RigidTransform pe, pt;  // cumulative composed poses
    double distance = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        rep.tex_steps.push_back(std::abs(estimated[k].t.x - truth[k].t.x));
        rep.tey_steps.push_back(std::abs(estimated[k].t.y - truth[k].t.y));

        pe = pe.compose(estimated[k]);
        pt = pt.compose(truth[k]);
        distance += std::hypot(truth[k].t.x, truth[k].t.y);
        const double err = std::hypot(pe.t.x - pt.t.x, pe.t.y - pt.t.y);
        rep.eod_steps.push_back(distance > 0.0 ? err / distance * 100.0 : 0.0);
    }
    rep.tex = stats_of(rep.tex_steps);
    rep.tey = stats_of(rep.tey_steps);
    rep.eod = stats_of(rep.eod_steps);
    return rep;
}

void write_odometry_report(const OdometryReport& report,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "step tex tey eod\n";
    char buf[32];
    for (std::size_t k = 0; k < report.tex_steps.size(); ++k) {
        out << k;
        for (double v :
             {report.tex_steps[k], report.tey_steps[k], report.eod_steps[k]}) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << " " << buf;
        }
        out << "\n";
    }
}

std::string format_odometry_report(const OdometryReport& report) {
    std::ostringstream out;
    char line[160];
    out << "metric        mean +/- std          max\n";
    const struct {
        const char* name;
        const ErrorStats& s;
        const char* unit;
    } rows[] = {{"TEX", report.tex, "m"},
                {"TEY", report.tey, "m"},
                {"EOD", report.eod, "%"}};
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%-6s %12.6f +/- %-10.6f %12.6f %s\n",
                      row.name, row.s.mean, row.s.stddev, row.s.max, row.unit);
        out << line;
    }
    return out.str();
}

}  // namespace railsim
