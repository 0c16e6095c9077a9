#include "railsim/route.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "railsim/rng.hpp"

namespace railsim {

const char* block_type_name(BlockType t) {
    switch (t) {
        case BlockType::Straight: return "straight";
        case BlockType::Curve: return "curve";
        case BlockType::Station: return "station";
        case BlockType::Tunnel: return "tunnel";
        case BlockType::Bridge: return "bridge";
    }
    return "straight";
}

BlockType block_type_from_name(const std::string& name) {
    if (name == "straight") return BlockType::Straight;
    if (name == "curve") return BlockType::Curve;
    if (name == "station") return BlockType::Station;
    if (name == "tunnel") return BlockType::Tunnel;
    if (name == "bridge") return BlockType::Bridge;
    throw std::invalid_argument("unknown block type: " + name);
}

Vec3 Route::position_at(double s) const {
    return {spline_n.eval(s, 0), spline_e.eval(s, 0), spline_d.eval(s, 0)};
}
Vec3 Route::derivative_at(double s) const {
    return {spline_n.eval(s, 1), spline_e.eval(s, 1), spline_d.eval(s, 1)};
}
Vec3 Route::second_derivative_at(double s) const {
    return {spline_n.eval(s, 2), spline_e.eval(s, 2), spline_d.eval(s, 2)};
}

const Block& Route::block_at_s(double s) const {
    for (const Block& b : blocks) {
        if (s >= b.s_start && s < b.s_end) return b;
    }
    return blocks.back();
}

namespace {

// Analytic horizontal path segment in NED. Heading 0 = north, increasing
// toward east (rotation about the down axis).
struct Segment {
    bool is_arc = false;
    double n0 = 0.0, e0 = 0.0;
    double heading0 = 0.0;
    double length = 0.0;
    double radius = 0.0;  // arcs
    int dir = 0;          // +1 right turn, -1 left turn

    void state_at(double s, double& n, double& e, double& heading) const {
        if (!is_arc) {
            n = n0 + s * std::cos(heading0);
            e = e0 + s * std::sin(heading0);
            heading = heading0;
        } else {
            const double kappa = static_cast<double>(dir) / radius;
            heading = heading0 + kappa * s;
            n = n0 + (std::sin(heading) - std::sin(heading0)) / kappa;
            e = e0 - (std::cos(heading) - std::cos(heading0)) / kappa;
        }
    }
};

void fit_route_splines(Route& route) {
    std::vector<std::pair<double, double>> sn, se, sd;
    const std::size_t n = route.points.size();
    sn.reserve(n);
    se.reserve(n);
    sd.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) * route.ds;
        sn.emplace_back(s, route.points[k].x);
        se.emplace_back(s, route.points[k].y);
        sd.emplace_back(s, route.points[k].z);
    }
    route.spline_n = SmoothingSpline::fit(sn, 0.0);
    route.spline_e = SmoothingSpline::fit(se, 0.0);
    route.spline_d = SmoothingSpline::fit(sd, 0.0);
}

}  // namespace

Route generate_route(std::uint64_t seed, const RouteParams& p) {
    if (p.n_blocks < 1) throw std::invalid_argument("n_blocks must be >= 1");
    if (p.ds <= 0.0) throw std::invalid_argument("ds must be positive");
    if (p.block_length_min < p.ds)
        throw std::invalid_argument("block length below point spacing");
    if (p.block_length_min > p.block_length_max)
        throw std::invalid_argument("block length range inverted");
    if (p.min_curve_radius <= 0.0)
        throw std::invalid_argument("min curve radius must be positive");
    if (p.min_curve_radius > p.max_curve_radius)
        throw std::invalid_argument("curve radius range inverted");
    for (double prob : {p.p_curve, p.p_bridge, p.p_tunnel, p.p_station}) {
        if (prob < 0.0 || prob > 1.0)
            throw std::invalid_argument("probabilities must be in [0,1]");
    }
    if (p.p_bridge + p.p_tunnel + p.p_station > 1.0)
        throw std::invalid_argument("overlay probabilities exceed 1");

    Rng rng(seed);

    std::vector<Segment> segments;
    std::vector<BlockType> types;
    std::vector<double> block_len;
    double n = 0.0, e = 0.0, heading = 0.0, total = 0.0;

    for (int i = 0; i < p.n_blocks; ++i) {
        double len = rng.uniform(p.block_length_min, p.block_length_max);
        const bool curve = rng.bernoulli(p.p_curve);
        Segment seg;
        seg.n0 = n;
        seg.e0 = e;
        seg.heading0 = heading;
        BlockType type = BlockType::Straight;
        if (curve) {
            seg.is_arc = true;
            seg.radius = rng.uniform(p.min_curve_radius, p.max_curve_radius);
            seg.dir = rng.bernoulli(0.5) ? 1 : -1;
            // cap the sweep at 120 degrees
            len = std::min(len, seg.radius * 2.0 * M_PI / 3.0);
            type = BlockType::Curve;
        } else {
            const double u = rng.uniform();
            if (u < p.p_bridge) type = BlockType::Bridge;
            else if (u < p.p_bridge + p.p_tunnel) type = BlockType::Tunnel;
            else if (u < p.p_bridge + p.p_tunnel + p.p_station) type = BlockType::Station;
        }
        seg.length = len;
        seg.state_at(len, n, e, heading);
        total += len;
        segments.push_back(seg);
        types.push_back(type);
        block_len.push_back(len);
    }

    Route route;
    route.ds = p.ds;
    route.total_length = total;

    const std::size_t n_points = static_cast<std::size_t>(std::floor(total / p.ds)) + 1;
    route.points.reserve(n_points);

    std::vector<double> seg_start(segments.size());
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            seg_start[i] = acc;
            acc += segments[i].length;
        }
    }

    std::size_t seg_idx = 0;
    for (std::size_t k = 0; k < n_points; ++k) {
        const double s = static_cast<double>(k) * p.ds;
        while (seg_idx + 1 < segments.size() && s >= seg_start[seg_idx + 1]) ++seg_idx;
        double pn, pe, ph;
        segments[seg_idx].state_at(s - seg_start[seg_idx], pn, pe, ph);
        route.points.push_back({pn, pe, 0.0});
    }

    // Map blocks onto point index ranges; each point belongs to the segment
    // containing its arc position, the final point to the last block.
    route.blocks.resize(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        Block& b = route.blocks[i];
        b.type = types[i];
        b.s_start = seg_start[i];
        b.s_end = seg_start[i] + segments[i].length;
        b.radius = segments[i].is_arc ? segments[i].radius : 0.0;
        b.turn_dir = segments[i].dir;
        b.start_index = (i == 0)
            ? 0
            : static_cast<std::size_t>(std::ceil(b.s_start / p.ds - 1e-9));
        b.end_index = (i + 1 == segments.size())
            ? n_points - 1
            : static_cast<std::size_t>(std::ceil(b.s_end / p.ds - 1e-9)) - 1;
    }

    fit_route_splines(route);
    return route;
}

VelocityProfile velocity_profile(const Route& route, const TrainParams& params) {
    VelocityProfile profile;
    profile.v_max.reserve(route.blocks.size());
    for (const Block& b : route.blocks) {
        double v = params.line_speed;
        switch (b.type) {
            case BlockType::Curve:
                v = std::min(v, std::sqrt(params.a_lat_max * b.radius));
                break;
            case BlockType::Station: v = std::min(v, params.station_cap); break;
            case BlockType::Tunnel: v = std::min(v, params.tunnel_cap); break;
            case BlockType::Bridge: v = std::min(v, params.bridge_cap); break;
            case BlockType::Straight: break;
        }
        profile.v_max.push_back(v);
    }
    return profile;
}

namespace {

constexpr double kSmoothingWindow = 0.2;  // s, accel-smoothing moving average

double curvature_at(const Route& route, double s);

// Per-point speed limit grid with restrictive caps extended by `margin` on
// both sides so the later time-domain smoothing cannot overshoot a cap.
// Block caps are refined with the actual spline curvature, which overshoots
// the nominal arc radius near straight/curve joins.
std::vector<double> speed_limit_grid(const Route& route,
                                     const VelocityProfile& profile,
                                     double a_lat_max, double margin) {
    const std::size_t n = route.points.size();
    std::vector<double> vlim(n);
    for (std::size_t b = 0; b < route.blocks.size(); ++b) {
        const Block& blk = route.blocks[b];
        for (std::size_t k = blk.start_index; k <= blk.end_index && k < n; ++k)
            vlim[k] = profile.v_max[b];
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double kappa = curvature_at(route, static_cast<double>(k) * route.ds);
        if (kappa > 1e-9)
            vlim[k] = std::min(vlim[k], std::sqrt(a_lat_max / kappa));
    }
    const auto w = static_cast<std::size_t>(std::ceil(margin / route.ds));
    std::vector<double> ext(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = (k > w) ? k - w : 0;
        const std::size_t hi = std::min(n - 1, k + w);
        double m = vlim[k];
        for (std::size_t j = lo; j <= hi; ++j) m = std::min(m, vlim[j]);
        ext[k] = m;
    }
    return ext;
}

double curvature_at(const Route& route, double s) {
    const Vec3 d1 = route.derivative_at(s);
    const Vec3 d2 = route.second_derivative_at(s);
    const double denom = std::pow(d1.squared_norm(), 1.5);
    if (denom <= 0.0) return 0.0;
    return cross(d1, d2).norm() / denom;
}

}  // namespace

std::vector<TrajectorySample> generate_trajectory(const Route& route,
                                                  const VelocityProfile& profile,
                                                  const TrainParams& train) {
    if (profile.v_max.size() != route.blocks.size())
        throw std::invalid_argument("profile/block count mismatch");
    const double L = train.bogie_spacing;
    if (route.total_length <= L)
        throw std::invalid_argument("route shorter than bogie spacing");

    const double ds = route.ds;
    // Splines are only evaluable up to the last emitted point.
    const double s_max = static_cast<double>(route.points.size() - 1) * ds;
    const double s_end = std::floor((s_max - L) / ds) * ds;
    if (s_end <= 0.0)
        throw std::invalid_argument("route shorter than bogie spacing");
    const std::size_t n_grid = static_cast<std::size_t>(s_end / ds) + 1;

    const double margin = train.line_speed * kSmoothingWindow + L + 2.0 * ds;
    const std::vector<double> vlim =
        speed_limit_grid(route, profile, train.a_lat_max, margin);

    // Total-acceleration budget shared between the longitudinal and the
    // centripetal component; 2% headroom absorbs smoothing cross terms.
    // The budget sees the max curvature over the smoothing window so that
    // time-averaged longitudinal acceleration near a curve entry cannot pair
    // with the curve's centripetal term.
    const double budget =
        0.98 * std::max({train.a_max, train.d_max, train.a_lat_max});
    std::vector<double> kappa_window(n_grid);
    {
        std::vector<double> kappa(n_grid);
        for (std::size_t k = 0; k < n_grid; ++k)
            kappa[k] = curvature_at(route, static_cast<double>(k) * ds);
        const auto w = static_cast<std::size_t>(
            std::ceil((train.line_speed * kSmoothingWindow + 2.0 * ds) / ds));
        for (std::size_t k = 0; k < n_grid; ++k) {
            const std::size_t lo = (k > w) ? k - w : 0;
            const std::size_t hi = std::min(n_grid - 1, k + w);
            double m = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) m = std::max(m, kappa[j]);
            kappa_window[k] = m;
        }
    }
    auto lon_avail = [&](double v, double s, double a_cap) {
        const double u = std::clamp(s, 0.0, s_end) / ds;
        const std::size_t k =
            std::min(static_cast<std::size_t>(u + 0.5), n_grid - 1);
        const double a_lat = v * v * kappa_window[k];
        const double head = budget * budget - a_lat * a_lat;
        return std::min(a_cap, std::sqrt(std::max(0.0, head)));
    };

    std::vector<double> plan(n_grid);
    plan[0] = std::min(vlim[0], train.initial_speed);
    for (std::size_t k = 1; k < n_grid; ++k) {
        const double a = lon_avail(plan[k - 1], static_cast<double>(k) * ds, train.a_max);
        plan[k] = std::min(vlim[k], std::sqrt(plan[k - 1] * plan[k - 1] + 2.0 * a * ds));
    }
    plan[n_grid - 1] = 0.0;
    for (std::size_t k = n_grid - 1; k-- > 0;) {
        const double a = lon_avail(plan[k + 1], static_cast<double>(k) * ds, train.d_max);
        plan[k] = std::min(plan[k], std::sqrt(plan[k + 1] * plan[k + 1] + 2.0 * a * ds));
    }
    if (plan[0] + 1e-9 < train.initial_speed)
        throw std::invalid_argument("velocity profile infeasible from initial speed");

    // Interpolate in v^2, which is exact for constant-acceleration arcs and
    // avoids stalling near zero speed where v(s) ~ sqrt(s).
    auto plan_v = [&](double s) {
        s = std::clamp(s, 0.0, s_end);
        const double u = s / ds;
        const std::size_t k = std::min(static_cast<std::size_t>(u), n_grid - 2);
        const double f = u - static_cast<double>(k);
        const double v2 =
            plan[k] * plan[k] * (1.0 - f) + plan[k + 1] * plan[k + 1] * f;
        return std::sqrt(std::max(0.0, v2));
    };

    // Time-domain rollout at substep resolution.
    const int substeps = 10;
    const double dt = train.sample_period / substeps;
    std::vector<double> v_sub;
    {
        double s = 0.0;
        double v = plan[0];
        v_sub.push_back(v);
        // hard stop guard: 10h simulated max
        const std::size_t max_steps = static_cast<std::size_t>(36000.0 / dt);
        while (s < s_end - 1e-6 && v_sub.size() < max_steps) {
            // accelerate toward the plan curve, never above it; the
            // longitudinal command shares the total-acceleration budget with
            // the centripetal component just like the plan passes do
            const double a_cmd = lon_avail(v, std::min(s, s_max), train.a_max);
            const double v_try = v + a_cmd * dt;
            const double s_try = s + 0.5 * (v + v_try) * dt;
            const double v_new = std::min(v_try, plan_v(s_try));
            s += 0.5 * (v + v_new) * dt;
            v = v_new;
            v_sub.push_back(v);
            if (v < 1e-4 && s > 0.5) break;  // at rest past the start
        }
    }

    // Centered moving average removes the acceleration discontinuities of the
    // trapezoidal plan; edges pad with the boundary speeds.
    const int half = static_cast<int>(std::round(kSmoothingWindow / (2.0 * dt)));
    const auto n_sub = static_cast<std::ptrdiff_t>(v_sub.size());
    std::vector<double> v_smooth(v_sub.size());
    for (std::ptrdiff_t i = 0; i < n_sub; ++i) {
        double acc = 0.0;
        for (int j = -half; j <= half; ++j) {
            const std::ptrdiff_t idx = i + j;
            if (idx < 0) acc += v_sub.front();
            else if (idx >= n_sub) acc += 0.0;
            else acc += v_sub[idx];
        }
        v_smooth[i] = acc / (2 * half + 1);
    }

    std::vector<double> s_sub(v_smooth.size(), 0.0);
    for (std::size_t i = 1; i < v_smooth.size(); ++i) {
        s_sub[i] = s_sub[i - 1] + 0.5 * (v_smooth[i - 1] + v_smooth[i]) * dt;
        s_sub[i] = std::min(s_sub[i], s_end);
    }

    const std::size_t n_samples = (v_smooth.size() - 1) / substeps + 1;
    std::vector<TrajectorySample> out;
    out.reserve(n_samples);

    auto bogie_state = [&](double s, double sdot, double sddot) {
        BogieState st;
        st.position = route.position_at(s);
        const Vec3 d1 = route.derivative_at(s);
        const Vec3 d2 = route.second_derivative_at(s);
        st.velocity = d1 * sdot;
        st.acceleration = d2 * (sdot * sdot) + d1 * sddot;
        return st;
    };

    for (std::size_t k = 0; k < n_samples; ++k) {
        const std::size_t i = k * substeps;
        TrajectorySample smp;
        smp.t = static_cast<double>(k) * train.sample_period;
        const double s = s_sub[i];
        const double v = v_smooth[i];
        double sddot = 0.0;
        if (i > 0 && i + 1 < v_smooth.size())
            sddot = (v_smooth[i + 1] - v_smooth[i - 1]) / (2.0 * dt);
        smp.speed = v;
        smp.arc_position = s;
        smp.rear = bogie_state(s, v, sddot);
        smp.front = bogie_state(s + L, v, sddot);

        // Orientation from the tangent at the front bogie; roll fixed to 0.
        const double sf = s + L;
        const Vec3 t1 = route.derivative_at(sf);
        const double horiz = std::hypot(t1.x, t1.y);
        smp.yaw = std::atan2(t1.y, t1.x);
        smp.pitch = std::atan2(-t1.z, horiz);
        smp.roll = 0.0;

        // Angle rates from a symmetric difference along arc length.
        const double h = std::min(0.05, std::min(sf, s_max - sf));
        double yaw_rate = 0.0, pitch_rate = 0.0;
        if (h > 1e-9) {
            const Vec3 ta = route.derivative_at(sf - h);
            const Vec3 tb = route.derivative_at(sf + h);
            double ya = std::atan2(ta.y, ta.x), yb = std::atan2(tb.y, tb.x);
            if (yb - ya > M_PI) yb -= 2.0 * M_PI;
            if (yb - ya < -M_PI) yb += 2.0 * M_PI;
            const double pa = std::atan2(-ta.z, std::hypot(ta.x, ta.y));
            const double pb = std::atan2(-tb.z, std::hypot(tb.x, tb.y));
            yaw_rate = (yb - ya) / (2.0 * h) * v;
            pitch_rate = (pb - pa) / (2.0 * h) * v;
        }
        // ZYX Euler rates -> body rates with roll = 0.
        smp.angular_velocity = {-yaw_rate * std::sin(smp.pitch), pitch_rate,
                                yaw_rate * std::cos(smp.pitch)};
        out.push_back(smp);
    }
    return out;
}

std::vector<TrajectorySample> point_trajectory(
    const std::vector<TrajectorySample>& samples, double offset,
    double bogie_spacing) {
    if (bogie_spacing <= 0.0)
        throw std::invalid_argument("bogie spacing must be positive");
    const double u = -offset / bogie_spacing;  // 0 -> front, 1 -> rear
    std::vector<TrajectorySample> out = samples;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const BogieState& f = samples[k].front;
        const BogieState& r = samples[k].rear;
        BogieState p;
        p.position = f.position * (1.0 - u) + r.position * u;
        p.velocity = f.velocity * (1.0 - u) + r.velocity * u;
        p.acceleration = f.acceleration * (1.0 - u) + r.acceleration * u;
        out[k].front = p;
        out[k].rear = p;
    }
    return out;
}

namespace {

void write_vec(std::FILE* f, const Vec3& v) {
    std::fprintf(f, " %.9g %.9g %.9g", v.x, v.y, v.z);
}

}  // namespace

void write_trajectory(const std::vector<TrajectorySample>& samples,
                      const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f,
                 "# t fx fy fz fvx fvy fvz fax fay faz rx ry rz rvx rvy rvz "
                 "rax ray raz yaw pitch roll wx wy wz speed s\n");
    for (const TrajectorySample& s : samples) {
        std::fprintf(f, "%.9g", s.t);
        write_vec(f, s.front.position);
        write_vec(f, s.front.velocity);
        write_vec(f, s.front.acceleration);
        write_vec(f, s.rear.position);
        write_vec(f, s.rear.velocity);
        write_vec(f, s.rear.acceleration);
        std::fprintf(f, " %.9g %.9g %.9g", s.yaw, s.pitch, s.roll);
        write_vec(f, s.angular_velocity);
        std::fprintf(f, " %.9g %.9g\n", s.speed, s.arc_position);
    }
    std::fclose(f);
}

std::vector<TrajectorySample> read_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<TrajectorySample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        TrajectorySample s;
        ss >> s.t;
        ss >> s.front.position.x >> s.front.position.y >> s.front.position.z;
        ss >> s.front.velocity.x >> s.front.velocity.y >> s.front.velocity.z;
        ss >> s.front.acceleration.x >> s.front.acceleration.y >> s.front.acceleration.z;
        ss >> s.rear.position.x >> s.rear.position.y >> s.rear.position.z;
        ss >> s.rear.velocity.x >> s.rear.velocity.y >> s.rear.velocity.z;
        ss >> s.rear.acceleration.x >> s.rear.acceleration.y >> s.rear.acceleration.z;
        ss >> s.yaw >> s.pitch >> s.roll;
        ss >> s.angular_velocity.x >> s.angular_velocity.y >> s.angular_velocity.z;
        ss >> s.speed >> s.arc_position;
        if (!ss) throw std::runtime_error("malformed trajectory line: " + line);
        out.push_back(s);
    }
    return out;
}

void write_route_points(const Route& route, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const Vec3& p : route.points)
        std::fprintf(f, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    std::fclose(f);
}

std::vector<Vec3> read_route_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<Vec3> pts;
    Vec3 v;
    while (in >> v.x >> v.y >> v.z) pts.push_back(v);
    return pts;
}

Route route_from_points(const std::vector<Vec3>& points, double ds) {
    if (points.size() < 4)
        throw std::invalid_argument("route needs at least 4 points");
    Route route;
    route.ds = ds;
    route.points = points;
    route.total_length = static_cast<double>(points.size() - 1) * ds;
    Block b;
    b.type = BlockType::Straight;
    b.start_index = 0;
    b.end_index = points.size() - 1;
    b.s_start = 0.0;
    b.s_end = route.total_length;
    route.blocks.push_back(b);
    fit_route_splines(route);
    return route;
}

}  // namespace railsim
