#include "railsim/multitrack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "railsim/rng.hpp"

namespace railsim {

namespace {

using json = nlohmann::json;

Vec3 tangent_at(const std::vector<Vec3>& pts, std::size_t i) {
    const std::size_t n = pts.size();
    const std::size_t lo = i > 0 ? i - 1 : 0;
    const std::size_t hi = i + 1 < n ? i + 1 : n - 1;
    Vec3 t = pts[hi] - pts[lo];
    t.z = 0.0;  // lateral offsets act in the horizontal plane
    const double len = t.norm();
    if (len < 1e-12) throw std::runtime_error("degenerate track tangent");
    return t / len;
}

// Clockwise normal of the travel direction, seen from above in NED.
Vec3 right_of(const Vec3& t) { return Vec3{-t.y, t.x, 0.0}; }

Vec3 heading_dir(double h) { return Vec3{std::cos(h), std::sin(h), 0.0}; }

std::vector<Vec3> offset_points(const std::vector<Vec3>& pts,
                                std::size_t first, std::size_t last,
                                double offset) {
    std::vector<Vec3> out;
    out.reserve(last - first + 1);
    for (std::size_t i = first; i <= last; ++i) {
        const Vec3 r = right_of(tangent_at(pts, i));
        out.push_back(Vec3{pts[i].x + offset * r.x, pts[i].y + offset * r.y,
                           pts[i].z});
    }
    return out;
}

struct ActiveAux {
    int slot = 0;
    std::size_t spawn_block = 0;
    bool entered_on_curve = false;
};

// Entering geometry, walked in travel order: dead-end stub, then the joining
// arc that lands on the parallel alignment at `a` with heading `h`. The arc
// sweep is sized so the stub stays within half the slot gap.
void append_entering(std::vector<Vec3>& pts, std::vector<Block>& blocks,
                     const Vec3& a, double h, bool straight_only,
                     double dead_end_length, double join_radius,
                     double gap, double ds) {
    const std::size_t first = pts.size();
    if (straight_only) {
        const Vec3 u = heading_dir(h);
        const int n_stub = std::max(1, (int)std::round(dead_end_length / ds));
        for (int k = n_stub; k >= 1; --k) pts.push_back(a - u * (k * ds));
        Block b;
        b.type = BlockType::Straight;
        b.start_index = first;
        b.end_index = pts.size() - 1;
        blocks.push_back(b);
        return;
    }
    const double phi = std::acos(std::max(-1.0, 1.0 - 0.5 * gap / join_radius));
    const double arc_len = phi * join_radius;
    const double hs = h - phi;  // heading at the arc start (right-hand turn)
    const Vec3 center = a + right_of(heading_dir(h)) * join_radius;
    const Vec3 arc_start = center - right_of(heading_dir(hs)) * join_radius;

    const Vec3 us = heading_dir(hs);
    const int n_stub = std::max(1, (int)std::round(dead_end_length / ds));
    for (int k = n_stub; k >= 0; --k) pts.push_back(arc_start - us * (k * ds));
    Block stub;
    stub.type = BlockType::Straight;
    stub.start_index = first;
    stub.end_index = pts.size() - 1;
    blocks.push_back(stub);

    const std::size_t arc_first = pts.size();
    const int n_arc = std::max(1, (int)std::floor(arc_len / ds));
    for (int k = 1; k <= n_arc; ++k) {
        const double u = arc_len - k * (arc_len / n_arc);  // distance before a
        if (u < 0.5 * ds) break;  // the parallel part supplies `a` itself
        pts.push_back(center - right_of(heading_dir(h - u / join_radius)) *
                                   join_radius);
    }
    if (pts.size() > arc_first) {
        Block arc;
        arc.type = BlockType::Curve;
        arc.radius = join_radius;
        arc.turn_dir = 1;
        arc.start_index = arc_first;
        arc.end_index = pts.size() - 1;
        blocks.push_back(arc);
    }
}

// Outgoing geometry after the parallel part left off at `b` heading `h`:
// an arc turning outward, then the dead-end stub.
void append_outgoing(std::vector<Vec3>& pts, std::vector<Block>& blocks,
                     const Vec3& b, double h, bool straight_only,
                     double dead_end_length, double join_radius,
                     double gap, double ds) {
    if (straight_only) {
        const std::size_t first = pts.size();
        const Vec3 u = heading_dir(h);
        const int n_stub = std::max(1, (int)std::round(dead_end_length / ds));
        for (int k = 1; k <= n_stub; ++k) pts.push_back(b + u * (k * ds));
        Block blk;
        blk.type = BlockType::Straight;
        blk.start_index = first;
        blk.end_index = pts.size() - 1;
        blocks.push_back(blk);
        return;
    }
    const double phi = std::acos(std::max(-1.0, 1.0 - 0.5 * gap / join_radius));
    const double arc_len = phi * join_radius;
    const Vec3 center = b + right_of(heading_dir(h)) * join_radius;

    const std::size_t arc_first = pts.size();
    const int n_arc = std::max(1, (int)std::floor(arc_len / ds));
    for (int k = 1; k <= n_arc; ++k) {
        const double u = k * (arc_len / n_arc);
        pts.push_back(center - right_of(heading_dir(h + u / join_radius)) *
                                   join_radius);
    }
    Block arc;
    arc.type = BlockType::Curve;
    arc.radius = join_radius;
    arc.turn_dir = 1;
    arc.start_index = arc_first;
    arc.end_index = pts.size() - 1;
    blocks.push_back(arc);

    const std::size_t stub_first = pts.size();
    const Vec3 ue = heading_dir(h + phi);
    const Vec3 arc_end = pts.back();
    const int n_stub = std::max(1, (int)std::round(dead_end_length / ds));
    for (int k = 1; k <= n_stub; ++k) pts.push_back(arc_end + ue * (k * ds));
    Block stub;
    stub.type = BlockType::Straight;
    stub.start_index = stub_first;
    stub.end_index = pts.size() - 1;
    blocks.push_back(stub);
}

Track build_auxiliary(const Track& main, const ActiveAux& aux,
                      std::size_t end_block, bool end_on_curve,
                      const AuxParams& params, double ds) {
    const double offset = aux.slot * params.inter_track_distance;
    const std::size_t i0 = main.blocks[aux.spawn_block].start_index;
    const std::size_t i1 = main.blocks[end_block].start_index;

    Track track;
    track.kind = TrackKind::Auxiliary;

    const Vec3 ta = tangent_at(main.points, i0);
    const Vec3 a = main.points[i0] + right_of(ta) * offset;
    append_entering(track.points, track.blocks, a,
                    std::atan2(ta.y, ta.x), aux.entered_on_curve,
                    params.dead_end_length, params.join_radius,
                    params.inter_track_distance, ds);

    const std::size_t par_first = track.points.size();
    std::vector<Vec3> par = offset_points(main.points, i0, i1, offset);
    track.points.insert(track.points.end(), par.begin(), par.end());
    for (std::size_t b = aux.spawn_block; b < end_block; ++b) {
        const Block& mb = main.blocks[b];
        Block blk;
        blk.start_index = par_first + (mb.start_index - i0);
        blk.end_index = par_first + (mb.end_index - i0);
        if (mb.type == BlockType::Curve) {
            blk.type = BlockType::Curve;
            blk.turn_dir = mb.turn_dir;
            blk.radius = mb.radius - mb.turn_dir * offset;
        } else {
            blk.type = BlockType::Straight;
        }
        track.blocks.push_back(blk);
    }

    const Vec3 tb = tangent_at(main.points, i1);
    append_outgoing(track.points, track.blocks, track.points.back(),
                    std::atan2(tb.y, tb.x), end_on_curve,
                    params.dead_end_length, params.join_radius,
                    params.inter_track_distance, ds);

    for (Block& b : track.blocks) {
        b.s_start = b.start_index * ds;
        b.s_end = b.end_index * ds;
    }
    return track;
}

json block_to_json(const Block& b) {
    json j;
    j["type"] = block_type_name(b.type);
    j["range"] = {b.start_index, b.end_index};
    j["s"] = {b.s_start, b.s_end};
    if (b.type == BlockType::Curve) {
        j["radius"] = b.radius;
        j["dir"] = b.turn_dir;
    }
    return j;
}

Block block_from_json(const json& j) {
    Block b;
    b.type = block_type_from_name(j.at("type").get<std::string>());
    b.start_index = j.at("range")[0].get<std::size_t>();
    b.end_index = j.at("range")[1].get<std::size_t>();
    b.s_start = j.at("s")[0].get<double>();
    b.s_end = j.at("s")[1].get<double>();
    if (j.contains("radius")) b.radius = j["radius"].get<double>();
    if (j.contains("dir")) b.turn_dir = j["dir"].get<int>();
    return b;
}

json track_to_json(const Track& t) {
    json j;
    j["kind"] = track_kind_name(t.kind);
    j["blocks"] = json::array();
    for (const Block& b : t.blocks) j["blocks"].push_back(block_to_json(b));
    j["points"] = json::array();
    for (const Vec3& p : t.points) j["points"].push_back({p.x, p.y, p.z});
    return j;
}

Track track_from_json(const json& j) {
    Track t;
    t.kind = track_kind_from_name(j.at("kind").get<std::string>());
    for (const json& b : j.at("blocks")) t.blocks.push_back(block_from_json(b));
    for (const json& p : j.at("points"))
        t.points.push_back(Vec3{p[0].get<double>(), p[1].get<double>(),
                                p[2].get<double>()});
    return t;
}

}  // namespace

const char* track_kind_name(TrackKind k) {
    switch (k) {
        case TrackKind::Main: return "Main";
        case TrackKind::Duplicate: return "Duplicate";
        case TrackKind::Auxiliary: return "Auxiliary";
    }
    return "Main";
}

TrackKind track_kind_from_name(const std::string& name) {
    if (name == "Main") return TrackKind::Main;
    if (name == "Duplicate") return TrackKind::Duplicate;
    if (name == "Auxiliary") return TrackKind::Auxiliary;
    throw std::invalid_argument("unknown track kind: " + name);
}

Railroad make_railroad(const Route& route, double inter_track_distance) {
    if (inter_track_distance <= 0.0)
        throw std::invalid_argument("inter-track distance must be positive");
    Railroad rr;
    rr.main.kind = TrackKind::Main;
    rr.main.points = route.points;
    rr.main.blocks = route.blocks;
    rr.inter_track_distance = inter_track_distance;
    return rr;
}

Track duplicate_main(const Route& route, double D) {
    if (D <= 0.0) throw std::invalid_argument("offset distance must be positive");
    for (const Block& b : route.blocks) {
        if (b.type == BlockType::Curve && D >= b.radius)
            throw std::invalid_argument(
                "offset distance exceeds minimum curve radius");
    }
    Track t;
    t.kind = TrackKind::Duplicate;
    t.points = offset_points(route.points, 0, route.points.size() - 1, D);
    t.blocks = route.blocks;
    for (Block& b : t.blocks) {
        if (b.type == BlockType::Curve) b.radius -= b.turn_dir * D;
    }
    return t;
}

Railroad generate_auxiliaries(const Railroad& railroad,
                              const AuxParams& params) {
    if (params.p_spawn < 0.0 || params.p_spawn > 1.0 || params.p_end < 0.0 ||
        params.p_end > 1.0)
        throw std::invalid_argument("probabilities must lie in [0, 1]");
    if (params.inter_track_distance <= 0.0)
        throw std::invalid_argument("inter-track distance must be positive");
    if (params.max_parallel < 0)
        throw std::invalid_argument("max parallel track count must be >= 0");

    Railroad out = railroad;
    const Track& main = out.main;
    const std::size_t n_blocks = main.blocks.size();
    if (n_blocks < 3 || params.max_parallel == 0 || params.p_spawn <= 0.0)
        return out;

    // Auxiliary slots start past any slots already taken by other tracks.
    int base_slot = 1;
    for (const Track& t : out.others)
        if (t.kind != TrackKind::Auxiliary) ++base_slot;

    const double ds = main.points.size() > 1
                          ? (main.points[1] - main.points[0]).norm()
                          : 1.0;

    Rng rng(hash_combine(params.seed, 0x61757874u));
    std::vector<ActiveAux> active;
    std::vector<bool> slot_used(params.max_parallel, false);

    for (std::size_t i = 1; i < n_blocks; ++i) {
        const bool next_is_tunnel =
            i + 1 < n_blocks && main.blocks[i + 1].type == BlockType::Tunnel;
        const bool must_end = (i == n_blocks - 1) ||
                              main.blocks[i].type == BlockType::Tunnel ||
                              next_is_tunnel;

        std::vector<bool> freed_here(params.max_parallel, false);
        for (std::size_t a = 0; a < active.size();) {
            const bool end = must_end || rng.bernoulli(params.p_end);
            if (end) {
                const bool on_curve =
                    main.blocks[i].type == BlockType::Curve;
                out.others.push_back(build_auxiliary(
                    main, active[a], i, on_curve, params, ds));
                slot_used[active[a].slot - base_slot] = false;
                freed_here[active[a].slot - base_slot] = true;
                active.erase(active.begin() + a);
            } else {
                ++a;
            }
        }

        const bool can_spawn =
            i + 1 < n_blocks && !must_end &&
            main.blocks[i].type != BlockType::Tunnel &&
            (int)active.size() < params.max_parallel;
        if (can_spawn && rng.bernoulli(params.p_spawn)) {
            int free_slot = -1;
            for (int k = 0; k < params.max_parallel; ++k) {
                // a slot freed at this very block would overlap its outgoing
                // stub with the new entering stub
                if (!slot_used[k] && !freed_here[k]) { free_slot = k; break; }
            }
            if (free_slot >= 0) {
                ActiveAux aux;
                aux.slot = base_slot + free_slot;
                aux.spawn_block = i;
                aux.entered_on_curve =
                    main.blocks[i].type == BlockType::Curve ||
                    main.blocks[i - 1].type == BlockType::Curve;
                slot_used[free_slot] = true;
                active.push_back(aux);
            }
        }
    }
    return out;
}

std::string emit_railroad(const Railroad& railroad) {
    json j;
    j["inter_track_distance"] = railroad.inter_track_distance;
    j["tracks"] = json::array();
    j["tracks"].push_back(track_to_json(railroad.main));
    for (const Track& t : railroad.others)
        j["tracks"].push_back(track_to_json(t));
    return j.dump(2) + "\n";
}

Railroad parse_railroad(const std::string& json_text) {
    const json j = json::parse(json_text);
    const json& tracks = j.at("tracks");
    if (tracks.empty()) throw std::invalid_argument("railroad has no tracks");
    Railroad rr;
    rr.inter_track_distance = j.at("inter_track_distance").get<double>();
    rr.main = track_from_json(tracks[0]);
    if (rr.main.kind != TrackKind::Main)
        throw std::invalid_argument("first railroad track must be the main");
    for (std::size_t i = 1; i < tracks.size(); ++i)
        rr.others.push_back(track_from_json(tracks[i]));
    return rr;
}

void write_railroad(const Railroad& railroad, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << emit_railroad(railroad);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Railroad read_railroad(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_railroad(ss.str());
}

}  // namespace railsim
