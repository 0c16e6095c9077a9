#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railsim/route.hpp"

namespace railsim {

enum class TrackKind { Main, Duplicate, Auxiliary };

const char* track_kind_name(TrackKind k);
TrackKind track_kind_from_name(const std::string& name);

struct Track {
    TrackKind kind = TrackKind::Main;
    std::vector<Vec3> points;  // NED
    std::vector<Block> blocks;
};

struct Railroad {
    Track main;
    std::vector<Track> others;
    double inter_track_distance = 4.0;  // D, m

    std::size_t track_count() const { return 1 + others.size(); }
    const Track& track(std::size_t i) const {
        return i == 0 ? main : others[i - 1];
    }
};

struct AuxParams {
    std::uint64_t seed = 0;
    int max_parallel = 2;       // auxiliary slots beyond main/duplicate
    double p_spawn = 0.3;       // per straight/curve block
    double p_end = 0.3;         // per block while active
    double inter_track_distance = 4.0;  // D, m
    double dead_end_length = 30.0;      // m
    double join_radius = 300.0;         // m, entering/outgoing curves
    bool duplicate_main = false;
};

Railroad make_railroad(const Route& route, double inter_track_distance);

// Constant lateral offset D to the right of the travel direction (the hand
// of drive is on the left). Throws if D degenerates a curve block.
Track duplicate_main(const Route& route, double D);

// Entering (dead-end straight + joining curve), parallel, and outgoing parts
// per the seeded per-block spawn/end probabilities. Slot k sits at lateral
// offset k*D right of the main centerline.
Railroad generate_auxiliaries(const Railroad& railroad, const AuxParams& params);

// JSON description; parse(emit(x)) == x bit-exactly.
std::string emit_railroad(const Railroad& railroad);
Railroad parse_railroad(const std::string& json_text);
void write_railroad(const Railroad& railroad, const std::string& path);
Railroad read_railroad(const std::string& path);

}  // namespace railsim
