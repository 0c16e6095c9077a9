#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railsim/multitrack.hpp"

namespace railsim {

// Heights are meters up (positive above datum), on a regular EN grid:
// E = origin_e + col*spacing, N = origin_n + row*spacing.
struct HeightMap {
    double origin_e = 0.0;
    double origin_n = 0.0;
    double spacing = 1.0;
    int rows = 0;
    int cols = 0;
    std::vector<double> heights;  // row-major

    double& at(int row, int col) { return heights[(std::size_t)row * cols + col]; }
    double at(int row, int col) const { return heights[(std::size_t)row * cols + col]; }
};

struct TerrainParams {
    double d_near = 5.0;   // m, flat band half-width; hard floor 1.5
    double d_far = 60.0;   // m, full-noise distance
    double amplitude = 40.0;        // m, noise bound
    int octaves = 4;
    double base_wavelength = 256.0; // m, first octave
    std::uint64_t seed = 0;
    double valley_depth = 25.0;     // m
    double valley_width = 80.0;     // m, raised-cosine support radius
    double station_dnear_multiplier = 3.0;
};

constexpr int kSubMapSize = 1009;

struct SubMap {
    int tile_i = 0;  // row tile index
    int tile_j = 0;  // col tile index
    bool keep = false;
    HeightMap map;   // exactly kSubMapSize x kSubMapSize
};

// Exact nearest track point over every track of the railroad, accelerated by
// a uniform spatial hash; results match an exhaustive scan.
class TrackLocator {
  public:
    struct Result {
        double distance = 0.0;   // horizontal EN distance, m
        double point_e = 0.0;
        double point_n = 0.0;
        double height_up = 0.0;  // track height, m up
        BlockType block = BlockType::Straight;
    };

    explicit TrackLocator(const Railroad& railroad);
    Result nearest(double e, double n) const;
    std::size_t point_count() const { return es_.size(); }

  private:
    std::vector<double> es_, ns_, ups_;
    std::vector<BlockType> block_of_;
    double min_e_ = 0.0, min_n_ = 0.0;
    double cell_ = 16.0;
    int grid_cols_ = 0, grid_rows_ = 0;
    std::vector<std::vector<std::uint32_t>> cells_;

    std::size_t linear_scan(double e, double n) const;
};

// Bilinear height sample at an EN position; clamps to the map edge.
double sample_height(const HeightMap& map, double e, double n);

// 0 below the flat band, 1 past d_far, linear between.
double blend(double d, double d_near, double d_far);

// Station blocks widen the flat band by the configured multiplier.
double effective_d_near(const TerrainParams& params, BlockType block);

// Seeded fractal value noise with bilinear lattice interpolation; |N| is
// bounded by the amplitude, and per-meter steps by the octave-spectrum
// Lipschitz bound.
double noise_height(double e, double n, std::uint64_t seed,
                    const TerrainParams& params);
double noise_lipschitz_bound(const TerrainParams& params);

// Track height where the flat band holds, noise far away, linear mix between.
double height_mix(double track_height, double noise, double f);
double compose_height(double e, double n, const TrackLocator& locator,
                      const TerrainParams& params);

HeightMap build_height_map(const Railroad& railroad, const TerrainParams& params,
                           double margin);

// Lowers a raised-cosine bowl around every bridge deck; the flat band of
// non-bridge track is left untouched.
void apply_valley(HeightMap& map, const Railroad& railroad,
                  const TerrainParams& params);

// 1009x1009 tiling (edge tiles padded by clamping); keep = tile rectangle
// within keep_radius of some track point.
std::vector<SubMap> partition(const HeightMap& map, const Railroad& railroad,
                              double keep_radius);

// 16-bit grayscale quantization over the map's [min, max] range; the range,
// origin, and spacing go to a JSON sidecar so decode restores geometry.
void write_height_png(const HeightMap& map, const std::string& png_path,
                      const std::string& meta_path);
HeightMap read_height_png(const std::string& png_path,
                          const std::string& meta_path);

}  // namespace railsim
