#include "railsim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "railsim/png.hpp"
#include "railsim/rng.hpp"

namespace railsim {

namespace {

void validate(const TerrainParams& p) {
    if (p.d_near < 1.5)
        throw std::invalid_argument("d_near below the 1.5 m construction floor");
    if (p.d_far <= p.d_near)
        throw std::invalid_argument("d_far must exceed d_near");
    if (p.amplitude < 0.0 || p.octaves < 1 || p.base_wavelength <= 0.0)
        throw std::invalid_argument("bad noise parameters");
    if (p.station_dnear_multiplier < 1.0)
        throw std::invalid_argument("station multiplier must be >= 1");
}

// lattice value in [-1, 1]
double lattice(std::uint64_t seed, int octave, std::int64_t xi, std::int64_t yi) {
    std::uint64_t h = hash_combine(seed, (std::uint64_t)octave);
    h = hash_combine(h, (std::uint64_t)xi);
    h = hash_combine(h, (std::uint64_t)yi);
    return 2.0 * u64_to_unit_double(mix64(h)) - 1.0;
}

}  // namespace

TrackLocator::TrackLocator(const Railroad& railroad) {
    for (std::size_t t = 0; t < railroad.track_count(); ++t) {
        const Track& track = railroad.track(t);
        if (track.points.empty()) continue;
        std::vector<BlockType> types(track.points.size(), BlockType::Straight);
        for (const Block& b : track.blocks) {
            for (std::size_t i = b.start_index;
                 i <= b.end_index && i < types.size(); ++i)
                types[i] = b.type;
        }
        for (std::size_t i = 0; i < track.points.size(); ++i) {
            const Vec3& p = track.points[i];  // NED
            es_.push_back(p.y);
            ns_.push_back(p.x);
            ups_.push_back(-p.z);
            block_of_.push_back(types[i]);
        }
    }
    if (es_.empty()) throw std::invalid_argument("railroad has no track points");

    double max_e = es_[0], max_n = ns_[0];
    min_e_ = es_[0];
    min_n_ = ns_[0];
    for (std::size_t i = 1; i < es_.size(); ++i) {
        min_e_ = std::min(min_e_, es_[i]);
        max_e = std::max(max_e, es_[i]);
        min_n_ = std::min(min_n_, ns_[i]);
        max_n = std::max(max_n, ns_[i]);
    }
    grid_cols_ = (int)((max_e - min_e_) / cell_) + 1;
    grid_rows_ = (int)((max_n - min_n_) / cell_) + 1;
    cells_.resize((std::size_t)grid_rows_ * grid_cols_);
    for (std::size_t i = 0; i < es_.size(); ++i) {
        const int cc = (int)((es_[i] - min_e_) / cell_);
        const int cr = (int)((ns_[i] - min_n_) / cell_);
        cells_[(std::size_t)cr * grid_cols_ + cc].push_back((std::uint32_t)i);
    }
}

std::size_t TrackLocator::linear_scan(double e, double n) const {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < es_.size(); ++i) {
        const double de = es_[i] - e;
        const double dn = ns_[i] - n;
        const double d2 = de * de + dn * dn;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

TrackLocator::Result TrackLocator::nearest(double e, double n) const {
    const int cc = (int)std::floor((e - min_e_) / cell_);
    const int cr = (int)std::floor((n - min_n_) / cell_);

    std::size_t best = (std::size_t)-1;
    double best_d2 = std::numeric_limits<double>::infinity();
    const int max_ring = std::max(grid_rows_, grid_cols_) +
                         std::max(std::abs(cr), std::abs(cc)) + 2;
    for (int ring = 0; ring <= max_ring; ++ring) {
        // once a candidate exists, stop when the ring cannot beat it
        if (best != (std::size_t)-1) {
            const double ring_min = (ring - 1) * cell_;
            if (ring_min > 0.0 && ring_min * ring_min > best_d2) break;
        }
        for (int dr = -ring; dr <= ring; ++dr) {
            for (int dc = -ring; dc <= ring; ++dc) {
                if (std::max(std::abs(dr), std::abs(dc)) != ring) continue;
                const int r = cr + dr;
                const int c = cc + dc;
                if (r < 0 || r >= grid_rows_ || c < 0 || c >= grid_cols_)
                    continue;
                for (std::uint32_t i : cells_[(std::size_t)r * grid_cols_ + c]) {
                    const double de = es_[i] - e;
                    const double dn = ns_[i] - n;
                    const double d2 = de * de + dn * dn;
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best = i;
                    }
                }
            }
        }
    }
    if (best == (std::size_t)-1) best = linear_scan(e, n);

    Result res;
    res.distance = std::sqrt((es_[best] - e) * (es_[best] - e) +
                             (ns_[best] - n) * (ns_[best] - n));
    res.point_e = es_[best];
    res.point_n = ns_[best];
    res.height_up = ups_[best];
    res.block = block_of_[best];
    return res;
}

double sample_height(const HeightMap& map, double e, double n) {
    if (map.rows <= 0 || map.cols <= 0)
        throw std::invalid_argument("empty height map");
    const double x = std::clamp((e - map.origin_e) / map.spacing, 0.0,
                                (double)(map.cols - 1));
    const double y = std::clamp((n - map.origin_n) / map.spacing, 0.0,
                                (double)(map.rows - 1));
    const int c0 = std::min((int)x, map.cols - 2 >= 0 ? map.cols - 2 : 0);
    const int r0 = std::min((int)y, map.rows - 2 >= 0 ? map.rows - 2 : 0);
    const int c1 = std::min(c0 + 1, map.cols - 1);
    const int r1 = std::min(r0 + 1, map.rows - 1);
    const double tx = x - c0;
    const double ty = y - r0;
    const double top = map.at(r0, c0) + (map.at(r0, c1) - map.at(r0, c0)) * tx;
    const double bot = map.at(r1, c0) + (map.at(r1, c1) - map.at(r1, c0)) * tx;
    return top + (bot - top) * ty;
}

double blend(double d, double d_near, double d_far) {
    if (d <= d_near) return 0.0;
    if (d >= d_far) return 1.0;
    return (d - d_near) / (d_far - d_near);
}

double effective_d_near(const TerrainParams& params, BlockType block) {
    return block == BlockType::Station
               ? params.d_near * params.station_dnear_multiplier
               : params.d_near;
}

double noise_height(double e, double n, std::uint64_t seed,
                    const TerrainParams& params) {
    double weight = 1.0, weight_sum = 0.0;
    for (int o = 0; o < params.octaves; ++o) {
        weight_sum += weight;
        weight *= 0.5;
    }
    double value = 0.0;
    double wavelength = params.base_wavelength;
    weight = 1.0;
    for (int o = 0; o < params.octaves; ++o) {
        const double amp = params.amplitude * weight / weight_sum;
        const double x = e / wavelength;
        const double y = n / wavelength;
        const double fx0 = std::floor(x);
        const double fy0 = std::floor(y);
        const std::int64_t xi = (std::int64_t)fx0;
        const std::int64_t yi = (std::int64_t)fy0;
        const double tx = x - fx0;
        const double ty = y - fy0;
        const double v00 = lattice(seed, o, xi, yi);
        const double v10 = lattice(seed, o, xi + 1, yi);
        const double v01 = lattice(seed, o, xi, yi + 1);
        const double v11 = lattice(seed, o, xi + 1, yi + 1);
        const double top = v00 + (v10 - v00) * tx;
        const double bot = v01 + (v11 - v01) * tx;
        value += amp * (top + (bot - top) * ty);
        wavelength *= 0.5;
        weight *= 0.5;
    }
    return value;
}

double noise_lipschitz_bound(const TerrainParams& params) {
    double weight = 1.0, weight_sum = 0.0;
    for (int o = 0; o < params.octaves; ++o) {
        weight_sum += weight;
        weight *= 0.5;
    }
    double bound = 0.0;
    double wavelength = params.base_wavelength;
    weight = 1.0;
    for (int o = 0; o < params.octaves; ++o) {
        const double amp = params.amplitude * weight / weight_sum;
        bound += 2.0 * amp / wavelength;  // lattice values span [-1, 1]
        wavelength *= 0.5;
        weight *= 0.5;
    }
    return bound;
}

double height_mix(double track_height, double noise, double f) {
    return track_height * (1.0 - f) + noise * f;
}

double compose_height(double e, double n, const TrackLocator& locator,
                      const TerrainParams& params) {
    validate(params);
    const TrackLocator::Result near = locator.nearest(e, n);
    const double f = blend(near.distance, effective_d_near(params, near.block),
                           params.d_far);
    if (f == 0.0) return near.height_up;
    return height_mix(near.height_up, noise_height(e, n, params.seed, params), f);
}

HeightMap build_height_map(const Railroad& railroad, const TerrainParams& params,
                           double margin) {
    validate(params);
    const TrackLocator locator(railroad);

    double min_e = std::numeric_limits<double>::infinity();
    double min_n = min_e, max_e = -min_e, max_n = -min_e;
    for (std::size_t t = 0; t < railroad.track_count(); ++t) {
        for (const Vec3& p : railroad.track(t).points) {
            min_e = std::min(min_e, p.y);
            max_e = std::max(max_e, p.y);
            min_n = std::min(min_n, p.x);
            max_n = std::max(max_n, p.x);
        }
    }
    HeightMap map;
    map.spacing = 1.0;
    map.origin_e = std::floor(min_e - margin);
    map.origin_n = std::floor(min_n - margin);
    map.cols = (int)std::ceil(max_e + margin - map.origin_e) + 1;
    map.rows = (int)std::ceil(max_n + margin - map.origin_n) + 1;
    map.heights.resize((std::size_t)map.rows * map.cols);
    for (int r = 0; r < map.rows; ++r) {
        const double n = map.origin_n + r * map.spacing;
        for (int c = 0; c < map.cols; ++c) {
            const double e = map.origin_e + c * map.spacing;
            map.at(r, c) = compose_height(e, n, locator, params);
        }
    }
    return map;
}

void apply_valley(HeightMap& map, const Railroad& railroad,
                  const TerrainParams& params) {
    validate(params);
    // collect bridge deck points (EN)
    std::vector<double> be, bn;
    for (std::size_t t = 0; t < railroad.track_count(); ++t) {
        const Track& track = railroad.track(t);
        for (const Block& b : track.blocks) {
            if (b.type != BlockType::Bridge) continue;
            for (std::size_t i = b.start_index;
                 i <= b.end_index && i < track.points.size(); ++i) {
                be.push_back(track.points[i].y);
                bn.push_back(track.points[i].x);
            }
        }
    }
    if (be.empty()) return;

    const TrackLocator locator(railroad);
    const double W = params.valley_width;
    for (int r = 0; r < map.rows; ++r) {
        const double n = map.origin_n + r * map.spacing;
        for (int c = 0; c < map.cols; ++c) {
            const double e = map.origin_e + c * map.spacing;
            double d2 = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < be.size(); ++i) {
                const double de = be[i] - e;
                const double dn = bn[i] - n;
                d2 = std::min(d2, de * de + dn * dn);
            }
            const double d = std::sqrt(d2);
            if (d >= W) continue;
            // the flat band of non-bridge track keeps its height
            const TrackLocator::Result near = locator.nearest(e, n);
            if (near.block != BlockType::Bridge &&
                near.distance <= effective_d_near(params, near.block))
                continue;
            map.at(r, c) -= params.valley_depth * 0.5 *
                            (1.0 + std::cos(M_PI * d / W));
        }
    }
}

std::vector<SubMap> partition(const HeightMap& map, const Railroad& railroad,
                              double keep_radius) {
    if (map.rows <= 0 || map.cols <= 0)
        throw std::invalid_argument("empty height map");
    const int tiles_r = (map.rows + kSubMapSize - 1) / kSubMapSize;
    const int tiles_c = (map.cols + kSubMapSize - 1) / kSubMapSize;

    std::vector<SubMap> out;
    out.reserve((std::size_t)tiles_r * tiles_c);
    for (int ti = 0; ti < tiles_r; ++ti) {
        for (int tj = 0; tj < tiles_c; ++tj) {
            SubMap sm;
            sm.tile_i = ti;
            sm.tile_j = tj;
            sm.map.spacing = map.spacing;
            sm.map.origin_e = map.origin_e + (double)tj * kSubMapSize * map.spacing;
            sm.map.origin_n = map.origin_n + (double)ti * kSubMapSize * map.spacing;
            sm.map.rows = kSubMapSize;
            sm.map.cols = kSubMapSize;
            sm.map.heights.resize((std::size_t)kSubMapSize * kSubMapSize);
            for (int r = 0; r < kSubMapSize; ++r) {
                const int sr = std::min(ti * kSubMapSize + r, map.rows - 1);
                for (int c = 0; c < kSubMapSize; ++c) {
                    const int sc = std::min(tj * kSubMapSize + c, map.cols - 1);
                    sm.map.at(r, c) = map.at(sr, sc);  // clamp-padded edges
                }
            }

            // tile rectangle in EN, in source-map extents (without padding)
            const double e0 = sm.map.origin_e;
            const double n0 = sm.map.origin_n;
            const double e1 = e0 + (kSubMapSize - 1) * map.spacing;
            const double n1 = n0 + (kSubMapSize - 1) * map.spacing;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < railroad.track_count(); ++t) {
                for (const Vec3& p : railroad.track(t).points) {
                    const double de =
                        std::max({e0 - p.y, 0.0, p.y - e1});
                    const double dn =
                        std::max({n0 - p.x, 0.0, p.x - n1});
                    best = std::min(best, std::hypot(de, dn));
                }
            }
            sm.keep = best <= keep_radius;
            out.push_back(std::move(sm));
        }
    }
    return out;
}

void write_height_png(const HeightMap& map, const std::string& png_path,
                      const std::string& meta_path) {
    if (map.heights.empty()) throw std::invalid_argument("empty height map");
    double lo = map.heights[0], hi = map.heights[0];
    for (double h : map.heights) {
        if (!std::isfinite(h)) throw std::invalid_argument("non-finite height");
        lo = std::min(lo, h);
        hi = std::max(hi, h);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    Image img;
    img.format = Image::Format::Gray16;
    img.width = map.cols;
    img.height = map.rows;
    img.gray.resize(map.heights.size());
    for (std::size_t i = 0; i < map.heights.size(); ++i) {
        const double u = (map.heights[i] - lo) / span;
        img.gray[i] = (std::uint16_t)std::lround(u * 65535.0);
    }
    write_png(img, png_path);

    nlohmann::json meta;
    meta["origin_e"] = map.origin_e;
    meta["origin_n"] = map.origin_n;
    meta["spacing"] = map.spacing;
    meta["height_min"] = lo;
    meta["height_max"] = hi;
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + meta_path);
    out << meta.dump(2) << "\n";
}

HeightMap read_height_png(const std::string& png_path,
                          const std::string& meta_path) {
    std::ifstream in(meta_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + meta_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const nlohmann::json meta = nlohmann::json::parse(ss.str());

    const Image img = read_png(png_path);
    if (img.format != Image::Format::Gray16)
        throw std::runtime_error("height map png must be 16-bit grayscale");

    HeightMap map;
    map.origin_e = meta.at("origin_e").get<double>();
    map.origin_n = meta.at("origin_n").get<double>();
    map.spacing = meta.at("spacing").get<double>();
    map.rows = img.height;
    map.cols = img.width;
    const double lo = meta.at("height_min").get<double>();
    const double hi = meta.at("height_max").get<double>();
    const double span = hi > lo ? hi - lo : 1.0;
    map.heights.resize(img.gray.size());
    for (std::size_t i = 0; i < img.gray.size(); ++i)
        map.heights[i] = lo + (img.gray[i] / 65535.0) * span;
    return map;
}

}  // namespace railsim
