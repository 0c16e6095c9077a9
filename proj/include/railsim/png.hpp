#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace railsim {

// Minimal PNG support for the three formats the exporters need.
struct Image {
    enum class Format { Gray16, Indexed8, Rgb8 };

    Format format = Format::Gray16;
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> gray;    // Gray16: width*height samples
    std::vector<std::uint8_t> pixels;   // Indexed8: w*h; Rgb8: w*h*3
    std::vector<std::array<std::uint8_t, 3>> palette;  // Indexed8 only

    std::uint16_t& at16(int row, int col) { return gray[row * width + col]; }
    std::uint16_t at16(int row, int col) const { return gray[row * width + col]; }
};

// Encoder writes unfiltered scanlines; decoder handles all five standard
// row filters. Non-interlaced only. Throws std::runtime_error on bad data.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::uint8_t* data, std::size_t size);
Image decode_png(const std::vector<std::uint8_t>& data);

void write_png(const Image& image, const std::string& path);
Image read_png(const std::string& path);

}  // namespace railsim
