#include "doctest.h"

#include <cstdint>
#include <fstream>
#include <vector>

#include "railsim/png.hpp"

using namespace railsim;

namespace {

const char* kDataDir = RAILSIM_TEST_DATA_DIR;

std::string data_path(const char* name) {
    return std::string(kDataDir) + "/" + name;
}

}  // namespace

TEST_SUITE_BEGIN("png");

TEST_CASE("decodes a 16-bit grayscale file written by an external encoder") {
    const Image img = read_png(data_path("golden_gray16.png"));
    REQUIRE(img.format == Image::Format::Gray16);
    REQUIRE(img.width == 37);
    REQUIRE(img.height == 23);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            CHECK(img.at16(r, c) == (std::uint16_t)((r * 251 + c * 7919) % 65536));
}

TEST_CASE("decodes an 8-bit indexed file written by an external encoder") {
    const Image img = read_png(data_path("golden_indexed8.png"));
    REQUIRE(img.format == Image::Format::Indexed8);
    REQUIRE(img.width == 31);
    REQUIRE(img.height == 17);
    REQUIRE(img.palette.size() >= 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(img.palette[i][0] == i * 50);
        CHECK(img.palette[i][1] == 255 - i * 40);
        CHECK(img.palette[i][2] == (i * i) % 256);
    }
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            CHECK(img.pixels[r * img.width + c] == (r * 3 + c) % 5);
}

TEST_CASE("decodes an 8-bit RGB file written by an external encoder") {
    const Image img = read_png(data_path("golden_rgb8.png"));
    REQUIRE(img.format == Image::Format::Rgb8);
    REQUIRE(img.width == 29);
    REQUIRE(img.height == 19);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const std::uint8_t* px = &img.pixels[(r * img.width + c) * 3];
            CHECK(px[0] == (r * 5) % 256);
            CHECK(px[1] == (c * 9) % 256);
            CHECK(px[2] == (r + c) % 256);
        }
    }
}

TEST_CASE("gray16 round trip") {
    Image img;
    img.format = Image::Format::Gray16;
    img.width = 101;
    img.height = 53;
    img.gray.resize(101 * 53);
    for (std::size_t i = 0; i < img.gray.size(); ++i)
        img.gray[i] = (std::uint16_t)((i * 40503u) % 65536);
    const Image back = decode_png(encode_png(img));
    REQUIRE(back.format == Image::Format::Gray16);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.gray == img.gray);
}

TEST_CASE("indexed8 round trip keeps the palette") {
    Image img;
    img.format = Image::Format::Indexed8;
    img.width = 64;
    img.height = 48;
    img.pixels.resize(64 * 48);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = (std::uint8_t)(i % 7);
    for (int i = 0; i < 7; ++i)
        img.palette.push_back({(std::uint8_t)(i * 30), (std::uint8_t)(200 - i),
                               (std::uint8_t)(i * i)});
    const Image back = decode_png(encode_png(img));
    REQUIRE(back.format == Image::Format::Indexed8);
    CHECK(back.pixels == img.pixels);
    CHECK(back.palette == img.palette);
}

TEST_CASE("rgb8 round trip") {
    Image img;
    img.format = Image::Format::Rgb8;
    img.width = 33;
    img.height = 77;
    img.pixels.resize(33 * 77 * 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = (std::uint8_t)((i * 17 + 3) % 256);
    const Image back = decode_png(encode_png(img));
    REQUIRE(back.format == Image::Format::Rgb8);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("file round trip") {
    Image img;
    img.format = Image::Format::Gray16;
    img.width = 16;
    img.height = 16;
    img.gray.assign(256, 0);
    for (int i = 0; i < 256; ++i) img.gray[i] = (std::uint16_t)(i * 257);
    const std::string path = "/tmp/railsim_test_png.png";
    write_png(img, path);
    const Image back = read_png(path);
    CHECK(back.gray == img.gray);
}

TEST_CASE("corrupted data is rejected") {
    Image img;
    img.format = Image::Format::Rgb8;
    img.width = 8;
    img.height = 8;
    img.pixels.assign(8 * 8 * 3, 42);
    std::vector<std::uint8_t> bytes = encode_png(img);
    CHECK_THROWS(decode_png(bytes.data(), 7));           // truncated signature
    std::vector<std::uint8_t> flipped = bytes;
    flipped[40] ^= 0xff;                                 // inside a chunk body
    CHECK_THROWS(decode_png(flipped));
    std::vector<std::uint8_t> not_png(64, 0);
    CHECK_THROWS(decode_png(not_png));
}

TEST_SUITE_END();
