#include "railsim/png.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <zlib.h>

namespace railsim {

namespace {

const std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back((v >> 24) & 0xff);
    out.push_back((v >> 16) & 0xff);
    out.push_back((v >> 8) & 0xff);
    out.push_back(v & 0xff);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t len) {
    put_u32(out, (std::uint32_t)len);
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data, data + len);
    const std::uint32_t crc = ::crc32(0, out.data() + crc_start, (uInt)(len + 4));
    put_u32(out, crc);
}

struct FormatInfo {
    int bit_depth;
    int color_type;
    int bytes_per_pixel;  // after 16-bit expansion
};

FormatInfo format_info(Image::Format f) {
    switch (f) {
        case Image::Format::Gray16: return {16, 0, 2};
        case Image::Format::Indexed8: return {8, 3, 1};
        case Image::Format::Rgb8: return {8, 2, 3};
    }
    throw std::runtime_error("unknown image format");
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
    if (image.width <= 0 || image.height <= 0)
        throw std::runtime_error("png: empty image");
    const FormatInfo info = format_info(image.format);
    const std::size_t npix = (std::size_t)image.width * image.height;
    switch (image.format) {
        case Image::Format::Gray16:
            if (image.gray.size() != npix)
                throw std::runtime_error("png: sample count mismatch");
            break;
        case Image::Format::Indexed8:
            if (image.pixels.size() != npix)
                throw std::runtime_error("png: sample count mismatch");
            if (image.palette.empty() || image.palette.size() > 256)
                throw std::runtime_error("png: palette size must be 1..256");
            break;
        case Image::Format::Rgb8:
            if (image.pixels.size() != npix * 3)
                throw std::runtime_error("png: sample count mismatch");
            break;
    }

    const std::size_t row_bytes = (std::size_t)image.width * info.bytes_per_pixel;
    std::vector<std::uint8_t> raw;
    raw.reserve((row_bytes + 1) * image.height);
    for (int r = 0; r < image.height; ++r) {
        raw.push_back(0);  // filter: None
        if (image.format == Image::Format::Gray16) {
            for (int c = 0; c < image.width; ++c) {
                const std::uint16_t v = image.gray[(std::size_t)r * image.width + c];
                raw.push_back(v >> 8);  // network byte order per the spec
                raw.push_back(v & 0xff);
            }
        } else {
            const std::uint8_t* row = image.pixels.data() + (std::size_t)r * row_bytes;
            raw.insert(raw.end(), row, row + row_bytes);
        }
    }

    uLongf comp_len = compressBound((uLong)raw.size());
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), (uLong)raw.size(),
                  Z_BEST_SPEED) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kSignature, kSignature + 8);

    std::uint8_t ihdr[13];
    ihdr[0] = (image.width >> 24) & 0xff;
    ihdr[1] = (image.width >> 16) & 0xff;
    ihdr[2] = (image.width >> 8) & 0xff;
    ihdr[3] = image.width & 0xff;
    ihdr[4] = (image.height >> 24) & 0xff;
    ihdr[5] = (image.height >> 16) & 0xff;
    ihdr[6] = (image.height >> 8) & 0xff;
    ihdr[7] = image.height & 0xff;
    ihdr[8] = (std::uint8_t)info.bit_depth;
    ihdr[9] = (std::uint8_t)info.color_type;
    ihdr[10] = 0;  // compression
    ihdr[11] = 0;  // filter method
    ihdr[12] = 0;  // no interlace
    append_chunk(out, "IHDR", ihdr, 13);

    if (image.format == Image::Format::Indexed8) {
        std::vector<std::uint8_t> plte;
        for (const auto& c : image.palette) {
            plte.push_back(c[0]);
            plte.push_back(c[1]);
            plte.push_back(c[2]);
        }
        append_chunk(out, "PLTE", plte.data(), plte.size());
    }

    append_chunk(out, "IDAT", comp.data(), comp.size());
    append_chunk(out, "IEND", nullptr, 0);
    return out;
}

Image decode_png(const std::uint8_t* data, std::size_t size) {
    if (size < 8 || std::memcmp(data, kSignature, 8) != 0)
        throw std::runtime_error("png: bad signature");

    int width = 0, height = 0, bit_depth = 0, color_type = 0;
    std::vector<std::uint8_t> idat;
    std::vector<std::array<std::uint8_t, 3>> palette;
    bool saw_ihdr = false, saw_iend = false;

    std::size_t pos = 8;
    while (pos + 12 <= size && !saw_iend) {
        const std::uint32_t len = get_u32(data + pos);
        if (pos + 12 + len > size) throw std::runtime_error("png: truncated chunk");
        const char* type = (const char*)data + pos + 4;
        const std::uint8_t* body = data + pos + 8;
        const std::uint32_t crc = get_u32(data + pos + 8 + len);
        if (crc != ::crc32(0, data + pos + 4, len + 4))
            throw std::runtime_error("png: chunk crc mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            width = (int)get_u32(body);
            height = (int)get_u32(body + 4);
            bit_depth = body[8];
            color_type = body[9];
            if (body[10] != 0 || body[11] != 0)
                throw std::runtime_error("png: unsupported compression/filter");
            if (body[12] != 0)
                throw std::runtime_error("png: interlaced images unsupported");
            saw_ihdr = true;
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            if (len % 3 != 0) throw std::runtime_error("png: bad PLTE");
            for (std::uint32_t i = 0; i < len; i += 3)
                palette.push_back({body[i], body[i + 1], body[i + 2]});
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), body, body + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        // ancillary chunks are skipped
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty()) throw std::runtime_error("png: missing chunks");
    if (width <= 0 || height <= 0) throw std::runtime_error("png: bad dimensions");

    Image img;
    int bpp;
    if (color_type == 0 && bit_depth == 16) {
        img.format = Image::Format::Gray16;
        bpp = 2;
    } else if (color_type == 3 && bit_depth == 8) {
        img.format = Image::Format::Indexed8;
        bpp = 1;
        if (palette.empty()) throw std::runtime_error("png: indexed without PLTE");
        img.palette = palette;
    } else if (color_type == 2 && bit_depth == 8) {
        img.format = Image::Format::Rgb8;
        bpp = 3;
    } else {
        throw std::runtime_error("png: unsupported depth/color combination");
    }
    img.width = width;
    img.height = height;

    const std::size_t row_bytes = (std::size_t)width * bpp;
    std::vector<std::uint8_t> raw((row_bytes + 1) * height);
    uLongf raw_len = (uLongf)raw.size();
    if (uncompress(raw.data(), &raw_len, idat.data(), (uLong)idat.size()) != Z_OK ||
        raw_len != raw.size())
        throw std::runtime_error("png: inflate failed");

    // undo per-row filters in place
    std::vector<std::uint8_t> prev(row_bytes, 0);
    std::vector<std::uint8_t> cur(row_bytes);
    std::vector<std::uint8_t> samples;
    samples.reserve(row_bytes * height);
    for (int r = 0; r < height; ++r) {
        const std::uint8_t* src = raw.data() + (std::size_t)r * (row_bytes + 1);
        const int filter = src[0];
        ++src;
        for (std::size_t i = 0; i < row_bytes; ++i) {
            const int x = src[i];
            const int a = i >= (std::size_t)bpp ? cur[i - bpp] : 0;
            const int b = prev[i];
            const int c = i >= (std::size_t)bpp ? prev[i - bpp] : 0;
            int v;
            switch (filter) {
                case 0: v = x; break;
                case 1: v = x + a; break;
                case 2: v = x + b; break;
                case 3: v = x + (a + b) / 2; break;
                case 4: v = x + paeth(a, b, c); break;
                default: throw std::runtime_error("png: bad filter byte");
            }
            cur[i] = (std::uint8_t)v;
        }
        samples.insert(samples.end(), cur.begin(), cur.end());
        std::swap(prev, cur);
    }

    if (img.format == Image::Format::Gray16) {
        img.gray.resize((std::size_t)width * height);
        for (std::size_t i = 0; i < img.gray.size(); ++i)
            img.gray[i] = (std::uint16_t)((samples[2 * i] << 8) | samples[2 * i + 1]);
    } else {
        img.pixels = std::move(samples);
    }
    return img;
}

Image decode_png(const std::vector<std::uint8_t>& data) {
    return decode_png(data.data(), data.size());
}

void write_png(const Image& image, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write((const char*)bytes.data(), (std::streamsize)bytes.size());
    if (!out) throw std::runtime_error("write failed: " + path);
}

Image read_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace railsim
