#include "voxelcast/image.hpp"

#include "voxelcast/error.hpp"

#include <png.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>

namespace voxelcast {

nlohmann::json to_json(const RenderStats& s)
{
    return {
        {"rays", s.rays},
        {"samples_taken", s.samples_taken},
        {"samples_skipped", s.samples_skipped},
        {"blocks_visited", s.blocks_visited},
        {"wall_time_ms", s.wall_time_ms},
    };
}

ImageRGBA::ImageRGBA(int w, int h, Rgba8 fill)
    : width(w)
    , height(h)
    , pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
{
}

ImageRGBA ImageRGBA::crop(int x, int y, int w, int h) const
{
    ImageRGBA out(w, h);
    for (int row = 0; row < h; ++row) {
        std::copy_n(&at(x, y + row), w, &out.at(0, row));
    }
    return out;
}

int max_channel_difference(const ImageRGBA& a, const ImageRGBA& b)
{
    if (a.width != b.width || a.height != b.height) {
        throw Error(ErrorCode::DimensionMismatch, "images differ in size");
    }
    int worst = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const Rgba8& p = a.pixels[i];
        const Rgba8& q = b.pixels[i];
        worst = std::max({worst, std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b), std::abs(p.a - q.a)});
    }
    return worst;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_error_throw(png_structp, png_const_charp message)
{
    throw Error(ErrorCode::MalformedImage, std::string("png: ") + message);
}

void png_warning_ignore(png_structp, png_const_charp) {}

std::vector<std::uint8_t> encode(int width, int height, int color_type, int channels, const std::uint8_t* data)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_throw, png_warning_ignore);
    if (!png) throw Error(ErrorCode::IoError, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
        png_set_compression_level(png, 6);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < height; ++y) {
            png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * width * channels));
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep data, png_size_t length)
{
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->pos + length > cursor->bytes.size()) {
        png_error(png, "unexpected end of data");
    }
    std::memcpy(data, cursor->bytes.data() + cursor->pos, length);
    cursor->pos += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageRGBA& image)
{
    return encode(image.width, image.height, PNG_COLOR_TYPE_RGBA, 4, reinterpret_cast<const std::uint8_t*>(image.pixels.data()));
}

std::vector<std::uint8_t> encode_png_gray(int width, int height, std::span<const std::uint8_t> gray)
{
    if (gray.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::DimensionMismatch, "gray buffer does not match image size");
    }
    return encode(width, height, PNG_COLOR_TYPE_GRAY, 1, gray.data());
}

ImageRGBA decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw Error(ErrorCode::MalformedImage, "not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_throw, png_warning_ignore);
    if (!png) throw Error(ErrorCode::IoError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    ImageRGBA image;
    try {
        png_set_read_fn(png, &cursor, png_read_from_span);
        png_read_info(png, info);
        const png_byte color_type = png_get_color_type(png, info);
        const png_byte bit_depth = png_get_bit_depth(png, info);
        if (bit_depth == 16) png_set_strip_16(png);
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
        }
        png_read_update_info(png, info);
        image = ImageRGBA(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
        for (int y = 0; y < image.height; ++y) {
            png_read_row(png, reinterpret_cast<png_bytep>(&image.at(0, y)), nullptr);
        }
        png_read_end(png, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

std::vector<std::uint8_t> encode_ppm(const ImageRGBA& image)
{
    const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.pixels.size() * 3);
    for (const Rgba8& p : image.pixels) {
        out.push_back(p.r);
        out.push_back(p.g);
        out.push_back(p.b);
    }
    return out;
}

}  // namespace voxelcast
