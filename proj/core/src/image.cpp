#include "corgs/image.hpp"

#include "corgs/errors.hpp"
#include "raw_format.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace corgs {

ImageBuffer::ImageBuffer(int w, int h, int c, double fill)
    : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || (c != 1 && c != 3)) {
        throw std::invalid_argument("ImageBuffer: invalid shape");
    }
}

bool ImageBuffer::all_finite() const {
    return std::all_of(pixels.begin(), pixels.end(), [](double v) { return std::isfinite(v); });
}

void ImageBuffer::require_same_shape(const ImageBuffer& other, const char* what) const {
    if (!same_shape(other)) {
        throw std::invalid_argument(std::string(what) + ": image shapes differ (" + std::to_string(width) + "x" +
                                    std::to_string(height) + "x" + std::to_string(channels) + " vs " +
                                    std::to_string(other.width) + "x" + std::to_string(other.height) + "x" +
                                    std::to_string(other.channels) + ")");
    }
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image, double scale) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) {
        throw std::runtime_error("write_png: cannot open " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: libpng error writing " + path.string());
    }
    png_init_io(png, fp.get());
    const int color_type = image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, image.width, image.height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
    const double inv = scale > 0.0 ? 1.0 / scale : 1.0;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                const double v = std::clamp(image.at(x, y, c) * inv, 0.0, 1.0);
                row[static_cast<std::size_t>(x) * image.channels + c] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_raw_image(const std::filesystem::path& path, const ImageBuffer& image) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("write_raw_image: cannot open " + path.string());
    }
    detail::write_header_line(out, {{"format", "corgs-image"},
                                    {"version", 1},
                                    {"width", image.width},
                                    {"height", image.height},
                                    {"channels", image.channels},
                                    {"dtype", "<f8"}});
    detail::write_array(out, image.pixels.data(), image.pixels.size());
}

ImageBuffer read_raw_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_raw_image: cannot open " + path.string());
    }
    const auto [header, payload_offset] = detail::read_header_line(in);
    if (header.value("format", std::string{}) != "corgs-image" || header.value("version", 0) != 1) {
        throw FormatError("not a corgs-image v1 file: " + path.string(), 0);
    }
    const int w = header.value("width", -1);
    const int h = header.value("height", -1);
    const int c = header.value("channels", -1);
    if (w < 0 || h < 0 || (c != 1 && c != 3)) {
        throw FormatError("invalid image shape in " + path.string(), 0);
    }
    ImageBuffer image(w, h, c);
    std::uint64_t offset = payload_offset;
    detail::read_array(in, header.value("dtype", std::string{}), image.pixels.size(), image.pixels.data(), offset,
                       "pixels");
    detail::expect_end(in, offset);
    return image;
}

}  // namespace corgs
