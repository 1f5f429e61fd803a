#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace corgs {

/// Row-major float image with 1 or 3 interleaved channels.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t size() const { return pixels.size(); }
    double& at(int x, int y, int c = 0) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c = 0) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

    bool same_shape(const ImageBuffer& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
    bool all_finite() const;
    /// Throws std::invalid_argument if shapes differ.
    void require_same_shape(const ImageBuffer& other, const char* what) const;

    bool operator==(const ImageBuffer&) const = default;
};

/// 8-bit PNG, values clamped to [0,1]. Depth-like single channel images are
/// normalized by `scale` first (pixel / scale).
void write_png(const std::filesystem::path& path, const ImageBuffer& image, double scale = 1.0);

/// Raw little-endian float64 payload preceded by a one-line JSON header.
void write_raw_image(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_raw_image(const std::filesystem::path& path);

}  // namespace corgs
