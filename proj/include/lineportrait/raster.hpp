#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lineportrait {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Row-major 8-bit sRGB image.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    RasterImage() = default;
    RasterImage(int w, int h, Rgb fill = {255, 255, 255});

    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Row-major luminance in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary image; true marks an edge (or, for masks, an eligible) pixel.
struct BitImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BitImage() = default;
    BitImage(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const;
    bool operator==(const BitImage&) const = default;
};

using EdgeMap = BitImage;

struct CannyConfig {
    int kernel_size = 5;
    double low_threshold = 0.10;   // fraction of the image's maximum gradient magnitude
    double high_threshold = 0.30;

    void validate() const;
};

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::optional<std::size_t> offset = std::nullopt);
    std::optional<std::size_t> offset() const { return offset_; }

private:
    std::optional<std::size_t> offset_;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Decodes a PNG or JPEG payload. Alpha is composited over white.
RasterImage load_image(std::span<const std::uint8_t> bytes);
RasterImage load_image_file(const std::string& path);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
/// 1-bit grayscale PNG; set bits are white on black.
std::vector<std::uint8_t> encode_png(const BitImage& img);
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality = 90);

/// Rec.601 luma on the 0..255 scale.
double luma(Rgb c);
GrayImage to_grayscale(const RasterImage& img);

/// Gaussian sigma used for a given blur kernel size.
double canny_sigma(int kernel_size);

EdgeMap canny(const GrayImage& img, const CannyConfig& cfg = {});

}  // namespace lineportrait
