#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lineportrait/raster.hpp"

namespace lineportrait {

struct Palette {
    std::vector<Rgb> colors;
    int k = 0;  // requested size
};

/// Axis-aligned box in RGB space holding the pixel samples assigned to it.
struct ColorBox {
    std::vector<Rgb> samples;
    std::array<std::uint8_t, 3> lo{};
    std::array<std::uint8_t, 3> hi{};

    explicit ColorBox(std::vector<Rgb> s);

    std::size_t population() const { return samples.size(); }
    int longest_axis() const;
    int range(int axis) const { return hi[axis] - lo[axis]; }
    double volume() const;
    bool splittable() const { return range(longest_axis()) > 0; }
    Rgb mean() const;
};

using ShadeMask = BitImage;

/// Row-major palette index per pixel.
struct IndexMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> indices;
};

/// Median cut with the "modified" priority: population for the first k/2 splits,
/// population times box volume afterwards.
Palette median_cut(const RasterImage& img, int k);

IndexMap map_pixels(const RasterImage& img, const Palette& palette);

/// Index of the palette entry with the lowest luma (ties to the lower index).
std::size_t darkest_index(const Palette& palette);

ShadeMask darkest_mask(const IndexMap& indices, const Palette& palette);

/// Sum of squared RGB distances between each pixel and its mapped palette entry.
double quantization_error(const RasterImage& img, const Palette& palette, const IndexMap& indices);

}  // namespace lineportrait
