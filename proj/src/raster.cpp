#include "lineportrait/raster.hpp"

#include <algorithm>
#include <cmath>

namespace lineportrait {

void CannyConfig::validate() const
{
    if (kernel_size < 3 || kernel_size % 2 == 0)
        throw std::invalid_argument("canny kernel_size must be odd and >= 3");
    if (!(low_threshold > 0.0 && high_threshold < 1.0 && low_threshold < high_threshold))
        throw std::invalid_argument("canny thresholds must satisfy 0 < low < high < 1");
}

double luma(Rgb c)
{
    return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
}

GrayImage to_grayscale(const RasterImage& img)
{
    GrayImage out{img.width, img.height, {}};
    out.values.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.values[i] = static_cast<float>(luma(img.pixels[i]) / 255.0);
    return out;
}

double canny_sigma(int kernel_size)
{
    return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8;
}

namespace {

std::vector<float> gaussian_kernel(int size)
{
    const double sigma = canny_sigma(size);
    const int half = size / 2;
    std::vector<float> k(size);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        const double v = std::exp(-d * d / (2.0 * sigma * sigma));
        k[i] = static_cast<float>(v);
        sum += v;
    }
    for (auto& v : k)
        v = static_cast<float>(v / sum);
    return k;
}

// Separable blur with replicated borders.
std::vector<float> blur(const GrayImage& img, int kernel_size)
{
    const int w = img.width, h = img.height, half = kernel_size / 2;
    const auto k = gaussian_kernel(kernel_size);
    std::vector<float> tmp(img.values.size()), out(img.values.size());

    for (int y = 0; y < h; ++y) {
        const float* row = img.values.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            float acc = 0.f;
            for (int i = -half; i <= half; ++i)
                acc += k[i + half] * row[std::clamp(x + i, 0, w - 1)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.f;
            for (int i = -half; i <= half; ++i)
                acc += k[i + half] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

}  // namespace

EdgeMap canny(const GrayImage& img, const CannyConfig& cfg)
{
    cfg.validate();
    if (img.width < cfg.kernel_size || img.height < cfg.kernel_size)
        throw DimensionError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                             " is smaller than canny kernel " + std::to_string(cfg.kernel_size));

    const int w = img.width, h = img.height;
    const auto smooth = blur(img, cfg.kernel_size);
    auto px = [&](int x, int y) {
        return smooth[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };

    const std::size_t count = static_cast<std::size_t>(w) * h;
    std::vector<float> gx(count), gy(count), mag(count);
    float max_mag = 0.f;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float dx = (px(x + 1, y - 1) + 2.f * px(x + 1, y) + px(x + 1, y + 1)) -
                             (px(x - 1, y - 1) + 2.f * px(x - 1, y) + px(x - 1, y + 1));
            const float dy = (px(x - 1, y + 1) + 2.f * px(x, y + 1) + px(x + 1, y + 1)) -
                             (px(x - 1, y - 1) + 2.f * px(x, y - 1) + px(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = std::hypot(dx, dy);
            max_mag = std::max(max_mag, mag[i]);
        }
    }

    EdgeMap edges(w, h);
    if (max_mag <= 0.f)
        return edges;

    auto mag_at = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h)
            return 0.f;
        return mag[static_cast<std::size_t>(y) * w + x];
    };

    // Non-maximum suppression. 0 = not a candidate, 1 = weak, 2 = strong.
    const float low = static_cast<float>(cfg.low_threshold) * max_mag;
    const float high = static_cast<float>(cfg.high_threshold) * max_mag;
    const float tan22 = 0.41421356f;  // tan(22.5 deg)
    const float tan67 = 2.41421356f;  // tan(67.5 deg)
    std::vector<std::uint8_t> level(count, 0);
    std::vector<std::size_t> stack;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const float m = mag[i];
            if (m < low || m <= 0.f)
                continue;
            const float ax = std::abs(gx[i]), ay = std::abs(gy[i]);
            int ox, oy;
            if (ay <= tan22 * ax) {
                ox = 1; oy = 0;
            } else if (ay >= tan67 * ax) {
                ox = 0; oy = 1;
            } else {
                const bool same_sign = (gx[i] > 0.f) == (gy[i] > 0.f);
                ox = 1; oy = same_sign ? 1 : -1;
            }
            if (m > mag_at(x - ox, y - oy) && m >= mag_at(x + ox, y + oy)) {
                level[i] = m >= high ? 2 : 1;
                if (level[i] == 2)
                    stack.push_back(i);
            }
        }
    }

    // Hysteresis: grow strong seeds through weak pixels, 8-connected.
    for (auto i : stack)
        edges.bits[i] = 1;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (level[j] != 0 && !edges.bits[j]) {
                    edges.bits[j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    return edges;
}

}  // namespace lineportrait
