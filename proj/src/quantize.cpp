#include "lineportrait/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lineportrait {

namespace {

std::uint8_t channel(Rgb c, int axis)
{
    return axis == 0 ? c.r : axis == 1 ? c.g : c.b;
}

int squared_rgb_distance(Rgb a, Rgb b)
{
    const int dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
    return dr * dr + dg * dg + db * db;
}

}  // namespace

ColorBox::ColorBox(std::vector<Rgb> s) : samples(std::move(s))
{
    lo = {255, 255, 255};
    hi = {0, 0, 0};
    for (const auto& c : samples) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], channel(c, a));
            hi[a] = std::max(hi[a], channel(c, a));
        }
    }
}

int ColorBox::longest_axis() const
{
    int best = 0;
    for (int a = 1; a < 3; ++a)
        if (range(a) > range(best))
            best = a;
    return best;
}

double ColorBox::volume() const
{
    return double(range(0) + 1) * double(range(1) + 1) * double(range(2) + 1);
}

Rgb ColorBox::mean() const
{
    double sum[3] = {0, 0, 0};
    for (const auto& c : samples) {
        sum[0] += c.r;
        sum[1] += c.g;
        sum[2] += c.b;
    }
    const double n = static_cast<double>(samples.size());
    auto avg = [n](double s) { return static_cast<std::uint8_t>(std::lround(s / n)); };
    return {avg(sum[0]), avg(sum[1]), avg(sum[2])};
}

Palette median_cut(const RasterImage& img, int k)
{
    if (k < 1)
        throw std::invalid_argument("median_cut: k must be >= 1");
    if (img.pixels.empty())
        throw std::invalid_argument("median_cut: empty image");

    std::vector<ColorBox> boxes;
    boxes.emplace_back(img.pixels);

    const int population_splits = k / 2;
    for (int split = 0; static_cast<int>(boxes.size()) < k; ++split) {
        const bool by_volume = split >= population_splits;
        std::size_t pick = boxes.size();
        double best = -1.0;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (!boxes[i].splittable())
                continue;
            const double pop = static_cast<double>(boxes[i].population());
            const double priority = by_volume ? pop * boxes[i].volume() : pop;
            if (priority > best) {
                best = priority;
                pick = i;
            }
        }
        if (pick == boxes.size())
            break;

        ColorBox box = std::move(boxes[pick]);
        const int axis = box.longest_axis();
        auto& s = box.samples;
        std::sort(s.begin(), s.end(),
                  [axis](Rgb a, Rgb b) { return channel(a, axis) < channel(b, axis); });

        // Cut at the population median, moved onto a value boundary so the halves are disjoint.
        std::size_t cut = s.size() / 2;
        auto same = [&](std::size_t i) { return channel(s[i], axis) == channel(s[i - 1], axis); };
        std::size_t up = cut;
        while (up < s.size() && same(up))
            ++up;
        if (up < s.size()) {
            cut = up;
        } else {
            while (cut > 0 && same(cut))
                --cut;
        }

        std::vector<Rgb> lower(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(cut));
        std::vector<Rgb> upper(s.begin() + static_cast<std::ptrdiff_t>(cut), s.end());
        boxes[pick] = ColorBox(std::move(lower));
        boxes.insert(boxes.begin() + static_cast<std::ptrdiff_t>(pick) + 1, ColorBox(std::move(upper)));
    }

    Palette palette;
    palette.k = k;
    for (const auto& box : boxes) {
        const Rgb c = box.mean();
        if (std::find(palette.colors.begin(), palette.colors.end(), c) == palette.colors.end())
            palette.colors.push_back(c);
    }
    return palette;
}

IndexMap map_pixels(const RasterImage& img, const Palette& palette)
{
    if (palette.colors.empty())
        throw std::invalid_argument("map_pixels: empty palette");
    IndexMap out{img.width, img.height, std::vector<std::uint16_t>(img.pixels.size())};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        int best = squared_rgb_distance(img.pixels[i], palette.colors[0]);
        std::uint16_t best_index = 0;
        for (std::size_t j = 1; j < palette.colors.size(); ++j) {
            const int d = squared_rgb_distance(img.pixels[i], palette.colors[j]);
            if (d < best) {
                best = d;
                best_index = static_cast<std::uint16_t>(j);
            }
        }
        out.indices[i] = best_index;
    }
    return out;
}

std::size_t darkest_index(const Palette& palette)
{
    if (palette.colors.empty())
        throw std::invalid_argument("darkest_index: empty palette");
    std::size_t best = 0;
    for (std::size_t j = 1; j < palette.colors.size(); ++j)
        if (luma(palette.colors[j]) < luma(palette.colors[best]))
            best = j;
    return best;
}

ShadeMask darkest_mask(const IndexMap& indices, const Palette& palette)
{
    const auto dark = darkest_index(palette);
    ShadeMask mask(indices.width, indices.height);
    for (std::size_t i = 0; i < indices.indices.size(); ++i)
        mask.bits[i] = indices.indices[i] == dark ? 1 : 0;
    return mask;
}

double quantization_error(const RasterImage& img, const Palette& palette, const IndexMap& indices)
{
    double total = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        total += squared_rgb_distance(img.pixels[i], palette.colors[indices.indices[i]]);
    return total;
}

}  // namespace lineportrait
