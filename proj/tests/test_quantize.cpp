#include "doctest.h"

#include <random>
#include <set>

#include "lineportrait/quantize.hpp"
#include "support/oracles.hpp"

using namespace lineportrait;

namespace {

RasterImage clusters_image(std::mt19937_64& rng, const std::vector<Rgb>& centers, int w, int h,
                           std::vector<std::array<double, 3>>* means)
{
    // Quadrant layout with +-6 jitter per channel around each cluster centre.
    RasterImage img(w, h);
    std::vector<std::array<double, 3>> sum(centers.size(), {0, 0, 0});
    std::vector<int> n(centers.size(), 0);
    std::uniform_int_distribution<int> jitter(-6, 6);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t c = (y * 2 / h) * 2 + (x * 2 / w);
            auto ch = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + jitter(rng), 0, 255)); };
            const Rgb p{ch(centers[c].r), ch(centers[c].g), ch(centers[c].b)};
            img.at(x, y) = p;
            sum[c][0] += p.r, sum[c][1] += p.g, sum[c][2] += p.b;
            ++n[c];
        }
    if (means) {
        means->clear();
        for (std::size_t c = 0; c < centers.size(); ++c)
            means->push_back({sum[c][0] / n[c], sum[c][1] / n[c], sum[c][2] / n[c]});
    }
    return img;
}

}  // namespace

TEST_CASE("black and white with k=2 gives the exact two colours")
{
    RasterImage img(10, 10, {255, 255, 255});
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            if ((x + y) % 2)
                img.at(x, y) = {0, 0, 0};
    const auto pal = median_cut(img, 2);
    REQUIRE(pal.colors.size() == 2);
    const std::set<std::tuple<int, int, int>> got{{pal.colors[0].r, pal.colors[0].g, pal.colors[0].b},
                                                  {pal.colors[1].r, pal.colors[1].g, pal.colors[1].b}};
    CHECK(got == std::set<std::tuple<int, int, int>>{{0, 0, 0}, {255, 255, 255}});

    const auto mask = darkest_mask(map_pixels(img, pal), pal);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            CHECK(mask.at(x, y) == ((x + y) % 2 == 1));
}

TEST_CASE("k=1 is the per-channel mean and the whole image is dark")
{
    RasterImage img(4, 1);
    img.at(0, 0) = {0, 10, 100};
    img.at(1, 0) = {10, 20, 100};
    img.at(2, 0) = {20, 30, 100};
    img.at(3, 0) = {30, 44, 100};
    const auto pal = median_cut(img, 1);
    REQUIRE(pal.colors.size() == 1);
    CHECK(pal.colors[0] == Rgb{15, 26, 100});
    CHECK(darkest_mask(map_pixels(img, pal), pal).count() == 4);
    CHECK_THROWS_AS(median_cut(img, 0), std::invalid_argument);
}

TEST_CASE("four separated clusters are each matched within 2 per channel")
{
    std::mt19937_64 rng(4);
    const std::vector<Rgb> centers{{30, 40, 200}, {220, 40, 40}, {40, 210, 60}, {230, 230, 120}};
    std::vector<std::array<double, 3>> means;
    const auto img = clusters_image(rng, centers, 64, 48, &means);
    const auto pal = median_cut(img, 4);
    REQUIRE(pal.colors.size() == 4);
    for (const auto& m : means) {
        bool found = false;
        for (const auto& c : pal.colors)
            found = found || (std::abs(c.r - m[0]) <= 2 && std::abs(c.g - m[1]) <= 2 && std::abs(c.b - m[2]) <= 2);
        CHECK(found);
    }
}

TEST_CASE("palette size never exceeds k and only shrinks for few distinct colours")
{
    RasterImage three(3, 1);
    three.at(0, 0) = {1, 2, 3};
    three.at(1, 0) = {100, 2, 3};
    three.at(2, 0) = {1, 200, 3};
    CHECK(median_cut(three, 8).colors.size() == 3);

    std::mt19937_64 rng(2);
    RasterImage noisy(40, 30);
    for (auto& p : noisy.pixels)
        p = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
    for (int k : {1, 2, 3, 5, 8, 16})
        CHECK(median_cut(noisy, k).colors.size() == static_cast<std::size_t>(k));
}

TEST_CASE("map_pixels matches the exhaustive scan, with ties to the lower index")
{
    std::mt19937_64 rng(6);
    RasterImage img(50, 40);
    for (auto& p : img.pixels)
        p = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
    const auto pal = median_cut(img, 6);
    const auto idx = map_pixels(img, pal);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(idx.indices[i] == oracle::nearest_color(img.pixels[i], pal.colors));

    Palette tie;
    tie.colors = {{0, 0, 0}, {10, 0, 0}, {255, 255, 255}};
    tie.k = 3;
    RasterImage px(3, 1);
    px.at(0, 0) = {5, 0, 0};
    px.at(1, 0) = {10, 0, 0};
    px.at(2, 0) = {0, 0, 0};
    const auto m = map_pixels(px, tie);
    CHECK(m.indices[0] == 0);
    CHECK(m.indices[1] == 1);
    CHECK(m.indices[2] == 0);

    Palette wb;
    wb.colors = {{255, 255, 255}, {0, 0, 0}};
    CHECK(map_pixels(RasterImage(1, 1, {0, 0, 0}), wb).indices[0] == 1);
}

TEST_CASE("quantization error is non-increasing in k")
{
    std::mt19937_64 rng(10);
    RasterImage img(60, 45);
    for (int y = 0; y < 45; ++y)
        for (int x = 0; x < 60; ++x)
            img.at(x, y) = {static_cast<std::uint8_t>(x * 4), static_cast<std::uint8_t>(y * 5),
                            static_cast<std::uint8_t>((x * y + rng() % 30) % 256)};
    double prev = INFINITY;
    for (int k : {1, 2, 4, 8}) {
        const auto pal = median_cut(img, k);
        const double e = quantization_error(img, pal, map_pixels(img, pal));
        CHECK(e == doctest::Approx(oracle::squared_error(img, pal.colors)));
        CHECK(e <= prev);
        prev = e;
    }
}

TEST_CASE("three-tone gradient: mask covers the darkest band")
{
    RasterImage img(30, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 30; ++x) {
            const std::uint8_t v = x < 10 ? 30 : x < 20 ? 128 : 230;
            img.at(x, y) = {v, v, v};
        }
    const auto pal = median_cut(img, 3);
    REQUIRE(pal.colors.size() == 3);
    std::size_t dark = 0;
    for (std::size_t i = 1; i < pal.colors.size(); ++i)
        if (0.299 * pal.colors[i].r + 0.587 * pal.colors[i].g + 0.114 * pal.colors[i].b <
            0.299 * pal.colors[dark].r + 0.587 * pal.colors[dark].g + 0.114 * pal.colors[dark].b)
            dark = i;
    CHECK(darkest_index(pal) == dark);
    const auto mask = darkest_mask(map_pixels(img, pal), pal);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 30; ++x)
            CHECK(mask.at(x, y) == (x < 10));
}
