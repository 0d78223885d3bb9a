#include "lineportrait/placement.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace lineportrait {

namespace {

bool segment_clear(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double clearance)
{
    if (segments_intersect(a, b, c, d))
        return false;
    return segment_distance(a, b, c, d) >= clearance;
}

template <typename Fn>
void for_each_segment(const Path& path, Fn&& fn)
{
    const auto& pts = path.points;
    if (pts.size() == 1)
        fn(pts[0], pts[0]);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        fn(pts[i], pts[i + 1]);
}

}  // namespace

void ShadingConfig::validate() const
{
    if (!(stroke_size > 0.0))
        throw std::invalid_argument("stroke_size must be > 0");
    if (!(clearance >= 0.0))
        throw std::invalid_argument("clearance must be >= 0");
    if (count_target < 0 || max_rejects < 0)
        throw std::invalid_argument("count_target and max_rejects must be >= 0");
    if (!(noise_scale >= 0.0))
        throw std::invalid_argument("noise_scale must be >= 0");
}

OccupancyIndex::OccupancyIndex(double cell_size) : cell_(cell_size)
{
    if (!(cell_size > 0.0))
        throw std::invalid_argument("occupancy cell size must be > 0");
}

std::pair<std::int64_t, std::int64_t> OccupancyIndex::cell_of(Vec2 p) const
{
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_))};
}

void OccupancyIndex::insert(const Path& path)
{
    for_each_segment(path, [this](Vec2 a, Vec2 b) {
        const std::size_t id = segments_.size();
        segments_.emplace_back(a, b);
        const auto [x0, y0] = cell_of({std::min(a.x, b.x), std::min(a.y, b.y)});
        const auto [x1, y1] = cell_of({std::max(a.x, b.x), std::max(a.y, b.y)});
        for (std::int64_t y = y0; y <= y1; ++y)
            for (std::int64_t x = x0; x <= x1; ++x)
                cells_[key(x, y)].push_back(id);
    });
}

bool can_place(const Path& candidate, const OccupancyIndex& index, double clearance)
{
    bool clear = true;
    for_each_segment(candidate, [&](Vec2 a, Vec2 b) {
        if (!clear)
            return;
        BoundingBox box;
        box.extend(a);
        box.extend(b);
        index.for_each_candidate(box, clearance, [&](Vec2 c, Vec2 d) {
            if (clear && !segment_clear(a, b, c, d, clearance))
                clear = false;
        });
    });
    return clear;
}

bool can_place_brute_force(const Path& candidate, std::span<const Path> placed, double clearance)
{
    bool clear = true;
    for (const auto& other : placed)
        for_each_segment(candidate, [&](Vec2 a, Vec2 b) {
            for_each_segment(other, [&](Vec2 c, Vec2 d) {
                if (!segment_clear(a, b, c, d, clearance))
                    clear = false;
            });
        });
    return clear;
}

double polyline_distance(const Path& a, const Path& b)
{
    double best = INFINITY;
    for_each_segment(a, [&](Vec2 p, Vec2 q) {
        for_each_segment(b, [&](Vec2 r, Vec2 s) { best = std::min(best, segment_distance(p, q, r, s)); });
    });
    return best;
}

std::vector<Path> fill_shading(const ShadeMask& mask, const ModelParams& model, std::span<const StrokeGraph> templates,
                               std::span<const Path> features, const ShadingConfig& cfg,
                               const PageTransform& transform, FillStats* stats)
{
    cfg.validate();
    FillStats local;
    FillStats& st = stats ? *stats : local;
    st = {};

    std::vector<std::pair<int, int>> eligible;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y))
                eligible.emplace_back(x, y);
    if (eligible.empty() || templates.empty() || cfg.count_target == 0)
        return {};

    OccupancyIndex index(cfg.clearance + cfg.stroke_size / 4.0);
    for (const auto& f : features)
        index.insert(f);

    auto inside_mask = [&](Vec2 page) {
        const Vec2 px = transform.to_pixel(page);
        const double fx = std::floor(px.x), fy = std::floor(px.y);
        if (!(fx >= 0 && fy >= 0 && fx < mask.width && fy < mask.height))
            return false;
        return mask.at(static_cast<int>(fx), static_cast<int>(fy));
    };

    Rng rng(cfg.rng_seed);
    std::uniform_int_distribution<std::size_t> pick_pixel(0, eligible.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_template(0, templates.size() - 1);

    std::vector<Path> placed;
    int consecutive_rejects = 0;
    while (static_cast<int>(placed.size()) < cfg.count_target && consecutive_rejects < cfg.max_rejects) {
        ++st.attempts;
        const auto [px, py] = eligible[pick_pixel(rng)];
        const auto& tmpl = templates[pick_template(rng)];
        Path stroke = sample_variation(tmpl, model, cfg.noise_scale, rng);

        const double diag = bounding_box(stroke.points).diagonal();
        bool ok = std::isfinite(diag) && diag > 0.0;
        if (ok) {
            const double s = cfg.stroke_size / diag;
            const Vec2 c = centroid(stroke.points);
            const Vec2 anchor = transform.to_page({px + 0.5, py + 0.5});
            for (auto& p : stroke.points)
                p = anchor + (p - c) * s;
            for (const auto& p : stroke.points)
                if (!inside_mask(p)) {
                    ok = false;
                    break;
                }
            if (!ok)
                ++st.rejected_outside_mask;
        } else {
            ++st.rejected_outside_mask;
        }
        if (ok && !can_place(stroke, index, cfg.clearance)) {
            ok = false;
            ++st.rejected_touching;
        }

        if (ok) {
            index.insert(stroke);
            placed.push_back(std::move(stroke));
            consecutive_rejects = 0;
        } else {
            ++consecutive_rejects;
        }
    }
    st.accepted = static_cast<int>(placed.size());
    return placed;
}

}  // namespace lineportrait
