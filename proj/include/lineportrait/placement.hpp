#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "lineportrait/geometry.hpp"
#include "lineportrait/quantize.hpp"
#include "lineportrait/strokemodel.hpp"

namespace lineportrait {

struct ShadingConfig {
    double stroke_size = 6.0;  // target bounding-box diagonal, mm
    int count_target = 400;
    int max_rejects = 800;     // consecutive failures before giving up
    double clearance = 0.6;    // minimum distance between any two polylines, mm
    double noise_scale = 0.15;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Uniform image-to-page mapping: page = offset + pixel * mm_per_pixel.
struct PageTransform {
    double mm_per_pixel = 1.0;
    Vec2 offset;

    Vec2 to_page(Vec2 pixel) const { return offset + pixel * mm_per_pixel; }
    Vec2 to_pixel(Vec2 page) const { return (page - offset) * (1.0 / mm_per_pixel); }
};

/// Spatial hash over line segments for clearance queries.
class OccupancyIndex {
public:
    explicit OccupancyIndex(double cell_size);

    void insert(const Path& path);
    std::size_t segment_count() const { return segments_.size(); }
    double cell_size() const { return cell_; }

    /// Calls `fn(a, b)` for every stored segment whose cells overlap the box grown by `margin`.
    /// A segment may be reported more than once.
    template <typename Fn>
    void for_each_candidate(const BoundingBox& box, double margin, Fn&& fn) const
    {
        const auto [x0, y0] = cell_of({box.min.x - margin, box.min.y - margin});
        const auto [x1, y1] = cell_of({box.max.x + margin, box.max.y + margin});
        for (std::int64_t y = y0; y <= y1; ++y)
            for (std::int64_t x = x0; x <= x1; ++x)
                if (const auto it = cells_.find(key(x, y)); it != cells_.end())
                    for (auto s : it->second)
                        fn(segments_[s].first, segments_[s].second);
    }

private:
    std::pair<std::int64_t, std::int64_t> cell_of(Vec2 p) const;
    static std::uint64_t key(std::int64_t x, std::int64_t y)
    {
        return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffu);
    }

    double cell_;
    std::vector<std::pair<Vec2, Vec2>> segments_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// True iff no segment of `candidate` touches or comes within `clearance` of an indexed segment.
bool can_place(const Path& candidate, const OccupancyIndex& index, double clearance);

/// Brute-force reference for can_place over an explicit list of placed paths.
bool can_place_brute_force(const Path& candidate, std::span<const Path> placed, double clearance);

/// Minimum segment-to-segment distance between two polylines.
double polyline_distance(const Path& a, const Path& b);

struct FillStats {
    int attempts = 0;
    int accepted = 0;
    int rejected_outside_mask = 0;
    int rejected_touching = 0;
};

/// Scatter generated stroke variants over the mask without touching features or each other.
/// `features` are in page millimetres; the result is too.
std::vector<Path> fill_shading(const ShadeMask& mask, const ModelParams& model, std::span<const StrokeGraph> templates,
                               std::span<const Path> features, const ShadingConfig& cfg,
                               const PageTransform& transform, FillStats* stats = nullptr);

}  // namespace lineportrait
