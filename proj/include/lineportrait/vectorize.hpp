#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lineportrait/geometry.hpp"
#include "lineportrait/raster.hpp"

namespace lineportrait {

struct PixelPoint {
    int x = 0;
    int y = 0;
    bool operator==(const PixelPoint&) const = default;
};

struct TraceConfig {
    double d = 2.0;                   // join threshold, pixels
    double simplify_tolerance = 0.75;
    std::uint64_t rng_seed = 0;
};

std::vector<PixelPoint> extract_points(const EdgeMap& edges);

/// Uniform grid over a fixed point set supporting removal and nearest-live-point queries.
/// Cell size equals the tracing threshold, so a bounded query touches at most 3x3 cells.
class SpatialGrid {
public:
    SpatialGrid(std::span<const PixelPoint> points, double cell_size);

    void remove(std::size_t index);
    bool alive(std::size_t index) const { return slot_[index] != kDead; }
    std::size_t live_count() const { return live_; }

    /// Index of the nearest live point; ties go to the lowest (y, x).
    /// Only points strictly closer than `max_distance` are considered.
    std::optional<std::size_t> nearest(Vec2 query,
                                       double max_distance = std::numeric_limits<double>::infinity()) const;

private:
    static constexpr std::size_t kDead = std::numeric_limits<std::size_t>::max();

    std::size_t cell_of(int cx, int cy) const
    {
        return static_cast<std::size_t>(cy) * cols_ + static_cast<std::size_t>(cx);
    }
    int cell_x(double x) const;
    int cell_y(double y) const;

    std::span<const PixelPoint> points_;
    double cell_;
    int min_x_ = 0, min_y_ = 0;
    int cols_ = 0, rows_ = 0;
    std::vector<std::vector<std::size_t>> buckets_;
    std::vector<std::size_t> slot_;  // position of each point inside its bucket
    std::size_t live_ = 0;
};

/// Brute-force counterpart of SpatialGrid::nearest over the points flagged alive.
std::optional<std::size_t> nearest_linear_scan(std::span<const PixelPoint> points,
                                               const std::vector<bool>& alive, Vec2 query,
                                               double max_distance = std::numeric_limits<double>::infinity());

struct TraceResult {
    std::vector<Path> paths;
    std::size_t discarded_singletons = 0;
};

/// Greedy bidirectional nearest-neighbour tracing of edge points into paths.
TraceResult trace_paths(std::span<const PixelPoint> points, const TraceConfig& cfg);

/// Ramer-Douglas-Peucker simplification; endpoints are always kept.
Path simplify(const Path& path, double tolerance);

/// Paths interchange document shared by the pipeline stages, the CLI and the job store.
struct PathsDocument {
    std::vector<Path> paths;
    int image_width = 0;
    int image_height = 0;
    TraceConfig config;
};

std::string to_json(const PathsDocument& doc);
PathsDocument paths_from_json(const std::string& text);

}  // namespace lineportrait
