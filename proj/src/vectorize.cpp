#include "lineportrait/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "json.hpp"

namespace lineportrait {

std::vector<PixelPoint> extract_points(const EdgeMap& edges)
{
    std::vector<PixelPoint> points;
    for (int y = 0; y < edges.height; ++y)
        for (int x = 0; x < edges.width; ++x)
            if (edges.at(x, y))
                points.push_back({x, y});
    return points;
}

namespace {

double squared(double v) { return v * v; }

double squared_distance(const PixelPoint& p, Vec2 q)
{
    return squared(p.x - q.x) + squared(p.y - q.y);
}

// Strict "a is a better nearest-neighbour answer than b".
bool closer(double da, const PixelPoint& a, double db, const PixelPoint& b)
{
    if (da != db)
        return da < db;
    if (a.y != b.y)
        return a.y < b.y;
    return a.x < b.x;
}

}  // namespace

SpatialGrid::SpatialGrid(std::span<const PixelPoint> points, double cell_size)
    : points_(points), cell_(cell_size), slot_(points.size(), kDead)
{
    if (!(cell_size > 0.0))
        throw std::invalid_argument("grid cell size must be positive");
    if (points.empty())
        return;

    int max_x = points[0].x, max_y = points[0].y;
    min_x_ = points[0].x;
    min_y_ = points[0].y;
    for (const auto& p : points) {
        min_x_ = std::min(min_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    cols_ = static_cast<int>(std::floor((max_x - min_x_) / cell_)) + 1;
    rows_ = static_cast<int>(std::floor((max_y - min_y_) / cell_)) + 1;
    buckets_.resize(static_cast<std::size_t>(cols_) * rows_);

    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& bucket = buckets_[cell_of(cell_x(points[i].x), cell_y(points[i].y))];
        slot_[i] = bucket.size();
        bucket.push_back(i);
    }
    live_ = points.size();
}

int SpatialGrid::cell_x(double x) const
{
    return static_cast<int>(std::floor((x - min_x_) / cell_));
}

int SpatialGrid::cell_y(double y) const
{
    return static_cast<int>(std::floor((y - min_y_) / cell_));
}

void SpatialGrid::remove(std::size_t index)
{
    if (!alive(index))
        return;
    auto& bucket = buckets_[cell_of(cell_x(points_[index].x), cell_y(points_[index].y))];
    const std::size_t pos = slot_[index];
    bucket[pos] = bucket.back();
    slot_[bucket[pos]] = pos;
    bucket.pop_back();
    slot_[index] = kDead;
    --live_;
}

std::optional<std::size_t> SpatialGrid::nearest(Vec2 query, double max_distance) const
{
    if (live_ == 0)
        return std::nullopt;

    const int qx = cell_x(query.x), qy = cell_y(query.y);
    const double limit2 = max_distance * max_distance;
    std::optional<std::size_t> best;
    double best_d2 = limit2;

    // Ring r covers cells at Chebyshev distance r from the (clamped) query cell.
    const int cx = std::clamp(qx, 0, cols_ - 1), cy = std::clamp(qy, 0, rows_ - 1);
    const int max_ring = std::max({cx, cols_ - 1 - cx, cy, rows_ - 1 - cy});

    for (int r = 0; r <= max_ring; ++r) {
        // Points in ring r are strictly farther than (r - 1) cells from the query.
        const double gap = std::max(0, r - 1) * cell_;
        if (gap * gap >= best_d2)
            break;
        for (int y = cy - r; y <= cy + r; ++y) {
            if (y < 0 || y >= rows_)
                continue;
            const bool edge_row = (y == cy - r || y == cy + r);
            for (int x = cx - r; x <= cx + r; x += (edge_row ? 1 : 2 * r)) {
                if (x >= 0 && x < cols_) {
                    for (auto i : buckets_[cell_of(x, y)]) {
                        const double d2 = squared_distance(points_[i], query);
                        if (d2 >= limit2)
                            continue;
                        if (!best || closer(d2, points_[i], best_d2, points_[*best])) {
                            best = i;
                            best_d2 = d2;
                        }
                    }
                }
                if (r == 0)
                    break;
            }
        }
    }
    return best;
}

std::optional<std::size_t> nearest_linear_scan(std::span<const PixelPoint> points, const std::vector<bool>& alive,
                                               Vec2 query, double max_distance)
{
    const double limit2 = max_distance * max_distance;
    std::optional<std::size_t> best;
    double best_d2 = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!alive[i])
            continue;
        const double d2 = squared_distance(points[i], query);
        if (d2 >= limit2)
            continue;
        if (!best || closer(d2, points[i], best_d2, points[*best])) {
            best = i;
            best_d2 = d2;
        }
    }
    return best;
}

TraceResult trace_paths(std::span<const PixelPoint> points, const TraceConfig& cfg)
{
    if (!(cfg.d > 0.0))
        throw std::invalid_argument("trace threshold d must be positive");

    TraceResult result;
    if (points.empty())
        return result;

    SpatialGrid grid(points, cfg.d);
    std::mt19937_64 rng(cfg.rng_seed);

    // Live list for uniform seed sampling, with O(1) removal.
    std::vector<std::size_t> live(points.size()), live_pos(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        live[i] = live_pos[i] = i;
    auto take = [&](std::size_t i) {
        grid.remove(i);
        const std::size_t pos = live_pos[i];
        live[pos] = live.back();
        live_pos[live[pos]] = pos;
        live.pop_back();
    };
    auto as_vec = [&](std::size_t i) { return Vec2{double(points[i].x), double(points[i].y)}; };

    while (!live.empty()) {
        const std::size_t seed = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng)];
        take(seed);

        const auto first = grid.nearest(as_vec(seed), cfg.d);
        if (!first) {
            ++result.discarded_singletons;
            continue;
        }
        take(*first);

        std::deque<std::size_t> chain{seed, *first};
        while (auto next = grid.nearest(as_vec(chain.back()), cfg.d)) {
            take(*next);
            chain.push_back(*next);
        }
        while (auto next = grid.nearest(as_vec(chain.front()), cfg.d)) {
            take(*next);
            chain.push_front(*next);
        }

        Path path;
        path.points.reserve(chain.size());
        for (auto i : chain)
            path.points.push_back(as_vec(i));
        result.paths.push_back(std::move(path));
    }
    return result;
}

Path simplify(const Path& path, double tolerance)
{
    const auto& pts = path.points;
    if (pts.size() <= 2)
        return path;

    std::vector<bool> keep(pts.size(), false);
    keep.front() = keep.back() = true;

    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
    while (!stack.empty()) {
        const auto [first, last] = stack.back();
        stack.pop_back();
        double worst = -1.0;
        std::size_t worst_index = first;
        for (std::size_t i = first + 1; i < last; ++i) {
            const double dev = point_segment_distance(pts[i], pts[first], pts[last]);
            if (dev > worst) {
                worst = dev;
                worst_index = i;
            }
        }
        if (worst > tolerance) {
            keep[worst_index] = true;
            stack.emplace_back(first, worst_index);
            stack.emplace_back(worst_index, last);
        }
    }

    Path out;
    out.closed = path.closed;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i] && (out.points.empty() || out.points.back() != pts[i]))
            out.points.push_back(pts[i]);
    return out;
}

std::string to_json(const PathsDocument& doc)
{
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& path : doc.paths) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : path.points)
            pts.push_back({p.x, p.y});
        paths.push_back(std::move(pts));
    }
    nlohmann::json j{
        {"paths", std::move(paths)},
        {"image_size", {doc.image_width, doc.image_height}},
        {"config",
         {{"d", doc.config.d},
          {"simplify_tolerance", doc.config.simplify_tolerance},
          {"rng_seed", doc.config.rng_seed}}},
    };
    return j.dump();
}

PathsDocument paths_from_json(const std::string& text)
{
    const auto j = nlohmann::json::parse(text);
    PathsDocument doc;
    for (const auto& jp : j.at("paths")) {
        Path path;
        for (const auto& pt : jp)
            path.points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
        doc.paths.push_back(std::move(path));
    }
    if (j.contains("image_size")) {
        doc.image_width = j["image_size"].at(0).get<int>();
        doc.image_height = j["image_size"].at(1).get<int>();
    }
    if (j.contains("config")) {
        const auto& c = j["config"];
        doc.config.d = c.value("d", doc.config.d);
        doc.config.simplify_tolerance = c.value("simplify_tolerance", doc.config.simplify_tolerance);
        doc.config.rng_seed = c.value("rng_seed", doc.config.rng_seed);
    }
    return doc;
}

}  // namespace lineportrait
