#include "lineportrait/geometry.hpp"

#include <algorithm>

namespace lineportrait {

void BoundingBox::extend(Vec2 p)
{
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
}

BoundingBox bounding_box(std::span<const Vec2> points)
{
    BoundingBox box;
    for (const auto& p : points)
        box.extend(p);
    return box;
}

BoundingBox bounding_box(std::span<const Path> paths)
{
    BoundingBox box;
    for (const auto& path : paths)
        for (const auto& p : path.points)
            box.extend(p);
    return box;
}

double path_length(const Path& path)
{
    double total = 0.0;
    for (std::size_t i = 1; i < path.points.size(); ++i)
        total += distance(path.points[i - 1], path.points[i]);
    return total;
}

Vec2 centroid(std::span<const Vec2> points)
{
    Vec2 sum;
    if (points.empty())
        return sum;
    for (const auto& p : points)
        sum += p;
    return sum * (1.0 / static_cast<double>(points.size()));
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0)
        return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c)
{
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p)
{
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d)
{
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);

    if (o1 != o2 && o3 != o4)
        return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

double segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d)
{
    if (segments_intersect(a, b, c, d))
        return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

}  // namespace lineportrait
