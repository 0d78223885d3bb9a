#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lineportrait {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Ordered 2-D polyline. Image pixels or page millimetres depending on stage.
struct Path {
    std::vector<Vec2> points;
    bool closed = false;

    std::size_t size() const { return points.size(); }
    bool operator==(const Path&) const = default;
};

struct BoundingBox {
    Vec2 min{ INFINITY,  INFINITY};
    Vec2 max{-INFINITY, -INFINITY};

    void extend(Vec2 p);
    bool empty() const { return min.x > max.x || min.y > max.y; }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    double diagonal() const { return std::hypot(width(), height()); }
};

BoundingBox bounding_box(std::span<const Vec2> points);
BoundingBox bounding_box(std::span<const Path> paths);

double path_length(const Path& path);
Vec2 centroid(std::span<const Vec2> points);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// True if closed segments [a,b] and [c,d] share at least one point.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Minimum Euclidean distance between two closed segments; 0 when they intersect.
double segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Raised for degenerate input geometry (zero-length strokes, empty extents).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when matrix or vector dimensions do not agree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace lineportrait
