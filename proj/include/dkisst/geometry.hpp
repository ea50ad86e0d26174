#pragma once
/**
 * @file    geometry.hpp
 * @brief   Planar primitives used by collision checking: points, simple
 *          polygons, oriented boxes and the containment / overlap tests.
 *
 * Conventions:
 * - Polygons are stored counter-clockwise; the constructor reorders
 *   clockwise input.
 * - Points on a polygon boundary count as inside.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace dkisst
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wrap an angle into (-pi, pi].
inline double normalize_angle(double a)
{
    if (a > -kPi && a <= kPi)
        return a;
    a = std::fmod(a + kPi, kTwoPi);
    if (a <= 0.0)
        a += kTwoPi;
    return a - kPi;
}

/// Signed shortest rotation taking `from` onto `to`, in (-pi, pi].
inline double angle_diff(double to, double from) { return normalize_angle(to - from); }

struct Point2
{
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Closest point to `p` on segment [a, b].
inline Point2 closest_on_segment(Point2 p, Point2 a, Point2 b)
{
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0)
        return a;
    const double u = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return a + u * ab;
}

/// Simple polygon with counter-clockwise vertex order.
class Polygon
{
  public:
    Polygon() = default;

    explicit Polygon(std::vector<Point2> vertices) : vertices_(std::move(vertices))
    {
        if (vertices_.size() < 3)
            throw std::invalid_argument("polygon needs at least 3 vertices");
        for (const auto& v : vertices_)
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                throw std::invalid_argument("polygon vertex is not finite");
        if (signed_area() < 0.0)
            std::reverse(vertices_.begin(), vertices_.end());
    }

    [[nodiscard]] std::span<const Point2> vertices() const { return vertices_; }
    [[nodiscard]] std::size_t size() const { return vertices_.size(); }
    [[nodiscard]] const Point2& operator[](std::size_t i) const { return vertices_[i]; }

    /// Shoelace area; positive for counter-clockwise order.
    [[nodiscard]] double signed_area() const
    {
        double a = 0.0;
        for (std::size_t i = 0, n = vertices_.size(); i < n; ++i)
            a += cross(vertices_[i], vertices_[(i + 1) % n]);
        return 0.5 * a;
    }

    friend bool operator==(const Polygon&, const Polygon&) = default;

  private:
    std::vector<Point2> vertices_;
};

struct OrientedBox
{
    Point2 center;
    double heading = 0.0;
    double length = 0.0;
    double width = 0.0;
};

inline Polygon box_to_polygon(const OrientedBox& box)
{
    const double c = std::cos(box.heading);
    const double s = std::sin(box.heading);
    const double hl = 0.5 * box.length;
    const double hw = 0.5 * box.width;
    auto corner = [&](double lx, double ly) {
        return Point2{box.center.x + c * lx - s * ly, box.center.y + s * lx + c * ly};
    };
    return Polygon({corner(hl, hw), corner(-hl, hw), corner(-hl, -hw), corner(hl, -hw)});
}

namespace detail
{
inline bool on_segment(Point2 p, Point2 a, Point2 b)
{
    constexpr double kEps = 1e-12;
    const Point2 ab = b - a;
    const double scale = std::max({1.0, std::abs(ab.x), std::abs(ab.y)});
    if (std::abs(cross(ab, p - a)) > kEps * scale * scale)
        return false;
    return std::min(a.x, b.x) - kEps <= p.x && p.x <= std::max(a.x, b.x) + kEps &&
           std::min(a.y, b.y) - kEps <= p.y && p.y <= std::max(a.y, b.y) + kEps;
}

inline int orientation(Point2 a, Point2 b, Point2 c)
{
    const double v = cross(b - a, c - a);
    if (v > 0.0)
        return 1;
    if (v < 0.0)
        return -1;
    return 0;
}
} // namespace detail

/// Closed-segment intersection test, including touching and collinear overlap.
inline bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2)
{
    const int o1 = detail::orientation(p1, p2, q1);
    const int o2 = detail::orientation(p1, p2, q2);
    const int o3 = detail::orientation(q1, q2, p1);
    const int o4 = detail::orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4)
        return true;
    return (o1 == 0 && detail::on_segment(q1, p1, p2)) || (o2 == 0 && detail::on_segment(q2, p1, p2)) ||
           (o3 == 0 && detail::on_segment(p1, q1, q2)) || (o4 == 0 && detail::on_segment(p2, q1, q2));
}

/// Ray casting (even-odd crossing count); boundary points are reported inside.
inline bool point_in_polygon(Point2 p, const Polygon& poly)
{
    const auto v = poly.vertices();
    const std::size_t n = v.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    {
        if (detail::on_segment(p, v[j], v[i]))
            return true;
        if ((v[i].y > p.y) != (v[j].y > p.y))
        {
            const double x_cross = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < x_cross)
                inside = !inside;
        }
    }
    return inside;
}

/// True iff the two simple polygons share at least one point.
inline bool polygons_overlap(const Polygon& a, const Polygon& b)
{
    for (const auto& p : a.vertices())
        if (point_in_polygon(p, b))
            return true;
    for (const auto& p : b.vertices())
        if (point_in_polygon(p, a))
            return true;
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            if (segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]))
                return true;
    return false;
}

/// Box-vs-box overlap with a bounding-circle early out.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b)
{
    const double ra = 0.5 * std::hypot(a.length, a.width);
    const double rb = 0.5 * std::hypot(b.length, b.width);
    if (distance(a.center, b.center) > ra + rb)
        return false;
    return polygons_overlap(box_to_polygon(a), box_to_polygon(b));
}

} // namespace dkisst
