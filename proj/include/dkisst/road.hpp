#pragma once
/**
 * @file    road.hpp
 * @brief   Lanes, the global route, the lane-deviation penalty grid and the
 *          goal region placed a fixed distance ahead along the route.
 */

#include "dkisst/geometry.hpp"
#include "dkisst/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dkisst
{

struct Lane
{
    std::string id;
    std::vector<Point2> centerline;
    double width = 3.5;
    std::vector<std::string> successors;

    friend bool operator==(const Lane&, const Lane&) = default;
};

class RoadError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown when the route ends before the requested goal distance.
class RouteExhausted : public RoadError
{
  public:
    using RoadError::RoadError;
};

struct RoadNetwork
{
    std::vector<Lane> lanes;
    std::vector<std::string> route;

    [[nodiscard]] const Lane* find(const std::string& id) const
    {
        for (const auto& l : lanes)
            if (l.id == id)
                return &l;
        return nullptr;
    }

    /// Throws RoadError describing the first violated invariant.
    void validate() const
    {
        std::unordered_map<std::string, const Lane*> by_id;
        for (std::size_t i = 0; i < lanes.size(); ++i)
        {
            const Lane& l = lanes[i];
            const std::string where = "lanes[" + std::to_string(i) + "]";
            if (!by_id.emplace(l.id, &l).second)
                throw RoadError(where + ".id: duplicate lane id '" + l.id + "'");
            if (!(l.width > 0.0))
                throw RoadError(where + ".width: must be > 0");
            if (l.centerline.size() < 2)
                throw RoadError(where + ".centerline: needs at least 2 points");
            for (std::size_t k = 0; k < l.centerline.size(); ++k)
            {
                const auto& p = l.centerline[k];
                if (!std::isfinite(p.x) || !std::isfinite(p.y))
                    throw RoadError(where + ".centerline[" + std::to_string(k) + "]: not finite");
                if (k > 0 && p == l.centerline[k - 1])
                    throw RoadError(where + ".centerline[" + std::to_string(k) + "]: duplicate of previous point");
            }
        }
        for (std::size_t i = 0; i < lanes.size(); ++i)
            for (const auto& s : lanes[i].successors)
                if (!by_id.contains(s))
                    throw RoadError("lanes[" + std::to_string(i) + "].successors: unknown lane '" + s + "'");
        if (route.empty())
            throw RoadError("route: must name at least one lane");
        for (std::size_t i = 0; i < route.size(); ++i)
        {
            auto it = by_id.find(route[i]);
            if (it == by_id.end())
                throw RoadError("route[" + std::to_string(i) + "]: unknown lane '" + route[i] + "'");
            if (i > 0)
            {
                const auto& succ = by_id.at(route[i - 1])->successors;
                if (std::find(succ.begin(), succ.end(), route[i]) == succ.end())
                    throw RoadError("route[" + std::to_string(i) + "]: '" + route[i] + "' is not a successor of '" +
                                    route[i - 1] + "'");
            }
        }
    }

    friend bool operator==(const RoadNetwork&, const RoadNetwork&) = default;
};

struct LanePoint
{
    Point2 point;
    double distance = std::numeric_limits<double>::infinity();
    std::string lane_id;
    double width = 0.0;
};

/// Closest point on any lane centerline (exact segment projection).
inline LanePoint nearest_lane_center(const RoadNetwork& net, Point2 p)
{
    if (net.lanes.empty())
        throw RoadError("nearest_lane_center: empty road network");
    LanePoint best;
    const Lane* best_lane = nullptr;
    for (const auto& lane : net.lanes)
        for (std::size_t i = 0; i + 1 < lane.centerline.size(); ++i)
        {
            const Point2 q = closest_on_segment(p, lane.centerline[i], lane.centerline[i + 1]);
            const double d = distance(p, q);
            if (d < best.distance)
            {
                best.distance = d;
                best.point = q;
                best_lane = &lane;
            }
        }
    if (best_lane)
    {
        best.lane_id = best_lane->id;
        best.width = best_lane->width;
    }
    return best;
}

/// Lane-deviation penalty for a point at distance `d` from a lane center of width `w`.
inline double lane_penalty(double d, double w, double p_max)
{
    return d < 0.5 * w ? 2.0 * p_max * d / w : p_max;
}

struct GridBounds
{
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    friend bool operator==(const GridBounds&, const GridBounds&) = default;
};

/// Bounding box of every lane centerline, grown by `margin` and snapped to `snap`.
inline GridBounds road_bounds(const RoadNetwork& net, double margin, double snap)
{
    GridBounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& l : net.lanes)
        for (const auto& p : l.centerline)
        {
            b.x_min = std::min(b.x_min, p.x);
            b.y_min = std::min(b.y_min, p.y);
            b.x_max = std::max(b.x_max, p.x);
            b.y_max = std::max(b.y_max, p.y);
        }
    b.x_min = std::floor((b.x_min - margin) / snap) * snap;
    b.y_min = std::floor((b.y_min - margin) / snap) * snap;
    b.x_max = std::ceil((b.x_max + margin) / snap) * snap;
    b.y_max = std::ceil((b.y_max + margin) / snap) * snap;
    return b;
}

/// Rasterized lane-deviation penalty; row-major, piecewise constant per cell.
class PenaltyGrid
{
  public:
    PenaltyGrid() = default;
    PenaltyGrid(Point2 origin, double resolution, std::size_t cols, std::size_t rows, double p_max, double p_invalid)
        : origin_(origin), resolution_(resolution), cols_(cols), rows_(rows), p_max_(p_max), p_invalid_(p_invalid),
          cells_(cols * rows, p_max)
    {
        if (!(resolution > 0.0))
            throw std::invalid_argument("penalty grid resolution must be positive");
        if (p_invalid > p_max)
            throw std::invalid_argument("invalid-state threshold must not exceed the maximum penalty");
    }

    [[nodiscard]] Point2 origin() const { return origin_; }
    [[nodiscard]] double resolution() const { return resolution_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] double p_max() const { return p_max_; }
    [[nodiscard]] double p_invalid() const { return p_invalid_; }

    [[nodiscard]] Point2 cell_center(std::size_t col, std::size_t row) const
    {
        return {origin_.x + (static_cast<double>(col) + 0.5) * resolution_,
                origin_.y + (static_cast<double>(row) + 0.5) * resolution_};
    }
    [[nodiscard]] double at(std::size_t col, std::size_t row) const { return cells_[row * cols_ + col]; }
    double& at(std::size_t col, std::size_t row) { return cells_[row * cols_ + col]; }

    /// Penalty of the containing cell; P-max outside the grid.
    [[nodiscard]] double lookup(double x, double y) const
    {
        const double fx = std::floor((x - origin_.x) / resolution_);
        const double fy = std::floor((y - origin_.y) / resolution_);
        if (!(fx >= 0.0) || !(fy >= 0.0) || fx >= static_cast<double>(cols_) || fy >= static_cast<double>(rows_))
            return p_max_;
        return cells_[static_cast<std::size_t>(fy) * cols_ + static_cast<std::size_t>(fx)];
    }

    /// Lane-invalid states sit on cells at or above the invalid threshold.
    [[nodiscard]] bool lane_valid(double x, double y) const { return lookup(x, y) < p_invalid_; }

  private:
    Point2 origin_;
    double resolution_ = 0.25;
    std::size_t cols_ = 0;
    std::size_t rows_ = 0;
    double p_max_ = 100.0;
    double p_invalid_ = 99.0;
    std::vector<double> cells_;
};

inline double lookup_penalty(const PenaltyGrid& grid, double x, double y) { return grid.lookup(x, y); }

/**
 * Builds the grid by splatting each centerline segment over the cells within
 * half the widest lane width of it. Cells no segment reaches are saturated,
 * which matches the two-case penalty since their nearest lane center is at
 * least that far away.
 */
inline PenaltyGrid build_penalty_grid(const RoadNetwork& net, const GridBounds& bounds, double resolution,
                                      double p_max, double p_invalid = 99.0)
{
    if (!(resolution > 0.0))
        throw std::invalid_argument("penalty grid resolution must be positive");
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min))
        throw std::invalid_argument("penalty grid bounds are empty");
    const auto cols = static_cast<std::size_t>(std::ceil((bounds.x_max - bounds.x_min) / resolution));
    const auto rows = static_cast<std::size_t>(std::ceil((bounds.y_max - bounds.y_min) / resolution));
    PenaltyGrid grid({bounds.x_min, bounds.y_min}, resolution, cols, rows, p_max, p_invalid);

    double reach = 0.0;
    for (const auto& l : net.lanes)
        reach = std::max(reach, 0.5 * l.width);

    std::vector<double> dist(cols * rows, std::numeric_limits<double>::infinity());
    std::vector<double> width(cols * rows, 0.0);
    auto clamp_index = [](double v, std::size_t n) {
        if (v < 0.0)
            return std::size_t{0};
        return std::min(static_cast<std::size_t>(v), n == 0 ? 0 : n - 1);
    };
    for (const auto& lane : net.lanes)
        for (std::size_t i = 0; i + 1 < lane.centerline.size(); ++i)
        {
            const Point2 a = lane.centerline[i];
            const Point2 b = lane.centerline[i + 1];
            const double lo_x = std::min(a.x, b.x) - reach - bounds.x_min;
            const double hi_x = std::max(a.x, b.x) + reach - bounds.x_min;
            const double lo_y = std::min(a.y, b.y) - reach - bounds.y_min;
            const double hi_y = std::max(a.y, b.y) + reach - bounds.y_min;
            if (hi_x < 0.0 || hi_y < 0.0)
                continue;
            const std::size_t c0 = clamp_index(std::floor(lo_x / resolution), cols);
            const std::size_t c1 = clamp_index(std::floor(hi_x / resolution), cols);
            const std::size_t r0 = clamp_index(std::floor(lo_y / resolution), rows);
            const std::size_t r1 = clamp_index(std::floor(hi_y / resolution), rows);
            for (std::size_t r = r0; r <= r1; ++r)
                for (std::size_t c = c0; c <= c1; ++c)
                {
                    const Point2 center = grid.cell_center(c, r);
                    const double d = distance(center, closest_on_segment(center, a, b));
                    const std::size_t k = r * cols + c;
                    if (d < dist[k])
                    {
                        dist[k] = d;
                        width[k] = lane.width;
                    }
                }
        }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
        {
            const std::size_t k = r * cols + c;
            grid.at(c, r) = std::isfinite(dist[k]) ? lane_penalty(dist[k], width[k], p_max) : p_max;
        }
    return grid;
}

/// Polyline through the route lanes with arc-length bookkeeping.
class RoutePath
{
  public:
    struct Projection
    {
        double s = 0.0;
        double lateral = 0.0; // positive to the left of the travel direction
        Point2 point;
        std::size_t segment = 0;
    };

    RoutePath() = default;

    explicit RoutePath(const RoadNetwork& net)
    {
        for (const auto& id : net.route)
        {
            const Lane* lane = net.find(id);
            if (!lane)
                throw RoadError("route references unknown lane '" + id + "'");
            for (const auto& p : lane->centerline)
            {
                if (!points_.empty() && distance(points_.back(), p) < 1e-9)
                    continue;
                if (!points_.empty())
                    segment_width_.push_back(lane->width);
                points_.push_back(p);
            }
            lanes_.push_back(id);
        }
        if (points_.size() < 2)
            throw RoadError("route polyline is degenerate");
        s_.assign(points_.size(), 0.0);
        for (std::size_t i = 1; i < points_.size(); ++i)
            s_[i] = s_[i - 1] + distance(points_[i - 1], points_[i]);
    }

    [[nodiscard]] double length() const { return s_.back(); }
    [[nodiscard]] const std::vector<Point2>& points() const { return points_; }
    [[nodiscard]] const std::vector<std::string>& lanes() const { return lanes_; }

    [[nodiscard]] Projection project(Point2 p) const
    {
        Projection best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < points_.size(); ++i)
        {
            const Point2 q = closest_on_segment(p, points_[i], points_[i + 1]);
            const double d = distance(p, q);
            if (d < best_d)
            {
                best_d = d;
                const Point2 dir = points_[i + 1] - points_[i];
                best.s = s_[i] + distance(points_[i], q);
                best.lateral = cross(dir, p - q) >= 0.0 ? d : -d;
                best.point = q;
                best.segment = i;
            }
        }
        return best;
    }

    [[nodiscard]] std::size_t segment_at(double s) const
    {
        if (s <= 0.0)
            return 0;
        auto it = std::upper_bound(s_.begin(), s_.end(), s);
        const auto i = static_cast<std::size_t>(std::distance(s_.begin(), it));
        return std::min(i == 0 ? 0 : i - 1, points_.size() - 2);
    }

    [[nodiscard]] Point2 point_at(double s) const
    {
        const std::size_t i = segment_at(s);
        const double len = s_[i + 1] - s_[i];
        const double u = len > 0.0 ? std::clamp((s - s_[i]) / len, 0.0, 1.0) : 0.0;
        return points_[i] + u * (points_[i + 1] - points_[i]);
    }

    [[nodiscard]] double heading_at(double s) const
    {
        const std::size_t i = segment_at(s);
        const Point2 d = points_[i + 1] - points_[i];
        return std::atan2(d.y, d.x);
    }

    [[nodiscard]] double width_at(double s) const { return segment_width_[segment_at(s)]; }

    /// Polyline of the route between arc-lengths s0 < s1, both ends interpolated.
    [[nodiscard]] std::vector<Point2> slice(double s0, double s1) const
    {
        std::vector<Point2> out{point_at(s0)};
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (s_[i] > s0 && s_[i] < s1 && distance(points_[i], out.back()) > 1e-9)
                out.push_back(points_[i]);
        const Point2 end = point_at(s1);
        if (distance(end, out.back()) > 1e-9)
            out.push_back(end);
        return out;
    }

  private:
    std::vector<Point2> points_;
    std::vector<double> s_;
    std::vector<double> segment_width_;
    std::vector<std::string> lanes_;
};

/// Closed strip around a polyline with per-vertex left and right offsets.
inline Polygon strip_polygon(const std::vector<Point2>& line, const std::vector<double>& left_offset,
                             const std::vector<double>& right_offset)
{
    const std::size_t n = line.size();
    std::vector<Point2> left;
    std::vector<Point2> right;
    for (std::size_t i = 0; i < n; ++i)
    {
        Point2 dir{0.0, 0.0};
        if (i > 0)
        {
            const Point2 d = line[i] - line[i - 1];
            dir = dir + (1.0 / norm(d)) * d;
        }
        if (i + 1 < n)
        {
            const Point2 d = line[i + 1] - line[i];
            dir = dir + (1.0 / norm(d)) * d;
        }
        dir = (1.0 / norm(dir)) * dir;
        const Point2 normal{-dir.y, dir.x};
        left.push_back(line[i] + left_offset[i] * normal);
        right.push_back(line[i] - right_offset[i] * normal);
    }
    std::vector<Point2> ring(left.begin(), left.end());
    ring.insert(ring.end(), right.rbegin(), right.rend());
    return Polygon(std::move(ring));
}

struct GoalRegion
{
    std::vector<std::string> lanes;
    double s_min = 0.0;
    double s_max = 0.0;
    std::vector<Polygon> polygons;

    friend bool operator==(const GoalRegion&, const GoalRegion&) = default;
};

/**
 * Goal band over the route window [s_ego + gd - gt, s_ego + gd + gt], where
 * s_ego is the ego position projected on the route. The band is widened
 * sideways to cover every lane that runs alongside the route inside the
 * window (roughly parallel, adjacent to the route lane).
 */
inline GoalRegion compute_goal_region(const RoadNetwork& net, const VehicleState& ego, double gd, double gt)
{
    if (!(gt > 0.0))
        throw std::invalid_argument("goal threshold must be positive");
    const RoutePath route(net);
    const double s_ego = route.project(ego.position()).s;
    if (s_ego + gd > route.length())
        throw RouteExhausted("route ends " + std::to_string(route.length() - s_ego) + " m ahead, goal needs " +
                             std::to_string(gd) + " m");
    GoalRegion region;
    region.s_min = std::max(0.0, s_ego + gd - gt);
    region.s_max = std::min(s_ego + gd + gt, route.length());

    const auto line = route.slice(region.s_min, region.s_max);
    std::vector<double> line_s;
    for (const auto& p : line)
        line_s.push_back(route.project(p).s);

    const std::size_t first = route.segment_at(region.s_min);
    const std::size_t last = route.segment_at(region.s_max);
    std::size_t seg = 0;
    for (const auto& id : route.lanes())
    {
        const Lane* lane = net.find(id);
        const std::size_t seg_begin = seg;
        for (std::size_t i = 1; i < lane->centerline.size(); ++i)
            ++seg;
        if (seg_begin <= last && seg > first)
            region.lanes.push_back(id);
    }

    constexpr double kSpacing = 0.5;
    double left_extent = 0.0;
    double right_extent = 0.0;
    const double route_hw = 0.5 * route.width_at(s_ego + gd);
    for (const auto& lane : net.lanes)
    {
        if (std::find(route.lanes().begin(), route.lanes().end(), lane.id) != route.lanes().end())
            continue;
        bool member = false;
        for (std::size_t i = 0; i + 1 < lane.centerline.size(); ++i)
        {
            const Point2 a = lane.centerline[i];
            const Point2 b = lane.centerline[i + 1];
            const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / kSpacing)));
            const double lane_heading = std::atan2(b.y - a.y, b.x - a.x);
            for (int k = 0; k <= n; ++k)
            {
                const Point2 p = a + (static_cast<double>(k) / n) * (b - a);
                const auto pr = route.project(p);
                if (pr.s < region.s_min || pr.s > region.s_max)
                    continue;
                const bool aligned = std::abs(std::cos(angle_diff(lane_heading, route.heading_at(pr.s)))) > 0.866;
                const bool beside = std::abs(pr.lateral) <= route_hw + lane.width + 0.25;
                if (!aligned || !beside || std::abs(pr.lateral) < 1e-6)
                    continue;
                member = true;
                if (pr.lateral > 0.0)
                    left_extent = std::max(left_extent, pr.lateral + 0.5 * lane.width);
                else
                    right_extent = std::max(right_extent, -pr.lateral + 0.5 * lane.width);
            }
        }
        if (member)
            region.lanes.push_back(lane.id);
    }

    std::vector<double> left;
    std::vector<double> right;
    for (double s : line_s)
    {
        const double hw = 0.5 * route.width_at(s);
        left.push_back(std::max(hw, left_extent));
        right.push_back(std::max(hw, right_extent));
    }
    region.polygons.push_back(strip_polygon(line, left, right));
    return region;
}

/// Membership uses position only; heading and speed are unconstrained.
inline bool in_goal(const GoalRegion& region, const VehicleState& s)
{
    for (const auto& poly : region.polygons)
        if (point_in_polygon(s.position(), poly))
            return true;
    return false;
}

} // namespace dkisst
