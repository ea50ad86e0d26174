#pragma once
/**
 * @file    objects.hpp
 * @brief   Predicted traffic participants and their repulsive clearance field.
 */

#include "dkisst/geometry.hpp"
#include "dkisst/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkisst
{

struct ObjectPose
{
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    friend bool operator==(const ObjectPose&, const ObjectPose&) = default;
};

/// Gaussian-shaped repulsive field attached to one object.
struct ObjectField
{
    double amplitude = 100.0;
    double sigma_x = 3.0;
    double sigma_y = 2.0;

    friend bool operator==(const ObjectField&, const ObjectField&) = default;
};

struct ObjectPrediction
{
    std::string id;
    std::string kind = "vehicle"; // "vehicle" or "pedestrian"; only used for footprint defaults
    double length = 4.0;
    double width = 2.0;
    std::vector<ObjectPose> poses;
    ObjectField field;

    void validate() const
    {
        if (poses.empty())
            throw std::invalid_argument("object '" + id + "' has no poses");
        if (!(length > 0.0) || !(width > 0.0))
            throw std::invalid_argument("object '" + id + "' footprint must be positive");
        for (std::size_t i = 0; i < poses.size(); ++i)
        {
            const auto& p = poses[i];
            if (!std::isfinite(p.t) || !std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.theta))
                throw std::invalid_argument("object '" + id + "' pose is not finite");
            if (i > 0 && !(p.t > poses[i - 1].t))
                throw std::invalid_argument("object '" + id + "' pose times must strictly increase");
        }
        if (!(field.amplitude >= 0.0) || !(field.sigma_x > 0.0) || !(field.sigma_y > 0.0))
            throw std::invalid_argument("object '" + id + "' field needs amplitude >= 0 and positive deviations");
    }

    friend bool operator==(const ObjectPrediction&, const ObjectPrediction&) = default;
};

struct WorldModel
{
    std::vector<ObjectPrediction> objects;

    friend bool operator==(const WorldModel&, const WorldModel&) = default;
};

/// Linear position / shortest-arc heading interpolation, clamped to the sampled horizon.
inline ObjectPose predicted_pose_at(const ObjectPrediction& obj, double t)
{
    const auto& poses = obj.poses;
    if (t <= poses.front().t)
        return {t, poses.front().x, poses.front().y, poses.front().theta};
    if (t >= poses.back().t)
        return {t, poses.back().x, poses.back().y, poses.back().theta};
    auto hi = std::upper_bound(poses.begin(), poses.end(), t,
                               [](double value, const ObjectPose& p) { return value < p.t; });
    const ObjectPose& b = *hi;
    const ObjectPose& a = *(hi - 1);
    const double u = (t - a.t) / (b.t - a.t);
    return {t, a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), normalize_angle(a.theta + u * angle_diff(b.theta, a.theta))};
}

inline OrientedBox object_box_at(const ObjectPrediction& obj, double t)
{
    const auto p = predicted_pose_at(obj, t);
    return {{p.x, p.y}, p.theta, obj.length, obj.width};
}

/**
 * Sum of A * exp(-f) over all objects with
 * f = dx^2 / sigma_x + dy^2 / sigma_y in world axes. The offsets are divided
 * by sigma itself, not sigma squared.
 */
inline double clearance_cost(const VehicleState& s, double t, const WorldModel& world)
{
    double total = 0.0;
    for (const auto& obj : world.objects)
    {
        const auto p = predicted_pose_at(obj, t);
        const double dx = s.x - p.x;
        const double dy = s.y - p.y;
        const double f = dx * dx / obj.field.sigma_x + dy * dy / obj.field.sigma_y;
        total += obj.field.amplitude * std::exp(-f);
    }
    return total;
}

} // namespace dkisst
