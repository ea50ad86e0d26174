#pragma once
/**
 * @file    vehicle.hpp
 * @brief   Kinematic bicycle model with Euler integration.
 *
 * The model advances (x, y, theta, v) with a piece-wise constant
 * (acceleration, steering) input. Speed is clamped to the vehicle's bounds
 * after every step and heading is kept in (-pi, pi].
 */

#include "dkisst/geometry.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dkisst
{

struct VehicleState
{
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double v = 0.0;

    [[nodiscard]] Point2 position() const { return {x, y}; }
    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct ControlInput
{
    double a = 0.0;     // longitudinal acceleration [m/s^2]
    double delta = 0.0; // front wheel steering angle [rad]

    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct Interval
{
    double min = 0.0;
    double max = 0.0;

    [[nodiscard]] bool contains(double value) const { return value >= min && value <= max; }
    [[nodiscard]] double extent() const { return max - min; }
    [[nodiscard]] double clamp(double value) const { return std::min(std::max(value, min), max); }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct VehicleParams
{
    double wheelbase = 2.7;
    double length = 4.0;
    double width = 2.0;
    Interval v_bounds{0.0, 6.0};
    Interval a_bounds{-0.8, 0.8};
    Interval delta_bounds{-0.4, 0.4};

    void validate() const
    {
        if (!(wheelbase > 0.0))
            throw std::invalid_argument("wheelbase must be positive");
        if (!(length > 0.0) || !(width > 0.0))
            throw std::invalid_argument("vehicle footprint must be positive");
        if (!(v_bounds.min <= v_bounds.max) || !(a_bounds.min <= a_bounds.max) ||
            !(delta_bounds.min <= delta_bounds.max))
            throw std::invalid_argument("vehicle bounds must be ordered");
        if (v_bounds.min < 0.0)
            throw std::invalid_argument("reverse driving is not supported (v_min < 0)");
    }

    [[nodiscard]] bool admits(const ControlInput& u) const
    {
        return a_bounds.contains(u.a) && delta_bounds.contains(u.delta);
    }

    friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

struct TimedState
{
    VehicleState state;
    double t = 0.0;
    std::optional<ControlInput> input; // absent for roots

    friend bool operator==(const TimedState&, const TimedState&) = default;
};

struct Trajectory
{
    std::vector<TimedState> samples;

    [[nodiscard]] bool empty() const { return samples.empty(); }
    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] const TimedState& front() const { return samples.front(); }
    [[nodiscard]] const TimedState& back() const { return samples.back(); }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

inline OrientedBox footprint(const VehicleState& s, const VehicleParams& p)
{
    return {s.position(), s.theta, p.length, p.width};
}

/// One explicit Euler step of the kinematic bicycle model.
inline VehicleState step(const VehicleState& s, const ControlInput& u, double ts, const VehicleParams& p)
{
    VehicleState next;
    next.x = s.x + ts * s.v * std::cos(s.theta);
    next.y = s.y + ts * s.v * std::sin(s.theta);
    next.theta = normalize_angle(s.theta + ts * (s.v / p.wheelbase) * std::tan(u.delta));
    next.v = p.v_bounds.clamp(s.v + ts * u.a);
    return next;
}

/// Number of integration steps in a propagation; rejects non-integer ratios.
inline int step_count(double tp, double ts)
{
    if (!(ts > 0.0) || !(tp > 0.0))
        throw std::invalid_argument("propagation and integration times must be positive");
    const double ratio = tp / ts;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("propagation time must be an integer multiple of the integration time");
    return static_cast<int>(rounded);
}

/// Applies `u` for tp seconds; returns every intermediate state, the last being the endpoint.
inline std::vector<VehicleState> propagate(const VehicleState& s, const ControlInput& u, double tp, double ts,
                                           const VehicleParams& p)
{
    const int n = step_count(tp, ts);
    std::vector<VehicleState> out;
    out.reserve(static_cast<std::size_t>(n));
    VehicleState cur = s;
    for (int i = 0; i < n; ++i)
    {
        cur = step(cur, u, ts, p);
        out.push_back(cur);
    }
    return out;
}

/// Replays the stored inputs of `traj` from its first sample with `tp`-long edges.
inline Trajectory replay(const Trajectory& traj, double tp, double ts, const VehicleParams& p)
{
    Trajectory out;
    if (traj.empty())
        return out;
    out.samples.push_back(traj.front());
    for (std::size_t i = 1; i < traj.size(); ++i)
    {
        const auto& src = traj.samples[i];
        if (!src.input)
            throw std::invalid_argument("trajectory sample lacks its generating input");
        const auto states = propagate(out.samples.back().state, *src.input, tp, ts, p);
        out.samples.push_back({states.back(), out.samples.back().t + tp, src.input});
    }
    return out;
}

/**
 * State reached by executing `traj`'s inputs until absolute time `t`.
 *
 * Integration restarts from the last sample at or before `t` with full
 * `ts` steps and one final partial step for the remainder. Times past the
 * end keep applying the last input. The simulator plant uses the same
 * routine, so executed and planned states agree exactly.
 */
inline VehicleState state_at(const Trajectory& traj, double t, double ts, const VehicleParams& p)
{
    if (traj.empty())
        throw std::invalid_argument("state_at on an empty trajectory");
    std::size_t k = 0;
    while (k + 1 < traj.size() && traj.samples[k + 1].t <= t)
        ++k;
    VehicleState cur = traj.samples[k].state;
    double remaining = t - traj.samples[k].t;
    if (remaining <= 0.0)
        return cur;
    std::optional<ControlInput> u;
    if (k + 1 < traj.size())
        u = traj.samples[k + 1].input;
    else
        u = traj.samples[k].input;
    const ControlInput input = u.value_or(ControlInput{});
    constexpr double kTimeEps = 1e-9;
    while (remaining > ts + kTimeEps)
    {
        cur = step(cur, input, ts, p);
        remaining -= ts;
    }
    if (remaining > kTimeEps)
        cur = step(cur, input, remaining, p);
    return cur;
}

} // namespace dkisst
