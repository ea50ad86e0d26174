#pragma once
/**
 * @file    cost.hpp
 * @brief   Multi-objective motion cost: path length per edge plus the
 *          speed, lane-penalty and clearance state costs integrated over
 *          time with the trapezoid rule.
 */

#include "dkisst/objects.hpp"
#include "dkisst/road.hpp"
#include "dkisst/vehicle.hpp"

#include <stdexcept>

namespace dkisst
{

struct CostWeights
{
    double w_pl = 0.05; // path length
    double w_dv = 0.5;  // desired velocity
    double w_pg = 0.2;  // penalty grid
    double w_tc = 2.0;  // target clearance
    double v_desired = 5.0;

    void validate(const Interval& v_bounds) const
    {
        if (w_pl < 0.0 || w_dv < 0.0 || w_pg < 0.0 || w_tc < 0.0)
            throw std::invalid_argument("cost weights must be non-negative");
        if (!v_bounds.contains(v_desired))
            throw std::invalid_argument("desired velocity outside the velocity bounds");
    }

    friend bool operator==(const CostWeights&, const CostWeights&) = default;
};

struct StateCostComponents
{
    double dv = 0.0;
    double pg = 0.0;
    double tc = 0.0;
};

inline StateCostComponents state_cost_components(const VehicleState& s, double t, const PenaltyGrid& grid,
                                                 const WorldModel& world, const CostWeights& w)
{
    return {std::abs(s.v - w.v_desired), grid.lookup(s.x, s.y), clearance_cost(s, t, world)};
}

inline double weighted_state_cost(const VehicleState& s, double t, const PenaltyGrid& grid, const WorldModel& world,
                                  const CostWeights& w)
{
    const auto c = state_cost_components(s, t, grid, world, w);
    return w.w_dv * c.dv + w.w_pg * c.pg + w.w_tc * c.tc;
}

/// Edge cost from its geometric length, duration and endpoint state costs.
inline double edge_cost(double length, double dt, double state_cost_from, double state_cost_to, const CostWeights& w)
{
    return w.w_pl * length + dt * (state_cost_from + state_cost_to) / 2.0;
}

inline double motion_cost(const TimedState& from, const TimedState& to, const PenaltyGrid& grid,
                          const WorldModel& world, const CostWeights& w)
{
    if (!(to.t > from.t))
        throw std::invalid_argument("motion_cost: timestamps must increase along an edge");
    return edge_cost(distance(from.state.position(), to.state.position()), to.t - from.t,
                     weighted_state_cost(from.state, from.t, grid, world, w),
                     weighted_state_cost(to.state, to.t, grid, world, w), w);
}

inline double trajectory_cost(const Trajectory& traj, const PenaltyGrid& grid, const WorldModel& world,
                              const CostWeights& w)
{
    double total = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i)
        total += motion_cost(traj.samples[i - 1], traj.samples[i], grid, world, w);
    return total;
}

} // namespace dkisst
