// Shared fixtures for the unit tests.
#pragma once

#include "dkisst/road.hpp"
#include "dkisst/scenario.hpp"
#include "dkisst/sim.hpp"

#include <filesystem>
#include <string>

namespace dkisst::testing
{

inline Lane straight_lane(const std::string& id, double y, double x0 = -20.0, double x1 = 220.0, double width = 3.5)
{
    return {id, {{x0, y}, {x1, y}}, width, {}};
}

inline RoadNetwork single_lane(double x0 = -20.0, double x1 = 220.0)
{
    return {{straight_lane("road", 0.0, x0, x1)}, {"road"}};
}

inline RoadNetwork two_lanes()
{
    return {{straight_lane("right", 0.0), straight_lane("left", 3.5)}, {"right"}};
}

inline std::filesystem::path scenario_path(const std::string& name)
{
    return std::filesystem::path(DKISST_SOURCE_DIR) / "scenarios" / (name + ".json");
}

inline Scenario load_shipped(const std::string& name, const std::vector<std::pair<std::string, std::string>>& sets = {})
{
    return load_scenario(scenario_path(name).string(), sets);
}

/// Scenario, grid, goal and problem built in place; the problem points into the other members.
struct Planning
{
    Scenario sc;
    PenaltyGrid grid;
    GoalRegion goal;
    PlanningProblem problem;

    explicit Planning(Scenario scenario, std::uint64_t seed = 1, std::uint64_t iterations = 5000)
        : sc(std::move(scenario)), grid(build_scenario_grid(sc)),
          goal(compute_goal_region(sc.road, sc.ego, sc.goal.distance, sc.goal.threshold)),
          problem(make_problem(sc, grid, sc.ego, goal, seed))
    {
        problem.config.budget = Budget::iters(iterations);
    }

    Planning(const Planning&) = delete;
    Planning& operator=(const Planning&) = delete;
};

/// Every t_step substate of every edge passes the validity check at its own timestamp.
inline bool trajectory_valid(const Trajectory& traj, const PlanningProblem& pr)
{
    const auto& c = pr.config;
    for (std::size_t i = 0; i < traj.size(); ++i)
    {
        const auto& smp = traj.samples[i];
        if (!is_state_valid(smp.state, smp.t, *pr.grid, *pr.world, c, pr.vehicle))
            return false;
        if (i == 0)
            continue;
        VehicleState cur = traj.samples[i - 1].state;
        const int n = step_count(smp.t - traj.samples[i - 1].t, c.t_step);
        for (int k = 1; k <= n; ++k)
        {
            cur = step(cur, smp.input.value_or(ControlInput{}), c.t_step, pr.vehicle);
            if (!is_state_valid(cur, traj.samples[i - 1].t + k * c.t_step, *pr.grid, *pr.world, c, pr.vehicle))
                return false;
        }
        if (distance(cur.position(), smp.state.position()) > 1e-9)
            return false;
    }
    return true;
}

} // namespace dkisst::testing
