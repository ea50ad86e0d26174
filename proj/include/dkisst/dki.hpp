#pragma once
/**
 * @file    dki.hpp
 * @brief   Domain-knowledge seeding of the SST tree: a branch that follows
 *          the route's lane center and a branch re-growing the previous
 *          query's solution. Both are inserted through the regular
 *          propagate / validate / witness-insert path before the sampling
 *          loop takes over the remaining budget.
 */

#include "dkisst/road.hpp"
#include "dkisst/sst.hpp"
#include "dkisst/vehicle.hpp"

#include <limits>
#include <optional>
#include <stdexcept>

namespace dkisst
{

struct DkiConfig
{
    double d_lookahead = 3.0;     // lane-center target distance ahead of the branch tip [m]
    double d_branch_max = 40.0;   // lane branch length cap [m]
    std::size_t n_candidates = 100;
    double d_reuse = 1.0;         // max planner-metric distance from root to the previous solution

    void validate() const
    {
        if (!(d_lookahead > 0.0) || d_branch_max < 0.0 || n_candidates == 0 || !(d_reuse > 0.0))
            throw std::invalid_argument("dki parameters must be positive");
    }

    friend bool operator==(const DkiConfig&, const DkiConfig&) = default;
};

/**
 * Road-layout branch: from the current tip, aim at the route centerline
 * point d_lookahead ahead of the tip's projection and keep the valid
 * candidate closest to the lane state there (route point, route heading,
 * desired speed) in the planner metric, then repeat from it. When a cheaper
 * node already represents the chosen endpoint the branch continues from that
 * node. Stops on reaching the goal, when no candidate is valid, when the
 * route runs out, or once the branch is d_branch_max long.
 */
inline std::size_t seed_lane_branch(SstQuery& query, const RoadNetwork& net, const DkiConfig& dki)
{
    const auto& problem = query.problem();
    const RoutePath route(net);
    NodeId tip = query.root();
    double branch_length = 0.0;
    std::size_t added = 0;
    while (branch_length < dki.d_branch_max && !query.budget_exhausted())
    {
        const TreeNode& tip_node = query.tree().node(tip);
        if (in_goal(problem.goal, tip_node.sample.state))
            break;
        const double s_target = route.project(tip_node.sample.state.position()).s + dki.d_lookahead;
        if (s_target > route.length())
            break;
        const Point2 p = route.point_at(s_target);
        const VehicleState target{p.x, p.y, route.heading_at(s_target), problem.weights.v_desired};

        std::optional<Extension> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < dki.n_candidates && !query.budget_exhausted(); ++i)
        {
            const ControlInput u = sample_input(problem.config, query.rng(), problem.vehicle);
            auto ext = query.extend(tip, u);
            if (!ext)
                continue;
            const double d = planner_metric(ext->endpoint, target, query.tree().scales());
            if (d < best_d)
            {
                best_d = d;
                best = ext;
            }
        }
        if (!best)
            break;
        const Point2 from = query.tree().node(tip).sample.state.position();
        branch_length += distance(from, best->endpoint.position());
        if (auto id = query.insert(tip, *best))
        {
            tip = *id;
            ++added;
            continue;
        }
        // A cheaper node already represents this region: carry on from it.
        const auto rep = query.tree().representative_near(best->endpoint);
        if (!rep || *rep == tip)
            break;
        tip = *rep;
    }
    return added;
}

/// Previous solution resampled at the integration step, with the input applied from each state.
struct DenseSample
{
    VehicleState state;
    ControlInput input;
};

inline std::vector<DenseSample> densify(const Trajectory& traj, double tp, double ts, const VehicleParams& p)
{
    std::vector<DenseSample> out;
    if (traj.size() < 2)
        return out;
    for (std::size_t i = 1; i < traj.size(); ++i)
    {
        const ControlInput u = traj.samples[i].input.value_or(ControlInput{});
        VehicleState cur = traj.samples[i - 1].state;
        const int n = step_count(tp, ts);
        for (int k = 0; k < n; ++k)
        {
            out.push_back({cur, u});
            cur = step(cur, u, ts, p);
        }
    }
    out.push_back({traj.back().state, traj.back().input.value_or(ControlInput{})});
    return out;
}

/**
 * Previous-solution branch. Finds the densified sample of `prev` nearest to
 * the root; if it is within d_reuse, re-grows the remainder of `prev` from
 * the root one edge at a time with the stored inputs, re-timestamped from
 * the query start. Stops at the first edge with an invalid substate.
 */
inline std::size_t seed_previous_branch(SstQuery& query, const Trajectory& prev, const DkiConfig& dki)
{
    const auto& problem = query.problem();
    const auto& c = problem.config;
    const auto dense = densify(prev, c.t_prop, c.t_step, problem.vehicle);
    if (dense.empty())
        return 0;
    const VehicleState root = query.tree().node(query.root()).sample.state;
    std::size_t start = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dense.size(); ++i)
    {
        const double d = planner_metric(dense[i].state, root, query.tree().scales());
        if (d < best_d)
        {
            best_d = d;
            start = i;
        }
    }
    if (best_d > dki.d_reuse)
        return 0;

    const auto per_edge = static_cast<std::size_t>(query.steps_per_edge());
    NodeId tip = query.root();
    std::size_t added = 0;
    for (std::size_t j = start; j + per_edge < dense.size(); j += per_edge)
    {
        if (query.budget_exhausted())
            break;
        auto ext = query.extend(tip, dense[j].input);
        if (!ext)
            break;
        auto id = query.insert(tip, *ext);
        if (!id)
            break;
        tip = *id;
        ++added;
    }
    return added;
}

/// Seeds both branches, previous solution first.
inline void seed_dki(SstQuery& query, const RoadNetwork& net, const Trajectory* prev, const DkiConfig& dki)
{
    dki.validate();
    if (prev && !prev->empty())
        seed_previous_branch(query, *prev, dki);
    seed_lane_branch(query, net, dki);
}

/// DKI-SST query: seeding branches, then the base loop on the remaining budget.
inline PlanResult plan_dki(const VehicleState& start, double start_time, const PlanningProblem& problem,
                           const RoadNetwork& net, const Trajectory* prev, const DkiConfig& dki)
{
    SstQuery query(problem, start, start_time);
    seed_dki(query, net, prev, dki);
    query.run();
    return query.result();
}

} // namespace dkisst
