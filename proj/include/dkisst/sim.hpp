#pragma once
/**
 * @file    sim.hpp
 * @brief   Closed-loop replanning simulation and its performance metrics.
 *
 * Each tick plans from the current ego state, executes the first 1/fq
 * seconds of the planned inputs on the same kinematic model and monitors
 * collisions at every integration substate. A failed query falls back to
 * full braking with straight wheels.
 */

#include "dkisst/cost.hpp"
#include "dkisst/dki.hpp"
#include "dkisst/road.hpp"
#include "dkisst/scenario.hpp"
#include "dkisst/sst.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dkisst
{

enum class PlannerMode
{
    base,
    dki
};

inline std::string to_string(PlannerMode m) { return m == PlannerMode::base ? "base" : "dki"; }

inline PlannerMode parse_mode(const std::string& s)
{
    if (s == "base")
        return PlannerMode::base;
    if (s == "dki")
        return PlannerMode::dki;
    throw std::invalid_argument("unknown planner mode '" + s + "' (expected base or dki)");
}

enum class Termination
{
    duration,
    route_complete,
    collision
};

inline std::string to_string(Termination t)
{
    switch (t)
    {
    case Termination::duration:
        return "duration";
    case Termination::route_complete:
        return "route_complete";
    case Termination::collision:
        return "collision";
    }
    return "unknown";
}

struct TickRecord
{
    double t = 0.0;
    VehicleState ego;
    bool solved = false;
    bool fallback = false;
    double cost = std::numeric_limits<double>::infinity();
    std::uint64_t iterations = 0;
    double wall_time = 0.0;
    TreeStats stats;
    ControlInput command;
    Trajectory planned;
    std::vector<TimedState> executed; // substates reached during the tick, excluding its start
};

struct CollisionEvent
{
    double t = 0.0;
    std::string object_id;
};

struct SimLog
{
    std::string scenario;
    PlannerMode mode = PlannerMode::dki;
    std::uint64_t seed = 0;
    double tick_period = 0.5;
    TimedState start;
    std::vector<TickRecord> ticks;
    std::vector<CollisionEvent> collisions;
    std::size_t lane_invalid_states = 0;
    Termination termination = Termination::duration;
    TimedState final_state;
};

/**
 * Substates obtained by running `traj`'s inputs from its first sample to
 * `t_end`, with the integration pattern of `state_at`: whole edges are
 * replayed step by step from their start sample, and the remainder uses
 * full steps plus one partial step.
 */
inline std::vector<TimedState> execute(const Trajectory& traj, double t_end, double ts, const VehicleParams& p)
{
    std::vector<TimedState> out;
    if (traj.empty())
        return out;
    constexpr double kTimeEps = 1e-9;
    std::size_t k = 0;
    while (k + 1 < traj.size() && traj.samples[k + 1].t <= t_end)
    {
        const auto& from = traj.samples[k];
        const auto& to = traj.samples[k + 1];
        const ControlInput u = to.input.value_or(ControlInput{});
        VehicleState cur = from.state;
        const int n = static_cast<int>(std::round((to.t - from.t) / ts));
        for (int i = 1; i < n; ++i)
        {
            cur = step(cur, u, ts, p);
            out.push_back({cur, from.t + i * ts, u});
        }
        out.push_back(to);
        ++k;
    }
    const auto& from = traj.samples[k];
    double remaining = t_end - from.t;
    if (remaining <= kTimeEps)
        return out;
    std::optional<ControlInput> u = k + 1 < traj.size() ? traj.samples[k + 1].input : traj.samples[k].input;
    const ControlInput input = u.value_or(ControlInput{});
    VehicleState cur = from.state;
    double t = from.t;
    while (remaining > ts + kTimeEps)
    {
        cur = step(cur, input, ts, p);
        remaining -= ts;
        t += ts;
        out.push_back({cur, t, input});
    }
    if (remaining > kTimeEps)
    {
        cur = step(cur, input, remaining, p);
        out.push_back({cur, t_end, input});
    }
    return out;
}

/// Sampling box around the ego and goal polygons.
inline StateBounds sampling_bounds(const VehicleState& ego, const GoalRegion& goal, const VehicleParams& vehicle,
                                   double margin)
{
    double x0 = ego.x, x1 = ego.x, y0 = ego.y, y1 = ego.y;
    for (const auto& poly : goal.polygons)
        for (const auto& v : poly.vertices())
        {
            x0 = std::min(x0, v.x);
            x1 = std::max(x1, v.x);
            y0 = std::min(y0, v.y);
            y1 = std::max(y1, v.y);
        }
    return {{x0 - margin, x1 + margin}, {y0 - margin, y1 + margin}, {-kPi, kPi}, vehicle.v_bounds};
}

/// Per-tick planner seed derived from the run seed.
inline std::uint64_t tick_seed(std::uint64_t seed, std::size_t tick)
{
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(tick) + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::optional<std::string> colliding_object(const VehicleState& s, double t, const Scenario& sc)
{
    const OrientedBox ego = footprint(s, sc.vehicle);
    for (const auto& obj : sc.world.objects)
        if (boxes_overlap(ego, object_box_at(obj, t)))
            return obj.id;
    return std::nullopt;
}

/// Planning problem for one query from `ego` towards `goal`; `grid` must outlive it.
inline PlanningProblem make_problem(const Scenario& sc, const PenaltyGrid& grid, const VehicleState& ego,
                                    const GoalRegion& goal, std::uint64_t rng_seed)
{
    PlanningProblem problem;
    problem.grid = &grid;
    problem.world = &sc.world;
    problem.vehicle = sc.vehicle;
    problem.weights = sc.weights;
    problem.goal = goal;
    problem.config = sc.planner;
    problem.config.bounds = sampling_bounds(ego, goal, sc.vehicle, sc.planner.bounds_margin);
    problem.config.rng_seed = rng_seed;
    return problem;
}

inline SimLog run_closed_loop(const Scenario& sc, PlannerMode mode, std::uint64_t seed, const PenaltyGrid& grid)
{
    SimLog log;
    log.scenario = sc.name;
    log.mode = mode;
    log.seed = seed;
    log.tick_period = 1.0 / sc.sim.update_rate;
    log.start = {sc.ego, 0.0, std::nullopt};

    VehicleState ego = sc.ego;
    double t = 0.0;
    std::optional<Trajectory> prev;

    if (auto hit = colliding_object(ego, t, sc))
    {
        log.collisions.push_back({t, *hit});
        log.termination = Termination::collision;
        log.final_state = log.start;
        return log;
    }

    const double dt = log.tick_period;
    const auto n_ticks = static_cast<std::size_t>(std::ceil(sc.sim.duration / dt - 1e-9));
    for (std::size_t tick = 0; tick < n_ticks; ++tick)
    {
        TickRecord rec;
        rec.t = t;
        rec.ego = ego;

        GoalRegion goal;
        try
        {
            goal = compute_goal_region(sc.road, ego, sc.goal.distance, sc.goal.threshold);
        }
        catch (const RouteExhausted&)
        {
            log.termination = Termination::route_complete;
            break;
        }

        const PlanningProblem problem = make_problem(sc, grid, ego, goal, tick_seed(seed, tick));

        PlanResult result;
        try
        {
            result = mode == PlannerMode::base
                         ? plan(ego, t, problem)
                         : plan_dki(ego, t, problem, sc.road, prev ? &*prev : nullptr, sc.dki);
        }
        catch (const std::invalid_argument&)
        {
            result = PlanResult{};
        }
        rec.solved = result.solved;
        rec.cost = result.cost;
        rec.iterations = result.iterations;
        rec.wall_time = result.wall_time;
        rec.stats = result.stats;

        if (result.solved && result.trajectory.size() >= 2)
        {
            rec.planned = result.trajectory;
            rec.command = result.trajectory.samples[1].input.value_or(ControlInput{});
            rec.executed = execute(result.trajectory, t + dt, sc.planner.t_step, sc.vehicle);
            prev = result.trajectory;
        }
        else
        {
            rec.fallback = true;
            rec.command = {sc.vehicle.a_bounds.min, 0.0};
            Trajectory hold;
            hold.samples = {{ego, t, rec.command}};
            rec.executed = execute(hold, t + dt, sc.planner.t_step, sc.vehicle);
            prev.reset();
        }

        bool collided = false;
        for (const auto& s : rec.executed)
        {
            if (!grid.lane_valid(s.state.x, s.state.y))
                ++log.lane_invalid_states;
            if (!collided)
                if (auto hit = colliding_object(s.state, s.t, sc))
                {
                    log.collisions.push_back({s.t, *hit});
                    collided = true;
                }
        }
        ego = rec.executed.empty() ? ego : rec.executed.back().state;
        t += dt;
        log.ticks.push_back(std::move(rec));
        if (collided)
        {
            log.termination = Termination::collision;
            break;
        }
    }
    log.final_state = {ego, t, std::nullopt};
    return log;
}

inline SimLog run_closed_loop(const Scenario& sc, PlannerMode mode, std::uint64_t seed)
{
    const PenaltyGrid grid = build_scenario_grid(sc);
    return run_closed_loop(sc, mode, seed, grid);
}

struct MetricsReport
{
    double mean_abs_acceleration = 0.0;
    double mean_speed_deviation = 0.0;
    double mean_lane_deviation = 0.0;
    double min_target_distance = std::numeric_limits<double>::infinity();
    std::size_t collisions = 0;
    double goal_progress = 0.0;
    std::size_t lane_invalid_states = 0;
    std::size_t fallback_ticks = 0;
    std::size_t ticks = 0;
};

namespace detail
{
struct MeanAccumulator
{
    double sum = 0.0;
    std::size_t n = 0;
    double sum_of_means = 0.0;
    std::size_t groups = 0;

    void add(double v)
    {
        sum += v;
        ++n;
    }
    void close_group(double group_sum, std::size_t group_n)
    {
        if (group_n == 0)
            return;
        sum_of_means += group_sum / static_cast<double>(group_n);
        ++groups;
    }
    [[nodiscard]] double value(Averaging a) const
    {
        if (a == Averaging::pooled)
            return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
        return groups ? sum_of_means / static_cast<double>(groups) : std::numeric_limits<double>::quiet_NaN();
    }
};
} // namespace detail

/**
 * Trajectory metrics over all planned trajectories of the log (fallback
 * ticks contribute none) plus safety metrics over the executed states.
 * Acceleration uses the commanded input of each edge; speed and lane
 * deviation use every planned sample. A log without planned ticks gives
 * NaN trajectory metrics.
 */
inline MetricsReport compute_metrics(const SimLog& log, const Scenario& sc)
{
    MetricsReport r;
    detail::MeanAccumulator acc, speed, lane;
    for (const auto& tick : log.ticks)
    {
        r.fallback_ticks += tick.fallback ? 1 : 0;
        if (tick.fallback)
            continue;
        double sa = 0.0, ss = 0.0, sl = 0.0;
        std::size_t na = 0, ns = 0;
        for (const auto& sample : tick.planned.samples)
        {
            if (sample.input)
            {
                const double a = std::abs(sample.input->a);
                acc.add(a);
                sa += a;
                ++na;
            }
            const double dv = std::abs(sample.state.v - sc.weights.v_desired);
            const double dl = nearest_lane_center(sc.road, sample.state.position()).distance;
            speed.add(dv);
            lane.add(dl);
            ss += dv;
            sl += dl;
            ++ns;
        }
        acc.close_group(sa, na);
        speed.close_group(ss, ns);
        lane.close_group(sl, ns);
    }
    r.mean_abs_acceleration = acc.value(sc.sim.averaging);
    r.mean_speed_deviation = speed.value(sc.sim.averaging);
    r.mean_lane_deviation = lane.value(sc.sim.averaging);

    auto track = [&](const TimedState& s) {
        for (const auto& obj : sc.world.objects)
        {
            const auto p = predicted_pose_at(obj, s.t);
            r.min_target_distance = std::min(r.min_target_distance, std::hypot(s.state.x - p.x, s.state.y - p.y));
        }
    };
    track(log.start);
    for (const auto& tick : log.ticks)
        for (const auto& s : tick.executed)
            track(s);

    r.collisions = log.collisions.size();
    r.lane_invalid_states = log.lane_invalid_states;
    r.ticks = log.ticks.size();
    const RoutePath route(sc.road);
    r.goal_progress = route.project(log.final_state.state.position()).s - route.project(log.start.state.position()).s;
    return r;
}

// ---------------------------------------------------------------------------
// Export

namespace detail
{
inline std::string num(double v)
{
    if (std::isnan(v) || std::isinf(v))
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json state_json(const TimedState& s)
{
    json j = {{"t", s.t}, {"x", s.state.x}, {"y", s.state.y}, {"theta", s.state.theta}, {"v", s.state.v}};
    if (s.input)
    {
        j["a"] = s.input->a;
        j["delta"] = s.input->delta;
    }
    return j;
}
} // namespace detail

/// Per-tick flat table: t, x, y, theta, v, a_cmd, delta_cmd, solved, cost, fallback.
inline std::string ticks_csv(const SimLog& log)
{
    using detail::num;
    std::ostringstream out;
    out << "t,x,y,theta,v,a_cmd,delta_cmd,solved,cost,fallback\n";
    for (const auto& r : log.ticks)
        out << num(r.t) << ',' << num(r.ego.x) << ',' << num(r.ego.y) << ',' << num(r.ego.theta) << ','
            << num(r.ego.v) << ',' << num(r.command.a) << ',' << num(r.command.delta) << ',' << (r.solved ? 1 : 0)
            << ',' << num(r.cost) << ',' << (r.fallback ? 1 : 0) << '\n';
    return out.str();
}

/// Executed ground track and speed profile at integration resolution.
inline std::string executed_csv(const SimLog& log)
{
    using detail::num;
    std::ostringstream out;
    out << "t,x,y,theta,v\n";
    auto row = [&](const TimedState& s) {
        out << num(s.t) << ',' << num(s.state.x) << ',' << num(s.state.y) << ',' << num(s.state.theta) << ','
            << num(s.state.v) << '\n';
    };
    row(log.start);
    for (const auto& tick : log.ticks)
        for (const auto& s : tick.executed)
            row(s);
    return out.str();
}

/// Planned trajectories of every tick in tidy form.
inline std::string planned_csv(const SimLog& log)
{
    using detail::num;
    std::ostringstream out;
    out << "tick,t,x,y,theta,v,a,delta\n";
    for (std::size_t i = 0; i < log.ticks.size(); ++i)
        for (const auto& s : log.ticks[i].planned.samples)
            out << i << ',' << num(s.t) << ',' << num(s.state.x) << ',' << num(s.state.y) << ','
                << num(s.state.theta) << ',' << num(s.state.v) << ',' << (s.input ? num(s.input->a) : "") << ','
                << (s.input ? num(s.input->delta) : "") << '\n';
    return out.str();
}

inline std::string trajectory_csv(const Trajectory& traj)
{
    using detail::num;
    std::ostringstream out;
    out << "t,x,y,theta,v,a,delta\n";
    for (const auto& s : traj.samples)
        out << num(s.t) << ',' << num(s.state.x) << ',' << num(s.state.y) << ',' << num(s.state.theta) << ','
            << num(s.state.v) << ',' << (s.input ? num(s.input->a) : "") << ','
            << (s.input ? num(s.input->delta) : "") << '\n';
    return out.str();
}

inline json log_json(const SimLog& log)
{
    json ticks = json::array();
    for (const auto& r : log.ticks)
    {
        json planned = json::array();
        for (const auto& s : r.planned.samples)
            planned.push_back(detail::state_json(s));
        ticks.push_back({{"t", r.t},
                         {"ego", detail::state_json({r.ego, r.t, std::nullopt})},
                         {"solved", r.solved},
                         {"fallback", r.fallback},
                         {"cost", detail::num_json(r.cost)},
                         {"iterations", r.iterations},
                         {"tree", {{"nodes", r.stats.nodes}, {"active", r.stats.active}, {"witnesses", r.stats.witnesses}}},
                         {"command", {{"a", r.command.a}, {"delta", r.command.delta}}},
                         {"planned", planned}});
    }
    json collisions = json::array();
    for (const auto& c : log.collisions)
        collisions.push_back({{"t", c.t}, {"object", c.object_id}});
    return {{"scenario", log.scenario},
            {"mode", to_string(log.mode)},
            {"seed", log.seed},
            {"tick_period", log.tick_period},
            {"termination", to_string(log.termination)},
            {"lane_invalid_states", log.lane_invalid_states},
            {"collisions", collisions},
            {"final", detail::state_json(log.final_state)},
            {"ticks", ticks}};
}

inline json metrics_json(const MetricsReport& m)
{
    return {{"mean_abs_acceleration", detail::num_json(m.mean_abs_acceleration)},
            {"mean_speed_deviation", detail::num_json(m.mean_speed_deviation)},
            {"mean_lane_deviation", detail::num_json(m.mean_lane_deviation)},
            {"min_target_distance", detail::num_json(m.min_target_distance)},
            {"collisions", m.collisions},
            {"goal_progress", m.goal_progress},
            {"lane_invalid_states", m.lane_invalid_states},
            {"fallback_ticks", m.fallback_ticks},
            {"ticks", m.ticks}};
}

} // namespace dkisst
