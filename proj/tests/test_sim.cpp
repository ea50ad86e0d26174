#include "dkisst/benchmark.hpp"
#include "dkisst/sim.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace dkisst;
using dkisst::testing::load_shipped;
using dkisst::testing::single_lane;

namespace
{

Scenario quick(const std::string& name, std::uint64_t iterations = 3000, double duration = 2.0)
{
    return load_shipped(name, {{"planner.budget", R"({"mode":"iterations","iterations":)" + std::to_string(iterations) + "}"},
                               {"sim.duration", std::to_string(duration)}});
}

// Tick whose planned trajectory is a single straight line at constant input.
TickRecord planned_tick(double t, double v, double a, double y = 0.0)
{
    TickRecord rec;
    rec.t = t;
    rec.ego = {0, y, 0, v};
    rec.planned.samples = {{{0, y, 0, v}, t, std::nullopt},
                           {{2, y, 0, v}, t + 0.4, ControlInput{a, 0.0}},
                           {{4, y, 0, v}, t + 0.8, ControlInput{a, 0.0}}};
    rec.executed = {{{1, y, 0, v}, t + 0.5, std::nullopt}};
    return rec;
}

SimLog hand_log(const std::vector<TickRecord>& ticks)
{
    SimLog log;
    log.start = {{0, 0, 0, 5}, 0.0, std::nullopt};
    log.ticks = ticks;
    log.final_state = {{10, 0, 0, 5}, 1.5, std::nullopt};
    return log;
}

Scenario bare_scenario()
{
    Scenario sc;
    sc.road = single_lane(-20.0, 200.0);
    sc.weights.v_desired = 5.0;
    return sc;
}

} // namespace

TEST(Execute, FollowsThePlannedEdgesAndStopsAtTheTickEnd)
{
    const VehicleParams p;
    Trajectory traj;
    traj.samples.push_back({{0, 0, 0, 5}, 0.0, std::nullopt});
    for (double a : {0.5, -0.5})
    {
        const auto end = propagate(traj.back().state, {a, 0.1}, 0.4, 0.04, p).back();
        traj.samples.push_back({end, traj.back().t + 0.4, ControlInput{a, 0.1}});
    }
    const auto ex = execute(traj, 0.5, 0.04, p);
    ASSERT_FALSE(ex.empty());
    EXPECT_NEAR(ex.back().t, 0.5, 1e-12);
    // the first edge is replayed exactly
    const auto at_edge = std::find_if(ex.begin(), ex.end(), [](const TimedState& s) { return std::abs(s.t - 0.4) < 1e-9; });
    ASSERT_NE(at_edge, ex.end());
    EXPECT_EQ(at_edge->state, traj.samples[1].state);
    // the remaining 0.1 s uses the second edge's input: two full steps and a 0.02 s partial step
    VehicleState cur = traj.samples[1].state;
    cur = step(cur, {-0.5, 0.1}, 0.04, p);
    cur = step(cur, {-0.5, 0.1}, 0.04, p);
    cur = step(cur, {-0.5, 0.1}, 0.02, p);
    EXPECT_NEAR(ex.back().state.x, cur.x, 1e-12);
    EXPECT_NEAR(ex.back().state.v, cur.v, 1e-12);
}

TEST(ClosedLoop, PlantReplaysTheCommandedInputs)
{
    const Scenario sc = quick("scenario_1_straight");
    const SimLog log = run_closed_loop(sc, PlannerMode::dki, 4);
    ASSERT_EQ(log.ticks.size(), 4u);
    for (std::size_t i = 0; i < log.ticks.size(); ++i)
    {
        const auto& tick = log.ticks[i];
        ASSERT_FALSE(tick.executed.empty());
        const auto replay = execute(tick.fallback ? Trajectory{{{tick.ego, tick.t, tick.command}}} : tick.planned,
                                    tick.t + log.tick_period, sc.planner.t_step, sc.vehicle);
        ASSERT_EQ(replay, tick.executed) << "tick " << i;
        if (i + 1 < log.ticks.size())
        {
            EXPECT_EQ(log.ticks[i + 1].ego, tick.executed.back().state);
            EXPECT_NEAR(log.ticks[i + 1].t, tick.t + log.tick_period, 1e-12);
        }
    }
    EXPECT_EQ(log.termination, Termination::duration);
}

TEST(ClosedLoop, DeterministicForFixedSeed)
{
    const Scenario sc = quick("scenario_2_static_vehicle");
    for (auto mode : {PlannerMode::base, PlannerMode::dki})
    {
        const SimLog a = run_closed_loop(sc, mode, 11);
        const SimLog b = run_closed_loop(sc, mode, 11);
        EXPECT_EQ(executed_csv(a), executed_csv(b));
        EXPECT_EQ(planned_csv(a), planned_csv(b));
    }
}

TEST(ClosedLoop, InitialCollisionEndsAtTickZero)
{
    const Scenario sc = load_shipped("initial_collision");
    const SimLog log = run_closed_loop(sc, PlannerMode::dki, 1);
    EXPECT_TRUE(log.ticks.empty());
    ASSERT_EQ(log.collisions.size(), 1u);
    EXPECT_EQ(log.collisions[0].t, 0.0);
    EXPECT_EQ(log.termination, Termination::collision);
}

TEST(ClosedLoop, UnreachableGoalFallsBackToBraking)
{
    // a wall spans the road 20 m ahead, so no plan reaches the goal window
    const Scenario sc = quick("unreachable_goal", 1000, 1.0);
    const SimLog log = run_closed_loop(sc, PlannerMode::base, 1);
    ASSERT_EQ(log.ticks.size(), 2u);
    for (const auto& tick : log.ticks)
    {
        EXPECT_TRUE(tick.fallback);
        EXPECT_EQ(tick.command.a, sc.vehicle.a_bounds.min);
        EXPECT_EQ(tick.command.delta, 0.0);
    }
    EXPECT_LT(log.final_state.state.v, sc.ego.v);
}

TEST(Metrics, HandBuiltLog)
{
    Scenario sc = bare_scenario();
    // two planned ticks: constant |a| = 0.13, speeds 5 and 6, lateral offsets 0 and 1
    const SimLog log = hand_log({planned_tick(0.0, 5.0, 0.13), planned_tick(0.5, 6.0, -0.13, 1.0)});
    const MetricsReport m = compute_metrics(log, sc);
    EXPECT_DOUBLE_EQ(m.mean_abs_acceleration, 0.13);
    EXPECT_DOUBLE_EQ(m.mean_speed_deviation, 0.5);
    EXPECT_DOUBLE_EQ(m.mean_lane_deviation, 0.5);
    EXPECT_EQ(m.fallback_ticks, 0u);
    EXPECT_EQ(m.ticks, 2u);
    EXPECT_DOUBLE_EQ(m.goal_progress, 10.0);
    EXPECT_TRUE(std::isinf(m.min_target_distance));
}

TEST(Metrics, PooledAndPerTrajectoryAveragingDiffer)
{
    Scenario sc = bare_scenario();
    TickRecord longer = planned_tick(0.5, 7.0, 0.0);
    longer.planned.samples.push_back({{6, 0, 0, 7}, 1.7, ControlInput{0.0, 0.0}});
    const SimLog log = hand_log({planned_tick(0.0, 5.0, 0.0), longer});
    // pooled: 4 samples of 2 over 7 samples; per trajectory: mean of 0 and 2
    sc.sim.averaging = Averaging::pooled;
    EXPECT_DOUBLE_EQ(compute_metrics(log, sc).mean_speed_deviation, 8.0 / 7.0);
    sc.sim.averaging = Averaging::per_trajectory;
    EXPECT_DOUBLE_EQ(compute_metrics(log, sc).mean_speed_deviation, 1.0);
}

TEST(Metrics, FallbackTicksAreSkippedAndDesiredSpeedGivesZero)
{
    Scenario sc = bare_scenario();
    TickRecord fb;
    fb.fallback = true;
    fb.executed = {{{0, 0, 0, 4}, 0.5, std::nullopt}};
    const SimLog log = hand_log({planned_tick(0.0, 5.0, 0.0), fb});
    const MetricsReport m = compute_metrics(log, sc);
    EXPECT_EQ(m.fallback_ticks, 1u);
    EXPECT_DOUBLE_EQ(m.mean_speed_deviation, 0.0);
    EXPECT_DOUBLE_EQ(m.mean_abs_acceleration, 0.0);
    const MetricsReport empty = compute_metrics(SimLog{}, sc);
    EXPECT_TRUE(std::isnan(empty.mean_speed_deviation));
    EXPECT_EQ(empty.ticks, 0u);
}

TEST(Metrics, MinimumDistanceUsesExecutedStatesAtTheirTimes)
{
    Scenario sc = bare_scenario();
    ObjectPrediction car;
    car.id = "car";
    car.poses = {{0.0, 20.0, 0.0, 0.0}, {1.0, 1.0, 3.0, 0.0}};
    sc.world.objects = {car};
    const SimLog log = hand_log({planned_tick(0.0, 5.0, 0.0)});
    // start (0,0) at t=0 sees the car at 20; executed (1,0) at t=0.5 sees it at (10.5, 1.5)
    EXPECT_DOUBLE_EQ(compute_metrics(log, sc).min_target_distance, std::hypot(9.5, 1.5));
}

TEST(Scenario, JsonRoundTrip)
{
    for (const char* name : {"scenario_1_straight", "scenario_3_roundabout", "scenario_5_pedestrian_brake"})
    {
        const Scenario sc = load_shipped(name);
        EXPECT_EQ(scenario_from_json(scenario_to_json(sc)), sc) << name;
    }
}

TEST(Scenario, DiagnosticsNameTheFieldPath)
{
    try
    {
        load_shipped("scenario_1_straight", {{"road.lanes.0.width", "-1"}});
        FAIL() << "negative width accepted";
    }
    catch (const ScenarioError& e)
    {
        EXPECT_NE(std::string(e.what()).find("road.lanes[0].width"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("scenario_1_straight.json"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_shipped("scenario_1_straight", {{"ego.state", "{}"}}), ScenarioError);
    EXPECT_THROW(load_shipped("scenario_1_straight", {{"road.lanes.9.width", "3"}}), ScenarioError);
}

TEST(Scenario, MinimalFileTakesDefaults)
{
    const json doc = json::parse(R"({
        "road": {"lanes": [{"id": "a", "centerline": [[0, 0], [100, 0]], "width": 3.5}], "route": ["a"]},
        "ego": {"state": {"x": 0, "y": 0}}
    })");
    const Scenario sc = scenario_from_json(doc);
    EXPECT_EQ(sc.planner, PlannerConfig{});
    EXPECT_EQ(sc.dki, DkiConfig{});
    EXPECT_EQ(sc.weights, CostWeights{});
    EXPECT_EQ(sc.vehicle, VehicleParams{});
    EXPECT_EQ(sc.sim, SimConfig{});
    EXPECT_TRUE(sc.world.objects.empty());
    EXPECT_EQ(sc.ego.v, 0.0);
}

TEST(Scenario, OverridesSetNestedFields)
{
    const Scenario sc = load_shipped("scenario_1_straight", {{"planner.d_prune", "0.15"}, {"name", "renamed"}});
    EXPECT_DOUBLE_EQ(sc.planner.d_prune, 0.15);
    EXPECT_EQ(sc.name, "renamed");
    json doc = json::object();
    EXPECT_THROW(apply_override(doc, "", "1"), ScenarioError);
}

TEST(Benchmark, GainPercent)
{
    EXPECT_DOUBLE_EQ(gain_percent(2.0, 2.0, false), 0.0);
    EXPECT_DOUBLE_EQ(gain_percent(2.0, 1.0, false), 50.0);
    EXPECT_DOUBLE_EQ(gain_percent(2.0, 3.0, true), 50.0);
    EXPECT_DOUBLE_EQ(gain_percent(2.0, 3.0, false), -50.0);
    EXPECT_TRUE(std::isnan(gain_percent(0.0, 1.0, false)));
}

TEST(Benchmark, CellsRecordFailuresAndSummaryHasFourRows)
{
    BenchmarkSpec spec;
    spec.scenarios = {dkisst::testing::scenario_path("scenario_1_straight").string(),
                      dkisst::testing::scenario_path("does_not_exist").string()};
    spec.seeds = {1};
    spec.modes = {PlannerMode::base, PlannerMode::dki};
    spec.budget = Budget::iters(500);
    const auto cells = run_benchmark(spec);
    ASSERT_EQ(cells.size(), 4u);
    std::size_t ok = 0;
    for (const auto& c : cells)
        ok += c.ok ? 1 : 0;
    EXPECT_EQ(ok, 2u);
    const std::string summary = summary_csv(cells);
    for (const auto& row : metric_rows())
        EXPECT_NE(summary.find(row.label), std::string::npos) << row.label;
}
