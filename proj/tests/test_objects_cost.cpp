#include "dkisst/cost.hpp"
#include "dkisst/objects.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dkisst;

namespace
{

ObjectPrediction object_at(const std::string& id, double x, double y, double t_end = 0.0, double x_end = 0.0)
{
    ObjectPrediction o;
    o.id = id;
    o.poses.push_back({0.0, x, y, 0.0});
    if (t_end > 0.0)
        o.poses.push_back({t_end, x_end, y, 0.0});
    return o;
}

PenaltyGrid flat_grid()
{
    const RoadNetwork net = dkisst::testing::single_lane(-20.0, 220.0);
    return build_penalty_grid(net, road_bounds(net, 10.0, 0.25), 0.25, 100.0);
}

// Constant-speed run along the lane center, one sample per 0.4 s edge.
Trajectory straight_traj(int edges, double v)
{
    Trajectory t;
    t.samples.push_back({{0.125, 0.125, 0.0, v}, 0.0, std::nullopt});
    for (int i = 1; i <= edges; ++i)
        t.samples.push_back({{0.125 + v * 0.4 * i, 0.125, 0.0, v}, 0.4 * i, ControlInput{}});
    return t;
}

} // namespace

TEST(PredictedPose, InterpolationAndClamping)
{
    const ObjectPrediction o = object_at("o", 0.0, 0.0, 1.0, 2.0);
    const auto mid = predicted_pose_at(o, 0.5);
    EXPECT_DOUBLE_EQ(mid.x, 1.0);
    EXPECT_DOUBLE_EQ(mid.y, 0.0);
    EXPECT_DOUBLE_EQ(mid.theta, 0.0);
    EXPECT_DOUBLE_EQ(predicted_pose_at(o, -1.0).x, 0.0);
    EXPECT_DOUBLE_EQ(predicted_pose_at(o, 5.0).x, 2.0);
}

TEST(PredictedPose, SampleTimesReturnSamplesExactly)
{
    ObjectPrediction o;
    o.id = "walker";
    o.poses = {{0.0, 1.0, 2.0, 0.3}, {0.7, 1.3, 2.9, 0.4}, {2.1, -4.0, 0.1, -3.0}};
    for (const auto& p : o.poses)
    {
        const auto q = predicted_pose_at(o, p.t);
        EXPECT_EQ(q.x, p.x);
        EXPECT_EQ(q.y, p.y);
        EXPECT_EQ(q.theta, p.theta);
    }
}

TEST(PredictedPose, HeadingTakesShortArc)
{
    ObjectPrediction o;
    o.id = "o";
    o.poses = {{0.0, 0, 0, kPi - 0.1}, {1.0, 0, 0, -kPi + 0.1}};
    EXPECT_NEAR(std::abs(predicted_pose_at(o, 0.5).theta), kPi, 1e-12);
}

TEST(ObjectPrediction, Validation)
{
    ObjectPrediction o = object_at("o", 0, 0, 1.0, 1.0);
    EXPECT_NO_THROW(o.validate());
    o.poses[1].t = 0.0;
    EXPECT_THROW(o.validate(), std::invalid_argument);
    o = object_at("o", 0, 0);
    o.field.sigma_x = 0.0;
    EXPECT_THROW(o.validate(), std::invalid_argument);
    o = object_at("o", 0, 0);
    o.poses.clear();
    EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(ClearanceCost, SpotValues)
{
    const WorldModel world{{object_at("o", 10.0, 2.0)}};
    EXPECT_DOUBLE_EQ(clearance_cost({10.0, 2.0, 0.0, 5.0}, 0.0, world), 100.0);
    EXPECT_NEAR(clearance_cost({10.0 + std::sqrt(3.0), 2.0, 0.0, 5.0}, 0.0, world), 100.0 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(clearance_cost({10.0, 2.0 + std::sqrt(2.0), 0.0, 5.0}, 0.0, world), 100.0 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(100.0 * std::exp(-1.0), 36.788, 1e-3);
    EXPECT_DOUBLE_EQ(clearance_cost({0, 0, 0, 0}, 0.0, WorldModel{}), 0.0);
}

TEST(ClearanceCost, FollowsThePredictedPose)
{
    const WorldModel world{{object_at("o", 0.0, 0.0, 10.0, 20.0)}};
    EXPECT_DOUBLE_EQ(clearance_cost({10.0, 0.0, 0.0, 5.0}, 5.0, world), 100.0);
    EXPECT_LT(clearance_cost({10.0, 0.0, 0.0, 5.0}, 0.0, world), 1e-6);
}

TEST(ClearanceCost, BoundedMonotoneAndAdditive)
{
    const ObjectPrediction a = object_at("a", 3.0, -1.0);
    ObjectPrediction b = object_at("b", -2.0, 4.0, 3.0, 6.0);
    b.field = {60.0, 1.5, 4.0};
    const WorldModel both{{a, b}}, only_a{{a}}, only_b{{b}};

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> c(-10.0, 10.0), t(0.0, 4.0);
    for (int i = 0; i < 2000; ++i)
    {
        const VehicleState s{c(rng), c(rng), 0.0, 5.0};
        const double tt = t(rng);
        const double total = clearance_cost(s, tt, both);
        ASSERT_GE(total, 0.0);
        ASSERT_LE(total, 160.0);
        ASSERT_NEAR(total, clearance_cost(s, tt, only_a) + clearance_cost(s, tt, only_b), 1e-12);
    }
    double prev = clearance_cost({3.0, -1.0, 0, 0}, 0.0, only_a);
    for (double dx = 0.1; dx < 6.0; dx += 0.1)
    {
        const double cur = clearance_cost({3.0 + dx, -1.0, 0, 0}, 0.0, only_a);
        ASSERT_LT(cur, prev);
        ASSERT_NEAR(cur, clearance_cost({3.0 - dx, -1.0, 0, 0}, 0.0, only_a), 1e-12);
        prev = cur;
    }
    prev = clearance_cost({3.0, -1.0, 0, 0}, 0.0, only_a);
    for (double dy = 0.1; dy < 4.0; dy += 0.1)
    {
        const double cur = clearance_cost({3.0, -1.0 + dy, 0, 0}, 0.0, only_a);
        ASSERT_LT(cur, prev);
        prev = cur;
    }
}

TEST(StateCost, Components)
{
    const PenaltyGrid grid = flat_grid();
    const CostWeights w;
    const auto zero = state_cost_components({0.125, 0.125, 0.0, 5.0}, 0.0, grid, WorldModel{}, w);
    EXPECT_DOUBLE_EQ(zero.dv, 0.0);
    EXPECT_NEAR(zero.pg, lane_penalty(0.125, 3.5, 100.0), 1e-12);
    EXPECT_DOUBLE_EQ(zero.tc, 0.0);
    EXPECT_NEAR(state_cost_components({0.125, 0.125, 0.0, 3.48}, 0.0, grid, WorldModel{}, w).dv, 1.52, 1e-12);
    // cell center 0.875 = w/4 from the centerline
    EXPECT_NEAR(state_cost_components({0.1, 0.9, 0.0, 5.0}, 0.0, grid, WorldModel{}, w).pg, 50.0, 1e-12);
}

TEST(MotionCost, Examples)
{
    EXPECT_DOUBLE_EQ(edge_cost(5.0, 0.4, 0.0, 0.0, CostWeights{}), 0.25);
    EXPECT_DOUBLE_EQ(edge_cost(0.0, 0.4, 2.0, 4.0, CostWeights{}), 1.2);
    EXPECT_DOUBLE_EQ(edge_cost(0.0, 0.4, 0.0, 0.0, CostWeights{}), 0.0);

    // same examples through the full evaluation, with all state terms zeroed by the weights
    const PenaltyGrid grid = flat_grid();
    const CostWeights path_only{0.05, 0.0, 0.0, 0.0, 5.0};
    EXPECT_DOUBLE_EQ(motion_cost({{0, 0, 0, 5}, 0.0, {}}, {{3, 4, 0, 5}, 0.4, {}}, grid, WorldModel{}, path_only), 0.25);
    const CostWeights speed_only{0.0, 1.0, 0.0, 0.0, 5.0};
    EXPECT_DOUBLE_EQ(motion_cost({{0, 0, 0, 3}, 0.0, {}}, {{0, 0, 0, 1}, 0.4, {}}, grid, WorldModel{}, speed_only), 1.2);
}

TEST(MotionCost, RejectsNonIncreasingTime)
{
    const PenaltyGrid grid = flat_grid();
    EXPECT_THROW(motion_cost({{0, 0, 0, 5}, 1.0, {}}, {{1, 0, 0, 5}, 1.0, {}}, grid, WorldModel{}, CostWeights{}),
                 std::invalid_argument);
    EXPECT_THROW(motion_cost({{0, 0, 0, 5}, 1.0, {}}, {{1, 0, 0, 5}, 0.5, {}}, grid, WorldModel{}, CostWeights{}),
                 std::invalid_argument);
}

TEST(MotionCost, ConstantStateCostIntegratesExactly)
{
    const PenaltyGrid grid = flat_grid();
    const CostWeights speed_only{0.0, 0.5, 0.0, 0.0, 5.0};
    EXPECT_DOUBLE_EQ(motion_cost({{0, 0, 0, 3}, 0.0, {}}, {{2, 0, 0, 3}, 0.4, {}}, grid, WorldModel{}, speed_only),
                     0.4 * 0.5 * 2.0);
}

TEST(TrajectoryCost, SumsEdgesAndConcatenates)
{
    const PenaltyGrid grid = flat_grid();
    const WorldModel world{{object_at("o", 6.0, 1.0, 3.0, 8.0)}};
    const CostWeights w;
    Trajectory single;
    single.samples.push_back({{0, 0, 0, 5}, 0.0, std::nullopt});
    EXPECT_DOUBLE_EQ(trajectory_cost(single, grid, world, w), 0.0);

    const Trajectory full = straight_traj(6, 4.0);
    double sum = 0.0;
    for (std::size_t i = 1; i < full.size(); ++i)
        sum += motion_cost(full.samples[i - 1], full.samples[i], grid, world, w);
    EXPECT_NEAR(trajectory_cost(full, grid, world, w), sum, 1e-12);

    Trajectory a, b;
    a.samples.assign(full.samples.begin(), full.samples.begin() + 4);
    b.samples.assign(full.samples.begin() + 3, full.samples.end());
    EXPECT_NEAR(trajectory_cost(full, grid, world, w),
                trajectory_cost(a, grid, world, w) + trajectory_cost(b, grid, world, w), 1e-12);
}

TEST(TrajectoryCost, ScalesWithWeightsAndIgnoresObjectsWithoutClearanceWeight)
{
    const PenaltyGrid grid = flat_grid();
    const WorldModel world{{object_at("o", 6.0, 1.0, 3.0, 8.0)}};
    const CostWeights w;
    CostWeights scaled{3 * w.w_pl, 3 * w.w_dv, 3 * w.w_pg, 3 * w.w_tc, w.v_desired};
    const Trajectory t = straight_traj(6, 4.0);
    EXPECT_NEAR(trajectory_cost(t, grid, world, scaled), 3.0 * trajectory_cost(t, grid, world, w), 1e-9);

    CostWeights no_tc = w;
    no_tc.w_tc = 0.0;
    EXPECT_DOUBLE_EQ(trajectory_cost(t, grid, world, no_tc), trajectory_cost(t, grid, WorldModel{}, no_tc));
    EXPECT_GT(trajectory_cost(t, grid, world, w), trajectory_cost(t, grid, WorldModel{}, w));
}

TEST(CostWeights, Validation)
{
    EXPECT_NO_THROW(CostWeights{}.validate({0.0, 6.0}));
    EXPECT_THROW((CostWeights{-0.1, 0.5, 0.2, 2.0, 5.0}.validate({0.0, 6.0})), std::invalid_argument);
    EXPECT_THROW((CostWeights{0.05, 0.5, 0.2, 2.0, 7.0}.validate({0.0, 6.0})), std::invalid_argument);
}
