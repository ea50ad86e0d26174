#include "dkisst/vehicle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dkisst;

namespace
{

const VehicleParams kCar{};

void expect_state_near(const VehicleState& a, const VehicleState& b, double tol)
{
    EXPECT_NEAR(a.x, b.x, tol);
    EXPECT_NEAR(a.y, b.y, tol);
    EXPECT_NEAR(a.theta, b.theta, tol);
    EXPECT_NEAR(a.v, b.v, tol);
}

// Independent integration of the bicycle model, written out per component.
VehicleState euler_oracle(VehicleState s, double a, double delta, double duration, int steps, double wheelbase)
{
    const double h = duration / steps;
    double x = s.x, y = s.y, th = s.theta, v = s.v;
    for (int i = 0; i < steps; ++i)
    {
        const double nx = x + h * v * std::cos(th);
        const double ny = y + h * v * std::sin(th);
        const double nth = th + h * v / wheelbase * std::tan(delta);
        const double nv = v + h * a;
        x = nx;
        y = ny;
        th = nth;
        v = nv;
    }
    return {x, y, th, v};
}

} // namespace

TEST(Step, StraightConstantSpeed)
{
    expect_state_near(step({0, 0, 0, 5}, {0, 0}, 0.04, kCar), {0.2, 0, 0, 5}, 1e-12);
}

TEST(Step, RotatedHeading)
{
    expect_state_near(step({0, 0, kPi / 2, 5}, {0, 0}, 0.04, kCar), {0, 0.2, kPi / 2, 5}, 1e-12);
}

TEST(Step, Acceleration)
{
    expect_state_near(step({0, 0, 0, 5}, {0.8, 0}, 0.04, kCar), {0.2, 0, 0, 5.032}, 1e-12);
}

TEST(Step, SpeedIsClampedToBounds)
{
    EXPECT_DOUBLE_EQ(step({0, 0, 0, 5.99}, {0.8, 0}, 0.04, kCar).v, 6.0);
    EXPECT_DOUBLE_EQ(step({0, 0, 0, 0.01}, {-0.8, 0}, 0.04, kCar).v, 0.0);
}

TEST(Step, HeadingStaysNormalized)
{
    const VehicleState s = step({0, 0, kPi - 1e-3, 6}, {0, 0.4}, 0.04, kCar);
    EXPECT_GT(s.theta, -kPi);
    EXPECT_LE(s.theta, kPi);
    EXPECT_LT(s.theta, 0.0); // wrapped past pi
}

TEST(StepCount, RejectsNonIntegerRatios)
{
    EXPECT_EQ(step_count(0.4, 0.04), 10);
    EXPECT_EQ(step_count(0.04, 0.04), 1);
    EXPECT_THROW(step_count(0.5, 0.04), std::invalid_argument);
    EXPECT_THROW(step_count(0.02, 0.04), std::invalid_argument);
    EXPECT_THROW(step_count(0.4, 0.0), std::invalid_argument);
}

TEST(Propagate, StraightLineTenSteps)
{
    const auto states = propagate({0, 0, 0, 5}, {0, 0}, 0.4, 0.04, kCar);
    ASSERT_EQ(states.size(), 10u);
    expect_state_near(states.back(), {2.0, 0, 0, 5}, 1e-12);
}

TEST(Propagate, SingleStepEqualsStep)
{
    const VehicleState s{1, 2, 0.3, 4};
    const ControlInput u{0.5, -0.2};
    const auto states = propagate(s, u, 0.04, 0.04, kCar);
    ASSERT_EQ(states.size(), 1u);
    EXPECT_EQ(states[0], step(s, u, 0.04, kCar));
}

TEST(Propagate, TurningMatchesEulerOracle)
{
    const auto states = propagate({0, 0, 0, 5}, {0, 0.4}, 0.4, 0.04, kCar);
    ASSERT_EQ(states.size(), 10u);
    expect_state_near(states.back(), euler_oracle({0, 0, 0, 5}, 0, 0.4, 0.4, 10, 2.7), 1e-12);
    double prev = 0.0;
    for (const auto& s : states)
    {
        EXPECT_GT(s.theta, prev);
        prev = s.theta;
    }
}

TEST(Propagate, ZeroInputKeepsHeadingAndSpeed)
{
    for (const auto& s : propagate({3, -1, 1.1, 4.2}, {0, 0}, 0.4, 0.04, kCar))
    {
        EXPECT_EQ(s.theta, 1.1);
        EXPECT_EQ(s.v, 4.2);
    }
}

TEST(Propagate, SpeedAlwaysWithinBounds)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a(-0.8, 0.8), d(-0.4, 0.4), v(0.0, 6.0);
    for (int i = 0; i < 2000; ++i)
        for (const auto& s : propagate({0, 0, 0, v(rng)}, {a(rng), d(rng)}, 0.4, 0.04, kCar))
            ASSERT_TRUE(kCar.v_bounds.contains(s.v));
}

TEST(Propagate, FirstOrderConsistency)
{
    for (double delta : {-0.4, -0.2, 0.0, 0.2, 0.4})
    {
        const auto coarse = propagate({0, 0, 0, 5}, {0.3, delta}, 0.4, 0.04, kCar).back();
        const auto fine = propagate({0, 0, 0, 5}, {0.3, delta}, 0.4, 0.02, kCar).back();
        EXPECT_LT(distance(coarse.position(), fine.position()), 0.05) << delta;
    }
}

TEST(Replay, ReproducesStatesBitExactly)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> a(-0.8, 0.8), d(-0.4, 0.4);
    Trajectory traj;
    traj.samples.push_back({{0, 0, 0, 5}, 0.0, std::nullopt});
    for (int i = 0; i < 25; ++i)
    {
        const ControlInput u{a(rng), d(rng)};
        const auto end = propagate(traj.back().state, u, 0.4, 0.04, kCar).back();
        traj.samples.push_back({end, traj.back().t + 0.4, u});
    }
    EXPECT_EQ(replay(traj, 0.4, 0.04, kCar), traj);
}

TEST(StateAt, SamplesAndPartialSteps)
{
    Trajectory traj;
    traj.samples.push_back({{0, 0, 0, 5}, 0.0, std::nullopt});
    const ControlInput u{0.5, 0.1};
    traj.samples.push_back({propagate({0, 0, 0, 5}, u, 0.4, 0.04, kCar).back(), 0.4, u});

    EXPECT_EQ(state_at(traj, 0.0, 0.04, kCar), traj.front().state);
    EXPECT_EQ(state_at(traj, 0.4, 0.04, kCar), traj.back().state);
    expect_state_near(state_at(traj, 0.12, 0.04, kCar), propagate({0, 0, 0, 5}, u, 0.12, 0.04, kCar).back(), 1e-12);

    // 0.5 s past a 0.4 s sample: 2 full steps and a 0.02 s remainder
    VehicleState manual = traj.back().state;
    manual = step(manual, u, 0.04, kCar);
    manual = step(manual, u, 0.04, kCar);
    manual = step(manual, u, 0.02, kCar);
    expect_state_near(state_at(traj, 0.5, 0.04, kCar), manual, 1e-12);
    EXPECT_THROW(state_at(Trajectory{}, 0.0, 0.04, kCar), std::invalid_argument);
}

TEST(VehicleParams, Validation)
{
    EXPECT_NO_THROW(kCar.validate());
    VehicleParams p;
    p.v_bounds = {-1.0, 6.0};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.wheelbase = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    EXPECT_TRUE(kCar.admits({0.8, -0.4}));
    EXPECT_FALSE(kCar.admits({0.81, 0.0}));
}
