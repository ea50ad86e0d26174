#pragma once
/**
 * @file    sst.hpp
 * @brief   Stable Sparse RRT over the kinematic bicycle model.
 *
 * The planner grows a tree by BestNear selection, Gaussian input sampling
 * and fixed-duration propagation. Every integration substate is validated
 * at its own timestamp (state bounds, lane penalty, predicted object
 * footprints). Witnesses keep one active representative per d_prune ball;
 * displaced representatives turn inactive and inactive leaves are removed.
 */

#include "dkisst/cost.hpp"
#include "dkisst/geometry.hpp"
#include "dkisst/objects.hpp"
#include "dkisst/road.hpp"
#include "dkisst/spatial_index.hpp"
#include "dkisst/vehicle.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dkisst
{

using Rng = std::mt19937_64;
using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Either a wall-clock query time or a fixed number of propagations.
struct Budget
{
    enum class Kind
    {
        time,
        iterations
    };

    Kind kind = Kind::time;
    double seconds = 0.3;
    std::uint64_t iterations = 0;

    static Budget time(double s) { return {Kind::time, s, 0}; }
    static Budget iters(std::uint64_t n) { return {Kind::iterations, 0.0, n}; }

    friend bool operator==(const Budget&, const Budget&) = default;
};

/// Parses `time:SECONDS` or `iters:N`.
inline Budget parse_budget(const std::string& text)
{
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string value = colon == std::string::npos ? "" : text.substr(colon + 1);
    try
    {
        std::size_t used = 0;
        if (kind == "time")
        {
            const double s = std::stod(value, &used);
            if (used == value.size() && s > 0.0 && std::isfinite(s))
                return Budget::time(s);
        }
        else if (kind == "iters" && !value.empty() && value[0] != '-')
        {
            const auto n = std::stoull(value, &used);
            if (used == value.size())
                return Budget::iters(n);
        }
    }
    catch (const std::logic_error&)
    {
    }
    throw std::invalid_argument("budget must be time:SECONDS or iters:N, got '" + text + "'");
}

struct StateBounds
{
    Interval x{-15.0, 45.0};
    Interval y{-15.0, 15.0};
    Interval theta{-kPi, kPi};
    Interval v{0.0, 6.0};

    [[nodiscard]] bool contains(const VehicleState& s) const
    {
        return x.contains(s.x) && y.contains(s.y) && theta.contains(s.theta) && v.contains(s.v);
    }
    friend bool operator==(const StateBounds&, const StateBounds&) = default;
};

struct PlannerConfig
{
    Budget budget = Budget::time(0.3);
    double d_near = 0.2;
    double d_prune = 0.1;
    double t_prop = 0.4;
    double t_step = 0.04;
    double sigma_a = 0.8;
    double sigma_delta = 0.2;
    /// Length that maps to one unit of the planner metric along x and y.
    double metric_length_scale = 10.0;
    /// Speed difference that maps to one unit of the planner metric.
    double metric_speed_scale = 2.0;
    /// Sampling box = bounding box of ego and goal grown by this margin.
    double bounds_margin = 15.0;
    StateBounds bounds;
    std::uint64_t rng_seed = 1;

    void validate() const
    {
        if (!(d_near > 0.0) || !(d_prune > 0.0))
            throw std::invalid_argument("selection and pruning radii must be positive");
        if (d_prune > d_near)
            throw std::invalid_argument("pruning radius must not exceed the selection radius");
        step_count(t_prop, t_step);
        if (!(sigma_a > 0.0) || !(sigma_delta > 0.0))
            throw std::invalid_argument("input standard deviations must be positive");
        if (!(metric_length_scale > 0.0))
            throw std::invalid_argument("metric length scale must be positive");
        if (!(metric_speed_scale > 0.0))
            throw std::invalid_argument("metric speed scale must be positive");
        if (bounds_margin < 0.0)
            throw std::invalid_argument("bounds margin must be non-negative");
        if (!(bounds.x.extent() > 0.0) || !(bounds.y.extent() > 0.0) || bounds.v.extent() < 0.0)
            throw std::invalid_argument("state sampling bounds are empty");
        if (budget.kind == Budget::Kind::time && !(budget.seconds >= 0.0))
            throw std::invalid_argument("query time must be non-negative");
    }

    friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

/// Per-component scales of the planner metric.
struct MetricScales
{
    double x = 10.0;
    double y = 10.0;
    double theta = kTwoPi;
    double v = 6.0;

    static MetricScales from(const PlannerConfig& c)
    {
        return {c.metric_length_scale, c.metric_length_scale, kTwoPi, c.metric_speed_scale};
    }
};

inline NormalizedPoint normalize(const VehicleState& s, const MetricScales& m)
{
    double h = (s.theta + kPi) / kTwoPi;
    h -= std::floor(h);
    return {s.x / m.x, s.y / m.y, h, s.v / m.v};
}

/// Normalized Euclidean distance with wrap-aware heading.
inline double planner_metric(const VehicleState& a, const VehicleState& b, const MetricScales& m)
{
    const double dx = (a.x - b.x) / m.x;
    const double dy = (a.y - b.y) / m.y;
    const double dh = std::abs(angle_diff(a.theta, b.theta)) / m.theta;
    const double dv = (a.v - b.v) / m.v;
    return std::sqrt(dx * dx + dy * dy + dh * dh + dv * dv);
}

inline VehicleState sample_state(const StateBounds& b, Rng& rng)
{
    std::uniform_real_distribution<double> ux(b.x.min, b.x.max);
    std::uniform_real_distribution<double> uy(b.y.min, b.y.max);
    std::uniform_real_distribution<double> ut(b.theta.min, b.theta.max);
    std::uniform_real_distribution<double> uv(b.v.min, b.v.max);
    VehicleState s;
    s.x = ux(rng);
    s.y = uy(rng);
    s.theta = normalize_angle(ut(rng));
    s.v = uv(rng);
    return s;
}

/// Zero-mean Gaussian inputs, jointly redrawn until both lie inside the bounds.
inline ControlInput sample_input(const PlannerConfig& c, Rng& rng, const VehicleParams& p)
{
    if (!p.a_bounds.contains(0.0) || !p.delta_bounds.contains(0.0))
        throw std::invalid_argument("input bounds must contain zero");
    std::normal_distribution<double> na(0.0, c.sigma_a);
    std::normal_distribution<double> nd(0.0, c.sigma_delta);
    while (true)
    {
        const ControlInput u{na(rng), nd(rng)};
        if (p.admits(u))
            return u;
    }
}

/// Bounds, lane-penalty and object-overlap check of a state at absolute time t.
inline bool is_state_valid(const VehicleState& s, double t, const PenaltyGrid& grid, const WorldModel& world,
                           const PlannerConfig& config, const VehicleParams& params)
{
    if (!config.bounds.contains(s))
        return false;
    if (!grid.lane_valid(s.x, s.y))
        return false;
    const OrientedBox ego = footprint(s, params);
    for (const auto& obj : world.objects)
        if (boxes_overlap(ego, object_box_at(obj, t)))
            return false;
    return true;
}

struct TreeNode
{
    TimedState sample;
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    double cost = 0.0;       // motion cost from the root
    double state_cost = 0.0; // weighted state cost at this node
    bool active = true;
    bool alive = true;
    bool in_goal = false;
    std::size_t witness = 0;
};

struct Witness
{
    VehicleState state;
    NodeId rep = kNoNode;
};

/**
 * SST tree bookkeeping: nodes, witnesses and the exact bucket indices.
 *
 * Costs are supplied by the caller, which keeps the witness rules
 * independent of the cost model.
 */
class PlannerTree
{
  public:
    PlannerTree(MetricScales scales, double d_near, double d_prune)
        : scales_(scales), d_near_(d_near), d_prune_(d_prune), active_index_(d_near), witness_index_(d_prune)
    {
    }

    NodeId set_root(const TimedState& sample, double state_cost, bool in_goal)
    {
        if (!nodes_.empty())
            throw std::logic_error("tree already has a root");
        TreeNode root;
        root.sample = sample;
        root.sample.input.reset();
        root.state_cost = state_cost;
        root.in_goal = in_goal;
        nodes_.push_back(root);
        witnesses_.push_back({sample.state, 0});
        witness_index_.insert(0, normalize(sample.state, scales_));
        activate(0);
        if (in_goal)
            best_goal_ = 0;
        return 0;
    }

    /**
     * Witness-prune-insert. Returns the new node id, or nullopt when an
     * existing representative within d_prune is at least as cheap.
     */
    std::optional<NodeId> insert(NodeId parent, const TimedState& sample, double cost, double state_cost, bool in_goal)
    {
        const auto p = normalize(sample.state, scales_);
        const auto [nearest, nearest_d] = nearest_witness(sample.state);

        std::size_t witness = 0;
        if (nearest == witnesses_.size() || nearest_d > d_prune_)
        {
            witness = witnesses_.size();
            witnesses_.push_back({sample.state, kNoNode});
            witness_index_.insert(witness, p);
        }
        else
        {
            witness = nearest;
            const NodeId rep = witnesses_[witness].rep;
            if (rep != kNoNode && !(cost < nodes_[rep].cost))
                return std::nullopt;
        }

        const auto id = static_cast<NodeId>(nodes_.size());
        TreeNode node;
        node.sample = sample;
        node.parent = parent;
        node.cost = cost;
        node.state_cost = state_cost;
        node.in_goal = in_goal;
        node.witness = witness;
        nodes_.push_back(std::move(node));
        nodes_[parent].children.push_back(id);

        const NodeId old_rep = witnesses_[witness].rep;
        witnesses_[witness].rep = id;
        activate(id);
        if (in_goal && (best_goal_ == kNoNode || cost < nodes_[best_goal_].cost))
        {
            const NodeId old_best = best_goal_;
            best_goal_ = id;
            if (old_best != kNoNode)
                prune_upwards(old_best);
        }
        if (old_rep != kNoNode)
        {
            deactivate(old_rep);
            prune_upwards(old_rep);
        }
        return id;
    }

    /// Representative of the witness within d_prune of `s`, if any.
    [[nodiscard]] std::optional<NodeId> representative_near(const VehicleState& s) const
    {
        const auto [w, d] = nearest_witness(s);
        if (w == witnesses_.size() || d > d_prune_ || witnesses_[w].rep == kNoNode)
            return std::nullopt;
        return witnesses_[w].rep;
    }

    /// BestNear: cheapest active node within d_near, else the metric-nearest active node.
    [[nodiscard]] NodeId select(const VehicleState& x_rand) const
    {
        if (active_.empty())
            throw std::logic_error("select on a tree without active nodes");
        const auto p = normalize(x_rand, scales_);
        NodeId best = kNoNode;
        active_index_.for_each_candidate(p, [&](NodeId id) {
            const auto& n = nodes_[id];
            if (planner_metric(n.sample.state, x_rand, scales_) > d_near_)
                return;
            if (best == kNoNode || n.cost < nodes_[best].cost || (n.cost == nodes_[best].cost && id < best))
                best = id;
        });
        if (best != kNoNode)
            return best;
        double best_d = std::numeric_limits<double>::infinity();
        for (NodeId id : active_)
        {
            const double d = planner_metric(nodes_[id].sample.state, x_rand, scales_);
            if (d < best_d || (d == best_d && id < best))
            {
                best_d = d;
                best = id;
            }
        }
        return best;
    }

    /// Root-to-node chain as a trajectory.
    [[nodiscard]] Trajectory chain(NodeId id) const
    {
        Trajectory out;
        for (NodeId n = id; n != kNoNode; n = nodes_[n].parent)
            out.samples.push_back(nodes_[n].sample);
        std::reverse(out.samples.begin(), out.samples.end());
        return out;
    }

    [[nodiscard]] const TreeNode& node(NodeId id) const { return nodes_[id]; }
    [[nodiscard]] std::size_t node_slots() const { return nodes_.size(); }
    [[nodiscard]] std::size_t alive_count() const
    {
        std::size_t n = 0;
        for (const auto& node : nodes_)
            n += node.alive ? 1 : 0;
        return n;
    }
    [[nodiscard]] const std::vector<NodeId>& active_nodes() const { return active_; }
    [[nodiscard]] const std::vector<Witness>& witnesses() const { return witnesses_; }
    [[nodiscard]] NodeId best_goal() const { return best_goal_; }
    [[nodiscard]] const MetricScales& scales() const { return scales_; }
    [[nodiscard]] double d_near() const { return d_near_; }
    [[nodiscard]] double d_prune() const { return d_prune_; }

  private:
    /// Nearest witness index (witnesses_.size() when none is indexed nearby) and its distance.
    [[nodiscard]] std::pair<std::size_t, double> nearest_witness(const VehicleState& s) const
    {
        std::size_t nearest = witnesses_.size();
        double nearest_d = std::numeric_limits<double>::infinity();
        witness_index_.for_each_candidate(normalize(s, scales_), [&](std::size_t w) {
            const double d = planner_metric(witnesses_[w].state, s, scales_);
            if (d < nearest_d || (d == nearest_d && w < nearest))
            {
                nearest_d = d;
                nearest = w;
            }
        });
        return {nearest, nearest_d};
    }

    void activate(NodeId id)
    {
        nodes_[id].active = true;
        active_pos_.resize(nodes_.size(), kNoPos);
        active_pos_[id] = active_.size();
        active_.push_back(id);
        active_index_.insert(id, normalize(nodes_[id].sample.state, scales_));
    }

    void deactivate(NodeId id)
    {
        auto& n = nodes_[id];
        if (!n.active)
            return;
        n.active = false;
        active_index_.erase(id, normalize(n.sample.state, scales_));
        const std::size_t pos = active_pos_[id];
        const NodeId moved = active_.back();
        active_[pos] = moved;
        active_pos_[moved] = pos;
        active_.pop_back();
        active_pos_[id] = kNoPos;
    }

    /// Removes inactive leaves up the chain; the root and best goal node stay.
    void prune_upwards(NodeId id)
    {
        while (id != kNoNode && id != 0 && id != best_goal_)
        {
            auto& n = nodes_[id];
            if (!n.alive || n.active || !n.children.empty())
                return;
            n.alive = false;
            const NodeId parent = n.parent;
            auto& siblings = nodes_[parent].children;
            siblings.erase(std::find(siblings.begin(), siblings.end(), id));
            id = parent;
        }
    }

    static constexpr std::size_t kNoPos = std::numeric_limits<std::size_t>::max();

    MetricScales scales_;
    double d_near_;
    double d_prune_;
    std::vector<TreeNode> nodes_;
    std::vector<Witness> witnesses_;
    std::vector<NodeId> active_;
    std::vector<std::size_t> active_pos_;
    BucketIndex<NodeId> active_index_;
    BucketIndex<std::size_t> witness_index_;
    NodeId best_goal_ = kNoNode;
};

/// Everything a query reads besides the start state.
struct PlanningProblem
{
    const PenaltyGrid* grid = nullptr;
    const WorldModel* world = nullptr;
    VehicleParams vehicle;
    CostWeights weights;
    GoalRegion goal;
    PlannerConfig config;
};

struct TreeStats
{
    std::size_t nodes = 0;
    std::size_t active = 0;
    std::size_t witnesses = 0;
};

struct CostImprovement
{
    std::uint64_t iteration = 0;
    double cost = 0.0;
};

struct PlanResult
{
    Trajectory trajectory;
    double cost = std::numeric_limits<double>::infinity();
    bool solved = false;
    std::uint64_t iterations = 0;
    double wall_time = 0.0;
    TreeStats stats;
    std::vector<CostImprovement> history;
};

/// Propagated edge candidate: endpoint plus its validated substates.
struct Extension
{
    ControlInput input;
    VehicleState endpoint;
    double t_end = 0.0;
};

/**
 * One planning query. Owns the tree, the RNG and the budget clock, and
 * exposes the propagate / insert steps so seeding strategies can grow the
 * tree through the same validity and pruning path as the main loop.
 */
class SstQuery
{
  public:
    SstQuery(const PlanningProblem& problem, const VehicleState& start, double start_time)
        : problem_(problem), tree_(MetricScales::from(problem.config), problem.config.d_near, problem.config.d_prune),
          rng_(problem.config.rng_seed), steps_(step_count(problem.config.t_prop, problem.config.t_step)),
          clock_start_(std::chrono::steady_clock::now())
    {
        if (!problem.grid || !problem.world)
            throw std::invalid_argument("planning problem lacks grid or world model");
        problem.config.validate();
        if (!is_state_valid(start, start_time, *problem.grid, *problem.world, problem.config, problem.vehicle))
            throw std::invalid_argument("start state is invalid");
        tree_.set_root({start, start_time, std::nullopt}, state_cost(start, start_time),
                       in_goal(problem.goal, start));
        note_best();
    }

    [[nodiscard]] bool budget_exhausted() const
    {
        const auto& b = problem_.config.budget;
        if (b.kind == Budget::Kind::iterations)
            return iterations_ >= b.iterations;
        return elapsed() >= b.seconds;
    }

    [[nodiscard]] double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start_).count();
    }

    /// Propagates `from` with `u`, validating every substate; charges one iteration.
    std::optional<Extension> extend(NodeId from, const ControlInput& u)
    {
        ++iterations_;
        const auto& c = problem_.config;
        const TreeNode& n = tree_.node(from);
        VehicleState cur = n.sample.state;
        for (int k = 1; k <= steps_; ++k)
        {
            cur = step(cur, u, c.t_step, problem_.vehicle);
            if (!valid(cur, substate_time(n.sample.t, k)))
                return std::nullopt;
        }
        return Extension{u, cur, n.sample.t + c.t_prop};
    }

    /// Witness-prune-insert of a validated extension.
    std::optional<NodeId> insert(NodeId parent, const Extension& ext)
    {
        const TreeNode& p = tree_.node(parent);
        const double sc = state_cost(ext.endpoint, ext.t_end);
        const double cost =
            p.cost + edge_cost(distance(p.sample.state.position(), ext.endpoint.position()), ext.t_end - p.sample.t,
                               p.state_cost, sc, problem_.weights);
        auto id = tree_.insert(parent, {ext.endpoint, ext.t_end, ext.input}, cost, sc, in_goal(problem_.goal, ext.endpoint));
        if (id)
            note_best();
        return id;
    }

    /// One selection-propagation-pruning iteration.
    void iterate()
    {
        const VehicleState x_rand = sample_state(problem_.config.bounds, rng_);
        const NodeId sel = tree_.select(x_rand);
        const ControlInput u = sample_input(problem_.config, rng_, problem_.vehicle);
        if (auto ext = extend(sel, u))
            insert(sel, *ext);
    }

    void run()
    {
        while (!budget_exhausted())
            iterate();
    }

    [[nodiscard]] PlanResult result() const
    {
        PlanResult r;
        r.iterations = iterations_;
        r.wall_time = elapsed();
        r.stats = {tree_.alive_count(), tree_.active_nodes().size(), tree_.witnesses().size()};
        r.history = history_;
        const NodeId best = tree_.best_goal();
        if (best != kNoNode)
        {
            r.solved = true;
            r.trajectory = tree_.chain(best);
            r.cost = tree_.node(best).cost;
        }
        else
        {
            r.trajectory = tree_.chain(0);
        }
        return r;
    }

    [[nodiscard]] double substate_time(double t0, int k) const
    {
        return t0 + static_cast<double>(k) * problem_.config.t_step;
    }

    [[nodiscard]] bool valid(const VehicleState& s, double t) const
    {
        return is_state_valid(s, t, *problem_.grid, *problem_.world, problem_.config, problem_.vehicle);
    }

    [[nodiscard]] double state_cost(const VehicleState& s, double t) const
    {
        return weighted_state_cost(s, t, *problem_.grid, *problem_.world, problem_.weights);
    }

    [[nodiscard]] const PlannerTree& tree() const { return tree_; }
    [[nodiscard]] const PlanningProblem& problem() const { return problem_; }
    [[nodiscard]] NodeId root() const { return 0; }
    [[nodiscard]] int steps_per_edge() const { return steps_; }
    [[nodiscard]] std::uint64_t iterations() const { return iterations_; }
    Rng& rng() { return rng_; }

  private:
    void note_best()
    {
        const NodeId best = tree_.best_goal();
        if (best == kNoNode)
            return;
        const double c = tree_.node(best).cost;
        if (history_.empty() || c < history_.back().cost)
            history_.push_back({iterations_, c});
    }

    const PlanningProblem& problem_;
    PlannerTree tree_;
    Rng rng_;
    int steps_;
    std::uint64_t iterations_ = 0;
    std::chrono::steady_clock::time_point clock_start_;
    std::vector<CostImprovement> history_;
};

/// Minimum-cost in-goal chain of the tree.
inline Trajectory extract_best_trajectory(const PlannerTree& tree, const GoalRegion& goal)
{
    NodeId best = kNoNode;
    for (NodeId id = 0; id < tree.node_slots(); ++id)
    {
        const auto& n = tree.node(id);
        if (!n.alive || !in_goal(goal, n.sample.state))
            continue;
        if (best == kNoNode || n.cost < tree.node(best).cost)
            best = id;
    }
    if (best == kNoNode)
        throw std::runtime_error("extract_best_trajectory: no node reaches the goal");
    return tree.chain(best);
}

/// Base SST query from `start` at absolute time `start_time`.
inline PlanResult plan(const VehicleState& start, double start_time, const PlanningProblem& problem)
{
    SstQuery query(problem, start, start_time);
    query.run();
    return query.result();
}

} // namespace dkisst
