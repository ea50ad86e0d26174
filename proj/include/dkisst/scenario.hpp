#pragma once
/**
 * @file    scenario.hpp
 * @brief   Scenario description and its JSON file format.
 *
 * A scenario file has the sections `road`, `ego`, `objects`, `planner`,
 * `dki`, `weights` and `sim`. Missing fields take the default parameter
 * set; every section may carry a free-form `comment` that is ignored on
 * load. See scenarios/README.md for the full schema.
 */

#include "dkisst/dki.hpp"
#include "dkisst/objects.hpp"
#include "dkisst/road.hpp"
#include "dkisst/sst.hpp"
#include "dkisst/vehicle.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dkisst
{

using json = nlohmann::json;

class ScenarioError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct GridConfig
{
    double resolution = 0.25;
    double margin = 10.0;
    double p_max = 100.0;
    double p_invalid = 99.0;

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct GoalConfig
{
    double distance = 30.0;
    double threshold = 2.0;

    friend bool operator==(const GoalConfig&, const GoalConfig&) = default;
};

enum class Averaging
{
    pooled,
    per_trajectory
};

struct SimConfig
{
    double duration = 10.0;
    double update_rate = 2.0;
    Averaging averaging = Averaging::pooled;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct Scenario
{
    std::string name = "unnamed";
    RoadNetwork road;
    GridConfig grid;
    VehicleState ego;
    VehicleParams vehicle;
    WorldModel world;
    PlannerConfig planner;
    DkiConfig dki;
    CostWeights weights;
    GoalConfig goal;
    SimConfig sim;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace detail
{

/// JSON accessor that reports failures with the dotted path of the field.
class Field
{
  public:
    Field(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] const json& raw() const { return node_; }
    [[nodiscard]] bool has(const char* key) const { return node_.is_object() && node_.contains(key); }

    [[nodiscard]] Field operator[](const char* key) const
    {
        expect_object();
        if (!node_.contains(key))
            fail(join(key), "missing required field");
        return {node_.at(key), join(key)};
    }

    [[nodiscard]] Field at(std::size_t i) const { return {node_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

    [[nodiscard]] std::size_t size() const
    {
        if (!node_.is_array())
            fail(path_, "expected an array");
        return node_.size();
    }

    [[nodiscard]] double number() const
    {
        if (!node_.is_number())
            fail(path_, "expected a number");
        return node_.get<double>();
    }

    [[nodiscard]] std::string string() const
    {
        if (!node_.is_string())
            fail(path_, "expected a string");
        return node_.get<std::string>();
    }

    [[nodiscard]] double number_or(const char* key, double fallback) const
    {
        return has(key) ? (*this)[key].number() : fallback;
    }

    [[nodiscard]] std::string string_or(const char* key, const std::string& fallback) const
    {
        return has(key) ? (*this)[key].string() : fallback;
    }

    [[nodiscard]] Interval interval_or(const char* key, Interval fallback) const
    {
        if (!has(key))
            return fallback;
        const Field f = (*this)[key];
        if (f.size() != 2)
            fail(f.path(), "expected [min, max]");
        const Interval iv{f.at(0).number(), f.at(1).number()};
        if (!(iv.min <= iv.max))
            fail(f.path(), "min must not exceed max");
        return iv;
    }

    void expect_object() const
    {
        if (!node_.is_object())
            fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what)
    {
        throw ScenarioError(path + ": " + what);
    }

  private:
    [[nodiscard]] std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& node_;
    std::string path_;
};

inline void require(bool ok, const Field& f, const std::string& what)
{
    if (!ok)
        Field::fail(f.path(), what);
}

inline Point2 read_point(const Field& f)
{
    require(f.size() == 2, f, "expected [x, y]");
    return {f.at(0).number(), f.at(1).number()};
}

} // namespace detail

inline Scenario scenario_from_json(const json& doc)
{
    using detail::Field;
    using detail::require;
    Scenario sc;
    const Field root(doc, "");
    root.expect_object();
    sc.name = root.string_or("name", sc.name);

    {
        const Field road = root["road"];
        const Field lanes = road["lanes"];
        for (std::size_t i = 0; i < lanes.size(); ++i)
        {
            const Field lf = lanes.at(i);
            Lane lane;
            lane.id = lf["id"].string();
            lane.width = lf.number_or("width", 3.5);
            require(lane.width > 0.0, lf["width"], "must be > 0");
            const Field cl = lf["centerline"];
            for (std::size_t k = 0; k < cl.size(); ++k)
                lane.centerline.push_back(detail::read_point(cl.at(k)));
            require(lane.centerline.size() >= 2, cl, "needs at least 2 points");
            if (lf.has("successors"))
            {
                const Field succ = lf["successors"];
                for (std::size_t k = 0; k < succ.size(); ++k)
                    lane.successors.push_back(succ.at(k).string());
            }
            sc.road.lanes.push_back(std::move(lane));
        }
        const Field route = road["route"];
        for (std::size_t i = 0; i < route.size(); ++i)
            sc.road.route.push_back(route.at(i).string());
        if (road.has("grid"))
        {
            const Field g = road["grid"];
            sc.grid.resolution = g.number_or("resolution", sc.grid.resolution);
            sc.grid.margin = g.number_or("margin", sc.grid.margin);
            sc.grid.p_max = g.number_or("p_max", sc.grid.p_max);
            sc.grid.p_invalid = g.number_or("p_invalid", sc.grid.p_invalid);
            require(sc.grid.resolution > 0.0, g, "resolution must be > 0");
            require(sc.grid.p_invalid <= sc.grid.p_max, g, "p_invalid must not exceed p_max");
        }
        try
        {
            sc.road.validate();
        }
        catch (const RoadError& e)
        {
            Field::fail("road", e.what());
        }
    }

    {
        const Field ego = root["ego"];
        const Field st = ego["state"];
        sc.ego = {st["x"].number(), st["y"].number(), normalize_angle(st.number_or("theta", 0.0)),
                  st.number_or("v", 0.0)};
        if (ego.has("vehicle"))
        {
            const Field vf = ego["vehicle"];
            auto& v = sc.vehicle;
            v.wheelbase = vf.number_or("wheelbase", v.wheelbase);
            v.length = vf.number_or("length", v.length);
            v.width = vf.number_or("width", v.width);
            v.v_bounds = vf.interval_or("v_bounds", v.v_bounds);
            v.a_bounds = vf.interval_or("a_bounds", v.a_bounds);
            v.delta_bounds = vf.interval_or("delta_bounds", v.delta_bounds);
            try
            {
                v.validate();
            }
            catch (const std::invalid_argument& e)
            {
                Field::fail(vf.path(), e.what());
            }
        }
        require(sc.vehicle.v_bounds.contains(sc.ego.v), st, "initial speed outside v_bounds");
    }

    if (root.has("objects"))
    {
        const Field objs = root["objects"];
        for (std::size_t i = 0; i < objs.size(); ++i)
        {
            const Field of = objs.at(i);
            ObjectPrediction obj;
            obj.id = of.string_or("id", "object" + std::to_string(i));
            obj.kind = of.string_or("kind", "vehicle");
            require(obj.kind == "vehicle" || obj.kind == "pedestrian", of, "kind must be 'vehicle' or 'pedestrian'");
            const bool ped = obj.kind == "pedestrian";
            obj.length = of.number_or("length", ped ? 0.6 : 4.0);
            obj.width = of.number_or("width", ped ? 0.6 : 2.0);
            obj.field.amplitude = of.number_or("amplitude", obj.field.amplitude);
            obj.field.sigma_x = of.number_or("sigma_x", obj.field.sigma_x);
            obj.field.sigma_y = of.number_or("sigma_y", obj.field.sigma_y);
            const Field poses = of["poses"];
            for (std::size_t k = 0; k < poses.size(); ++k)
            {
                const Field pf = poses.at(k);
                require(pf.size() == 4, pf, "expected [t, x, y, theta]");
                obj.poses.push_back({pf.at(0).number(), pf.at(1).number(), pf.at(2).number(), pf.at(3).number()});
            }
            try
            {
                obj.validate();
            }
            catch (const std::invalid_argument& e)
            {
                Field::fail(of.path(), e.what());
            }
            sc.world.objects.push_back(std::move(obj));
        }
    }

    if (root.has("planner"))
    {
        const Field pf = root["planner"];
        auto& p = sc.planner;
        if (pf.has("budget"))
        {
            const Field b = pf["budget"];
            const std::string mode = b["mode"].string();
            if (mode == "time")
                p.budget = Budget::time(b["seconds"].number());
            else if (mode == "iterations")
            {
                const double n = b["iterations"].number();
                require(n >= 0.0 && n == std::floor(n), b["iterations"], "must be a non-negative integer");
                p.budget = Budget::iters(static_cast<std::uint64_t>(n));
            }
            else
                Field::fail(b["mode"].path(), "expected 'time' or 'iterations'");
        }
        p.d_near = pf.number_or("d_near", p.d_near);
        p.d_prune = pf.number_or("d_prune", p.d_prune);
        p.t_prop = pf.number_or("t_prop", p.t_prop);
        p.t_step = pf.number_or("t_step", p.t_step);
        p.sigma_a = pf.number_or("sigma_a", p.sigma_a);
        p.sigma_delta = pf.number_or("sigma_delta", p.sigma_delta);
        p.metric_length_scale = pf.number_or("metric_length_scale", p.metric_length_scale);
        p.metric_speed_scale = pf.number_or("metric_speed_scale", p.metric_speed_scale);
        p.bounds_margin = pf.number_or("bounds_margin", p.bounds_margin);
        try
        {
            p.validate();
        }
        catch (const std::invalid_argument& e)
        {
            Field::fail(pf.path(), e.what());
        }
    }

    if (root.has("dki"))
    {
        const Field df = root["dki"];
        auto& d = sc.dki;
        d.d_lookahead = df.number_or("d_lookahead", d.d_lookahead);
        d.d_branch_max = df.number_or("d_branch_max", d.d_branch_max);
        const double n = df.number_or("n_candidates", static_cast<double>(d.n_candidates));
        require(n >= 1.0 && n == std::floor(n), df, "n_candidates must be a positive integer");
        d.n_candidates = static_cast<std::size_t>(n);
        d.d_reuse = df.number_or("d_reuse", d.d_reuse);
        try
        {
            d.validate();
        }
        catch (const std::invalid_argument& e)
        {
            Field::fail(df.path(), e.what());
        }
    }

    if (root.has("weights"))
    {
        const Field wf = root["weights"];
        auto& w = sc.weights;
        w.w_pl = wf.number_or("path_length", w.w_pl);
        w.w_dv = wf.number_or("desired_velocity", w.w_dv);
        w.w_pg = wf.number_or("penalty_grid", w.w_pg);
        w.w_tc = wf.number_or("target_clearance", w.w_tc);
        w.v_desired = wf.number_or("v_desired", w.v_desired);
    }
    try
    {
        sc.weights.validate(sc.vehicle.v_bounds);
    }
    catch (const std::invalid_argument& e)
    {
        detail::Field::fail("weights", e.what());
    }

    if (root.has("sim"))
    {
        const Field sf = root["sim"];
        sc.sim.duration = sf.number_or("duration", sc.sim.duration);
        sc.sim.update_rate = sf.number_or("update_rate", sc.sim.update_rate);
        require(sc.sim.duration > 0.0, sf, "duration must be > 0");
        require(sc.sim.update_rate > 0.0, sf, "update_rate must be > 0");
        const std::string avg = sf.string_or("averaging", "pooled");
        require(avg == "pooled" || avg == "per_trajectory", sf, "averaging must be 'pooled' or 'per_trajectory'");
        sc.sim.averaging = avg == "pooled" ? Averaging::pooled : Averaging::per_trajectory;
        sc.goal.distance = sf.number_or("goal_distance", sc.goal.distance);
        sc.goal.threshold = sf.number_or("goal_threshold", sc.goal.threshold);
        require(sc.goal.distance > 0.0 && sc.goal.threshold > 0.0, sf, "goal distance and threshold must be > 0");
    }
    return sc;
}

inline json scenario_to_json(const Scenario& sc)
{
    json doc;
    doc["name"] = sc.name;

    json lanes = json::array();
    for (const auto& l : sc.road.lanes)
    {
        json cl = json::array();
        for (const auto& p : l.centerline)
            cl.push_back({p.x, p.y});
        lanes.push_back({{"id", l.id}, {"width", l.width}, {"centerline", cl}, {"successors", l.successors}});
    }
    doc["road"] = {{"lanes", lanes},
                   {"route", sc.road.route},
                   {"grid",
                    {{"comment", "p_max = P-bar (maximum cell penalty), p_invalid = p-bar (state invalid cell value)"},
                     {"resolution", sc.grid.resolution},
                     {"margin", sc.grid.margin},
                     {"p_max", sc.grid.p_max},
                     {"p_invalid", sc.grid.p_invalid}}}};

    const auto& v = sc.vehicle;
    doc["ego"] = {{"state", {{"x", sc.ego.x}, {"y", sc.ego.y}, {"theta", sc.ego.theta}, {"v", sc.ego.v}}},
                  {"vehicle",
                   {{"comment", "wheelbase = L^w; bounds are [min, max]"},
                    {"wheelbase", v.wheelbase},
                    {"length", v.length},
                    {"width", v.width},
                    {"v_bounds", {v.v_bounds.min, v.v_bounds.max}},
                    {"a_bounds", {v.a_bounds.min, v.a_bounds.max}},
                    {"delta_bounds", {v.delta_bounds.min, v.delta_bounds.max}}}}};

    json objs = json::array();
    for (const auto& o : sc.world.objects)
    {
        json poses = json::array();
        for (const auto& p : o.poses)
            poses.push_back({p.t, p.x, p.y, p.theta});
        objs.push_back({{"id", o.id},
                        {"kind", o.kind},
                        {"length", o.length},
                        {"width", o.width},
                        {"amplitude", o.field.amplitude},
                        {"sigma_x", o.field.sigma_x},
                        {"sigma_y", o.field.sigma_y},
                        {"poses", poses}});
    }
    doc["objects"] = objs;

    const auto& p = sc.planner;
    json budget = p.budget.kind == Budget::Kind::time
                      ? json{{"mode", "time"}, {"seconds", p.budget.seconds}}
                      : json{{"mode", "iterations"}, {"iterations", p.budget.iterations}};
    doc["planner"] = {{"comment", "budget.seconds = t^q, d_near = d^n, d_prune = d^p, t_prop = t^p, t_step = t^s, "
                                  "sigma_a = sigma^a, sigma_delta = sigma^delta"},
                      {"budget", budget},
                      {"d_near", p.d_near},
                      {"d_prune", p.d_prune},
                      {"t_prop", p.t_prop},
                      {"t_step", p.t_step},
                      {"sigma_a", p.sigma_a},
                      {"sigma_delta", p.sigma_delta},
                      {"metric_length_scale", p.metric_length_scale},
                      {"metric_speed_scale", p.metric_speed_scale},
                      {"bounds_margin", p.bounds_margin}};

    doc["dki"] = {{"comment", "d_lookahead = d^la, d_branch_max = d^i, n_candidates = N, d_reuse = d^m"},
                  {"d_lookahead", sc.dki.d_lookahead},
                  {"d_branch_max", sc.dki.d_branch_max},
                  {"n_candidates", sc.dki.n_candidates},
                  {"d_reuse", sc.dki.d_reuse}};

    const auto& w = sc.weights;
    doc["weights"] = {{"comment", "path_length = w^pl, desired_velocity = w^dv, penalty_grid = w^pg, "
                                  "target_clearance = w^tc, v_desired = v^d"},
                      {"path_length", w.w_pl},
                      {"desired_velocity", w.w_dv},
                      {"penalty_grid", w.w_pg},
                      {"target_clearance", w.w_tc},
                      {"v_desired", w.v_desired}};

    doc["sim"] = {{"comment", "update_rate = fq, goal_distance = g^d, goal_threshold = g^t"},
                  {"duration", sc.sim.duration},
                  {"update_rate", sc.sim.update_rate},
                  {"averaging", sc.sim.averaging == Averaging::pooled ? "pooled" : "per_trajectory"},
                  {"goal_distance", sc.goal.distance},
                  {"goal_threshold", sc.goal.threshold}};
    return doc;
}

/// Sets a dotted-path field (`planner.budget.iterations`, `road.lanes.0.width`) in a scenario document.
inline void apply_override(json& doc, const std::string& key, const std::string& value)
{
    if (key.empty())
        throw ScenarioError("override: empty key");
    json* node = &doc;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.'))
        parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i)
    {
        const bool last = i + 1 == parts.size();
        const std::string& name = parts[i];
        if (node->is_array())
        {
            std::size_t idx = 0;
            try
            {
                idx = std::stoul(name);
            }
            catch (const std::exception&)
            {
                throw ScenarioError("override " + key + ": '" + name + "' is not an array index");
            }
            if (idx >= node->size())
                throw ScenarioError("override " + key + ": index " + name + " out of range");
            node = &(*node)[idx];
        }
        else
        {
            if (node->is_null())
                *node = json::object();
            if (!node->is_object())
                throw ScenarioError("override " + key + ": '" + name + "' parent is not an object");
            node = &(*node)[name];
        }
        if (last)
        {
            json parsed = json::parse(value, nullptr, false);
            *node = parsed.is_discarded() ? json(value) : parsed;
        }
    }
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioError(path + ": cannot open file");
    try
    {
        return json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw ScenarioError(path + ": " + e.what());
    }
}

inline Scenario load_scenario(const std::string& path,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {})
{
    json doc = read_json_file(path);
    for (const auto& [k, v] : overrides)
        apply_override(doc, k, v);
    try
    {
        return scenario_from_json(doc);
    }
    catch (const ScenarioError& e)
    {
        throw ScenarioError(path + ": " + e.what());
    }
    catch (const json::exception& e)
    {
        throw ScenarioError(path + ": " + e.what());
    }
}

inline PenaltyGrid build_scenario_grid(const Scenario& sc)
{
    return build_penalty_grid(sc.road, road_bounds(sc.road, sc.grid.margin, sc.grid.resolution), sc.grid.resolution,
                              sc.grid.p_max, sc.grid.p_invalid);
}

} // namespace dkisst
