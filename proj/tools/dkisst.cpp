// Command-line front end: single queries, closed-loop runs and the benchmark matrix.

#include "dkisst/benchmark.hpp"
#include "dkisst/dki.hpp"
#include "dkisst/io.hpp"
#include "dkisst/scenario.hpp"
#include "dkisst/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

namespace
{

using namespace dkisst;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnsolved = 2;
constexpr int kExitCollision = 3;

std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& sets)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : sets)
    {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

Scenario load(const std::string& path, const std::vector<std::string>& sets, const std::string& budget)
{
    Scenario sc = load_scenario(path, parse_sets(sets));
    if (!budget.empty())
        sc.planner.budget = parse_budget(budget);
    return sc;
}

json tree_json(const PlannerTree& tree)
{
    json nodes = json::array();
    for (NodeId id = 0; id < tree.node_slots(); ++id)
    {
        const auto& n = tree.node(id);
        if (!n.alive)
            continue;
        json j = detail::state_json(n.sample);
        j["id"] = id;
        j["parent"] = n.parent == kNoNode ? json(nullptr) : json(n.parent);
        j["cost"] = n.cost;
        j["active"] = n.active;
        j["in_goal"] = n.in_goal;
        nodes.push_back(std::move(j));
    }
    json witnesses = json::array();
    for (const auto& w : tree.witnesses())
        witnesses.push_back({{"x", w.state.x}, {"y", w.state.y}, {"theta", w.state.theta}, {"v", w.state.v},
                             {"rep", w.rep == kNoNode ? json(nullptr) : json(w.rep)}});
    return {{"nodes", nodes}, {"witnesses", witnesses}};
}

int cmd_plan(const std::string& path, const std::vector<std::string>& sets, const std::string& budget,
             PlannerMode mode, std::uint64_t seed, const fs::path& out)
{
    const Scenario sc = load(path, sets, budget);
    const PenaltyGrid grid = build_scenario_grid(sc);
    const GoalRegion goal = compute_goal_region(sc.road, sc.ego, sc.goal.distance, sc.goal.threshold);
    const PlanningProblem problem = make_problem(sc, grid, sc.ego, goal, seed);
    SstQuery query(problem, sc.ego, 0.0);
    if (mode == PlannerMode::dki)
        seed_dki(query, sc.road, nullptr, sc.dki);
    query.run();
    const PlanResult r = query.result();

    write_file_atomic(out / "trajectory.csv", r.solved ? trajectory_csv(r.trajectory) : trajectory_csv(Trajectory{}));
    json tree = tree_json(query.tree());
    tree["solved"] = r.solved;
    tree["cost"] = detail::num_json(r.solved ? r.cost : std::numeric_limits<double>::infinity());
    tree["iterations"] = r.iterations;
    write_file_atomic(out / "tree.json", tree.dump(1) + "\n");
    std::printf("%s: %s, cost %s, %llu iterations, %zu nodes\n", sc.name.c_str(), r.solved ? "solved" : "unsolved",
                detail::num(r.cost).c_str(), static_cast<unsigned long long>(r.iterations), r.stats.nodes);
    return r.solved ? kExitOk : kExitUnsolved;
}

int cmd_simulate(const std::string& path, const std::vector<std::string>& sets, const std::string& budget,
                 PlannerMode mode, std::uint64_t seed, const fs::path& out)
{
    const Scenario sc = load(path, sets, budget);
    const SimLog log = run_closed_loop(sc, mode, seed);
    const MetricsReport m = compute_metrics(log, sc);
    write_file_atomic(out / "log.json", log_json(log).dump(1) + "\n");
    write_file_atomic(out / "ticks.csv", ticks_csv(log));
    write_file_atomic(out / "executed.csv", executed_csv(log));
    write_file_atomic(out / "planned.csv", planned_csv(log));
    write_file_atomic(out / "metrics.json", metrics_json(m).dump(1) + "\n");
    std::printf("%s [%s, seed %llu]: %zu ticks, %s, |a| %s, dv %s, lane %s, min dist %s\n", sc.name.c_str(),
                to_string(mode).c_str(), static_cast<unsigned long long>(seed), log.ticks.size(),
                to_string(log.termination).c_str(), detail::num(m.mean_abs_acceleration).c_str(),
                detail::num(m.mean_speed_deviation).c_str(), detail::num(m.mean_lane_deviation).c_str(),
                detail::num(m.min_target_distance).c_str());
    return log.collisions.empty() ? kExitOk : kExitCollision;
}

int cmd_benchmark(const std::vector<std::string>& paths, const std::vector<std::string>& sets,
                  const std::string& budget, const std::vector<std::string>& modes, std::uint64_t first_seed,
                  std::size_t n_seeds, std::size_t jobs, const fs::path& out)
{
    BenchmarkSpec spec;
    spec.scenarios = paths;
    spec.overrides = parse_sets(sets);
    if (!budget.empty())
        spec.budget = parse_budget(budget);
    if (!modes.empty())
    {
        spec.modes.clear();
        for (const auto& m : modes)
            spec.modes.push_back(parse_mode(m));
    }
    for (std::size_t i = 0; i < n_seeds; ++i)
        spec.seeds.push_back(first_seed + i);
    spec.out_dir = out;
    spec.jobs = jobs;
    const auto cells = run_benchmark(spec);
    write_file_atomic(out / "cells.csv", cells_csv(cells));
    write_file_atomic(out / "summary.csv", summary_csv(cells));
    std::size_t failed = 0;
    for (const auto& c : cells)
        if (!c.ok)
        {
            ++failed;
            std::fprintf(stderr, "cell %s/%s/%llu failed: %s\n", c.scenario.c_str(), to_string(c.mode).c_str(),
                         static_cast<unsigned long long>(c.seed), c.error.c_str());
        }
    std::cout << summary_csv(cells);
    return failed == 0 ? kExitOk : kExitError;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"DKI-SST planner: single queries, closed-loop simulation and benchmarks"};
    app.require_subcommand(1);

    std::vector<std::string> scenarios;
    std::vector<std::string> sets;
    std::vector<std::string> modes;
    std::string mode = "dki";
    std::string budget;
    std::uint64_t seed = 1;
    std::size_t n_seeds = 10;
    std::size_t jobs = 1;
    std::string out = "out";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--budget", budget, "Planning budget per query: time:SECONDS or iters:N");
        sub->add_option("--set", sets, "Override a scenario field, e.g. planner.d_near=0.3")->take_all();
        sub->add_option("--out", out, "Output directory");
    };

    auto* plan = app.add_subcommand("plan", "Run one planning query from the scenario's initial state");
    plan->add_option("--scenario", scenarios, "Scenario JSON file")->required()->expected(1);
    plan->add_option("--mode", mode, "base or dki")->check(CLI::IsMember({"base", "dki"}));
    plan->add_option("--seed", seed, "Planner RNG seed");
    add_common(plan);

    auto* sim = app.add_subcommand("simulate", "Run the closed loop for one scenario");
    sim->add_option("--scenario", scenarios, "Scenario JSON file")->required()->expected(1);
    sim->add_option("--mode", mode, "base or dki")->check(CLI::IsMember({"base", "dki"}));
    sim->add_option("--seed", seed, "Run seed");
    add_common(sim);

    auto* bench = app.add_subcommand("benchmark", "Run every scenario x mode x seed cell and summarize");
    bench->add_option("--scenario", scenarios, "Scenario JSON file (repeatable)")->required();
    bench->add_option("--mode", modes, "Restrict to these modes (repeatable)")
        ->check(CLI::IsMember({"base", "dki"}));
    bench->add_option("--seed", seed, "First seed");
    bench->add_option("--seeds", n_seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
    bench->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    add_common(bench);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    try
    {
        if (*plan)
            return cmd_plan(scenarios.front(), sets, budget, parse_mode(mode), seed, out);
        if (*sim)
            return cmd_simulate(scenarios.front(), sets, budget, parse_mode(mode), seed, out);
        return cmd_benchmark(scenarios, sets, budget, modes, seed, n_seeds, jobs, out);
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
}
