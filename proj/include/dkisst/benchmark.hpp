#pragma once
/**
 * @file    benchmark.hpp
 * @brief   Scenario x mode x seed matrix with base-vs-DKI summary table.
 */

#include "dkisst/io.hpp"
#include "dkisst/scenario.hpp"
#include "dkisst/sim.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace dkisst
{

struct BenchmarkSpec
{
    std::vector<std::string> scenarios;
    std::vector<PlannerMode> modes{PlannerMode::base, PlannerMode::dki};
    std::vector<std::uint64_t> seeds;
    std::optional<Budget> budget;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::filesystem::path out_dir = "bench_out";
    std::size_t jobs = 1;

    void validate() const
    {
        if (scenarios.empty())
            throw std::invalid_argument("benchmark needs at least one scenario");
        if (seeds.empty())
            throw std::invalid_argument("benchmark needs at least one seed");
        if (modes.empty())
            throw std::invalid_argument("benchmark needs at least one mode");
    }
};

struct CellResult
{
    std::string scenario;
    std::string path;
    PlannerMode mode = PlannerMode::dki;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsReport metrics;
    Termination termination = Termination::duration;
};

/// Summary metric rows: label, accessor, and whether larger is better.
struct MetricRow
{
    const char* label;
    double MetricsReport::*field;
    bool larger_is_better;
};

inline const std::vector<MetricRow>& metric_rows()
{
    static const std::vector<MetricRow> rows{
        {"Mean absolute trajectory longitudinal acceleration [m/s^2]", &MetricsReport::mean_abs_acceleration, false},
        {"Mean absolute trajectory deviation from desired speed [m/s]", &MetricsReport::mean_speed_deviation, false},
        {"Mean absolute trajectory deviation from closest lane center [m]", &MetricsReport::mean_lane_deviation, false},
        {"Minimum resulting distance to target [m]", &MetricsReport::min_target_distance, true},
    };
    return rows;
}

/// Percentage improvement of DKI over base; sign flips for larger-is-better metrics.
inline double gain_percent(double base, double dki, bool larger_is_better)
{
    if (base == 0.0 || !std::isfinite(base) || !std::isfinite(dki))
        return std::numeric_limits<double>::quiet_NaN();
    return (larger_is_better ? (dki - base) : (base - dki)) / base * 100.0;
}

/// Runs every cell; failures are recorded per cell and never stop the matrix.
inline std::vector<CellResult> run_benchmark(const BenchmarkSpec& spec)
{
    spec.validate();
    struct Loaded
    {
        std::string path;
        std::optional<Scenario> scenario;
        std::optional<PenaltyGrid> grid;
        std::string error;
    };
    std::vector<Loaded> loaded;
    for (const auto& path : spec.scenarios)
    {
        Loaded l{path, std::nullopt, std::nullopt, {}};
        try
        {
            l.scenario = load_scenario(path, spec.overrides);
            if (spec.budget)
                l.scenario->planner.budget = *spec.budget;
            l.grid = build_scenario_grid(*l.scenario);
        }
        catch (const std::exception& e)
        {
            l.error = e.what();
        }
        loaded.push_back(std::move(l));
    }

    std::vector<CellResult> cells;
    for (std::size_t s = 0; s < loaded.size(); ++s)
        for (auto mode : spec.modes)
            for (auto seed : spec.seeds)
            {
                CellResult c;
                c.scenario = loaded[s].scenario ? loaded[s].scenario->name : loaded[s].path;
                c.path = loaded[s].path;
                c.mode = mode;
                c.seed = seed;
                cells.push_back(c);
            }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++)
        {
            auto& cell = cells[i];
            const auto& l = *std::find_if(loaded.begin(), loaded.end(), [&](const Loaded& x) { return x.path == cell.path; });
            if (!l.scenario)
            {
                cell.error = l.error;
                continue;
            }
            try
            {
                const SimLog log = run_closed_loop(*l.scenario, cell.mode, cell.seed, *l.grid);
                cell.metrics = compute_metrics(log, *l.scenario);
                cell.termination = log.termination;
                cell.ok = true;
            }
            catch (const std::exception& e)
            {
                cell.error = e.what();
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(spec.jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return cells;
}

inline std::string cells_csv(const std::vector<CellResult>& cells)
{
    using detail::num;
    std::ostringstream out;
    out << "scenario,mode,seed,ok,termination,mean_abs_acceleration,mean_speed_deviation,mean_lane_deviation,"
           "min_target_distance,collisions,goal_progress,lane_invalid_states,fallback_ticks,error\n";
    for (const auto& c : cells)
    {
        const auto& m = c.metrics;
        out << c.scenario << ',' << to_string(c.mode) << ',' << c.seed << ',' << (c.ok ? 1 : 0) << ','
            << (c.ok ? to_string(c.termination) : "") << ',' << num(m.mean_abs_acceleration) << ','
            << num(m.mean_speed_deviation) << ',' << num(m.mean_lane_deviation) << ',' << num(m.min_target_distance)
            << ',' << m.collisions << ',' << num(m.goal_progress) << ',' << m.lane_invalid_states << ','
            << m.fallback_ticks << ",\"" << c.error << "\"\n";
    }
    return out.str();
}

/// Mean of one metric over the successful cells of (scenario, mode).
inline double cell_mean(const std::vector<CellResult>& cells, const std::string& scenario, PlannerMode mode,
                        double MetricsReport::*field)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : cells)
        if (c.ok && c.scenario == scenario && c.mode == mode)
        {
            sum += c.metrics.*field;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

/// One row per (scenario, metric): base mean, DKI mean and gain in percent.
inline std::string summary_csv(const std::vector<CellResult>& cells)
{
    using detail::num;
    std::vector<std::string> scenarios;
    for (const auto& c : cells)
        if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end())
            scenarios.push_back(c.scenario);
    std::ostringstream out;
    out << "scenario,metric,base,dki,gain_percent\n";
    for (const auto& sc : scenarios)
        for (const auto& row : metric_rows())
        {
            const double b = cell_mean(cells, sc, PlannerMode::base, row.field);
            const double d = cell_mean(cells, sc, PlannerMode::dki, row.field);
            out << sc << ",\"" << row.label << "\"," << num(b) << ',' << num(d) << ','
                << num(gain_percent(b, d, row.larger_is_better)) << '\n';
        }
    return out.str();
}

} // namespace dkisst
