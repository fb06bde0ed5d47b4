#include "mrisk/vol_target.hpp"

#include "mrisk/errors.hpp"
#include "mrisk/parallel.hpp"

#include <atomic>
#include <cmath>

namespace mrisk {
namespace {

constexpr double kLevelFloorRatio = 1e-8; // of S_0

double window_vol_raw(const double* levels, int window, double ann_over_n) {
    double sum = 0.0;
    for (int k = 1; k <= window; ++k) {
        const double r = std::log(levels[k] / levels[k - 1]);
        sum += r * r;
    }
    return std::sqrt(ann_over_n * sum);
}

} // namespace

void VolTargetConfig::validate() const {
    if (!(target_vol > 0.0)) throw config_error("target_vol must be positive");
    if (window < 2) throw config_error("window must be at least 2");
    if (annualization < 1) throw config_error("annualization must be at least 1");
    if (!(estimator_floor > 0.0)) throw config_error("estimator_floor must be positive");
}

double realized_vol(std::span<const double> levels, const VolTargetConfig& config) {
    config.validate();
    if (levels.size() != static_cast<std::size_t>(config.window) + 1)
        throw config_error("realized_vol: need window + 1 levels");
    const double ann_over_n = static_cast<double>(config.annualization) / config.window;
    return std::max(window_vol_raw(levels.data(), config.window, ann_over_n),
                    config.estimator_floor);
}

PathSet apply_overlay(const PathSet& paths, const VolTargetConfig& config, unsigned threads) {
    config.validate();
    const TimeGrid& in_grid = paths.grid();
    if (in_grid.warmup_steps < config.window)
        throw config_error("overlay needs warmup history covering the estimator window");
    if (config.annualization != in_grid.steps_per_year)
        throw config_error("overlay annualization must match the grid's steps_per_year");

    TimeGrid out_grid = in_grid;
    out_grid.warmup_steps = 0;
    PathSet out(out_grid, paths.n_paths(), paths.seed(), paths.model_label());

    const int w = in_grid.warmup_steps;
    const int n_steps = in_grid.n_steps;
    const double ann_over_n = static_cast<double>(config.annualization) / config.window;
    std::atomic<std::uint64_t> vol_floors{0};
    std::atomic<std::uint64_t> level_floors{0};

    parallel_for(paths.n_paths(), threads, [&](std::size_t p) {
        const double* s = paths.row(p);
        const double spot = s[w];
        const double x_floor = kLevelFloorRatio * spot;
        std::uint64_t my_vol_floors = 0;
        std::uint64_t my_level_floors = 0;
        double x = spot;
        out.at(p, 0) = x;
        for (int i = 0; i < n_steps; ++i) {
            const int col = w + i;
            double sigma = window_vol_raw(s + col - config.window, config.window, ann_over_n);
            if (sigma < config.estimator_floor) {
                sigma = config.estimator_floor;
                ++my_vol_floors;
            }
            const double ret = (s[col + 1] - s[col]) / s[col];
            x *= 1.0 + (config.target_vol / sigma) * ret;
            if (x < x_floor) {
                x = x_floor;
                ++my_level_floors;
            }
            out.at(p, i + 1) = x;
        }
        if (my_vol_floors) vol_floors.fetch_add(my_vol_floors, std::memory_order_relaxed);
        if (my_level_floors) level_floors.fetch_add(my_level_floors, std::memory_order_relaxed);
    });

    out.diagnostics.floored_vol_steps = vol_floors.load();
    out.diagnostics.floored_x_steps = level_floors.load();
    return out;
}

PathVariable path_variable_from_string(const std::string& name) {
    if (name == "terminal") return PathVariable::Terminal;
    if (name == "average") return PathVariable::Average;
    if (name == "running_max") return PathVariable::RunningMax;
    throw config_error("unknown path variable '" + name + "'");
}

std::string to_string(PathVariable v) {
    switch (v) {
    case PathVariable::Terminal: return "terminal";
    case PathVariable::Average: return "average";
    case PathVariable::RunningMax: return "running_max";
    }
    return "terminal";
}

std::vector<double> extract_variable(const PathSet& paths, PathVariable mode) {
    const int w = paths.grid().warmup_steps;
    const int cols = paths.n_cols();
    std::vector<double> out(paths.n_paths());
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
        const double* row = paths.row(p);
        switch (mode) {
        case PathVariable::Terminal:
            out[p] = row[cols - 1];
            break;
        case PathVariable::Average: {
            double sum = 0.0;
            for (int c = w; c < cols; ++c) sum += row[c];
            out[p] = sum / (cols - w);
            break;
        }
        case PathVariable::RunningMax: {
            double m = row[w];
            for (int c = w + 1; c < cols; ++c) m = std::max(m, row[c]);
            out[p] = m;
            break;
        }
        }
    }
    return out;
}

} // namespace mrisk
