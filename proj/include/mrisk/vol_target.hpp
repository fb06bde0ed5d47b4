#pragma once

#include "mrisk/market_models.hpp"

#include <span>
#include <vector>

namespace mrisk {

struct VolTargetConfig {
    double target_vol = 0.10;      // annualized target
    int window = 40;               // trailing business days in the estimator
    int annualization = 252;       // A
    double estimator_floor = 0.001; // division-by-zero guard, annualized

    void validate() const;
};

// Trailing realized vol sqrt((A/n) * sum ln^2(S_k/S_{k-1})) over the window's
// n returns, floored at the estimator floor. `levels` holds n+1 consecutive
// daily levels ending at the estimation day.
double realized_vol(std::span<const double> levels, const VolTargetConfig& config);

// The targeting overlay: X_{i+1} = X_i * (1 + (target/sigma_i) * arithmetic
// return of S), with sigma_i estimated from the trailing window ending at
// step i. Requires warmup history covering the window; the output drops the
// warmup columns and starts at X_0 = S_0. X is floored at 1e-8 * S_0;
// estimator floors and level floors are counted in the output diagnostics.
PathSet apply_overlay(const PathSet& paths, const VolTargetConfig& config, unsigned threads = 1);

enum class PathVariable { Terminal, Average, RunningMax };

PathVariable path_variable_from_string(const std::string& name);
std::string to_string(PathVariable v);

// One value per path over the post-inception columns (inception included for
// average and running max).
std::vector<double> extract_variable(const PathSet& paths, PathVariable mode);

} // namespace mrisk
