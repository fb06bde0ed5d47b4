#pragma once

#include "mrisk/surface.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mrisk {

enum class ModelKind { ConstantVol, LocalVol, Slv };

// Lognormal multiplier on the local vol: vol-of-vol eta, mean reversion
// kappa, spot correlation rho. ln Z starts at 0 and follows an OU process.
struct SlvParams {
    double eta = 0.0;
    double kappa = 0.0;
    double rho = 0.0;
    double z0 = 1.0; // fixed at 1
};

// Tagged description of one diffusion for the underlying index.
struct ModelSpec {
    ModelKind kind = ModelKind::ConstantVol;
    std::string label;
    double spot = 100.0;
    double drift = 0.0;
    std::optional<double> const_vol;                 // ConstantVol only
    std::shared_ptr<const ImpliedVolSurface> surface; // LocalVol, Slv
    std::optional<SlvParams> slv;                     // Slv only

    // Throws config_error unless exactly the fields required by `kind` are set.
    void validate() const;
};

struct TimeGrid {
    int steps_per_year = 252; // annualization factor A
    int n_steps = 0;          // post-inception steps
    int warmup_steps = 0;     // pre-inception history for the realized-vol window

    void validate() const;
    double dt() const { return 1.0 / steps_per_year; }
    int n_cols() const { return warmup_steps + n_steps + 1; }
    // Calendar time of a column; negative during warmup.
    double time_at(int col) const { return (col - warmup_steps) * dt(); }
};

struct SimDiagnostics {
    std::uint64_t floored_vol_steps = 0;  // realized-vol floors + local-vol clamps
    std::uint64_t floored_x_steps = 0;    // overlay positivity floors
    std::uint64_t empty_leverage_bins = 0;

    SimDiagnostics& operator+=(const SimDiagnostics& o) {
        floored_vol_steps += o.floored_vol_steps;
        floored_x_steps += o.floored_x_steps;
        empty_leverage_bins += o.empty_leverage_bins;
        return *this;
    }
};

// Matrix of simulated daily index levels, one row per path. Column
// `warmup_steps` is inception and equals the spot on every path.
class PathSet {
  public:
    PathSet(TimeGrid grid, std::size_t n_paths, std::uint64_t seed, std::string model_label);

    double& at(std::size_t path, int col) { return levels_[path * cols_ + col]; }
    double at(std::size_t path, int col) const { return levels_[path * cols_ + col]; }
    const double* row(std::size_t path) const { return levels_.data() + path * cols_; }

    std::size_t n_paths() const { return n_paths_; }
    int n_cols() const { return static_cast<int>(cols_); }
    const TimeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& model_label() const { return model_label_; }

    SimDiagnostics diagnostics;

  private:
    TimeGrid grid_;
    std::size_t n_paths_ = 0;
    std::size_t cols_ = 0;
    std::uint64_t seed_ = 0;
    std::string model_label_;
    std::vector<double> levels_;
};

// Per-step, per-bin output of the particle calibration. `leverage` is the
// ratio local vol / sqrt(E[Z^2 | bin]) sampled at the bin's mean spot; the
// simulation applies the same ratio with the local vol evaluated at the
// particle's own spot.
struct LeverageTable {
    struct Bin {
        double lo = 0.0;
        double hi = 0.0;
        double ez2 = 1.0;
        double mean_spot = 0.0;
        double leverage = 0.0;
    };
    struct Step {
        double time = 0.0;
        std::vector<Bin> bins;
    };

    bool identity = false; // eta == 0: leverage is the Dupire local vol itself
    std::vector<Step> steps;
    std::uint64_t empty_bins = 0;

    // E[Z^2 | spot bin] lookup for one step.
    double ez2_at(int step, double spot) const;
};

inline constexpr int kLeverageBins = 50;
inline constexpr double kEz2Floor = 1e-4;

// Daily log-Euler paths (exact lognormal stepping for constant vol, exact OU
// transition for ln Z). Path j depends only on (seed, j); `threads` never
// changes the result. Warmup history is generated with the same dynamics and
// re-anchored so the inception column equals the spot exactly.
PathSet simulate_paths(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                       std::uint64_t seed, unsigned threads = 1);

// Slv paths together with the leverage table the run calibrated online (the
// particles are the output paths). Identity table when eta == 0.
struct SlvSimulation {
    PathSet paths;
    LeverageTable table;
};

SlvSimulation simulate_slv(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                           std::uint64_t seed, unsigned threads = 1);

// Binned particle calibration: equal-population spot bins per step, with
// L^2(S,t) * E[Z^2 | bin] matching the Dupire local variance. Returns the
// identity table immediately when eta == 0. The calibration runs risk-neutral
// (zero drift) from the reference spot below; feed the table to simulations
// sharing that numeraire, e.g. pricing checks.
inline constexpr double kCalibrationSpot = 100.0;

LeverageTable calibrate_slv_leverage(const ImpliedVolSurface& surface, const SlvParams& slv,
                                     const TimeGrid& grid, std::size_t n_paths,
                                     std::uint64_t seed, unsigned threads = 1);

// SLV simulation against a frozen leverage table (the re-simulation route;
// `simulate_paths` calibrates online with the particles themselves).
PathSet simulate_slv_with_table(const ModelSpec& model, const LeverageTable& table,
                                const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                unsigned threads = 1);

} // namespace mrisk
