#pragma once

#include "mrisk/market_models.hpp"
#include "mrisk/risk_engine.hpp"
#include "mrisk/vol_target.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrisk {

// One scenario document: a shared market setup (spot, drift, surface), a
// booking model, the market models to hold it against, and the targeting,
// bucketing, and rate parameters.
struct ScenarioConfig {
    double spot = 100.0;
    double drift = 0.0;
    int steps_per_year = 252;
    ImpliedVolSurface::Params surface_params;
    std::shared_ptr<const ImpliedVolSurface> surface;

    ModelSpec booking;
    std::vector<ModelSpec> markets;

    VolTargetConfig vt;
    bool overlay = true; // apply the targeting overlay before extracting the variable
    PathVariable variable = PathVariable::Terminal;
    double horizon_years = 0.5;
    std::size_t n_paths = 100000;
    int n_buckets = 20;
    std::uint64_t seed_booking = 1;
    std::uint64_t seed_market = 2;
    RatesSpec rates;
    bool smoothing = false; // add-half bucket smoothing
    std::string output_dir = "out";

    static ScenarioConfig from_json(const nlohmann::json& doc);
    static ScenarioConfig from_file(const std::string& path);

    // Scenario-wide checks; distinct seeds are required for full runs but not
    // for pairwise cross-checks.
    void validate(bool require_distinct_seeds) const;

    // Daily grid covering the horizon, with warmup only when the overlay runs.
    TimeGrid grid() const;

    // Lookup across the booking model and all market models.
    const ModelSpec& find_model(const std::string& label) const;

    // Effective settings for the report; excludes output locations so that
    // reruns into different directories stay byte-identical.
    nlohmann::json echo() const;
};

struct CellOutcome {
    std::string market_label;
    MrpReport report;
    SimDiagnostics diagnostics; // booking + market + overlay counters
    std::optional<LeverageTable> market_table;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<CellOutcome> cells; // sorted by market label
    std::optional<LeverageTable> booking_table;
    bool any_infinite = false;

    nlohmann::json report_json() const;
};

// Booking model against every market model.
ScenarioResult run_scenario(const ScenarioConfig& config, unsigned threads = 1);

// One pairwise cell with any configured model in either role; equal seeds are
// allowed here (degeneracy checks).
ScenarioResult cross_check(const ScenarioConfig& config, const std::string& booking_label,
                           const std::string& market_label, unsigned threads = 1);

// report.json, per-cell payoff CSVs (raw, mean, meanvar), and leverage tables
// for the slv participants.
void write_outputs(const ScenarioResult& result, const std::string& output_dir);

} // namespace mrisk
