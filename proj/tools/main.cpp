#include "mrisk/errors.hpp"
#include "mrisk/parallel.hpp"
#include "mrisk/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <string>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string output_dir;
    std::size_t paths = 0;
    std::uint64_t seed_booking = 0;
    std::uint64_t seed_market = 0;
    int buckets = 0;
    unsigned threads = mrisk::default_thread_count();

    CLI::Option* output_opt = nullptr;
    CLI::Option* paths_opt = nullptr;
    CLI::Option* seed_b_opt = nullptr;
    CLI::Option* seed_m_opt = nullptr;
    CLI::Option* buckets_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "Scenario config JSON")->required();
    f.output_opt = cmd->add_option("--output-dir", f.output_dir, "Report directory override");
    f.paths_opt = cmd->add_option("--paths", f.paths, "Monte-Carlo path count override");
    f.seed_b_opt = cmd->add_option("--seed-booking", f.seed_booking, "Booking seed override");
    f.seed_m_opt = cmd->add_option("--seed-market", f.seed_market, "Market seed override");
    f.buckets_opt = cmd->add_option("--buckets", f.buckets, "Bucket count override");
    cmd->add_option("--threads", f.threads, "Worker threads (default: hardware)");
}

std::string resolve_output_dir(const mrisk::ScenarioConfig& cfg, const CommonFlags& f) {
    return f.output_opt->count() ? f.output_dir : cfg.output_dir;
}

mrisk::ScenarioConfig load_config(const CommonFlags& f) {
    mrisk::ScenarioConfig cfg = mrisk::ScenarioConfig::from_file(f.config_path);
    if (f.paths_opt->count()) cfg.n_paths = f.paths;
    if (f.seed_b_opt->count()) cfg.seed_booking = f.seed_booking;
    if (f.seed_m_opt->count()) cfg.seed_market = f.seed_market;
    if (f.buckets_opt->count()) cfg.n_buckets = f.buckets;
    return cfg;
}

std::string pct_or_inf(double rate) {
    if (!std::isfinite(rate)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", 100.0 * rate);
    return buf;
}

int report_and_exit_code(const mrisk::ScenarioResult& result, const std::string& out_dir) {
    mrisk::write_outputs(result, out_dir);
    std::printf("%-28s %12s %12s %10s\n", "market", "MRP %pa", "ER %pa", "material");
    for (const mrisk::CellOutcome& cell : result.cells)
        std::printf("%-28s %12s %12s %10s\n", cell.market_label.c_str(),
                    pct_or_inf(cell.report.mrp_annual).c_str(),
                    pct_or_inf(cell.report.er_annual).c_str(),
                    cell.report.material ? "yes" : "no");
    std::printf("report: %s/report.json\n", out_dir.c_str());
    return result.any_infinite ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-risk reports for options on vol-targeted indices"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "Booking model against every market model");
    add_common_flags(run_cmd, run_flags);

    CommonFlags cc_flags;
    std::string booking_label, market_label;
    CLI::App* cc_cmd = app.add_subcommand("cross-check", "One pairwise cell by model labels");
    add_common_flags(cc_cmd, cc_flags);
    cc_cmd->add_option("booking_label", booking_label, "Model to treat as booking")->required();
    cc_cmd->add_option("market_label", market_label, "Model to treat as market")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const mrisk::ScenarioConfig cfg = load_config(run_flags);
            const mrisk::ScenarioResult result = mrisk::run_scenario(cfg, run_flags.threads);
            return report_and_exit_code(result, resolve_output_dir(cfg, run_flags));
        }
        const mrisk::ScenarioConfig cfg = load_config(cc_flags);
        const mrisk::ScenarioResult result =
            mrisk::cross_check(cfg, booking_label, market_label, cc_flags.threads);
        return report_and_exit_code(result, resolve_output_dir(cfg, cc_flags));
    } catch (const mrisk::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const mrisk::simulation_error& e) {
        std::fprintf(stderr, "simulation error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
