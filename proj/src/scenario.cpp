#include "mrisk/scenario.hpp"

#include "mrisk/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace mrisk {
namespace {

using nlohmann::json;

ModelKind kind_from_string(const std::string& s) {
    if (s == "constant_vol") return ModelKind::ConstantVol;
    if (s == "local_vol") return ModelKind::LocalVol;
    if (s == "slv") return ModelKind::Slv;
    throw config_error("unknown model kind '" + s + "'");
}

std::string to_string(ModelKind k) {
    switch (k) {
    case ModelKind::ConstantVol: return "constant_vol";
    case ModelKind::LocalVol: return "local_vol";
    case ModelKind::Slv: return "slv";
    }
    return "constant_vol";
}

ModelSpec parse_model(const json& j, const ScenarioConfig& cfg) {
    ModelSpec m;
    m.kind = kind_from_string(j.at("kind").get<std::string>());
    m.label = j.at("label").get<std::string>();
    m.spot = cfg.spot;
    m.drift = cfg.drift;
    switch (m.kind) {
    case ModelKind::ConstantVol:
        m.const_vol = j.at("vol").get<double>();
        break;
    case ModelKind::LocalVol:
        m.surface = cfg.surface;
        break;
    case ModelKind::Slv: {
        const json& s = j.at("slv");
        SlvParams p;
        p.eta = s.at("eta").get<double>();
        p.kappa = s.at("kappa").get<double>();
        p.rho = s.at("rho").get<double>();
        m.surface = cfg.surface;
        m.slv = p;
        break;
    }
    }
    return m;
}

json model_to_json(const ModelSpec& m) {
    json j;
    j["kind"] = to_string(m.kind);
    j["label"] = m.label;
    if (m.const_vol) j["vol"] = *m.const_vol;
    if (m.slv) j["slv"] = {{"eta", m.slv->eta}, {"kappa", m.slv->kappa}, {"rho", m.slv->rho}};
    return j;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

json cell_to_json(const CellOutcome& cell) {
    const MrpReport& r = cell.report;
    json j;
    j["market_label"] = cell.market_label;
    j["mrp_nats"] = num_or_null(r.mrp_horizon);
    j["mrp_annual_pct"] = num_or_null(100.0 * r.mrp_annual);
    j["er_annual_pct"] = num_or_null(100.0 * r.er_annual);
    j["material"] = r.material;
    j["infinite"] = r.infinite;
    j["infinite_buckets"] = r.infinite_buckets;
    const DecompositionLadder& ladder = *r.ladder;
    j["ladder"] = {{"raw_pct", num_or_null(100.0 * ladder.mrp_raw)},
                   {"mean_pct", num_or_null(100.0 * ladder.mrp_mean_corrected)},
                   {"meanvar_pct", num_or_null(100.0 * ladder.mrp_mean_var_corrected)}};
    json payoff = json::array();
    for (int i = 0; i < r.payoff.scheme.n_buckets(); ++i)
        payoff.push_back({{"lo", r.payoff.scheme.lo(i)},
                          {"hi", r.payoff.scheme.hi(i)},
                          {"f", num_or_null(r.payoff.values[static_cast<std::size_t>(i)])}});
    j["payoff"] = payoff;
    j["diagnostics"] = {{"floored_vol_steps", cell.diagnostics.floored_vol_steps},
                        {"floored_x_steps", cell.diagnostics.floored_x_steps},
                        {"empty_leverage_bins", cell.diagnostics.empty_leverage_bins}};
    return j;
}

struct Side {
    std::vector<double> samples;
    SimDiagnostics diag;
    std::optional<LeverageTable> table;
};

Side simulate_side(const ScenarioConfig& cfg, const ModelSpec& model, std::uint64_t seed,
                   unsigned threads) {
    const TimeGrid grid = cfg.grid();
    Side side;
    PathSet paths = [&]() -> PathSet {
        if (model.kind == ModelKind::Slv) {
            SlvSimulation sim = simulate_slv(model, grid, cfg.n_paths, seed, threads);
            side.table = std::move(sim.table);
            return std::move(sim.paths);
        }
        return simulate_paths(model, grid, cfg.n_paths, seed, threads);
    }();
    side.diag = paths.diagnostics;
    if (cfg.overlay) {
        const PathSet targeted = apply_overlay(paths, cfg.vt, threads);
        side.diag += targeted.diagnostics;
        side.samples = extract_variable(targeted, cfg.variable);
    } else {
        side.samples = extract_variable(paths, cfg.variable);
    }
    return side;
}

ScenarioResult run_cells(const ScenarioConfig& cfg, unsigned threads) {
    ScenarioResult result;
    result.config = cfg;

    Side booking = simulate_side(cfg, cfg.booking, cfg.seed_booking, threads);
    result.booking_table = std::move(booking.table);

    for (const ModelSpec& market : cfg.markets) {
        Side m = simulate_side(cfg, market, cfg.seed_market, threads);
        CellOutcome cell;
        cell.market_label = market.label;
        cell.report = evaluate_cell(booking.samples, m.samples, cfg.n_buckets, cfg.horizon_years,
                                    cfg.rates, cfg.smoothing);
        cell.diagnostics = booking.diag;
        cell.diagnostics += m.diag;
        cell.market_table = std::move(m.table);
        result.any_infinite = result.any_infinite || cell.report.infinite;
        result.cells.push_back(std::move(cell));
    }
    std::sort(result.cells.begin(), result.cells.end(),
              [](const CellOutcome& a, const CellOutcome& b) {
                  return a.market_label < b.market_label;
              });
    return result;
}

std::string sanitize(const std::string& label) {
    std::string out = label;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw simulation_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw simulation_error("failed writing '" + path.string() + "'");
}

std::string payoff_csv(const BucketScheme& scheme, const std::vector<double>& b,
                       const std::vector<double>& m, const std::vector<double>& f) {
    std::string out = "bucket_lo,bucket_hi,b,m,f\n";
    for (int i = 0; i < scheme.n_buckets(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        out += fmt(scheme.lo(i)) + "," + fmt(scheme.hi(i)) + "," + fmt(b[idx]) + "," +
               fmt(m[idx]) + "," + fmt(f[idx]) + "\n";
    }
    return out;
}

json leverage_to_json(const std::string& label, const std::string& role,
                      const LeverageTable& table) {
    json j;
    j["label"] = label;
    j["role"] = role;
    j["identity"] = table.identity;
    j["empty_bins"] = table.empty_bins;
    json steps = json::array();
    for (const auto& step : table.steps) {
        json bins = json::array();
        for (const auto& bin : step.bins)
            bins.push_back({{"bin_lo", bin.lo}, {"bin_hi", bin.hi}, {"leverage", bin.leverage}});
        steps.push_back({{"time", step.time}, {"bins", bins}});
    }
    j["steps"] = steps;
    return j;
}

void write_cell_csvs(const std::filesystem::path& dir, const CellOutcome& cell) {
    const MrpReport& r = cell.report;
    const std::string stem = "payoff_" + sanitize(cell.market_label);

    write_text_file(dir / (stem + "_raw.csv"),
                    payoff_csv(r.payoff.scheme, r.booking_hist.probs, r.market_hist.probs,
                               r.payoff.values));

    const DecompositionLadder& ladder = *r.ladder;
    const PayoffCurve mean_f = optimal_payoff(ladder.mean_hist, ladder.market_hist);
    write_text_file(dir / (stem + "_mean.csv"),
                    payoff_csv(mean_f.scheme, ladder.mean_hist.probs, ladder.market_hist.probs,
                               mean_f.values));

    write_text_file(dir / (stem + "_meanvar.csv"),
                    payoff_csv(ladder.residual_payoff.scheme, ladder.meanvar_hist.probs,
                               ladder.market_hist.probs, ladder.residual_payoff.values));
}

} // namespace

ScenarioConfig ScenarioConfig::from_json(const json& doc) {
    ScenarioConfig cfg;
    try {
        cfg.spot = doc.value("spot", cfg.spot);
        cfg.drift = doc.value("drift", cfg.drift);
        cfg.steps_per_year = doc.value("steps_per_year", cfg.steps_per_year);

        const json& s = doc.at("surface");
        cfg.surface_params.tenors = s.at("tenors").get<std::vector<double>>();
        cfg.surface_params.atm_vols = s.at("atm_vols").get<std::vector<double>>();
        cfg.surface_params.skew = s.value("skew", 0.0);
        cfg.surface_params.smile = s.value("smile", 0.0);
        cfg.surface_params.vol_floor = s.value("vol_floor", cfg.surface_params.vol_floor);
        cfg.surface_params.vol_cap = s.value("vol_cap", cfg.surface_params.vol_cap);
        cfg.surface = std::make_shared<const ImpliedVolSurface>(cfg.surface_params);

        cfg.booking = parse_model(doc.at("booking_model"), cfg);
        for (const json& m : doc.at("market_models")) cfg.markets.push_back(parse_model(m, cfg));

        if (doc.contains("vol_target")) {
            const json& v = doc.at("vol_target");
            cfg.vt.target_vol = v.value("target_vol", cfg.vt.target_vol);
            cfg.vt.window = v.value("window", cfg.vt.window);
            cfg.vt.annualization = v.value("annualization", cfg.vt.annualization);
            cfg.vt.estimator_floor = v.value("estimator_floor", cfg.vt.estimator_floor);
        }
        cfg.overlay = doc.value("overlay", cfg.overlay);
        cfg.variable = path_variable_from_string(doc.value("variable", std::string("terminal")));
        cfg.horizon_years = doc.value("horizon_years", cfg.horizon_years);
        cfg.n_paths = doc.value("n_paths", cfg.n_paths);
        cfg.n_buckets = doc.value("n_buckets", cfg.n_buckets);
        if (doc.contains("seeds")) {
            cfg.seed_booking = doc.at("seeds").value("booking", cfg.seed_booking);
            cfg.seed_market = doc.at("seeds").value("market", cfg.seed_market);
        }
        if (doc.contains("rates")) {
            const json& r = doc.at("rates");
            cfg.rates.rfr = r.value("rfr", cfg.rates.rfr);
            cfg.rates.cr = r.value("cr", cfg.rates.cr);
            cfg.rates.materiality_threshold =
                r.value("materiality_threshold", cfg.rates.materiality_threshold);
        }
        cfg.smoothing = doc.value("smoothing", cfg.smoothing);
        cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return from_json(doc);
}

void ScenarioConfig::validate(bool require_distinct_seeds) const {
    if (!(spot > 0.0)) throw config_error("spot must be positive");
    if (!std::isfinite(drift)) throw config_error("drift must be finite");
    if (steps_per_year < 1) throw config_error("steps_per_year must be at least 1");
    if (!surface) throw config_error("scenario needs a surface");
    booking.validate();
    if (markets.empty()) throw config_error("market_models must be non-empty");
    for (const ModelSpec& m : markets) m.validate();

    std::vector<std::string> labels{booking.label};
    for (const ModelSpec& m : markets) labels.push_back(m.label);
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
        throw config_error("model labels must be unique");

    vt.validate();
    if (overlay && vt.annualization != steps_per_year)
        throw config_error("vol-target annualization must match steps_per_year");
    if (!(horizon_years > 0.0)) throw config_error("horizon must be positive");
    grid().validate();
    if (n_paths < 1000) throw config_error("n_paths must be at least 1000");
    if (n_buckets < 2) throw config_error("need at least 2 buckets");
    rates.validate();
    if (require_distinct_seeds && seed_booking == seed_market)
        throw config_error("booking and market seeds must differ");
}

TimeGrid ScenarioConfig::grid() const {
    TimeGrid g;
    g.steps_per_year = steps_per_year;
    g.n_steps = static_cast<int>(std::llround(horizon_years * steps_per_year));
    if (g.n_steps < 1) throw config_error("horizon shorter than one step");
    g.warmup_steps = overlay ? vt.window : 0;
    return g;
}

const ModelSpec& ScenarioConfig::find_model(const std::string& label) const {
    if (booking.label == label) return booking;
    for (const ModelSpec& m : markets)
        if (m.label == label) return m;
    throw config_error("unknown model label '" + label + "'");
}

json ScenarioConfig::echo() const {
    json j;
    j["spot"] = spot;
    j["drift"] = drift;
    j["steps_per_year"] = steps_per_year;
    j["surface"] = {{"tenors", surface_params.tenors}, {"atm_vols", surface_params.atm_vols},
                    {"skew", surface_params.skew},     {"smile", surface_params.smile},
                    {"vol_floor", surface_params.vol_floor}, {"vol_cap", surface_params.vol_cap}};
    j["booking_model"] = model_to_json(booking);
    json mm = json::array();
    for (const ModelSpec& m : markets) mm.push_back(model_to_json(m));
    j["market_models"] = mm;
    j["vol_target"] = {{"target_vol", vt.target_vol},
                       {"window", vt.window},
                       {"annualization", vt.annualization},
                       {"estimator_floor", vt.estimator_floor}};
    j["overlay"] = overlay;
    j["variable"] = to_string(variable);
    j["horizon_years"] = horizon_years;
    j["n_paths"] = n_paths;
    j["n_buckets"] = n_buckets;
    j["seeds"] = {{"booking", seed_booking}, {"market", seed_market}};
    j["rates"] = {{"rfr", rates.rfr},
                  {"cr", rates.cr},
                  {"materiality_threshold", rates.materiality_threshold}};
    j["smoothing"] = smoothing;
    return j;
}

json ScenarioResult::report_json() const {
    json doc;
    doc["config_echo"] = config.echo();
    json cells_json = json::array();
    for (const CellOutcome& cell : cells) cells_json.push_back(cell_to_json(cell));
    doc["cells"] = cells_json;
    return doc;
}

ScenarioResult run_scenario(const ScenarioConfig& config, unsigned threads) {
    config.validate(true);
    return run_cells(config, threads);
}

ScenarioResult cross_check(const ScenarioConfig& config, const std::string& booking_label,
                           const std::string& market_label, unsigned threads) {
    ScenarioConfig pair = config;
    pair.booking = config.find_model(booking_label);
    pair.markets = {config.find_model(market_label)};
    if (pair.booking.label == pair.markets.front().label) {
        // One entry in both roles: keep the labels distinguishable in the report.
        pair.booking.label += " (booking)";
    }
    pair.validate(false);
    return run_cells(pair, threads);
}

void write_outputs(const ScenarioResult& result, const std::string& output_dir) {
    const std::filesystem::path dir(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw simulation_error("cannot create output directory '" + output_dir + "'");

    write_text_file(dir / "report.json", result.report_json().dump(2) + "\n");

    for (const CellOutcome& cell : result.cells) {
        write_cell_csvs(dir, cell);
        if (cell.market_table)
            write_text_file(dir / ("leverage_market_" + sanitize(cell.market_label) + ".json"),
                            leverage_to_json(cell.market_label, "market", *cell.market_table)
                                    .dump(2) +
                                "\n");
    }
    if (result.booking_table)
        write_text_file(dir / ("leverage_booking_" + sanitize(result.config.booking.label) +
                               ".json"),
                        leverage_to_json(result.config.booking.label, "booking",
                                         *result.booking_table)
                                .dump(2) +
                            "\n");
}

} // namespace mrisk
