#include "mrisk/market_models.hpp"

#include "mrisk/errors.hpp"
#include "mrisk/parallel.hpp"
#include "mrisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mrisk {
namespace {

// One daily step, shared by every model kind so that degenerate parameter
// choices reproduce each other bit for bit.
inline double log_euler(double level, double drift, double vol, double dt, double sqrt_dt,
                        double z) {
    return level * std::exp((drift - 0.5 * vol * vol) * dt + vol * sqrt_dt * z);
}

// Exact transition of ln Z over one step: ln Z' = ln Z * decay + shift + shock * z.
struct OuStep {
    double decay = 1.0;
    double shift = 0.0;
    double shock = 0.0;
};

OuStep make_ou_step(const SlvParams& slv, double h) {
    OuStep s;
    if (slv.kappa > 0.0) {
        s.decay = std::exp(-slv.kappa * h);
        const double theta = -slv.eta * slv.eta / (2.0 * slv.kappa);
        s.shift = theta * (1.0 - s.decay);
        s.shock = slv.eta * std::sqrt((1.0 - std::exp(-2.0 * slv.kappa * h)) / (2.0 * slv.kappa));
    } else {
        s.decay = 1.0;
        s.shift = -0.5 * slv.eta * slv.eta * h;
        s.shock = slv.eta * std::sqrt(h);
    }
    return s;
}

// Vol-lookup time and forward for each step; times during warmup clamp to 0.
struct StepContext {
    std::vector<double> t_vol;
    std::vector<double> forward;
};

StepContext make_step_context(const ModelSpec& model, const TimeGrid& grid) {
    StepContext ctx;
    const int n = grid.n_cols() - 1;
    ctx.t_vol.resize(n);
    ctx.forward.resize(n);
    for (int k = 0; k < n; ++k) {
        const double t = std::max(grid.time_at(k), 0.0);
        ctx.t_vol[k] = t;
        ctx.forward[k] = model.spot * std::exp(model.drift * t);
    }
    return ctx;
}

// Rescale each path so the inception column hits the spot exactly.
void anchor_at_inception(PathSet& paths, double spot) {
    const int w = paths.grid().warmup_steps;
    if (w == 0) return;
    const int cols = paths.n_cols();
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
        const double scale = spot / paths.at(p, w);
        for (int c = 0; c < cols; ++c) paths.at(p, c) *= scale;
        paths.at(p, w) = spot;
    }
}

// Equal-population bin edges from a sorted particle cloud.
std::vector<double> quantile_edges(const std::vector<double>& sorted, int n_bins) {
    std::vector<double> edges(static_cast<std::size_t>(n_bins) + 1);
    const std::size_t n = sorted.size();
    edges[0] = sorted.front();
    for (int j = 1; j < n_bins; ++j)
        edges[j] = sorted[(n * static_cast<std::size_t>(j)) / n_bins];
    edges[n_bins] = sorted.back();
    return edges;
}

// Bin index from the interior edges: strictly below edges[1] lands in bin 0,
// at or above edges[n_bins-1] lands in the last bin.
inline int bin_of(const std::vector<double>& edges, double s) {
    const auto first = edges.begin() + 1;
    const auto last = edges.end() - 1;
    return static_cast<int>(std::upper_bound(first, last, s) - first);
}

SlvSimulation simulate_slv_impl(const ModelSpec& model, const LeverageTable* frozen,
                                const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                unsigned threads) {
    const SlvParams slv = *model.slv;
    const ImpliedVolSurface& surface = *model.surface;
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double rho = slv.rho;
    const double rho_orth = std::sqrt(1.0 - rho * rho);
    const OuStep ou = make_ou_step(slv, dt);
    const StepContext ctx = make_step_context(model, grid);
    const bool identity = slv.eta == 0.0;

    SlvSimulation out{PathSet(grid, n_paths, seed, model.label), LeverageTable{}};
    out.table.identity = identity;

    std::vector<double> ln_z(n_paths, std::log(slv.z0));
    for (std::size_t p = 0; p < n_paths; ++p) out.paths.at(p, 0) = model.spot;

    std::vector<double> sorted(identity ? 0 : n_paths);
    std::vector<int> bin_idx(identity ? 0 : n_paths);
    std::vector<double> ez2(kLeverageBins, 1.0);

    const int n_steps_total = grid.n_cols() - 1;
    for (int k = 0; k < n_steps_total; ++k) {
        const double t = ctx.t_vol[k];
        const double fwd = ctx.forward[k];

        if (!identity && frozen == nullptr) {
            // Calibrate this step's conditional Z^2 on the particles themselves.
            for (std::size_t p = 0; p < n_paths; ++p) sorted[p] = out.paths.at(p, k);
            std::sort(sorted.begin(), sorted.end());
            const std::vector<double> edges = quantile_edges(sorted, kLeverageBins);

            std::vector<double> sum_z2(kLeverageBins, 0.0);
            std::vector<double> sum_s(kLeverageBins, 0.0);
            std::vector<std::size_t> count(kLeverageBins, 0);
            for (std::size_t p = 0; p < n_paths; ++p) {
                const double s = out.paths.at(p, k);
                const int b = bin_of(edges, s);
                bin_idx[p] = b;
                const double z = std::exp(ln_z[p]);
                sum_z2[b] += z * z;
                sum_s[b] += s;
                ++count[b];
            }

            LeverageTable::Step step;
            step.time = grid.time_at(k);
            step.bins.resize(kLeverageBins);
            for (int b = 0; b < kLeverageBins; ++b) {
                int src = b;
                if (count[b] == 0) {
                    // Inherit the nearest populated bin, preferring the lower index.
                    for (int d = 1; d < kLeverageBins; ++d) {
                        if (b - d >= 0 && count[b - d] > 0) { src = b - d; break; }
                        if (b + d < kLeverageBins && count[b + d] > 0) { src = b + d; break; }
                    }
                    ++out.table.empty_bins;
                }
                const double e = std::max(sum_z2[src] / static_cast<double>(count[src]), kEz2Floor);
                ez2[b] = e;
                auto& bin = step.bins[b];
                bin.lo = edges[b];
                bin.hi = edges[b + 1];
                bin.ez2 = e;
                bin.mean_spot = sum_s[src] / static_cast<double>(count[src]);
                bin.leverage = surface.local_vol(bin.mean_spot, t, fwd) / std::sqrt(e);
            }
            out.table.steps.push_back(std::move(step));
        }

        parallel_for(n_paths, threads, [&](std::size_t p) {
            const double s = out.paths.at(p, k);
            const double z1 = rng::normal(seed, p, static_cast<std::uint64_t>(k), 0);
            const double z2 = rng::normal(seed, p, static_cast<std::uint64_t>(k), 1);
            const double zz = rho * z1 + rho_orth * z2;
            const double mult = std::exp(ln_z[p]);
            const double loc = surface.local_vol(s, t, fwd);
            double e = 1.0;
            if (!identity) {
                if (frozen != nullptr)
                    e = frozen->ez2_at(k, s);
                else
                    e = ez2[bin_idx[p]];
            }
            const double vol = loc / std::sqrt(e) * mult;
            out.paths.at(p, k + 1) = log_euler(s, model.drift, vol, dt, sqrt_dt, z1);
            ln_z[p] = ln_z[p] * ou.decay + ou.shift + ou.shock * zz;
        });
    }

    out.paths.diagnostics.empty_leverage_bins = out.table.empty_bins;
    anchor_at_inception(out.paths, model.spot);
    return out;
}

PathSet simulate_const_or_local(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed, unsigned threads) {
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const bool local = model.kind == ModelKind::LocalVol;
    const double const_vol = local ? 0.0 : *model.const_vol;
    const StepContext ctx = make_step_context(model, grid);

    PathSet paths(grid, n_paths, seed, model.label);
    const int n_steps_total = grid.n_cols() - 1;
    parallel_for(n_paths, threads, [&](std::size_t p) {
        double s = model.spot;
        paths.at(p, 0) = s;
        for (int k = 0; k < n_steps_total; ++k) {
            const double vol =
                local ? model.surface->local_vol(s, ctx.t_vol[k], ctx.forward[k]) : const_vol;
            const double z = rng::normal(seed, p, static_cast<std::uint64_t>(k), 0);
            s = log_euler(s, model.drift, vol, dt, sqrt_dt, z);
            paths.at(p, k + 1) = s;
        }
    });
    anchor_at_inception(paths, model.spot);
    return paths;
}

} // namespace

void ModelSpec::validate() const {
    if (label.empty()) throw config_error("model label must be non-empty");
    if (!(spot > 0.0) || !std::isfinite(spot))
        throw config_error("model '" + label + "': spot must be positive and finite");
    if (!std::isfinite(drift)) throw config_error("model '" + label + "': drift must be finite");
    switch (kind) {
    case ModelKind::ConstantVol:
        if (!const_vol) throw config_error("model '" + label + "': constant-vol model needs a vol");
        if (!(*const_vol >= 0.0) || !std::isfinite(*const_vol))
            throw config_error("model '" + label + "': vol must be non-negative and finite");
        if (surface || slv)
            throw config_error("model '" + label + "': constant-vol model takes no surface or slv");
        break;
    case ModelKind::LocalVol:
        if (!surface) throw config_error("model '" + label + "': local-vol model needs a surface");
        if (const_vol || slv)
            throw config_error("model '" + label + "': local-vol model takes only a surface");
        break;
    case ModelKind::Slv:
        if (!surface || !slv)
            throw config_error("model '" + label + "': slv model needs a surface and slv params");
        if (const_vol) throw config_error("model '" + label + "': slv model takes no constant vol");
        if (!(slv->eta >= 0.0) || !std::isfinite(slv->eta))
            throw config_error("model '" + label + "': eta must be non-negative");
        if (!(slv->kappa >= 0.0) || !std::isfinite(slv->kappa))
            throw config_error("model '" + label + "': kappa must be non-negative");
        if (!(std::abs(slv->rho) <= 1.0))
            throw config_error("model '" + label + "': rho must lie in [-1, 1]");
        if (slv->z0 != 1.0) throw config_error("model '" + label + "': z0 is fixed at 1");
        break;
    }
}

void TimeGrid::validate() const {
    if (steps_per_year < 1) throw config_error("steps_per_year must be at least 1");
    if (n_steps < 1) throw config_error("n_steps must be at least 1");
    if (warmup_steps < 0) throw config_error("warmup_steps must be non-negative");
}

PathSet::PathSet(TimeGrid grid, std::size_t n_paths, std::uint64_t seed, std::string model_label)
    : grid_(grid), n_paths_(n_paths), cols_(static_cast<std::size_t>(grid.n_cols())), seed_(seed),
      model_label_(std::move(model_label)), levels_(n_paths * cols_) {}

double LeverageTable::ez2_at(int step, double spot) const {
    if (identity) return 1.0;
    const auto& bins = steps[static_cast<std::size_t>(step)].bins;
    int lo = 0;
    int hi = static_cast<int>(bins.size()) - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (spot >= bins[static_cast<std::size_t>(mid)].lo)
            lo = mid;
        else
            hi = mid - 1;
    }
    return bins[static_cast<std::size_t>(lo)].ez2;
}

PathSet simulate_paths(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                       std::uint64_t seed, unsigned threads) {
    if (model.kind == ModelKind::Slv) return simulate_slv(model, grid, n_paths, seed, threads).paths;
    model.validate();
    grid.validate();
    if (n_paths == 0) throw config_error("n_paths must be at least 1");
    const std::uint64_t clamps_before = model.surface ? model.surface->clamp_count() : 0;
    PathSet paths = simulate_const_or_local(model, grid, n_paths, seed, threads);
    if (model.surface)
        paths.diagnostics.floored_vol_steps += model.surface->clamp_count() - clamps_before;
    return paths;
}

SlvSimulation simulate_slv(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                           std::uint64_t seed, unsigned threads) {
    model.validate();
    grid.validate();
    if (model.kind != ModelKind::Slv) throw config_error("simulate_slv needs an slv model");
    if (n_paths == 0) throw config_error("n_paths must be at least 1");
    const std::uint64_t clamps_before = model.surface->clamp_count();
    SlvSimulation out = simulate_slv_impl(model, nullptr, grid, n_paths, seed, threads);
    out.paths.diagnostics.floored_vol_steps += model.surface->clamp_count() - clamps_before;
    return out;
}

LeverageTable calibrate_slv_leverage(const ImpliedVolSurface& surface, const SlvParams& slv,
                                     const TimeGrid& grid, std::size_t n_paths,
                                     std::uint64_t seed, unsigned threads) {
    grid.validate();
    if (n_paths == 0) throw config_error("n_paths must be at least 1");
    if (slv.eta == 0.0) return LeverageTable{true, {}, 0};
    ModelSpec model;
    model.kind = ModelKind::Slv;
    model.label = "leverage-calibration";
    model.spot = kCalibrationSpot;
    model.drift = 0.0; // risk-neutral calibration; see header
    model.surface = std::shared_ptr<const ImpliedVolSurface>(&surface, [](const auto*) {});
    model.slv = slv;
    return simulate_slv_impl(model, nullptr, grid, n_paths, seed, threads).table;
}

PathSet simulate_slv_with_table(const ModelSpec& model, const LeverageTable& table,
                                const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                unsigned threads) {
    model.validate();
    grid.validate();
    if (model.kind != ModelKind::Slv) throw config_error("leverage tables apply to slv models only");
    if (n_paths == 0) throw config_error("n_paths must be at least 1");
    if (!table.identity && static_cast<int>(table.steps.size()) != grid.n_cols() - 1)
        throw config_error("leverage table does not match the time grid");
    const std::uint64_t clamps_before = model.surface->clamp_count();
    PathSet paths = simulate_slv_impl(model, &table, grid, n_paths, seed, threads).paths;
    paths.diagnostics.floored_vol_steps += model.surface->clamp_count() - clamps_before;
    return paths;
}

} // namespace mrisk
