#include "mrisk/market_models.hpp"

#include "mrisk/errors.hpp"
#include "mrisk/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace mrisk;

namespace {

std::shared_ptr<const ImpliedVolSurface> make_surface(double atm, double skew = 0.0,
                                                      double smile = 0.0) {
    ImpliedVolSurface::Params p;
    p.tenors = {0.25, 0.5, 1.0};
    p.atm_vols = {atm, atm, atm};
    p.skew = skew;
    p.smile = smile;
    return std::make_shared<const ImpliedVolSurface>(p);
}

ModelSpec const_model(double vol, double drift = 0.0) {
    ModelSpec m;
    m.kind = ModelKind::ConstantVol;
    m.label = "const";
    m.spot = 100.0;
    m.drift = drift;
    m.const_vol = vol;
    return m;
}

ModelSpec local_model(std::shared_ptr<const ImpliedVolSurface> s, double drift = 0.0) {
    ModelSpec m;
    m.kind = ModelKind::LocalVol;
    m.label = "local";
    m.spot = 100.0;
    m.drift = drift;
    m.surface = std::move(s);
    return m;
}

ModelSpec slv_model(std::shared_ptr<const ImpliedVolSurface> s, double eta, double kappa,
                    double rho, double drift = 0.0) {
    ModelSpec m;
    m.kind = ModelKind::Slv;
    m.label = "slv";
    m.spot = 100.0;
    m.drift = drift;
    m.surface = std::move(s);
    m.slv = SlvParams{eta, kappa, rho};
    return m;
}

bool identical_levels(const PathSet& a, const PathSet& b) {
    if (a.n_paths() != b.n_paths() || a.n_cols() != b.n_cols()) return false;
    for (std::size_t p = 0; p < a.n_paths(); ++p)
        for (int c = 0; c < a.n_cols(); ++c)
            if (a.at(p, c) != b.at(p, c)) return false;
    return true;
}

} // namespace

TEST_CASE("model validation rejects wrong field combinations") {
    ModelSpec m = const_model(0.2);
    m.surface = make_surface(0.2);
    CHECK_THROWS_AS(m.validate(), config_error);

    m = const_model(0.2);
    m.const_vol.reset();
    CHECK_THROWS_AS(m.validate(), config_error);

    m = local_model(nullptr);
    CHECK_THROWS_AS(m.validate(), config_error);

    m = slv_model(make_surface(0.2), 1.0, 5.0, -1.5);
    CHECK_THROWS_AS(m.validate(), config_error); // |rho| > 1

    m = slv_model(make_surface(0.2), 1.0, 5.0, 0.0);
    m.slv->z0 = 2.0;
    CHECK_THROWS_AS(m.validate(), config_error);

    m = const_model(0.2);
    m.spot = -1.0;
    CHECK_THROWS_AS(m.validate(), config_error);
}

TEST_CASE("zero vol gives the deterministic drift path") {
    const TimeGrid grid{252, 30, 0};
    const PathSet paths = simulate_paths(const_model(0.0, 0.03), grid, 3, 7);
    for (std::size_t p = 0; p < 3; ++p)
        for (int c = 0; c <= 30; ++c)
            CHECK(paths.at(p, c) ==
                  doctest::Approx(100.0 * std::exp(0.03 * grid.time_at(c))).epsilon(1e-12));
}

TEST_CASE("simulation is deterministic in the seed, not the thread count") {
    const TimeGrid grid{252, 40, 10};
    const ModelSpec m = slv_model(make_surface(0.25, -0.1), 1.5, 6.0, -0.5, -0.02);
    const PathSet a = simulate_paths(m, grid, 500, 42, 1);
    const PathSet b = simulate_paths(m, grid, 500, 42, 4);
    const PathSet c = simulate_paths(m, grid, 500, 43, 1);
    CHECK(identical_levels(a, b));
    CHECK(!identical_levels(a, c));
}

TEST_CASE("each path depends only on its own index") {
    const TimeGrid grid{252, 25, 0};
    const ModelSpec m = const_model(0.2, 0.01);
    const PathSet small = simulate_paths(m, grid, 10, 11);
    const PathSet large = simulate_paths(m, grid, 200, 11);
    for (std::size_t p = 0; p < 10; ++p)
        for (int c = 0; c <= 25; ++c) CHECK(small.at(p, c) == large.at(p, c));
}

TEST_CASE("warmup history is anchored to the spot at inception") {
    const TimeGrid grid{252, 20, 40};
    const PathSet paths = simulate_paths(const_model(0.3), grid, 50, 5);
    CHECK(paths.n_cols() == 61);
    for (std::size_t p = 0; p < 50; ++p) {
        CHECK(paths.at(p, 40) == 100.0);
        for (int c = 0; c < 61; ++c) CHECK(paths.at(p, c) > 0.0);
    }
    CHECK(grid.time_at(40) == 0.0);
    CHECK(grid.time_at(0) < 0.0);
}

TEST_CASE("driftless terminal mean stays on the spot") {
    const TimeGrid grid{252, 126, 0};
    const PathSet paths = simulate_paths(const_model(0.2395), grid, 50000, 1234);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
        const double s = paths.at(p, 126);
        sum += s;
        sum2 += s * s;
    }
    const double n = static_cast<double>(paths.n_paths());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 100.0) < 3.0 * se);
}

TEST_CASE("degenerate multiplier collapses slv onto local vol bit for bit") {
    const TimeGrid grid{252, 60, 40};
    const auto surface = make_surface(0.2395, -0.15, 0.25);
    const PathSet lv = simulate_paths(local_model(surface, -0.05), grid, 2000, 77);
    const PathSet slv = simulate_paths(slv_model(surface, 0.0, 10.0, -0.5, -0.05), grid, 2000, 77);
    CHECK(identical_levels(lv, slv));
}

TEST_CASE("flat surface collapses local vol onto constant vol bit for bit") {
    const TimeGrid grid{252, 60, 40};
    const auto surface = make_surface(0.2);
    const PathSet cv = simulate_paths(const_model(0.2, -0.05), grid, 2000, 77);
    const PathSet lv = simulate_paths(local_model(surface, -0.05), grid, 2000, 77);
    CHECK(identical_levels(cv, lv));
}

TEST_CASE("eta zero returns the identity leverage immediately") {
    const TimeGrid grid{252, 20, 0};
    const LeverageTable t =
        calibrate_slv_leverage(*make_surface(0.2), SlvParams{0.0, 5.0, 0.0}, grid, 1000, 9);
    CHECK(t.identity);
    CHECK(t.steps.empty());
    CHECK(t.ez2_at(3, 123.0) == 1.0);
}

TEST_CASE("calibrated leverage matches the local variance on re-simulation") {
    // Fresh particles simulated against the frozen table must satisfy
    // E[Z^2 | bin] * L^2 = Dupire variance on well-populated bins.
    const TimeGrid grid{252, 63, 0};
    const auto surface = make_surface(0.22, -0.08, 0.1);
    const SlvParams slv{1.0, 5.0, -0.3};
    const std::size_t n_paths = 50000;
    const LeverageTable table = calibrate_slv_leverage(*surface, slv, grid, n_paths, 2001);
    CHECK(!table.identity);
    CHECK(static_cast<int>(table.steps.size()) == 63);

    ModelSpec m;
    m.kind = ModelKind::Slv;
    m.label = "resim";
    m.spot = kCalibrationSpot;
    m.drift = 0.0;
    m.surface = surface;
    m.slv = slv;
    const PathSet paths = simulate_slv_with_table(m, table, grid, n_paths, 3001);

    // Walk Z alongside the stored levels to rebuild E[Z^2 | bin] per step.
    const double h = grid.dt();
    const double decay = std::exp(-slv.kappa * h);
    const double shift = -slv.eta * slv.eta / (2.0 * slv.kappa) * (1.0 - decay);
    const double shock = slv.eta * std::sqrt((1.0 - std::exp(-2.0 * slv.kappa * h)) / (2.0 * slv.kappa));
    const double orth = std::sqrt(1.0 - slv.rho * slv.rho);

    std::vector<double> ln_z(n_paths, 0.0);
    int checked = 0;
    for (int k = 0; k < 63; ++k) {
        const auto& bins = table.steps[static_cast<std::size_t>(k)].bins;
        std::vector<double> sum_z2(bins.size(), 0.0);
        std::vector<std::size_t> count(bins.size(), 0);
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double s = paths.at(p, k);
            std::size_t b = 0;
            while (b + 1 < bins.size() && s >= bins[b + 1].lo) ++b;
            const double z = std::exp(ln_z[p]);
            sum_z2[b] += z * z;
            ++count[b];
            const double z1 = rng::normal(3001, p, static_cast<std::uint64_t>(k), 0);
            const double z2 = rng::normal(3001, p, static_cast<std::uint64_t>(k), 1);
            ln_z[p] = ln_z[p] * decay + shift + shock * (slv.rho * z1 + orth * z2);
        }
        if (k % 9 != 0) continue; // spot-check a subset of steps
        const double t = std::max(grid.time_at(k), 0.0);
        double sq_err = 0.0;
        int used = 0;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            if (count[b] < n_paths / 100) continue;
            const double ez2 = sum_z2[b] / static_cast<double>(count[b]);
            const double lev = bins[b].leverage;
            const double dup = surface->local_vol(bins[b].mean_spot, t, kCalibrationSpot);
            const double rel = ez2 * lev * lev / (dup * dup) - 1.0;
            CHECK(std::abs(rel) < 0.20); // per bin, dominated by E[Z^2] noise on ~1000 particles
            sq_err += rel * rel;
            ++used;
            ++checked;
        }
        REQUIRE(used > 0);
        CHECK(std::sqrt(sq_err / used) < 0.06); // cross-bin rms per step
    }
    CHECK(checked > 100);
}

TEST_CASE("leverage table must match the grid it is used with") {
    const TimeGrid grid{252, 10, 0};
    const auto surface = make_surface(0.2);
    const LeverageTable table =
        calibrate_slv_leverage(*surface, SlvParams{1.0, 5.0, 0.0}, grid, 2000, 4);
    ModelSpec m = slv_model(surface, 1.0, 5.0, 0.0);
    const TimeGrid other{252, 11, 0};
    CHECK_THROWS_AS(simulate_slv_with_table(m, table, other, 2000, 5), config_error);
}
