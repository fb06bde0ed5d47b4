#include "mrisk/surface.hpp"

#include "mrisk/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mrisk;

namespace {

ImpliedVolSurface::Params flat20() {
    ImpliedVolSurface::Params p;
    p.tenors = {0.25, 0.5, 1.0};
    p.atm_vols = {0.20, 0.20, 0.20};
    return p;
}

ImpliedVolSurface::Params skewed() {
    ImpliedVolSurface::Params p;
    p.tenors = {0.25, 0.5, 1.0};
    p.atm_vols = {0.2395, 0.2395, 0.2395};
    p.skew = -0.15;
    p.smile = 0.25;
    return p;
}

} // namespace

TEST_CASE("construction rejects malformed inputs") {
    ImpliedVolSurface::Params p;
    CHECK_THROWS_AS(ImpliedVolSurface{p}, config_error); // empty

    p = flat20();
    p.tenors = {0.5, 0.5, 1.0};
    CHECK_THROWS_AS(ImpliedVolSurface{p}, config_error); // not strictly increasing

    p = flat20();
    p.vol_floor = 0.25;
    CHECK_THROWS_AS(ImpliedVolSurface{p}, config_error); // vols below the floor

    p = flat20();
    p.vol_cap = 0.005;
    CHECK_THROWS_AS(ImpliedVolSurface{p}, config_error); // cap below floor
}

TEST_CASE("calendar arbitrage is rejected at construction") {
    ImpliedVolSurface::Params p;
    p.tenors = {0.25, 0.5};
    p.atm_vols = {0.40, 0.20}; // w(0.5) < w(0.25)
    CHECK_THROWS_AS(ImpliedVolSurface{p}, config_error);
}

TEST_CASE("flat surface is a fixed point of the local-vol map") {
    const ImpliedVolSurface s(flat20());
    CHECK(s.is_flat());
    for (double spot : {60.0, 100.0, 150.0})
        for (double t : {0.0, 0.1, 0.5, 2.0}) CHECK(s.local_vol(spot, t, 100.0) == 0.20);
    CHECK(s.implied_vol(0.3, 0.7) == 0.20);
    CHECK(s.clamp_count() == 0);
}

TEST_CASE("pure term structure reproduces the total-variance slope") {
    ImpliedVolSurface::Params p;
    p.tenors = {0.25, 1.0};
    p.atm_vols = {0.20, 0.30};
    const ImpliedVolSurface s(p);

    // With no skew the local variance is d(T v^2)/dT.
    for (double t : {0.3, 0.5, 0.8}) {
        const double v = 0.20 + (0.30 - 0.20) * (t - 0.25) / 0.75;
        const double slope = (0.30 - 0.20) / 0.75;
        const double expected = std::sqrt(v * v + 2.0 * t * v * slope);
        CHECK(s.local_vol(100.0, t, 100.0) == doctest::Approx(expected).epsilon(5e-3));
    }
}

TEST_CASE("negative skew lifts the local vol below the forward") {
    const ImpliedVolSurface s(skewed());
    const double atm_implied = s.implied_vol(0.0, 0.5);
    CHECK(s.local_vol(85.0, 0.5, 100.0) > atm_implied);
}

TEST_CASE("finite differences track the analytic parametric slice") {
    const ImpliedVolSurface s(skewed());
    oracles::ParametricSlice slice{0.2395, 0.0, -0.15, 0.25};
    for (double y : {-0.4, -0.2, -0.1, 0.0, 0.1, 0.2, 0.4}) {
        for (double t : {0.1, 0.25, 0.5, 0.9}) {
            const double expected = oracles::dupire_local_vol_analytic(slice, y, t);
            const double spot = 100.0 * std::exp(y);
            CHECK(s.local_vol(spot, t, 100.0) == doctest::Approx(expected).epsilon(5e-3));
        }
    }
}

TEST_CASE("clamped evaluations are counted") {
    ImpliedVolSurface::Params p = skewed();
    // Negative skew inflates the left-wing local vol well above the implied
    // vol (about 0.32 versus 0.28 at spot 82), so a cap of 0.30 sits between
    // the two: the implied inputs are untouched but the Dupire output clamps.
    p.vol_cap = 0.30;
    const ImpliedVolSurface s(p);
    CHECK(s.clamp_count() == 0);
    const double v = s.local_vol(82.0, 0.5, 100.0);
    CHECK(v == 0.30);
    CHECK(s.clamp_count() > 0);
    for (double spot : {60.0, 82.0, 130.0}) {
        const double lv = s.local_vol(spot, 0.5, 100.0);
        CHECK(lv >= p.vol_floor);
        CHECK(lv <= 0.30);
    }
}
