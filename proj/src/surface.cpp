#include "mrisk/surface.hpp"

#include "mrisk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mrisk {

namespace {
constexpr double kStrikeBump = 9.9503308531680922e-03; // ln(1.01)
constexpr double kTenorBump = 1.0 / 252.0;             // one business day
constexpr double kDenominatorFloor = 1e-8;
} // namespace

ImpliedVolSurface::ImpliedVolSurface(Params p) : params_(std::move(p)) {
    const auto& tenors = params_.tenors;
    const auto& vols = params_.atm_vols;
    if (tenors.empty() || tenors.size() != vols.size())
        throw config_error("surface: tenors and atm_vols must be non-empty and equal-length");
    if (!(params_.vol_floor > 0.0) || !(params_.vol_cap > params_.vol_floor))
        throw config_error("surface: need 0 < vol_floor < vol_cap");
    for (std::size_t i = 0; i < tenors.size(); ++i) {
        if (!(tenors[i] > 0.0)) throw config_error("surface: tenors must be positive");
        if (i > 0 && !(tenors[i] > tenors[i - 1]))
            throw config_error("surface: tenors must be strictly increasing");
        if (vols[i] < params_.vol_floor || vols[i] > params_.vol_cap)
            throw config_error("surface: atm vol outside [floor, cap]");
    }

    flat_ = params_.skew == 0.0 && params_.smile == 0.0 &&
            std::all_of(vols.begin(), vols.end(), [&](double v) { return v == vols.front(); });

    // Calendar check: w(y, .) non-decreasing on a moneyness/tenor test grid.
    const double t_max = tenors.back();
    for (int yi = -20; yi <= 20; ++yi) {
        const double y = 0.1 * yi;
        double prev = 0.0;
        for (int ti = 1; ti <= 200; ++ti) {
            const double t = t_max * ti / 200.0;
            const double w = total_variance(y, t);
            if (w < prev - 1e-12)
                throw config_error("surface: total variance decreasing in tenor (calendar arbitrage)");
            prev = w;
        }
    }
}

double ImpliedVolSurface::atm_vol(double tenor) const {
    const auto& t = params_.tenors;
    const auto& v = params_.atm_vols;
    if (tenor <= t.front()) return v.front();
    if (tenor >= t.back()) return v.back();
    const auto it = std::upper_bound(t.begin(), t.end(), tenor);
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    const std::size_t lo = hi - 1;
    const double u = (tenor - t[lo]) / (t[hi] - t[lo]);
    return v[lo] + u * (v[hi] - v[lo]);
}

double ImpliedVolSurface::implied_vol(double log_moneyness, double tenor) const {
    const double raw = atm_vol(tenor) + params_.skew * log_moneyness +
                       params_.smile * log_moneyness * log_moneyness;
    return std::clamp(raw, params_.vol_floor, params_.vol_cap);
}

double ImpliedVolSurface::total_variance(double log_moneyness, double tenor) const {
    const double v = implied_vol(log_moneyness, tenor);
    return v * v * tenor;
}

double ImpliedVolSurface::local_vol(double spot_level, double time, double forward) const {
    // A flat surface is a fixed point of the Dupire map; return it directly so
    // the degenerate-model identities hold bit-for-bit.
    if (flat_) return params_.atm_vols.front();

    const double y = std::log(spot_level / forward);
    const double t0 = std::max(time, kTenorBump);

    const double w = total_variance(y, t0);
    const double w_up = total_variance(y + kStrikeBump, t0);
    const double w_dn = total_variance(y - kStrikeBump, t0);
    const double w_fwd = total_variance(y, t0 + kTenorBump);

    const double dw_dt = (w_fwd - w) / kTenorBump;
    const double dw_dy = (w_up - w_dn) / (2.0 * kStrikeBump);
    const double d2w_dy2 = (w_up - 2.0 * w + w_dn) / (kStrikeBump * kStrikeBump);

    bool clamped = false;
    double den = 1.0 - (y / w) * dw_dy +
                 0.25 * (-0.25 - 1.0 / w + (y * y) / (w * w)) * dw_dy * dw_dy +
                 0.5 * d2w_dy2;
    if (!(den > kDenominatorFloor)) {
        den = kDenominatorFloor;
        clamped = true;
    }
    double num = dw_dt;
    if (!(num > 0.0)) {
        num = 0.0;
        clamped = true;
    }

    double vol = std::sqrt(num / den);
    if (vol < params_.vol_floor) {
        vol = params_.vol_floor;
        clamped = true;
    } else if (vol > params_.vol_cap) {
        vol = params_.vol_cap;
        clamped = true;
    }
    if (clamped) clamp_count_.fetch_add(1, std::memory_order_relaxed);
    return vol;
}

} // namespace mrisk
