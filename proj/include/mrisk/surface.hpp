#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

namespace mrisk {

// Parametric implied-vol surface: piecewise-linear ATM vol term structure
// plus a skew slope and smile curvature per unit log-moneyness y = ln(K/F),
//
//     vol(y, T) = atm(T) + skew * y + smile * y^2,   clamped to [floor, cap].
//
// Construction runs a calendar no-arbitrage check (total variance
// non-decreasing in tenor at fixed moneyness) and rejects violating inputs.
class ImpliedVolSurface {
  public:
    struct Params {
        std::vector<double> tenors;   // years, strictly increasing, > 0
        std::vector<double> atm_vols; // one per tenor
        double skew = 0.0;            // d vol / d y
        double smile = 0.0;           // d^2 vol / d y^2 scale (coefficient of y^2)
        double vol_floor = 0.01;
        double vol_cap = 5.0;
    };

    explicit ImpliedVolSurface(Params p);

    // Implied vol at log-moneyness y = ln(K/F(T)) and tenor T.
    double implied_vol(double log_moneyness, double tenor) const;

    // Total implied variance w(y, T) = vol^2 * T.
    double total_variance(double log_moneyness, double tenor) const;

    // Dupire local vol from finite differences on the total variance
    // (central in log-strike, forward in tenor). Non-positive numerator or
    // denominator is floored and counted; the result is clamped to
    // [vol_floor, vol_cap]. Tenors shorter than one bump are evaluated on the
    // first-day slice.
    double local_vol(double spot_level, double time, double forward) const;

    bool is_flat() const { return flat_; }
    double vol_floor() const { return params_.vol_floor; }
    double vol_cap() const { return params_.vol_cap; }
    const Params& params() const { return params_; }

    // Count of local-vol evaluations that needed a floor or clamp.
    std::uint64_t clamp_count() const { return clamp_count_.load(std::memory_order_relaxed); }

  private:
    double atm_vol(double tenor) const;

    Params params_;
    bool flat_ = false;
    mutable std::atomic<std::uint64_t> clamp_count_{0};
};

// Free-function spelling used throughout the engine.
inline double local_vol_at(const ImpliedVolSurface& surface, double spot_level,
                           double time, double forward) {
    return surface.local_vol(spot_level, time, forward);
}

} // namespace mrisk
