#pragma once

#include "mrisk/distributions.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mrisk {

struct RatesSpec {
    double rfr = 0.0;                    // annualized risk-free rate
    double cr = 0.0;                     // annualized commission rate
    double materiality_threshold = 0.01; // annualized, strict comparison

    void validate() const;
};

// Growth-optimal payoff ratio per bucket: f = b/m with 0/0 = 1; infinity
// marks booking mass the market prices at zero.
struct PayoffCurve {
    BucketScheme scheme;
    std::vector<double> values;
};

// Annualized premia for the raw, mean-corrected, and mean-and-variance
// corrected booking samples against the same market, with the residual
// payoff b**/m for shape diagnosis. All rungs share one bucket scheme; the
// per-rung histograms back the payoff-curve exports.
struct DecompositionLadder {
    double mrp_raw = 0.0;
    double mrp_mean_corrected = 0.0;
    double mrp_mean_var_corrected = 0.0;
    PayoffCurve residual_payoff;
    Histogram market_hist;
    Histogram raw_hist;
    Histogram mean_hist;
    Histogram meanvar_hist;
};

struct MrpReport {
    double mrp_horizon = 0.0; // nats per horizon
    double mrp_annual = 0.0;
    double er_annual = 0.0;
    bool material = false;
    bool infinite = false;
    std::vector<int> infinite_buckets; // booking mass on zero market mass
    std::optional<DecompositionLadder> ladder;
    PayoffCurve payoff;
    Histogram booking_hist;
    Histogram market_hist;
};

struct MrpDetail {
    double nats = 0.0; // +infinity on support mismatch
    std::vector<int> infinite_buckets;
};

// Relative entropy sum b_i ln(b_i/m_i), with 0 ln(0/m) = 0. Support
// mismatch (b_i > 0 = m_i) yields +infinity and the offending buckets.
MrpDetail mrp_detail(const Histogram& b, const Histogram& m);
double mrp(const Histogram& b, const Histogram& m);

PayoffCurve optimal_payoff(const Histogram& b, const Histogram& m);

// ER = MRP/horizon + rfr - cr, all annualized. Infinite MRP propagates.
double expected_return(const Histogram& b, const Histogram& m, const RatesSpec& rates,
                       double horizon_years);

// Material iff mrp_annual exceeds both the commission rate and the threshold.
bool materiality(double mrp_annual, const RatesSpec& rates);

// Shift B so its mean equals M's.
std::vector<double> mean_correct(std::span<const double> samples_b,
                                 std::span<const double> samples_m);

// Affine map of B matching M's mean and population variance exactly.
// Throws simulation_error("degenerate booking sample") when std(B) = 0.
std::vector<double> mean_var_correct(std::span<const double> samples_b,
                                     std::span<const double> samples_m);

// The correction ladder over one shared bucket scheme spanning the union of
// the market samples and every corrected booking set.
DecompositionLadder decompose(std::span<const double> samples_b,
                              std::span<const double> samples_m, int n_buckets,
                              double horizon_years);

// Full single-cell analysis: union buckets, headline MRP/ER/materiality, and
// the decomposition ladder.
MrpReport evaluate_cell(std::span<const double> samples_b, std::span<const double> samples_m,
                        int n_buckets, double horizon_years, const RatesSpec& rates,
                        bool add_half_smoothing = false);

struct SampleMoments {
    double mean = 0.0;
    double stddev = 0.0; // population convention
};

SampleMoments sample_moments(std::span<const double> samples);

} // namespace mrisk
