#include "mrisk/risk_engine.hpp"

#include "mrisk/errors.hpp"

#include <cmath>
#include <limits>

namespace mrisk {
namespace {

void require_shared_scheme(const Histogram& b, const Histogram& m) {
    if (b.scheme.edges != m.scheme.edges)
        throw config_error("histograms must share one bucket scheme");
}

} // namespace

void RatesSpec::validate() const {
    if (!(cr >= 0.0)) throw config_error("commission rate must be non-negative");
    if (!(materiality_threshold > 0.0)) throw config_error("materiality threshold must be positive");
}

SampleMoments sample_moments(std::span<const double> samples) {
    if (samples.empty()) throw simulation_error("moments need at least one sample");
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double x : samples) sum += x;
    const double mean = sum / n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / n)};
}

MrpDetail mrp_detail(const Histogram& b, const Histogram& m) {
    require_shared_scheme(b, m);
    MrpDetail out;
    double sum = 0.0;
    for (std::size_t i = 0; i < b.probs.size(); ++i) {
        const double bi = b.probs[i];
        if (bi == 0.0) continue;
        const double mi = m.probs[i];
        if (mi == 0.0) {
            out.infinite_buckets.push_back(static_cast<int>(i));
            continue;
        }
        sum += bi * std::log(bi / mi);
    }
    out.nats = out.infinite_buckets.empty() ? sum : std::numeric_limits<double>::infinity();
    return out;
}

double mrp(const Histogram& b, const Histogram& m) { return mrp_detail(b, m).nats; }

PayoffCurve optimal_payoff(const Histogram& b, const Histogram& m) {
    require_shared_scheme(b, m);
    PayoffCurve f;
    f.scheme = b.scheme;
    f.values.resize(b.probs.size());
    for (std::size_t i = 0; i < b.probs.size(); ++i) {
        const double bi = b.probs[i];
        const double mi = m.probs[i];
        if (mi == 0.0)
            f.values[i] = bi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        else
            f.values[i] = bi / mi;
    }
    return f;
}

double expected_return(const Histogram& b, const Histogram& m, const RatesSpec& rates,
                       double horizon_years) {
    if (!(horizon_years > 0.0)) throw config_error("horizon must be positive");
    return mrp(b, m) / horizon_years + rates.rfr - rates.cr;
}

bool materiality(double mrp_annual, const RatesSpec& rates) {
    return mrp_annual > std::max(rates.cr, rates.materiality_threshold);
}

std::vector<double> mean_correct(std::span<const double> samples_b,
                                 std::span<const double> samples_m) {
    const double shift = sample_moments(samples_m).mean - sample_moments(samples_b).mean;
    std::vector<double> out(samples_b.begin(), samples_b.end());
    for (double& x : out) x += shift;
    return out;
}

std::vector<double> mean_var_correct(std::span<const double> samples_b,
                                     std::span<const double> samples_m) {
    const SampleMoments mb = sample_moments(samples_b);
    const SampleMoments mm = sample_moments(samples_m);
    if (!(mb.stddev > 0.0)) throw simulation_error("degenerate booking sample");
    const double scale = mm.stddev / mb.stddev;
    std::vector<double> out(samples_b.begin(), samples_b.end());
    for (double& x : out) x = mm.mean + (x - mb.mean) * scale;
    return out;
}

DecompositionLadder decompose(std::span<const double> samples_b,
                              std::span<const double> samples_m, int n_buckets,
                              double horizon_years) {
    if (!(horizon_years > 0.0)) throw config_error("horizon must be positive");
    const std::vector<double> b_mean = mean_correct(samples_b, samples_m);
    const std::vector<double> b_meanvar = mean_var_correct(samples_b, samples_m);

    // One scheme wide enough for every rung: the corrections can move mass
    // outside the raw range.
    std::vector<double> hull;
    hull.reserve(samples_b.size() + b_mean.size() + b_meanvar.size());
    hull.insert(hull.end(), samples_b.begin(), samples_b.end());
    hull.insert(hull.end(), b_mean.begin(), b_mean.end());
    hull.insert(hull.end(), b_meanvar.begin(), b_meanvar.end());
    const BucketScheme scheme = build_bucket_edges(hull, samples_m, n_buckets);

    const Histogram hm = histogram_from_samples(samples_m, scheme);
    const Histogram hb = histogram_from_samples(samples_b, scheme);
    const Histogram hb_mean = histogram_from_samples(b_mean, scheme);
    const Histogram hb_meanvar = histogram_from_samples(b_meanvar, scheme);

    DecompositionLadder ladder;
    ladder.mrp_raw = mrp(hb, hm) / horizon_years;
    ladder.mrp_mean_corrected = mrp(hb_mean, hm) / horizon_years;
    ladder.mrp_mean_var_corrected = mrp(hb_meanvar, hm) / horizon_years;
    ladder.residual_payoff = optimal_payoff(hb_meanvar, hm);
    ladder.market_hist = hm;
    ladder.raw_hist = hb;
    ladder.mean_hist = hb_mean;
    ladder.meanvar_hist = hb_meanvar;
    return ladder;
}

MrpReport evaluate_cell(std::span<const double> samples_b, std::span<const double> samples_m,
                        int n_buckets, double horizon_years, const RatesSpec& rates,
                        bool add_half_smoothing) {
    rates.validate();
    if (!(horizon_years > 0.0)) throw config_error("horizon must be positive");

    const BucketScheme scheme = build_bucket_edges(samples_b, samples_m, n_buckets);
    const Histogram hb = histogram_from_samples(samples_b, scheme, add_half_smoothing);
    const Histogram hm = histogram_from_samples(samples_m, scheme, add_half_smoothing);

    MrpReport report;
    const MrpDetail detail = mrp_detail(hb, hm);
    report.mrp_horizon = detail.nats;
    report.infinite_buckets = detail.infinite_buckets;
    report.infinite = !detail.infinite_buckets.empty();
    report.mrp_annual = detail.nats / horizon_years;
    report.er_annual = report.mrp_annual + rates.rfr - rates.cr;
    report.material = materiality(report.mrp_annual, rates);
    report.payoff = optimal_payoff(hb, hm);
    report.booking_hist = hb;
    report.market_hist = hm;
    report.ladder = decompose(samples_b, samples_m, n_buckets, horizon_years);
    return report;
}

} // namespace mrisk
