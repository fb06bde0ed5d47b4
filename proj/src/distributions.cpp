#include "mrisk/distributions.hpp"

#include "mrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mrisk {
namespace {

constexpr double kSumTolerance = 1e-12;

std::pair<double, double> span_min_max(std::span<const double> v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {*lo, *hi};
}

} // namespace

void BucketScheme::validate() const {
    if (edges.size() < 3) throw config_error("bucket scheme needs at least 2 buckets");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw config_error("bucket edges must be strictly increasing");
}

int BucketScheme::bucket_of(double x) const {
    if (x < edges.front() || x > edges.back())
        throw simulation_error("sample " + std::to_string(x) + " outside bucket range");
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    int idx = static_cast<int>(it - edges.begin()) - 1;
    if (idx == n_buckets()) --idx; // top edge folds into the last bucket
    return idx;
}

void Histogram::validate() const {
    scheme.validate();
    if (probs.size() != static_cast<std::size_t>(scheme.n_buckets()))
        throw config_error("histogram probs do not match the bucket count");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw config_error("histogram probabilities must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw config_error("histogram probabilities must sum to 1");
}

void PriceVector::validate() const {
    scheme.validate();
    if (prices.size() != static_cast<std::size_t>(scheme.n_buckets()))
        throw config_error("price vector does not match the bucket count");
    if (!(df > 0.0) || df > 1.0) throw config_error("discount factor must lie in (0, 1]");
    if (!(cf >= 1.0)) throw config_error("commission factor must be at least 1");
    double sum = 0.0;
    for (double p : prices) {
        if (!(p > 0.0)) throw config_error("non-positive state price");
        sum += p;
    }
    if (std::abs(sum - df * cf) > kSumTolerance)
        throw config_error("state prices must sum to df * cf");
}

BucketScheme build_bucket_edges(std::span<const double> samples_b,
                                std::span<const double> samples_m, int n_buckets) {
    if (samples_b.empty() || samples_m.empty())
        throw simulation_error("bucket edges need non-empty sample sets");
    if (n_buckets < 2) throw config_error("need at least 2 buckets");
    const auto [b_lo, b_hi] = span_min_max(samples_b);
    const auto [m_lo, m_hi] = span_min_max(samples_m);
    const double lo = std::min(b_lo, m_lo);
    const double hi = std::max(b_hi, m_hi);
    if (!(hi > lo)) throw simulation_error("degenerate sample range");

    BucketScheme scheme;
    scheme.edges.resize(static_cast<std::size_t>(n_buckets) + 1);
    // Interior edges divide first so that doubling n_buckets nests exactly;
    // the ends are pinned to the data range.
    for (int j = 1; j < n_buckets; ++j)
        scheme.edges[static_cast<std::size_t>(j)] =
            lo + (hi - lo) * (static_cast<double>(j) / n_buckets);
    scheme.edges.front() = lo;
    scheme.edges.back() = hi;
    scheme.validate();
    return scheme;
}

Histogram histogram_from_samples(std::span<const double> samples, const BucketScheme& scheme,
                                 bool add_half) {
    scheme.validate();
    if (samples.empty()) throw simulation_error("histogram needs at least one sample");
    Histogram h;
    h.scheme = scheme;
    const int n = scheme.n_buckets();
    h.counts.assign(static_cast<std::size_t>(n), 0);
    for (double x : samples) ++h.counts[static_cast<std::size_t>(scheme.bucket_of(x))];

    h.probs.resize(static_cast<std::size_t>(n));
    if (add_half) {
        const double total = static_cast<double>(samples.size()) + 0.5 * n;
        for (int i = 0; i < n; ++i)
            h.probs[static_cast<std::size_t>(i)] =
                (static_cast<double>(h.counts[static_cast<std::size_t>(i)]) + 0.5) / total;
    } else {
        const double total = static_cast<double>(samples.size());
        for (int i = 0; i < n; ++i)
            h.probs[static_cast<std::size_t>(i)] =
                static_cast<double>(h.counts[static_cast<std::size_t>(i)]) / total;
    }
    return h;
}

MarketImplied market_implied_from_prices(const PriceVector& pv) {
    pv.validate();
    MarketImplied out;
    out.rfr = -std::log(pv.df);
    out.cr = std::log(pv.cf);
    out.hist.scheme = pv.scheme;
    const double norm = pv.df * pv.cf;
    out.hist.probs.resize(pv.prices.size());
    for (std::size_t i = 0; i < pv.prices.size(); ++i) out.hist.probs[i] = pv.prices[i] / norm;
    return out;
}

} // namespace mrisk
