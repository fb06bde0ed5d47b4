#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mrisk {

// Equally spaced bucket boundaries. Buckets are [lo, hi) with the top edge
// folded into the last bucket, so a sample on an interior edge lands in the
// bucket to its right.
struct BucketScheme {
    std::vector<double> edges; // N + 1, strictly increasing

    int n_buckets() const { return static_cast<int>(edges.size()) - 1; }
    double lo(int bucket) const { return edges[static_cast<std::size_t>(bucket)]; }
    double hi(int bucket) const { return edges[static_cast<std::size_t>(bucket) + 1]; }
    // Throws simulation_error when x lies outside [edges.front(), edges.back()].
    int bucket_of(double x) const;
    void validate() const;
};

struct Histogram {
    BucketScheme scheme;
    std::vector<double> probs;
    std::vector<std::uint64_t> counts; // empty when built from prices

    void validate() const;
};

// Per-bucket binary-security prices with the discount and commission factors
// split out: sum(prices) = df * cf.
struct PriceVector {
    BucketScheme scheme;
    std::vector<double> prices;
    double df = 1.0; // discount factor, in (0, 1]
    double cf = 1.0; // commission factor, >= 1

    void validate() const;
};

struct MarketImplied {
    Histogram hist;
    double rfr = 0.0; // per horizon: -ln df
    double cr = 0.0;  // per horizon: ln cf
};

// N equal-width buckets spanning the union range of both sample sets.
// Throws simulation_error("degenerate sample range") when max == min.
BucketScheme build_bucket_edges(std::span<const double> samples_b,
                                std::span<const double> samples_m, int n_buckets);

// Bucketed empirical distribution. With add_half set, every bucket count is
// raised by one half before normalizing (support smoothing, off by default).
Histogram histogram_from_samples(std::span<const double> samples, const BucketScheme& scheme,
                                 bool add_half = false);

// Normalizes state prices into the market-implied distribution and splits off
// the risk-free and commission rates (both per horizon).
MarketImplied market_implied_from_prices(const PriceVector& pv);

} // namespace mrisk
