#pragma once

#include <cmath>
#include <cstdint>

namespace mrisk {

// Counter-based Gaussian generator. Every variate is a pure function of
// (seed, path, step, component), so path j is reproducible in isolation and
// results cannot depend on thread scheduling or evaluation order.
namespace rng {

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t path,
                                  std::uint64_t step, std::uint64_t component) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ path);
    h = mix64(h ^ step);
    h = mix64(h ^ component);
    return h;
}

// Uniform in the open interval (0,1); never returns an exact endpoint.
// Uses 52 high bits plus a half-step offset: the largest result is
// 1 - 2^-53 (the double just below 1) and the smallest is 2^-53. A 53-bit
// mapping would round its top value up to exactly 1.0.
inline double uniform01(std::uint64_t word) {
    return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

// Acklam's rational approximation of the inverse normal CDF with one Halley
// refinement; accurate to ~1e-15 over (0,1).
inline double inverse_normal_cdf(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley step against erfc for full double precision.
    const double e = 0.5 * std::erfc(-x / 1.4142135623730951) - p;
    const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

// Standard normal draw for one (path, step, component) cell.
inline double normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                     std::uint64_t component) {
    return inverse_normal_cdf(uniform01(hash_counter(seed, path, step, component)));
}

} // namespace rng
} // namespace mrisk
