#pragma once

// Padding for extents whose factor structure leaves few tilings: grow each
// extent within a slack budget to the candidate with the most divisors.
// Padding MACs are real work and are charged like any other.

#include <cmath>
#include <cstdint>

#include "gemmap/core.hpp"

namespace gemmap {

inline std::uint64_t divisor_count(std::uint64_t n) {
    std::uint64_t c = 0;
    for (std::uint64_t d = 1; d * d <= n; ++d)
        if (n % d == 0) c += (d * d == n) ? 1 : 2;
    return c;
}

inline std::uint64_t pad_extent(std::uint64_t n, double slack) {
    if (!(slack >= 1.0)) throw ConfigError("padding slack must be >= 1");
    const double limit = std::ceil(slack * static_cast<double>(n));
    const std::uint64_t hi = std::min<std::uint64_t>(static_cast<std::uint64_t>(limit), std::max(n, kMaxExtent));
    std::uint64_t best = n, best_divs = divisor_count(n);
    for (std::uint64_t c = n + 1; c <= hi; ++c) {
        const std::uint64_t d = divisor_count(c);
        if (d > best_divs) {
            best = c;
            best_divs = d;
        }
    }
    return best;
}

inline GemmInstance pad_workload(const GemmInstance& g, double slack) {
    GemmInstance p = g;
    for (Axis a : kAxes) p.dims[a] = pad_extent(g.dims[a], slack);
    return p;
}

}  // namespace gemmap
